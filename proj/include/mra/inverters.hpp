#pragma once

// Initialization-free bispectrum phase inverters.
//
// frequency_marching: given unit phases for y[0] and y[1], each higher
// frequency k has floor(k/2) independent estimates
//     y[l] * y[k-l] * conj(b_tilde[l, k]),   l = 1 .. floor(k/2),
// because b_tilde[l,k] carries the phase of y[l] conj(y[k]) y[k-l].  They are
// averaged on the unit circle and the recursion marches k = 2 .. N-1.
//
// direct_inversion: recovers the full spectrum (moduli and phases) from the
// bispectrum alone.  The corner gives y[0] via B[0,0] = |y[0]|^2 y[0]; the
// diagonal gives |y[k]|^2 = |B[k,k]| / |y[0]|; the phase of y[1] is pinned to
// an N-th root of a telescoping product of first-row entries, and the
// remaining phases follow from phase(y[k]) = phase(y[k-1] conj(B[1,k]) y[1]).

#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "mra/invariants.hpp"
#include "mra/signal.hpp"

namespace mra {

inline Eigen::VectorXcd frequency_marching(const Eigen::MatrixXcd& b_tilde, cd y0, cd y1) {
  const int n = int(b_tilde.rows());
  if (b_tilde.cols() != n) throw std::invalid_argument("frequency_marching: b_tilde not square");
  if (n < 1) throw std::invalid_argument("frequency_marching: empty input");

  Eigen::VectorXcd y(n);
  y[0] = phase_of_scalar(y0, 0.0) == cd{0.0, 0.0} ? cd{1.0, 0.0} : phase_of_scalar(y0, 0.0);
  if (n >= 2)
    y[1] = phase_of_scalar(y1, 0.0) == cd{0.0, 0.0} ? cd{1.0, 0.0} : phase_of_scalar(y1, 0.0);

  std::vector<cd> samples;
  for (int k = 2; k < n; ++k) {
    samples.clear();
    for (int l = 1; l <= k / 2; ++l)
      samples.push_back(y[l] * y[k - l] * std::conj(b_tilde(l, k)));
    y[k] = so2_average(samples);
  }
  return y;
}

// Recursive inversion of a bispectrum to a signal.  root_reference selects the
// branch for phase(y[1]): the principal N-th root is taken relative to that
// angle; by default the angle of the telescoping product itself is used, which
// makes the output vary continuously with the input.
inline Signal direct_inversion(const Eigen::MatrixXcd& bispec,
                               std::optional<double> root_reference = std::nullopt) {
  const int n = int(bispec.rows());
  if (bispec.cols() != n) throw std::invalid_argument("direct_inversion: bispectrum not square");
  if (n < 3) throw std::invalid_argument("direct_inversion: needs N >= 3");
  const double tau = phase_zero_threshold(bispec.cwiseAbs().maxCoeff());

  // y[0] from the corner: B[0,0] = |y[0]|^2 y[0]
  const cd corner = bispec(0, 0);
  if (std::abs(corner) <= tau) throw vanishing_dft_error(0);
  const double mag0 = std::cbrt(std::abs(corner));
  const cd ph0 = corner / std::abs(corner);

  // moduli from the diagonal: B[k,k] = |y[k]|^2 y[0]
  Eigen::VectorXd mag(n);
  mag[0] = mag0;
  for (int k = 1; k < n; ++k) {
    const double d = std::abs(bispec(k, k));
    if (d <= tau) throw vanishing_dft_error(k);
    mag[k] = std::sqrt(d / mag0);
  }

  // phase of y[1]: N-th root of the telescoping product's phase
  auto unit_factor = [&](int k1, int k2) -> cd {
    const cd v = bispec(k1, k2);
    if (std::abs(v) <= tau) throw vanishing_dft_error(k2);
    return v / std::abs(v);
  };
  cd prod = unit_factor(n - 1, 1) * unit_factor(1, 2) * unit_factor(1, 2);
  for (int k = 3; k < n; ++k) prod *= unit_factor(1, k);
  const double theta_prod = angle_of(prod);
  const double ref = root_reference.value_or(theta_prod);
  // principal branch: theta in (ref - pi, ref + pi]
  const double theta = ref + wrap_angle(theta_prod - ref);

  Eigen::VectorXcd ph(n);
  ph[0] = ph0;
  ph[1] = std::polar(1.0, theta / double(n));
  // B[1,k] = y[1] conj(y[k]) y[k-1]  =>  phase(y[k]) = phase(y[k-1] conj(B[1,k]) y[1])
  for (int k = 2; k < n; ++k)
    ph[k] = phase_of_scalar(ph[k - 1] * std::conj(unit_factor(1, k)) * ph[1], 0.0);

  Spectrum y{mag.cast<cd>().cwiseProduct(ph)};
  Signal out;
  out.values = idft(y.values);
  out.is_real = false;  // caller decides whether to project to real signals
  return out;
}

}  // namespace mra
