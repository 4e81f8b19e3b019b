#pragma once

// Core signal types and the circular-shift algebra they live in.
// Conventions fixed here and relied on everywhere else:
//   - circular_shift(x, r)[n] = x[(n - r) mod N], zero-based indices
//   - phase_of maps a to a/|a| and maps (near-)zeros to exactly 0; the zero
//     threshold is relative to the largest magnitude in the container
//   - relative_error is the shift-orbit distance min_s ||shift(xhat,s) - x|| / ||x||
//   - angles are always reported in (-pi, pi], the tie at -pi maps to +pi

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "mra/fft.hpp"

namespace mra {

struct Signal {
  Eigen::VectorXcd values;
  bool is_real = true;

  int n() const { return int(values.size()); }

  static Signal from_real(const Eigen::VectorXd& v) {
    Signal s;
    s.values = v.cast<cd>();
    s.is_real = true;
    return s;
  }
  static Signal from_complex(const Eigen::VectorXcd& v) {
    Signal s;
    s.values = v;
    s.is_real = false;
    return s;
  }
};

struct Spectrum {
  Eigen::VectorXcd values;
  int n() const { return int(values.size()); }
};

// Thrown when an operation needs a nonzero DFT coefficient that is absent.
struct vanishing_dft_error : std::runtime_error {
  int frequency;
  explicit vanishing_dft_error(int k)
      : std::runtime_error("vanishing DFT coefficient at frequency " + std::to_string(k)),
        frequency(k) {}
};

inline double wrap_angle(double a) {
  // representative in (-pi, pi]; -pi ties map to +pi
  a = std::remainder(a, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a = std::numbers::pi;
  return a;
}

inline double angle_of(const cd& z) {
  double a = std::arg(z);
  if (a <= -std::numbers::pi) a = std::numbers::pi;
  return a;
}

inline Eigen::VectorXcd circular_shift(const Eigen::VectorXcd& x, long r) {
  const long n = long(x.size());
  if (n == 0) return x;
  long s = r % n;
  if (s < 0) s += n;
  Eigen::VectorXcd out(n);
  for (long i = 0; i < n; ++i) out[(i + s) % n] = x[i];
  return out;
}

inline Signal circular_shift(const Signal& x, long r) {
  Signal out = x;
  out.values = circular_shift(x.values, r);
  return out;
}

inline Spectrum dft(const Signal& x) { return Spectrum{dft(x.values)}; }

inline Signal idft_signal(const Spectrum& y, bool is_real) {
  Signal s;
  s.values = idft(y.values);
  if (is_real) s.values = s.values.real().cast<cd>();
  s.is_real = is_real;
  return s;
}

// Entrywise a/|a| with zeros preserved.  The zero threshold scales with the
// largest magnitude present so a uniformly tiny vector is not all-zeroed.
inline double phase_zero_threshold(double max_abs) {
  return 1e-13 * std::max(1.0, max_abs);
}

inline cd phase_of_scalar(const cd& a, double tau) {
  const double m = std::abs(a);
  if (m <= tau) return cd{0.0, 0.0};
  return a / m;
}

inline Eigen::VectorXcd phase_of(const Eigen::VectorXcd& v) {
  const double tau = phase_zero_threshold(v.size() ? v.cwiseAbs().maxCoeff() : 0.0);
  Eigen::VectorXcd out(v.size());
  for (Eigen::Index k = 0; k < v.size(); ++k) out[k] = phase_of_scalar(v[k], tau);
  return out;
}

inline Eigen::MatrixXcd phase_of(const Eigen::MatrixXcd& m) {
  const double tau = phase_zero_threshold(m.size() ? m.cwiseAbs().maxCoeff() : 0.0);
  Eigen::MatrixXcd out(m.rows(), m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) out(i, j) = phase_of_scalar(m(i, j), tau);
  return out;
}

// Chordal average of unit-modulus samples: the phase of their sum.
// A zero (or numerically ambiguous) sum falls back to 1 so downstream
// recursions always receive a usable unit rotation.
template <typename Container>
inline cd so2_average(const Container& samples) {
  if (samples.size() == 0) throw std::invalid_argument("so2_average: empty sample set");
  cd acc{0.0, 0.0};
  double max_abs = 0.0;
  for (const cd& a : samples) {
    acc += a;
    max_abs = std::max(max_abs, std::abs(a));
  }
  const cd u = phase_of_scalar(acc, phase_zero_threshold(max_abs));
  if (u == cd{0.0, 0.0}) return cd{1.0, 0.0};
  return u;
}

// Relative distance between shift orbits, by exhaustive enumeration of the N
// candidate alignments.  Returns min_s ||shift(xhat, s) - x||_2 / ||x||_2.
inline double relative_error(const Eigen::VectorXcd& x, const Eigen::VectorXcd& xhat) {
  if (x.size() != xhat.size()) throw std::invalid_argument("relative_error: size mismatch");
  const double nx = x.norm();
  if (nx == 0.0) throw std::invalid_argument("relative_error: reference signal is zero");
  const long n = long(x.size());
  double best = std::numeric_limits<double>::infinity();
  for (long s = 0; s < n; ++s) {
    double acc = 0.0;
    for (long i = 0; i < n; ++i) {
      // shift(xhat, s)[n] = xhat[(n - s) mod n]
      long j = (i - s) % n;
      if (j < 0) j += n;
      acc += std::norm(xhat[j] - x[i]);
    }
    best = std::min(best, acc);
  }
  return std::sqrt(best) / nx;
}

inline double relative_error(const Signal& x, const Signal& xhat) {
  return relative_error(x.values, xhat.values);
}

// Best-aligning shift (for baselines and diagnostics); smallest index wins ties.
inline long best_alignment_shift(const Eigen::VectorXcd& x, const Eigen::VectorXcd& xhat) {
  const long n = long(x.size());
  double best = std::numeric_limits<double>::infinity();
  long arg = 0;
  for (long s = 0; s < n; ++s) {
    double acc = 0.0;
    for (long i = 0; i < n; ++i) {
      long j = (i - s) % n;
      if (j < 0) j += n;
      acc += std::norm(xhat[j] - x[i]);
    }
    if (acc < best - 1e-15) {
      best = acc;
      arg = s;
    }
  }
  return arg;
}

// Built-in test signals.

// Rectangular pulse: `width` leading entries at `height`, the rest zero.
inline Signal window_signal(int n, int width, double height) {
  if (n <= 0 || width < 0 || width > n) throw std::invalid_argument("window_signal: bad shape");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  v.head(width).setConstant(height);
  return Signal::from_real(v);
}

}  // namespace mra
