#pragma once

// Shift-invariant features of a signal and their debiased estimators from
// noisy shifted observations.
//
// With y = dft(x), the three invariants are
//   mean:          mu_x = y[0] / N
//   power:         P_x[k] = |y[k]|^2
//   bispectrum:    B_x[k1,k2] = y[k1] * conj(y[k2]) * y[k2 - k1]   (indices mod N)
// All are unchanged when x is circularly shifted.
//
// Under additive Gaussian noise of variance sigma^2 per entry, expectations of
// the per-observation features pick up additive bias terms:
//   E P_xi[k]      = P_x[k] + N * sigma^2
//   E B_xi[k1,k2]  = B_x[k1,k2] + sigma^2 * N^2 * mu_x * A[k1,k2]
// where A is a fixed 0/1-patterned matrix that differs between real and
// complex noise (see bias_matrix).  The accumulator below keeps running sums
// so shards can be merged exactly, and finalize() applies the corrections.

#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "mra/observations.hpp"
#include "mra/signal.hpp"

namespace mra {

inline Eigen::MatrixXcd bispectrum_from_spectrum(const Eigen::VectorXcd& y) {
  const int n = int(y.size());
  Eigen::MatrixXcd b(n, n);
  for (int k2 = 0; k2 < n; ++k2) {
    const cd c2 = std::conj(y[k2]);
    for (int k1 = 0; k1 < n; ++k1) {
      int d = k2 - k1;
      if (d < 0) d += n;
      b(k1, k2) = y[k1] * c2 * y[d];
    }
  }
  return b;
}

inline Eigen::MatrixXcd bispectrum_of(const Signal& x) {
  return bispectrum_from_spectrum(dft(x.values));
}

// Circulant lift T(y)[k1,k2] = y[(k2-k1) mod N].
inline Eigen::MatrixXcd circulant_lift(const Eigen::VectorXcd& y) {
  const int n = int(y.size());
  Eigen::MatrixXcd t(n, n);
  for (int k2 = 0; k2 < n; ++k2)
    for (int k1 = 0; k1 < n; ++k1) {
      int d = k2 - k1;
      if (d < 0) d += n;
      t(k1, k2) = y[d];
    }
  return t;
}

// Additive bispectrum bias pattern.  Real noise excites the full "cross":
// 3 at (0,0), 1 elsewhere on the first row, first column, and diagonal.
// Complex (circularly symmetric) noise has no first-column contribution:
// 2 at (0,0), 1 elsewhere on the first row and diagonal.
inline Eigen::MatrixXd bias_matrix(int n, bool complex_kind) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    a(0, k) += 1.0;  // first row
    a(k, k) += 1.0;  // diagonal
    if (!complex_kind) a(k, 0) += 1.0;
  }
  if (complex_kind) a(0, 0) = 2.0;  // row + diagonal coincide at the corner
  return a;
}

struct InvariantAccumulator {
  int n = 0;
  bool is_real = true;
  double sigma = 0.0;
  long count = 0;
  cd sum_mean{0.0, 0.0};
  Eigen::VectorXd sum_power;
  Eigen::MatrixXcd sum_bispec;

  static InvariantAccumulator make(int n, bool is_real, double sigma) {
    if (n <= 0) throw std::invalid_argument("InvariantAccumulator: N must be positive");
    if (sigma < 0.0) throw std::invalid_argument("InvariantAccumulator: sigma must be nonnegative");
    InvariantAccumulator acc;
    acc.n = n;
    acc.is_real = is_real;
    acc.sigma = sigma;
    acc.sum_power = Eigen::VectorXd::Zero(n);
    acc.sum_bispec = Eigen::MatrixXcd::Zero(n, n);
    return acc;
  }
};

struct InvariantEstimates {
  int n = 0;
  bool is_real = true;
  double sigma = 0.0;
  long count = 0;
  cd mu_hat{0.0, 0.0};
  Eigen::VectorXd power_hat;
  Eigen::MatrixXcd bispec_hat;
};

inline void accumulate(InvariantAccumulator& acc, const Eigen::VectorXcd& obs) {
  if (int(obs.size()) != acc.n) throw std::invalid_argument("accumulate: length mismatch");
  const Eigen::VectorXcd y = dft(obs);
  acc.sum_mean += y[0] / double(acc.n);
  acc.sum_power += y.cwiseAbs2();
  acc.sum_bispec += bispectrum_from_spectrum(y);
  acc.count += 1;
}

inline void accumulate(InvariantAccumulator& acc, const ObservationBatch& batch) {
  for (long j = 0; j < batch.m(); ++j) accumulate(acc, batch.observations.col(j));
}

inline InvariantAccumulator merge(const InvariantAccumulator& a, const InvariantAccumulator& b) {
  if (a.n != b.n || a.is_real != b.is_real)
    throw std::invalid_argument("merge: accumulator shape mismatch");
  if (a.sigma != b.sigma) throw std::invalid_argument("merge: sigma mismatch");
  InvariantAccumulator out = a;
  out.count += b.count;
  out.sum_mean += b.sum_mean;
  out.sum_power += b.sum_power;
  out.sum_bispec += b.sum_bispec;
  return out;
}

namespace detail {

// For real signals the population invariants satisfy P[N-k] = P[k] and
// B = B^H (as an N x N matrix under the triple-product definition), so the
// finite-sample estimates are projected onto those symmetries.
inline void symmetrize_real(InvariantEstimates& est) {
  const int n = est.n;
  Eigen::VectorXd p = est.power_hat;
  for (int k = 0; k < n; ++k) {
    const int r = (n - k) % n;
    est.power_hat[k] = 0.5 * (p[k] + p[r]);
  }
  est.bispec_hat = 0.5 * (est.bispec_hat + est.bispec_hat.adjoint()).eval();
  est.mu_hat = cd{est.mu_hat.real(), 0.0};
}

}  // namespace detail

// One-pass estimates: per-observation features are averaged and the additive
// noise biases are removed.  The bispectrum correction reuses the estimated
// mean, so the whole pipeline is a single pass over the data.
inline InvariantEstimates finalize(const InvariantAccumulator& acc) {
  if (acc.count <= 0) throw std::invalid_argument("finalize: empty accumulator");
  InvariantEstimates est;
  est.n = acc.n;
  est.is_real = acc.is_real;
  est.sigma = acc.sigma;
  est.count = acc.count;
  const double inv_m = 1.0 / double(acc.count);
  est.mu_hat = acc.sum_mean * inv_m;
  est.power_hat =
      acc.sum_power * inv_m - Eigen::VectorXd::Constant(acc.n, double(acc.n) * acc.sigma * acc.sigma);
  const Eigen::MatrixXd a = bias_matrix(acc.n, !acc.is_real);
  const cd scale = acc.sigma * acc.sigma * double(acc.n) * double(acc.n) * est.mu_hat;
  est.bispec_hat = acc.sum_bispec * inv_m - scale * a.cast<cd>();
  if (acc.is_real) detail::symmetrize_real(est);
  return est;
}

// Two-pass variant: estimate the mean first, subtract it from every
// observation, and average the centered bispectra.  Centered observations
// carry zero-mean noise bias, so no additive correction is needed; the result
// estimates the bispectrum of x - mean(x) (identical to the one-pass target
// when the signal has zero mean).
inline InvariantEstimates finalize_two_pass(const ObservationBatch& batch) {
  const long m = batch.m();
  if (m <= 0) throw std::invalid_argument("finalize_two_pass: empty batch");
  const int n = batch.n();
  InvariantEstimates est;
  est.n = n;
  est.is_real = batch.is_real;
  est.sigma = batch.sigma;
  est.count = m;

  cd mu{0.0, 0.0};
  for (long j = 0; j < m; ++j) mu += batch.observations.col(j).mean();
  mu /= double(m);
  est.mu_hat = mu;

  Eigen::VectorXd sum_power = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXcd sum_bispec = Eigen::MatrixXcd::Zero(n, n);
  for (long j = 0; j < m; ++j) {
    Eigen::VectorXcd centered = batch.observations.col(j).array() - mu;
    const Eigen::VectorXcd y = dft(centered);
    Eigen::VectorXcd y_raw = y;
    y_raw[0] += double(n) * mu;  // power estimate stays uncentered
    sum_power += y_raw.cwiseAbs2();
    sum_bispec += bispectrum_from_spectrum(y);
  }
  est.power_hat = sum_power / double(m) -
                  Eigen::VectorXd::Constant(n, double(n) * batch.sigma * batch.sigma);
  est.bispec_hat = sum_bispec / double(m);
  if (batch.is_real) detail::symmetrize_real(est);
  return est;
}

inline InvariantEstimates estimate_invariants(const ObservationBatch& batch) {
  InvariantAccumulator acc = InvariantAccumulator::make(batch.n(), batch.is_real, batch.sigma);
  accumulate(acc, batch);
  return finalize(acc);
}

// Entrywise phases of the bispectrum (zeros preserved).
inline Eigen::MatrixXcd normalized_bispectrum(const Eigen::MatrixXcd& bispec) {
  return phase_of(bispec);
}

// Default confidence weights for phase recovery: sqrt of the bispectrum
// magnitudes, a compromise between trusting large entries and not letting
// them dominate the objective.
inline Eigen::MatrixXd default_weights(const Eigen::MatrixXcd& bispec) {
  return bispec.cwiseAbs().cwiseSqrt();
}

inline Eigen::VectorXd magnitudes_from_power_spectrum(const Eigen::VectorXd& power) {
  return power.cwiseMax(0.0).cwiseSqrt();
}

// The N candidate phases of y[1] from the bispectrum alone.  The product
//   B[N-1,1] * B[1,2] * B[1,2] * B[1,3] * ... * B[1,N-1]
// telescopes to a positive multiple of phase(y[1])^N, so phase(y[1]) is one of
// the N complex roots of its phase.  Shift ambiguity makes all N roots equally
// valid a priori; callers pick one by downstream fit quality.
inline std::vector<cd> estimate_y1(const Eigen::MatrixXcd& bispec) {
  const int n = int(bispec.rows());
  if (n < 3) throw std::invalid_argument("estimate_y1: needs N >= 3");
  const double tau = phase_zero_threshold(bispec.cwiseAbs().maxCoeff());

  auto factor = [&](int k1, int k2) -> cd {
    const cd v = bispec(k1, k2);
    if (std::abs(v) <= tau) throw vanishing_dft_error(k2);
    return v / std::abs(v);  // keep the product away from overflow/underflow
  };

  cd prod = factor(n - 1, 1) * factor(1, 2) * factor(1, 2);
  for (int k = 3; k < n; ++k) prod *= factor(1, k);

  const double theta = angle_of(prod);
  std::vector<cd> roots(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j)
    roots[std::size_t(j)] =
        std::polar(1.0, (theta + 2.0 * std::numbers::pi * double(j)) / double(n));
  return roots;
}

}  // namespace mra
