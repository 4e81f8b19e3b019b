#pragma once

// Expectation-maximization directly on the observations.
//
// E-step: the posterior over the unknown shift of observation xi given the
// current signal iterate x is
//     w[l] ∝ exp( -||shift(x, l) - xi||^2 / (2 sigma^2) ),
// computed for all N shifts at once through the circular cross-correlation
//     c[l] = sum_n xi[n] conj(x[n - l]) = idft( dft(xi) .* conj(dft(x)) )[l],
// since the squared norms do not depend on l.  A log-sum-exp guards the
// normalization.  sigma = 0 degenerates to a hard assignment of the best
// shift (smallest index when the correlations tie exactly).
//
// M-step: the new iterate averages the posterior-weighted un-shifted
// observations,
//     x_next = (1/M) sum_j sum_l w_j[l] unshift(xi_j, l),
// evaluated again with FFTs: sum_l w_j[l] xi_j[n + l] = idft( dft(xi_j) .* conj(dft(w_j)) )[n].
//
// Batches with M >= 3000 warm-start with a fixed number of iterations on
// fresh random subsets before switching to full-data iterations; iteration
// stops when the shift-aligned relative change falls below tol.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "mra/observations.hpp"
#include "mra/signal.hpp"

namespace mra {

struct EmOptions {
  double tol = 1e-5;
  int batch_iters = 3000;
  int batch_size = 1000;
  long warm_start_threshold = 3000;  // M >= this runs the batched warm start
  long max_full_iters = 100000;
  std::uint64_t seed = 0;
  int threads = 1;
};

inline Eigen::VectorXd shift_posteriors(const Eigen::VectorXcd& x, const Eigen::VectorXcd& xi,
                                        double sigma) {
  const int n = int(x.size());
  if (int(xi.size()) != n) throw std::invalid_argument("shift_posteriors: length mismatch");
  const Eigen::VectorXcd fx = dft(x);
  const Eigen::VectorXcd fxi = dft(xi);
  const Eigen::VectorXcd corr = idft(fxi.cwiseProduct(fx.conjugate()));

  Eigen::VectorXd w(n);
  if (sigma == 0.0) {
    int best = 0;
    for (int l = 1; l < n; ++l)
      if (corr[l].real() > corr[best].real()) best = l;
    w.setZero();
    w[best] = 1.0;
    return w;
  }
  const double inv = 1.0 / (sigma * sigma);
  double mx = -std::numeric_limits<double>::infinity();
  for (int l = 0; l < n; ++l) mx = std::max(mx, corr[l].real() * inv);
  double total = 0.0;
  for (int l = 0; l < n; ++l) {
    w[l] = std::exp(corr[l].real() * inv - mx);
    total += w[l];
  }
  w /= total;
  return w;
}

namespace em_detail {

// One EM pass over the observation spectra (columns of fobs).
inline Eigen::VectorXcd step_on_spectra(const Eigen::VectorXcd& x, const Eigen::MatrixXcd& fobs,
                                        double sigma, int threads) {
  const int n = int(x.size());
  const long m = fobs.cols();
  const Eigen::VectorXcd fx = dft(x);
  const double inv = sigma > 0.0 ? 1.0 / (sigma * sigma) : 0.0;

  auto process = [&](long j0, long j1, Eigen::VectorXcd& acc) {
    Eigen::VectorXd w(n);
    for (long j = j0; j < j1; ++j) {
      const Eigen::VectorXcd corr = idft(fobs.col(j).cwiseProduct(fx.conjugate()));
      if (sigma == 0.0) {
        int best = 0;
        for (int l = 1; l < n; ++l)
          if (corr[l].real() > corr[best].real()) best = l;
        w.setZero();
        w[best] = 1.0;
      } else {
        double mx = -std::numeric_limits<double>::infinity();
        for (int l = 0; l < n; ++l) mx = std::max(mx, corr[l].real() * inv);
        double total = 0.0;
        for (int l = 0; l < n; ++l) {
          w[l] = std::exp(corr[l].real() * inv - mx);
          total += w[l];
        }
        w /= total;
      }
      acc += fobs.col(j).cwiseProduct(dft(w.cast<cd>()).conjugate());
    }
  };

  Eigen::VectorXcd total = Eigen::VectorXcd::Zero(n);
  if (threads <= 1 || m < 2 * threads) {
    process(0, m, total);
  } else {
    const int t = threads;
    std::vector<Eigen::VectorXcd> parts(std::size_t(t), Eigen::VectorXcd::Zero(n));
    std::vector<std::thread> pool;
    const long chunk = (m + t - 1) / t;
    for (int i = 0; i < t; ++i) {
      const long j0 = i * chunk;
      const long j1 = std::min(m, j0 + chunk);
      if (j0 >= j1) break;
      pool.emplace_back([&, i, j0, j1] { process(j0, j1, parts[std::size_t(i)]); });
    }
    for (auto& th : pool) th.join();
    for (const auto& p : parts) total += p;  // fixed order, independent of scheduling
  }
  return idft(total) / double(m);
}

}  // namespace em_detail

inline Signal em_step(const Signal& x, const ObservationBatch& batch, int threads = 1) {
  const int n = batch.n();
  if (x.n() != n) throw std::invalid_argument("em_step: length mismatch");
  Eigen::MatrixXcd fobs(n, batch.m());
  for (long j = 0; j < batch.m(); ++j) fobs.col(j) = dft(batch.observations.col(j));
  Eigen::VectorXcd next = em_detail::step_on_spectra(x.values, fobs, batch.sigma, threads);
  Signal out;
  out.is_real = batch.is_real;
  out.values = batch.is_real ? next.real().cast<cd>().eval() : next;
  return out;
}

inline Signal em_run(const ObservationBatch& batch, const EmOptions& opts = {}) {
  if (batch.sigma <= 0.0) throw std::invalid_argument("em_run: needs sigma > 0");
  const int n = batch.n();
  const long m = batch.m();

  Eigen::MatrixXcd fobs(n, m);
  for (long j = 0; j < m; ++j) fobs.col(j) = dft(batch.observations.col(j));

  // random start
  std::mt19937_64 eng(derive_seed(opts.seed, 0x1221ULL));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXcd x(n);
  for (int i = 0; i < n; ++i) {
    if (batch.is_real)
      x[i] = cd{gauss(eng), 0.0};
    else
      x[i] = cd{gauss(eng) / std::sqrt(2.0), gauss(eng) / std::sqrt(2.0)};
  }

  auto clamp_kind = [&](Eigen::VectorXcd v) {
    return batch.is_real ? Eigen::VectorXcd(v.real().cast<cd>()) : v;
  };

  // warm start on random subsets
  if (m >= opts.warm_start_threshold && opts.batch_iters > 0 && opts.batch_size < m) {
    std::vector<long> all(static_cast<std::size_t>(m));
    std::iota(all.begin(), all.end(), 0L);
    Eigen::MatrixXcd sub(n, opts.batch_size);
    for (int it = 0; it < opts.batch_iters; ++it) {
      std::mt19937_64 pick(derive_seed(opts.seed, 0xBA7CULL, std::uint64_t(it)));
      std::vector<long> idx;
      idx.reserve(std::size_t(opts.batch_size));
      std::sample(all.begin(), all.end(), std::back_inserter(idx), opts.batch_size, pick);
      for (int c = 0; c < opts.batch_size; ++c) sub.col(c) = fobs.col(idx[std::size_t(c)]);
      x = clamp_kind(em_detail::step_on_spectra(x, sub, batch.sigma, opts.threads));
    }
  }

  // full-data iterations until the aligned relative change is small
  for (long it = 0; it < opts.max_full_iters; ++it) {
    Eigen::VectorXcd x_next = clamp_kind(em_detail::step_on_spectra(x, fobs, batch.sigma, opts.threads));
    const double change = relative_error(x, x_next);
    x = x_next;
    if (change < opts.tol) break;
  }

  Signal out;
  out.values = x;
  out.is_real = batch.is_real;
  return out;
}

}  // namespace mra
