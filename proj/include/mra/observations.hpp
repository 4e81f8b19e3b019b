#pragma once

// Observation model: each observation is a uniformly random circular shift of
// the source signal plus i.i.d. Gaussian noise of total variance sigma^2 per
// entry (complex noise splits sigma^2/2 into each component).
//
// Determinism contract: observation j depends only on (seed, j).  Each
// observation gets its own engine keyed by a splitmix64-derived stream, so
// batches are reproducible and prefix-stable: growing M appends observations
// without changing existing ones.

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "mra/signal.hpp"

namespace mra {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
  std::uint64_t s = splitmix64(seed ^ 0xA5A5A5A5A5A5A5A5ULL);
  s = splitmix64(s ^ a);
  s = splitmix64(s ^ b);
  s = splitmix64(s ^ c);
  return s;
}

struct ObservationBatch {
  Eigen::MatrixXcd observations;  // N x M, one observation per column
  double sigma = 0.0;
  bool is_real = true;
  std::uint64_t seed = 0;
  std::optional<std::vector<int>> true_shifts;

  int n() const { return int(observations.rows()); }
  long m() const { return long(observations.cols()); }
};

inline ObservationBatch generate_observations(const Signal& x, long m, double sigma,
                                              std::uint64_t seed) {
  if (m <= 0) throw std::invalid_argument("generate_observations: M must be positive");
  if (sigma < 0.0) throw std::invalid_argument("generate_observations: sigma must be nonnegative");
  const int n = x.n();
  if (n <= 0) throw std::invalid_argument("generate_observations: empty signal");

  ObservationBatch batch;
  batch.observations.resize(n, m);
  batch.sigma = sigma;
  batch.is_real = x.is_real;
  batch.seed = seed;
  batch.true_shifts = std::vector<int>(std::size_t(m));

  const double comp_sd = x.is_real ? sigma : sigma / std::sqrt(2.0);
  for (long j = 0; j < m; ++j) {
    std::mt19937_64 eng(derive_seed(seed, std::uint64_t(j)));
    std::uniform_int_distribution<int> shift_dist(0, n - 1);
    const int r = shift_dist(eng);
    (*batch.true_shifts)[std::size_t(j)] = r;
    Eigen::VectorXcd col = circular_shift(x.values, r);
    if (sigma > 0.0) {
      std::normal_distribution<double> gauss(0.0, comp_sd);
      if (x.is_real) {
        for (int i = 0; i < n; ++i) col[i] += gauss(eng);
      } else {
        for (int i = 0; i < n; ++i) {
          const double re = gauss(eng);
          const double im = gauss(eng);
          col[i] += cd{re, im};
        }
      }
    }
    batch.observations.col(j) = col;
  }
  return batch;
}

// Noise level from the variance of the per-observation sums: the sum over
// entries is shift-invariant, so across observations its variance is N*sigma^2.
inline double estimate_sigma(const ObservationBatch& batch) {
  const long m = batch.m();
  if (m < 2) throw std::invalid_argument("estimate_sigma: needs at least two observations");
  Eigen::VectorXcd sums = batch.observations.colwise().sum();
  const cd mean = sums.mean();
  double var = 0.0;
  for (long j = 0; j < m; ++j) var += std::norm(sums[j] - mean);
  var /= double(m - 1);
  return std::sqrt(var / double(batch.n()));
}

}  // namespace mra
