#pragma once

// Reference estimators that bracket the invariant-feature methods:
//   template_align: align every observation to the first one by maximizing
//     the real cross-correlation (ties broken by the smallest shift), then
//     average.  Cheap, but alignment against a noisy template biases it.
//   oracle_average: align with the true shifts recorded at generation time;
//     unbeatable in expectation and used as the error floor in sweeps.

#include <stdexcept>

#include <Eigen/Dense>

#include "mra/observations.hpp"
#include "mra/signal.hpp"

namespace mra {

inline Signal template_align(const ObservationBatch& batch) {
  const int n = batch.n();
  const long m = batch.m();
  if (m < 1) throw std::invalid_argument("template_align: empty batch");
  const Eigen::VectorXcd f0 = dft(batch.observations.col(0));

  Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(n);
  for (long j = 0; j < m; ++j) {
    // score(k) = Re sum_n xi_0[n] conj(xi_j[n + k]), all k at once via FFT
    const Eigen::VectorXcd fj = dft(batch.observations.col(j));
    const Eigen::VectorXcd corr = idft(fj.cwiseProduct(f0.conjugate()));
    int best = 0;
    for (int k = 1; k < n; ++k)
      if (corr[k].real() > corr[best].real()) best = k;
    acc += circular_shift(Eigen::VectorXcd(batch.observations.col(j)), -best);
  }
  Signal out;
  out.values = acc / double(m);
  if (batch.is_real) out.values = out.values.real().cast<cd>();
  out.is_real = batch.is_real;
  return out;
}

inline Signal oracle_average(const ObservationBatch& batch) {
  if (!batch.true_shifts) throw std::invalid_argument("oracle_average: true shifts unavailable");
  const int n = batch.n();
  const long m = batch.m();
  Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(n);
  for (long j = 0; j < m; ++j)
    acc += circular_shift(Eigen::VectorXcd(batch.observations.col(j)),
                          -(*batch.true_shifts)[std::size_t(j)]);
  Signal out;
  out.values = acc / double(m);
  if (batch.is_real) out.values = out.values.real().cast<cd>();
  out.is_real = batch.is_real;
  return out;
}

}  // namespace mra
