#pragma once

// Unnormalized DFT pair used throughout:
//   dft :  y[k] = sum_n x[n] exp(-2*pi*i*k*n/N)       (so y[0] = N * mean(x))
//   idft:  x[n] = (1/N) sum_k y[k] exp(+2*pi*i*k*n/N)
// Power-of-two lengths run through an iterative radix-2 kernel; every other
// length is evaluated with the Bluestein chirp-z reduction to a power-of-two
// convolution, so all sizes (including primes) cost O(N log N).
// Pure functions; safe to call concurrently (per-thread plan cache).

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace mra {

using cd = std::complex<double>;

namespace fft_detail {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline void fft_pow2(std::vector<cd>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * std::numbers::pi / double(len) * (inverse ? 1.0 : -1.0);
    const cd wstep = std::polar(1.0, ang);
    for (std::size_t i = 0; i < n; i += len) {
      cd w{1.0, 0.0};
      for (std::size_t k = 0; k < len / 2; ++k) {
        const cd u = a[i + k];
        const cd v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wstep;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / double(n);
    for (auto& x : a) x *= inv;
  }
}

// Bluestein plan for one length: chirp c[j] = exp(-i*pi*j^2/n) and the
// forward transform of the wrapped conjugate chirp, padded to m = 2^p >= 2n-1.
struct BluesteinPlan {
  std::size_t m = 0;
  std::vector<cd> chirp;
  std::vector<cd> kernel_fft;
};

inline const BluesteinPlan& bluestein_plan(std::size_t n) {
  thread_local std::unordered_map<std::size_t, BluesteinPlan> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  BluesteinPlan plan;
  std::size_t m = 1;
  while (m < 2 * n - 1) m <<= 1;
  plan.m = m;
  plan.chirp.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    // exponent has period 2n in j^2, reduce first to keep the angle small
    const std::uint64_t q = (std::uint64_t(j) * j) % (2 * n);
    plan.chirp[j] = std::polar(1.0, -std::numbers::pi * double(q) / double(n));
  }
  std::vector<cd> b(m, cd{0.0, 0.0});
  b[0] = std::conj(plan.chirp[0]);
  for (std::size_t j = 1; j < n; ++j) {
    b[j] = std::conj(plan.chirp[j]);
    b[m - j] = b[j];
  }
  fft_pow2(b, false);
  plan.kernel_fft = std::move(b);
  return cache.emplace(n, std::move(plan)).first->second;
}

inline void dft_any(std::vector<cd>& a) {
  const std::size_t n = a.size();
  if (n <= 1) return;
  if (is_pow2(n)) {
    fft_pow2(a, false);
    return;
  }
  const BluesteinPlan& plan = bluestein_plan(n);
  std::vector<cd> tmp(plan.m, cd{0.0, 0.0});
  for (std::size_t j = 0; j < n; ++j) tmp[j] = a[j] * plan.chirp[j];
  fft_pow2(tmp, false);
  for (std::size_t j = 0; j < plan.m; ++j) tmp[j] *= plan.kernel_fft[j];
  fft_pow2(tmp, true);
  for (std::size_t k = 0; k < n; ++k) a[k] = tmp[k] * plan.chirp[k];
}

}  // namespace fft_detail

inline Eigen::VectorXcd dft(const Eigen::VectorXcd& x) {
  std::vector<cd> a(x.data(), x.data() + x.size());
  fft_detail::dft_any(a);
  return Eigen::Map<const Eigen::VectorXcd>(a.data(), x.size());
}

inline Eigen::VectorXcd idft(const Eigen::VectorXcd& y) {
  // idft(y) = conj(dft(conj(y))) / N
  const Eigen::Index n = y.size();
  std::vector<cd> a(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) a[std::size_t(j)] = std::conj(y[j]);
  fft_detail::dft_any(a);
  Eigen::VectorXcd out(n);
  const double inv = n > 0 ? 1.0 / double(n) : 1.0;
  for (Eigen::Index j = 0; j < n; ++j) out[j] = std::conj(a[std::size_t(j)]) * inv;
  return out;
}

}  // namespace mra
