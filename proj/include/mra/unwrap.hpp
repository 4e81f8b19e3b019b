#pragma once

// Phase recovery by unwrapping the normalized bispectrum.
//
// Each bispectrum entry gives a linear relation between spectrum phases that
// holds only modulo 2*pi:
//     Psi[k1,k2] + 2*pi*chi[k1,k2] = psi[k1] - psi[k2] + psi[k2-k1]
// with unknown integers chi.  Stacking all N^2 relations (column-major) gives
//     Psi_vec + 2*pi*chi_vec = A psi.
// For real signals psi[N-m] = -psi[m] (mod 2*pi), so the wrap-around rows use
// the signed difference: the third term is +psi[k2-k1] when k2 >= k1 and
// -psi[k1-k2] otherwise.  That convention makes the whole system consistent
// with a single integer vector and leaves A with rank N-1; its null direction
// is the linear ramp (0,1,...,N-1), i.e. the circular-shift ambiguity.
// For complex signals no reflection identity exists; the wrap rows fall back
// to the mod-N column and A has full rank N.
//
// Let C be an orthonormal basis of ker(A^T) stacked as rows.  Applying C
// eliminates psi:  C(Psi_vec/(2*pi) + chi_vec) = 0.  Fixing the first rank(A)
// entries of chi to zero (a valid gauge after the DC sign normalization below)
// leaves a square integer system: chi_sub solves the closest-vector problem
//     min || C_sub chi_sub - t ||,   t = -C Psi_vec / (2*pi),
// attacked with LLL reduction plus Babai's nearest-plane rounding.  The phases
// then come from a robust L1 fit of A psi to Psi_vec + 2*pi*chi_vec.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/QR>

#include "mra/invariants.hpp"
#include "mra/signal.hpp"

namespace mra {

// ---------------------------------------------------------------------------
// Lattice tools (real arithmetic; basis vectors are matrix columns).

struct LatticeBasis {
  Eigen::MatrixXd basis;
  Eigen::MatrixXd transform;  // unimodular: basis_out = basis_in * transform
};

namespace lattice_detail {

// Gram-Schmidt data for the current basis: bstar columns, squared norms,
// and the lower-triangular coefficient matrix mu.
struct Gso {
  Eigen::MatrixXd bstar;
  Eigen::MatrixXd mu;
  Eigen::VectorXd norm2;
};

inline void gso_column(const Eigen::MatrixXd& b, Gso& g, int i) {
  Eigen::VectorXd v = b.col(i);
  for (int j = 0; j < i; ++j) {
    const double m = g.norm2[j] > 0.0 ? g.bstar.col(j).dot(b.col(i)) / g.norm2[j] : 0.0;
    g.mu(i, j) = m;
    v -= m * g.bstar.col(j);
  }
  g.bstar.col(i) = v;
  g.norm2[i] = v.squaredNorm();
}

inline Gso full_gso(const Eigen::MatrixXd& b) {
  const int d = int(b.cols());
  Gso g;
  g.bstar.resize(b.rows(), d);
  g.mu = Eigen::MatrixXd::Identity(d, d);
  g.norm2.resize(d);
  for (int i = 0; i < d; ++i) gso_column(b, g, i);
  return g;
}

}  // namespace lattice_detail

// Lovasz-reduced basis with parameter delta (1/4 < delta <= 1).
// The loop maintains only the Gram-Schmidt coefficients mu and squared norms;
// swaps update them in O(d) with the classical exchange formulas.
inline LatticeBasis lll_reduce(const Eigen::MatrixXd& basis_in, double delta = 0.75) {
  if (delta <= 0.25 || delta > 1.0) throw std::invalid_argument("lll_reduce: delta out of range");
  const int d = int(basis_in.cols());
  if (d == 0) throw std::invalid_argument("lll_reduce: empty basis");

  Eigen::MatrixXd b = basis_in;
  Eigen::MatrixXd u = Eigen::MatrixXd::Identity(d, d);
  lattice_detail::Gso g = lattice_detail::full_gso(b);
  for (int i = 0; i < d; ++i)
    if (g.norm2[i] <= 1e-24 * std::max(1.0, b.col(i).squaredNorm()))
      throw std::invalid_argument("lll_reduce: basis vectors are linearly dependent");
  Eigen::MatrixXd mu = g.mu;
  Eigen::VectorXd norm2 = g.norm2;

  int k = 1;
  long guard = 0;
  const long guard_max = 100000L + 2000L * long(d) * 64L;
  while (k < d) {
    if (++guard > guard_max) throw std::runtime_error("lll_reduce: iteration guard tripped");
    // size-reduce column k against previous columns
    for (int j = k - 1; j >= 0; --j) {
      const double q = std::round(mu(k, j));
      if (q != 0.0) {
        b.col(k) -= q * b.col(j);
        u.col(k) -= q * u.col(j);
        for (int t = 0; t < j; ++t) mu(k, t) -= q * mu(j, t);
        mu(k, j) -= q;
      }
    }
    const double m = mu(k, k - 1);
    if (norm2[k] >= (delta - m * m) * norm2[k - 1]) {
      ++k;
    } else {
      b.col(k).swap(b.col(k - 1));
      u.col(k).swap(u.col(k - 1));
      for (int j = 0; j < k - 1; ++j) std::swap(mu(k, j), mu(k - 1, j));
      const double big = norm2[k] + m * m * norm2[k - 1];
      const double mu_new = m * norm2[k - 1] / big;
      norm2[k] = norm2[k - 1] * norm2[k] / big;
      norm2[k - 1] = big;
      mu(k, k - 1) = mu_new;
      for (int i = k + 1; i < d; ++i) {
        const double t = mu(i, k);
        mu(i, k) = mu(i, k - 1) - m * t;
        mu(i, k - 1) = t + mu_new * mu(i, k);
      }
      k = std::max(k - 1, 1);
    }
  }
  return LatticeBasis{std::move(b), std::move(u)};
}

inline bool lll_is_size_reduced(const Eigen::MatrixXd& b, double tol = 1e-9) {
  const auto g = lattice_detail::full_gso(b);
  for (int i = 1; i < int(b.cols()); ++i)
    for (int j = 0; j < i; ++j)
      if (std::abs(g.mu(i, j)) > 0.5 + tol) return false;
  return true;
}

inline bool lll_lovasz_holds(const Eigen::MatrixXd& b, double delta = 0.75, double tol = 1e-9) {
  const auto g = lattice_detail::full_gso(b);
  for (int k = 1; k < int(b.cols()); ++k) {
    const double lhs = g.norm2[k];
    const double rhs = (delta - g.mu(k, k - 1) * g.mu(k, k - 1)) * g.norm2[k - 1];
    if (lhs < rhs - tol * std::max(1.0, g.norm2[k - 1])) return false;
  }
  return true;
}

// Babai nearest-plane rounding.  Returns integer coefficients with respect to
// the given (ideally LLL-reduced) basis columns.
inline Eigen::VectorXd nearest_lattice_point(const Eigen::MatrixXd& basis,
                                             const Eigen::VectorXd& target) {
  if (basis.rows() != target.size())
    throw std::invalid_argument("nearest_lattice_point: dimension mismatch");
  const int d = int(basis.cols());
  const auto g = lattice_detail::full_gso(basis);
  Eigen::VectorXd y = target;
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(d);
  for (int i = d - 1; i >= 0; --i) {
    if (g.norm2[i] <= 0.0) throw std::invalid_argument("nearest_lattice_point: degenerate basis");
    const double c = std::round(g.bstar.col(i).dot(y) / g.norm2[i]);
    coeffs[i] = c;
    y -= c * basis.col(i);
  }
  return coeffs;
}

// ---------------------------------------------------------------------------
// Unwrap system assembly.

struct UnwrapSystem {
  Eigen::MatrixXd a;    // N^2 x N phase-relation coefficients
  Eigen::MatrixXd c;    // (N^2 - rank) x N^2 orthonormal kernel basis of A^T
  Eigen::VectorXd psi;  // stacked angles of b_tilde, column-major, in (-pi, pi]
  int n = 0;
  int rank = 0;
  bool is_real = true;
  // Gauge: indices (in stacking order) of the first rank(A) linearly
  // independent rows of A.  Fixing the integer unknowns to zero there leaves a
  // determined subsystem, and some valid integer vector always has zeros there
  // (the per-entry 2*pi and time-shift freedoms absorb the fixed entries).
  std::vector<int> fixed_rows;
};

inline UnwrapSystem build_unwrap_system(const Eigen::MatrixXcd& b_tilde, bool is_real) {
  const int n = int(b_tilde.rows());
  if (b_tilde.cols() != n) throw std::invalid_argument("build_unwrap_system: b_tilde not square");
  if (n < 2) throw std::invalid_argument("build_unwrap_system: N too small");

  UnwrapSystem sys;
  sys.n = n;
  sys.is_real = is_real;
  sys.a = Eigen::MatrixXd::Zero(n * n, n);
  sys.psi.resize(n * n);

  for (int k2 = 0; k2 < n; ++k2)
    for (int k1 = 0; k1 < n; ++k1) {
      const int row = k1 + n * k2;  // column-major stacking
      sys.psi[row] = angle_of(b_tilde(k1, k2));
      sys.a(row, k1) += 1.0;
      sys.a(row, k2) -= 1.0;
      const int d = k2 - k1;
      if (d >= 0) {
        sys.a(row, d) += 1.0;
      } else if (is_real) {
        sys.a(row, -d) -= 1.0;  // psi[d mod N] = -psi[-d] (mod 2*pi) for real signals
      } else {
        sys.a(row, d + n) += 1.0;
      }
    }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sys.a);
  qr.setThreshold(1e-10);
  sys.rank = int(qr.rank());
  const int expected = is_real ? n - 1 : n;
  if (sys.rank != expected) throw std::runtime_error("build_unwrap_system: unexpected rank");

  // rows of C = orthonormal complement of col(A): trailing columns of Q
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n * n, n * n);
  sys.c = q.rightCols(n * n - sys.rank).transpose();

  // greedy scan for the first rank(A) independent rows (Gram-Schmidt residual)
  Eigen::MatrixXd basis(n, sys.rank);
  int found = 0;
  for (int row = 0; row < n * n && found < sys.rank; ++row) {
    Eigen::VectorXd r = sys.a.row(row).transpose();
    for (int j = 0; j < found; ++j) r -= basis.col(j).dot(r) * basis.col(j);
    if (r.norm() > 1e-9) {
      basis.col(found++) = r / r.norm();
      sys.fixed_rows.push_back(row);
    }
  }
  if (found != sys.rank) throw std::runtime_error("build_unwrap_system: gauge scan failed");
  return sys;
}

// ---------------------------------------------------------------------------
// Robust phase fit.

struct L1FitOptions {
  double epsilon = 1e-8;  // smoothing of |r| near zero
  double tol = 1e-9;      // stop when the objective decrease falls below this
  int max_iter = 500;
};

struct L1FitResult {
  Eigen::VectorXd psi;
  double objective = 0.0;
  int iters = 0;
  bool converged = false;
};

// Iteratively reweighted least squares for min_psi || b - A psi ||_1.
// Keeps the best iterate seen; converged=false flags hitting the cap.
inline L1FitResult l1_phase_fit(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                const L1FitOptions& opts = {}) {
  if (a.rows() != b.size()) throw std::invalid_argument("l1_phase_fit: dimension mismatch");
  const auto l1 = [&](const Eigen::VectorXd& psi) { return (b - a * psi).lpNorm<1>(); };

  Eigen::VectorXd psi =
      a.completeOrthogonalDecomposition().solve(b);  // min-norm least squares start
  L1FitResult best;
  best.psi = psi;
  best.objective = l1(psi);

  double prev = best.objective;
  for (int it = 1; it <= opts.max_iter; ++it) {
    const Eigen::VectorXd r = b - a * psi;
    Eigen::VectorXd w(r.size());
    for (Eigen::Index i = 0; i < r.size(); ++i)
      w[i] = 1.0 / std::sqrt(std::sqrt(r[i] * r[i] + opts.epsilon * opts.epsilon));
    // weighted least squares: rows scaled by sqrt of the IRLS weight
    const Eigen::MatrixXd aw = w.asDiagonal() * a;
    const Eigen::VectorXd bw = w.cwiseProduct(b);
    psi = aw.completeOrthogonalDecomposition().solve(bw);
    const double obj = l1(psi);
    best.iters = it;
    if (obj < best.objective) {
      best.objective = obj;
      best.psi = psi;
    }
    if (prev - obj < opts.tol) {
      best.converged = true;
      break;
    }
    prev = obj;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Full unwrap pipeline.

struct UnwrapOptions {
  double delta_lll = 0.75;
  L1FitOptions l1{};
  // Optional known phase of y[1]; used to pick the shift representative for
  // real signals (any N-th root of the telescoping product works otherwise).
  std::optional<cd> y1_hint;
};

struct UnwrapResult {
  Eigen::VectorXcd phases;
  bool l1_converged = true;
};

inline UnwrapResult phase_unwrap(const Eigen::MatrixXcd& b_tilde_in, bool is_real,
                                 const UnwrapOptions& opts = {}) {
  const int n = int(b_tilde_in.rows());
  Eigen::MatrixXcd b_tilde = b_tilde_in;

  // Normalize the DC sign for real signals: the gauge fixing below assumes
  // psi[0] = 0, and negating x negates its bispectrum, so a negative-mean
  // signal is handled by flipping in and flipping back.
  bool flipped = false;
  if (is_real && b_tilde(0, 0).real() < 0.0) {
    b_tilde = -b_tilde;
    flipped = true;
  }

  UnwrapSystem sys = build_unwrap_system(b_tilde, is_real);
  const int nn = n * n;
  const int free_dim = nn - sys.rank;

  std::vector<char> fixed(std::size_t(nn), 0);
  for (int row : sys.fixed_rows) fixed[std::size_t(row)] = 1;
  std::vector<int> free_rows;
  free_rows.reserve(std::size_t(free_dim));
  for (int row = 0; row < nn; ++row)
    if (!fixed[std::size_t(row)]) free_rows.push_back(row);

  const Eigen::VectorXd target = -(sys.c * sys.psi) / (2.0 * std::numbers::pi);
  Eigen::MatrixXd c_sub(free_dim, free_dim);
  for (int j = 0; j < free_dim; ++j) c_sub.col(j) = sys.c.col(free_rows[std::size_t(j)]);
  LatticeBasis red = lll_reduce(c_sub, opts.delta_lll);
  const Eigen::VectorXd coeffs = nearest_lattice_point(red.basis, target);
  const Eigen::VectorXd chi_sub = red.transform * coeffs;

  Eigen::VectorXd chi = Eigen::VectorXd::Zero(nn);
  for (int j = 0; j < free_dim; ++j) chi[free_rows[std::size_t(j)]] = chi_sub[j];

  const Eigen::VectorXd rhs = sys.psi + 2.0 * std::numbers::pi * chi;
  L1FitResult fit = l1_phase_fit(sys.a, rhs, opts.l1);
  Eigen::VectorXd psi = fit.psi;

  if (is_real) {
    // Kill the ramp ambiguity left by the rank deficiency: align psi[1] with a
    // known (or bispectrum-derived) candidate for phase(y[1]).  Candidates
    // differ by multiples of 2*pi/N, so any choice lands on a shift orbit
    // representative of the same signal.
    cd cand;
    if (opts.y1_hint) {
      cand = *opts.y1_hint;
      if (flipped) cand = -cand;  // hint refers to the unflipped signal
    } else {
      cand = estimate_y1(b_tilde).front();
    }
    const double t = wrap_angle(angle_of(cand) - psi[1]);
    for (int k = 0; k < n; ++k) psi[k] += t * double(k);
  }

  Eigen::VectorXcd phases(n);
  for (int k = 0; k < n; ++k) phases[k] = std::polar(1.0, psi[k]);
  if (flipped) phases = -phases;

  UnwrapResult out;
  out.phases = phases;
  out.l1_converged = fit.converged;
  return out;
}

}  // namespace mra
