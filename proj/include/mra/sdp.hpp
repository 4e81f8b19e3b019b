#pragma once

// Convex relaxation of the phase recovery problem.
//
// Lift zz^* to a matrix variable Z and solve
//     min_{z, Z}  || W .* ( b_tilde .* conj(T(z)) - Z ) ||_F^2
//     s.t.        [[Z, z], [z^*, 1]] >= 0  (PSD),
//                 diag(Z) = 1,  z[0] = y0,  z[1] = y1,
//                 z[k] = conj(z[N-k]) when the signal is real.
// The objective is jointly convex in (z, Z) because T(z) is linear in z.  At a
// clean normalized bispectrum with positive weights the minimizer is unique
// with Z = z z^* and z the true spectrum phases (given the anchors y0, y1).
//
// Solver: three-block consensus ADMM over the lifted (N+1) x (N+1) matrix.
//   block 1: the data term; its prox splits over circulant diagonals of the Z
//            block paired with the corresponding z entry and has a closed form
//   block 2: projection onto the affine constraints (diagonal, anchors,
//            Hermitian consistency of the z column/row, real symmetry)
//   block 3: projection onto the PSD cone (Hermitianize + eigenvalue clip)
// Penalty rho = 1, rescaled x2 either way when the primal/dual residual ratio
// exceeds 10.

#include <cmath>
#include <complex>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "mra/signal.hpp"

namespace mra {

struct SdpOptions {
  double tol = 1e-6;
  int max_iter = 5000;
  double rho = 1.0;
};

struct SdpSolution {
  Eigen::VectorXcd z;
  Eigen::MatrixXcd big_z;
  int iters = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  bool converged = false;
};

namespace sdp_detail {

// Prox of the data term at V with parameter rho, acting on the lifted matrix.
// Only the Z block and the z column participate; other entries pass through.
inline Eigen::MatrixXcd prox_data(const Eigen::MatrixXcd& b_tilde, const Eigen::MatrixXd& w2,
                                  const Eigen::MatrixXcd& v, double rho) {
  const int n = int(b_tilde.rows());
  Eigen::MatrixXcd x = v;
  for (int d = 0; d < n; ++d) {
    // entries of the circulant diagonal d: (k1, k2) with k2 - k1 = d (mod N)
    const cd u_d = v(d, n);  // prox point for z[d]
    double denom = 1.0;
    cd numer = u_d;
    for (int k1 = 0; k1 < n; ++k1) {
      const int k2 = (k1 + d) % n;
      const double t = w2(k1, k2);
      const double gamma = t / (t + 0.5 * rho);
      const cd b = b_tilde(k1, k2);
      numer += gamma * b * std::conj(v(k1, k2));
      denom += gamma * std::norm(b);
    }
    const cd zeta = numer / denom;
    x(d, n) = zeta;
    for (int k1 = 0; k1 < n; ++k1) {
      const int k2 = (k1 + d) % n;
      const double t = w2(k1, k2);
      x(k1, k2) = (t * b_tilde(k1, k2) * std::conj(zeta) + 0.5 * rho * v(k1, k2)) /
                  (t + 0.5 * rho);
    }
  }
  return x;
}

inline Eigen::MatrixXcd project_affine(const Eigen::MatrixXcd& v, cd y0, cd y1, bool is_real) {
  const int n = int(v.rows()) - 1;
  Eigen::MatrixXcd x = v;
  x(n, n) = cd{1.0, 0.0};
  for (int k = 0; k < n; ++k) x(k, k) = cd{1.0, 0.0};
  // reconcile the z column with the conjugated bottom row
  Eigen::VectorXcd z(n);
  for (int k = 0; k < n; ++k) z[k] = 0.5 * (x(k, n) + std::conj(x(n, k)));
  if (is_real) {
    for (int k = 1; k <= (n - 1) / 2; ++k) {
      const cd avg = 0.5 * (z[k] + std::conj(z[n - k]));
      z[k] = avg;
      z[n - k] = std::conj(avg);
    }
    z[0] = cd{z[0].real(), 0.0};
    if (n % 2 == 0) z[n / 2] = cd{z[n / 2].real(), 0.0};
  }
  z[0] = y0;
  z[1] = y1;
  if (is_real) z[n - 1] = std::conj(y1);
  for (int k = 0; k < n; ++k) {
    x(k, n) = z[k];
    x(n, k) = std::conj(z[k]);
  }
  return x;
}

inline Eigen::MatrixXcd project_psd(const Eigen::MatrixXcd& v) {
  Eigen::MatrixXcd h = 0.5 * (v + v.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h);
  Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(0.0);
  return eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().adjoint();
}

}  // namespace sdp_detail

inline SdpSolution sdp_solve(const Eigen::MatrixXcd& b_tilde, const Eigen::MatrixXd& w, cd y0,
                             cd y1, bool is_real, const SdpOptions& opts = {}) {
  const int n = int(b_tilde.rows());
  if (b_tilde.cols() != n) throw std::invalid_argument("sdp_solve: b_tilde not square");
  if (w.rows() != n || w.cols() != n) throw std::invalid_argument("sdp_solve: weight shape mismatch");
  if ((w.array() <= 0.0).any()) throw std::invalid_argument("sdp_solve: weights must be positive");
  if (n < 3) throw std::invalid_argument("sdp_solve: needs N >= 3");

  // scale-invariant objective: normalize weights for a well-conditioned solve.
  // Mean normalization keeps typical entries O(1); dividing by the max instead
  // lets a dominant DC weight crush the rest and stalls the splitting.
  const Eigen::MatrixXd wn = w / w.mean();
  const Eigen::MatrixXd w2 = wn.cwiseProduct(wn);

  const int m = n + 1;
  double rho = opts.rho;

  // start from the feasible all-ones guess
  Eigen::MatrixXcd xbar(m, m);
  {
    Eigen::VectorXcd z0 = Eigen::VectorXcd::Ones(n);
    z0[0] = y0;
    z0[1] = y1;
    if (is_real) z0[n - 1] = std::conj(y1);
    xbar.topLeftCorner(n, n) = z0 * z0.adjoint();
    xbar.topRightCorner(n, 1) = z0;
    xbar.bottomLeftCorner(1, n) = z0.adjoint();
    xbar(n, n) = cd{1.0, 0.0};
  }
  Eigen::MatrixXcd u1 = Eigen::MatrixXcd::Zero(m, m);
  Eigen::MatrixXcd u2 = u1, u3 = u1;

  SdpSolution sol;
  const double scale = std::sqrt(3.0) * double(m);
  for (int it = 1; it <= opts.max_iter; ++it) {
    const Eigen::MatrixXcd x1 = sdp_detail::prox_data(b_tilde, w2, xbar - u1, rho);
    const Eigen::MatrixXcd x2 = sdp_detail::project_affine(xbar - u2, y0, y1, is_real);
    const Eigen::MatrixXcd x3 = sdp_detail::project_psd(xbar - u3);
    const Eigen::MatrixXcd xbar_new = (x1 + x2 + x3) / 3.0;

    const double primal = std::sqrt((x1 - xbar_new).squaredNorm() + (x2 - xbar_new).squaredNorm() +
                                    (x3 - xbar_new).squaredNorm());
    const double dual = rho * std::sqrt(3.0) * (xbar_new - xbar).norm();

    u1 += x1 - xbar_new;
    u2 += x2 - xbar_new;
    u3 += x3 - xbar_new;
    xbar = xbar_new;

    sol.iters = it;
    sol.primal_residual = primal;
    sol.dual_residual = dual;
    if (primal <= opts.tol * scale && dual <= opts.tol * scale) {
      sol.converged = true;
      break;
    }
    // residual balancing
    if (primal > 10.0 * dual && dual > 0.0) {
      rho *= 2.0;
      u1 *= 0.5;
      u2 *= 0.5;
      u3 *= 0.5;
    } else if (dual > 10.0 * primal && primal > 0.0) {
      rho *= 0.5;
      u1 *= 2.0;
      u2 *= 2.0;
      u3 *= 2.0;
    }
  }

  // Report an exactly feasible point.  Projecting back and forth cannot finish
  // the job here: the unit-modulus anchors pin every feasible point to the
  // boundary of the cone, so alternating projections stall.  Instead keep the
  // affine-projected z (clamped into the unit polydisc) and complete the Z
  // block through the Schur test [[Z, z], [z^*, 1]] >= 0  <=>  Z - z z^* >= 0:
  // take the PSD part of the iterate's residual, rescale its diagonal to the
  // leftover mass 1 - |z[k]|^2, and top up the diagonal exactly.
  const Eigen::MatrixXcd h =
      sdp_detail::project_affine(0.5 * (xbar + xbar.adjoint()), y0, y1, is_real);
  Eigen::VectorXcd z = h.topRightCorner(n, 1);
  for (int k = 0; k < n; ++k) {
    const double a = std::abs(z[k]);
    if (a > 1.0) z[k] /= a;
  }
  Eigen::MatrixXcd s = sdp_detail::project_psd(h.topLeftCorner(n, n) - z * z.adjoint());
  Eigen::VectorXd shrink = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < n; ++k) {
    const double d = std::max(0.0, 1.0 - std::norm(z[k]));
    if (s(k, k).real() > 1e-14) shrink[k] = std::sqrt(d / s(k, k).real());
  }
  s = shrink.asDiagonal() * s * shrink.asDiagonal();
  for (int k = 0; k < n; ++k) s(k, k) = cd{std::max(0.0, 1.0 - std::norm(z[k])), 0.0};
  sol.z = std::move(z);
  sol.big_z = sol.z * sol.z.adjoint() + s;
  return sol;
}

// Certificate behind the relaxation's uniqueness argument: a conjugate
// symmetric unit-modulus vector whose DFT is real and nonnegative, anchored by
// u[0] = u[1] = 1, can only be the all-ones vector.  Returns true iff u
// satisfies those hypotheses within tol (the conclusion is then forced).
inline bool nonneg_dft_certificate(const Eigen::VectorXcd& u, double tol = 1e-9) {
  const int n = int(u.size());
  if (n < 2) return false;
  if (std::abs(u[0] - cd{1.0, 0.0}) > tol) return false;
  if (std::abs(u[1] - cd{1.0, 0.0}) > tol) return false;
  for (int k = 0; k < n; ++k) {
    if (std::abs(std::abs(u[k]) - 1.0) > tol) return false;
    if (std::abs(u[k] - std::conj(u[(n - k) % n])) > tol) return false;
  }
  const Eigen::VectorXcd f = dft(u);
  for (int k = 0; k < n; ++k) {
    if (std::abs(f[k].imag()) > tol * double(n)) return false;
    if (f[k].real() < -tol * double(n)) return false;
  }
  return true;
}

}  // namespace mra
