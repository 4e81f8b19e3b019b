#pragma once

// Non-convex phase recovery on the torus of unit-modulus vectors.
//
// Data: a normalized bispectrum b_tilde (unit-modulus phases of the bispectrum
// estimate) and nonnegative confidence weights w.  Writing T(z) for the
// circulant lift T(z)[k1,k2] = z[k2-k1] and
//     M(z) = (w .* w .* b_tilde) .* conj(T(z)),
// the fit objective on the torus { |z[k]| = 1 } is
//     f(z) = Re( z^* M(z) z )
//          = sum_{k1,k2} w[k1,k2]^2 Re( b_tilde[k1,k2] conj(z[k1]) z[k2] conj(z[k2-k1]) ).
// At the exact phase vector of a clean bispectrum every summand attains its
// maximum w^2, so maximizing f recovers the spectrum phases up to the
// fundamental shift ambiguity z[k] -> z[k] exp(2*pi*i*m*k/N).
//
// Euclidean derivatives used by the trust-region solver (valid because the
// data is projected onto the bispectral symmetry b[k2-k1,k2] = b[k1,k2]):
//     grad f(z) = 2 M(z) z + M(z)^* z
//     Hess f(z)[dz] = 2 M(dz) z + 2 M(z) dz + M(dz)^* z + M(z)^* dz
// For real signals (Hermitian data, conjugate-symmetric z) M(z) is Hermitian
// and M(z) dz = M(dz) z, which collapses the above to 3 M(z) z and 6 M(z) dz.
//
// Two manifolds share one solver:
//   - the full torus (complex signals);
//   - its conjugate-symmetric slice (real signals), where z[0] is pinned to
//     the known phase of the mean and, for even N, z[N/2] is pinned to +-1
//     with a sign-flip heuristic comparing both choices.

#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

#include "mra/invariants.hpp"
#include "mra/signal.hpp"

namespace mra {

struct PhaseProblem {
  Eigen::MatrixXcd b_tilde;  // unit-modulus (or zero) phase data
  Eigen::MatrixXd w;         // nonnegative weights
  Eigen::MatrixXcd a;        // cached w.*w.*b_tilde
  bool is_real = true;
  cd y0{1.0, 0.0};  // phase of the DC coefficient (used to pin z[0] on the real slice)

  int n() const { return int(b_tilde.rows()); }
};

inline PhaseProblem make_phase_problem(const Eigen::MatrixXcd& b_tilde, const Eigen::MatrixXd& w,
                                       bool is_real, cd y0 = cd{1.0, 0.0}) {
  const int n = int(b_tilde.rows());
  if (b_tilde.cols() != n) throw std::invalid_argument("make_phase_problem: b_tilde must be square");
  if (w.rows() != n || w.cols() != n)
    throw std::invalid_argument("make_phase_problem: weight shape mismatch");
  if ((w.array() < 0.0).any()) throw std::invalid_argument("make_phase_problem: negative weight");

  PhaseProblem p;
  p.is_real = is_real;
  p.y0 = y0;

  // Project the data onto the bispectral symmetry orbit {(k1,k2),(k2-k1,k2)}.
  // Estimates built by averaging observation bispectra satisfy it already;
  // the projection makes the gradient/Hessian identities hold for any input.
  Eigen::MatrixXcd b = b_tilde;
  Eigen::MatrixXd ww = w;
  for (int k2 = 0; k2 < n; ++k2)
    for (int k1 = 0; k1 < n; ++k1) {
      int k1p = k2 - k1;
      if (k1p < 0) k1p += n;
      if (k1p <= k1) continue;  // visit each orbit once
      const cd bavg = 0.5 * (b(k1, k2) + b(k1p, k2));
      b(k1, k2) = b(k1p, k2) = bavg;
      const double wavg = 0.5 * (ww(k1, k2) + ww(k1p, k2));
      ww(k1, k2) = ww(k1p, k2) = wavg;
    }
  if (is_real) {
    b = (0.5 * (b + b.adjoint())).eval();
    ww = (0.5 * (ww + ww.transpose())).eval();
  }
  p.b_tilde = b;
  p.w = ww;
  p.a = ww.cwiseProduct(ww).cast<cd>().cwiseProduct(b);
  return p;
}

inline Eigen::MatrixXcd m_of_z(const PhaseProblem& p, const Eigen::VectorXcd& z) {
  const int n = p.n();
  Eigen::MatrixXcd m(n, n);
  for (int k2 = 0; k2 < n; ++k2)
    for (int k1 = 0; k1 < n; ++k1) {
      int d = k2 - k1;
      if (d < 0) d += n;
      m(k1, k2) = p.a(k1, k2) * std::conj(z[d]);
    }
  return m;
}

// (M(z) v)[k1] = sum_k2 a[k1,k2] conj(z[k2-k1]) v[k2]
inline Eigen::VectorXcd apply_m(const PhaseProblem& p, const Eigen::VectorXcd& z,
                                const Eigen::VectorXcd& v) {
  const int n = p.n();
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(n);
  for (int k1 = 0; k1 < n; ++k1) {
    cd acc{0.0, 0.0};
    for (int k2 = 0; k2 < n; ++k2) {
      int d = k2 - k1;
      if (d < 0) d += n;
      acc += p.a(k1, k2) * std::conj(z[d]) * v[k2];
    }
    out[k1] = acc;
  }
  return out;
}

// (M(z)^* v)[k2] = sum_k1 conj(a[k1,k2]) z[k2-k1] v[k1]
inline Eigen::VectorXcd apply_m_adjoint_of_z(const PhaseProblem& p, const Eigen::VectorXcd& z,
                                             const Eigen::VectorXcd& v) {
  const int n = p.n();
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(n);
  for (int k2 = 0; k2 < n; ++k2) {
    cd acc{0.0, 0.0};
    for (int k1 = 0; k1 < n; ++k1) {
      int d = k2 - k1;
      if (d < 0) d += n;
      acc += std::conj(p.a(k1, k2)) * z[d] * v[k1];
    }
    out[k2] = acc;
  }
  return out;
}

// Adjoint of z -> M(z) against a matrix X:
//   m_adjoint(X)[k] = sum_{k2} a[k2-k, k2] conj(X[k2-k, k2])
// (the trace of T_k^T (w.*w.*b_tilde.*conj(X)) with T_k the k-th shift matrix).
inline Eigen::VectorXcd m_adjoint(const PhaseProblem& p, const Eigen::MatrixXcd& x) {
  const int n = p.n();
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(n);
  for (int k = 0; k < n; ++k) {
    cd acc{0.0, 0.0};
    for (int k2 = 0; k2 < n; ++k2) {
      int k1 = k2 - k;
      if (k1 < 0) k1 += n;
      acc += p.a(k1, k2) * std::conj(x(k1, k2));
    }
    out[k] = acc;
  }
  return out;
}

inline double phase_fit_cost(const PhaseProblem& p, const Eigen::VectorXcd& z) {
  const Eigen::VectorXcd mz = apply_m(p, z, z);
  return z.dot(mz).real();  // Eigen's dot conjugates the left argument
}

inline Eigen::VectorXcd phase_fit_egrad(const PhaseProblem& p, const Eigen::VectorXcd& z) {
  if (p.is_real) return 3.0 * apply_m(p, z, z);
  return 2.0 * apply_m(p, z, z) + apply_m_adjoint_of_z(p, z, z);
}

inline Eigen::VectorXcd phase_fit_ehess(const PhaseProblem& p, const Eigen::VectorXcd& z,
                                        const Eigen::VectorXcd& dz) {
  if (p.is_real) return 6.0 * apply_m(p, z, dz);
  return 2.0 * apply_m(p, dz, z) + 2.0 * apply_m(p, z, dz) +
         apply_m_adjoint_of_z(p, dz, z) + apply_m_adjoint_of_z(p, z, dz);
}

// ---------------------------------------------------------------------------
// Torus geometry.  real_sym selects the conjugate-symmetric slice.

struct TorusGeometry {
  int n = 0;
  bool real_sym = false;

  // Average u with its conjugate reflection: (u[k] + conj(u[-k])) / 2.
  Eigen::VectorXcd conj_sym_average(const Eigen::VectorXcd& u) const {
    Eigen::VectorXcd out(n);
    for (int k = 0; k <= n / 2; ++k) {
      const int r = (n - k) % n;
      const cd v = 0.5 * (u[k] + std::conj(u[r]));
      out[k] = v;
      out[r] = std::conj(v);
    }
    return out;
  }

  Eigen::VectorXcd sym(const Eigen::VectorXcd& u) const {
    return real_sym ? conj_sym_average(u) : u;
  }

  // Orthogonal projection onto the tangent space at z (after symmetrizing the
  // ambient vector on the real slice): u - Re(u .* conj(z)) .* z.
  Eigen::VectorXcd proj(const Eigen::VectorXcd& z, const Eigen::VectorXcd& u) const {
    Eigen::VectorXcd s = sym(u);
    for (int k = 0; k < n; ++k) {
      const double t = s[k].real() * z[k].real() + s[k].imag() * z[k].imag();
      s[k] -= t * z[k];
    }
    return s;
  }

  double inner(const Eigen::VectorXcd& u, const Eigen::VectorXcd& v) const {
    return u.dot(v).real();
  }

  // Metric projection back to the torus: entrywise phase of z + dz, keeping
  // the previous entry where the sum (numerically) vanishes.
  Eigen::VectorXcd retract(const Eigen::VectorXcd& z, const Eigen::VectorXcd& dz) const {
    Eigen::VectorXcd w = z + dz;
    Eigen::VectorXcd out(n);
    const double tau = phase_zero_threshold(w.cwiseAbs().maxCoeff());
    auto entry = [&](int k) {
      const cd p = phase_of_scalar(w[k], tau);
      return p == cd{0.0, 0.0} ? z[k] : p;
    };
    if (!real_sym) {
      for (int k = 0; k < n; ++k) out[k] = entry(k);
      return out;
    }
    for (int k = 0; k <= n / 2; ++k) {
      const cd p = entry(k);
      out[k] = p;
      out[(n - k) % n] = std::conj(p);
    }
    return out;
  }

  Eigen::VectorXcd random_point(std::mt19937_64& eng, cd dc) const {
    std::uniform_real_distribution<double> unif(-std::numbers::pi, std::numbers::pi);
    Eigen::VectorXcd z(n);
    if (!real_sym) {
      for (int k = 0; k < n; ++k) z[k] = std::polar(1.0, unif(eng));
      return z;
    }
    z[0] = dc;
    for (int k = 1; k < (n + 1) / 2; ++k) {
      const cd v = std::polar(1.0, unif(eng));
      z[k] = v;
      z[n - k] = std::conj(v);
    }
    if (n % 2 == 0) z[n / 2] = cd{1.0, 0.0};
    return z;
  }
};

// ---------------------------------------------------------------------------
// Riemannian trust region with truncated CG inner iterations (maximization).

struct RtrOptions {
  double grad_tol = 0.0;  // 0 -> default 1e-8 * N
  int max_outer = 500;
  int max_inner = 0;  // 0 -> default 4 * N
  double rho_accept = 0.1;
  double radius0 = 0.0;    // 0 -> N / 8
  double radius_max = 0.0; // 0 -> N
};

struct RtrResult {
  Eigen::VectorXcd z;
  double cost = 0.0;
  double grad_norm = 0.0;
  int outer_iters = 0;
};

// Obj must provide cost(z), egrad(z), ehess(z, dz); geometry supplies the
// tangent-space machinery.  The Riemannian gradient/Hessian use the standard
// torus expressions: rgrad = proj(egrad), rhess[dz] = proj(ehess[dz] - dvec .* dz)
// with dvec = Re(sym(egrad) .* conj(z)).
template <class Obj>
RtrResult rtr_maximize(const Obj& obj, const TorusGeometry& geom, Eigen::VectorXcd z,
                       const RtrOptions& opts_in) {
  const int n = geom.n;
  RtrOptions opts = opts_in;
  if (opts.grad_tol <= 0.0) opts.grad_tol = 1e-8 * double(n);
  if (opts.max_inner <= 0) opts.max_inner = 4 * n;
  if (opts.radius0 <= 0.0) opts.radius0 = double(n) / 8.0;
  if (opts.radius_max <= 0.0) opts.radius_max = double(n);

  double radius = opts.radius0;
  double cost = obj.cost(z);
  if (!std::isfinite(cost)) throw std::runtime_error("rtr_maximize: non-finite cost");

  Eigen::VectorXcd egrad = obj.egrad(z);
  auto dvec_of = [&](const Eigen::VectorXcd& zz, const Eigen::VectorXcd& eg) {
    Eigen::VectorXcd s = geom.sym(eg);
    Eigen::VectorXd d(n);
    for (int k = 0; k < n; ++k)
      d[k] = s[k].real() * zz[k].real() + s[k].imag() * zz[k].imag();
    return d;
  };
  Eigen::VectorXd dvec = dvec_of(z, egrad);
  // minimize phi = -f: gradient g = -proj(egrad)
  Eigen::VectorXcd g = -geom.proj(z, egrad);

  auto hess_phi = [&](const Eigen::VectorXcd& dz) {
    const Eigen::VectorXcd h = obj.ehess(z, dz) - dvec.cast<cd>().cwiseProduct(dz);
    return (-geom.proj(z, h)).eval();
  };

  int outer = 0;
  for (; outer < opts.max_outer; ++outer) {
    const double gnorm = g.norm();
    if (gnorm <= opts.grad_tol) break;

    // Truncated CG on the model m(s) = <g,s> + 0.5 <s, H s>, ||s|| <= radius.
    Eigen::VectorXcd s = Eigen::VectorXcd::Zero(n);
    Eigen::VectorXcd r = g;
    Eigen::VectorXcd d = -r;
    double r2 = geom.inner(r, r);
    const double r0 = std::sqrt(r2);
    const double inner_tol = r0 * std::min(0.1, r0);

    for (int inner = 0; inner < opts.max_inner; ++inner) {
      const Eigen::VectorXcd hd = hess_phi(d);
      const double dhd = geom.inner(d, hd);
      const double snorm2 = geom.inner(s, s);
      const double sd = geom.inner(s, d);
      const double dnorm2 = geom.inner(d, d);
      if (dnorm2 <= 1e-30) break;
      if (dhd <= 0.0) {
        // follow the negative-curvature direction to the boundary
        const double disc = sd * sd + dnorm2 * (radius * radius - snorm2);
        const double tau = (-sd + std::sqrt(std::max(0.0, disc))) / dnorm2;
        s += tau * d;
        break;
      }
      const double alpha = r2 / dhd;
      const double new_norm2 = snorm2 + 2.0 * alpha * sd + alpha * alpha * dnorm2;
      if (new_norm2 >= radius * radius) {
        const double disc = sd * sd + dnorm2 * (radius * radius - snorm2);
        const double tau = (-sd + std::sqrt(std::max(0.0, disc))) / dnorm2;
        s += tau * d;
        break;
      }
      s += alpha * d;
      r += alpha * hd;
      const double r2_new = geom.inner(r, r);
      if (std::sqrt(r2_new) <= inner_tol) break;
      const double beta = r2_new / r2;
      d = -r + beta * d;
      r2 = r2_new;
    }

    // Model decrease (recomputed directly; the solves are small).
    const double model_delta = -(geom.inner(g, s) + 0.5 * geom.inner(s, hess_phi(s)));
    const Eigen::VectorXcd z_new = geom.retract(z, s);
    const double cost_new = obj.cost(z_new);
    if (!std::isfinite(cost_new)) throw std::runtime_error("rtr_maximize: non-finite cost");
    const double actual_delta = cost_new - cost;  // maximization: want positive
    const double guard = 1e-15 * std::max(1.0, std::abs(cost));
    const double rho = (actual_delta + guard) / (model_delta + guard);

    if (rho < 0.25) {
      radius *= 0.25;
    } else if (rho > 0.75 && geom.inner(s, s) >= 0.99 * radius * radius) {
      radius = std::min(2.0 * radius, opts.radius_max);
    }
    if (rho > opts.rho_accept && actual_delta > 0.0) {
      z = z_new;
      cost = cost_new;
      egrad = obj.egrad(z);
      dvec = dvec_of(z, egrad);
      g = -geom.proj(z, egrad);
    }
    if (radius < 1e-14) break;
  }

  RtrResult res;
  res.z = z;
  res.cost = cost;
  res.grad_norm = g.norm();
  res.outer_iters = outer;
  return res;
}

namespace detail {

struct BispectrumFitObj {
  const PhaseProblem& p;
  double cost(const Eigen::VectorXcd& z) const { return phase_fit_cost(p, z); }
  Eigen::VectorXcd egrad(const Eigen::VectorXcd& z) const { return phase_fit_egrad(p, z); }
  Eigen::VectorXcd ehess(const Eigen::VectorXcd& z, const Eigen::VectorXcd& dz) const {
    return phase_fit_ehess(p, z, dz);
  }
};

// Frozen phase-synchronization objective g(z) = Re(z^* K z).
struct PhaseSyncObj {
  Eigen::MatrixXcd kh;  // K + K^*
  double cost(const Eigen::VectorXcd& z) const { return 0.5 * z.dot(kh * z).real(); }
  Eigen::VectorXcd egrad(const Eigen::VectorXcd& z) const { return kh * z; }
  Eigen::VectorXcd ehess(const Eigen::VectorXcd&, const Eigen::VectorXcd& dz) const {
    return kh * dz;
  }
};

}  // namespace detail

// Maximize the bispectrum fit from the given starting point.  For real
// signals with even N the half-frequency entry z[N/2] is locked to a sign
// during the solve; both signs are explored and the better fit returned.
inline RtrResult rtr_solve(const PhaseProblem& p, const Eigen::VectorXcd& z0,
                           const RtrOptions& opts = {}) {
  const int n = p.n();
  if (int(z0.size()) != n) throw std::invalid_argument("rtr_solve: initial point size mismatch");
  TorusGeometry geom{n, p.is_real};
  detail::BispectrumFitObj obj{p};

  Eigen::VectorXcd z_init = z0;
  if (p.is_real) {
    z_init = geom.retract(Eigen::VectorXcd::Ones(n), geom.conj_sym_average(z0) -
                                                         Eigen::VectorXcd::Ones(n));
    z_init[0] = phase_of_scalar(p.y0, 0.0) == cd{0.0, 0.0} ? cd{1.0, 0.0}
                                                           : phase_of_scalar(p.y0, 0.0);
    if (n % 2 == 0) z_init[n / 2] = z_init[n / 2].real() >= 0.0 ? cd{1.0, 0.0} : cd{-1.0, 0.0};
  }

  RtrResult best = rtr_maximize(obj, geom, z_init, opts);
  if (p.is_real && n % 2 == 0) {
    Eigen::VectorXcd flipped = best.z;
    flipped[n / 2] = -flipped[n / 2];
    if (phase_fit_cost(p, flipped) > best.cost) {
      RtrResult other = rtr_maximize(obj, geom, flipped, opts);
      if (other.cost > best.cost) best = other;
    }
  }
  return best;
}

struct PhaseSyncOptions {
  int max_outer = 15;
  double tol = 1e-9;  // sup-norm change between outer iterates
  RtrOptions inner{};
};

// Alternating scheme: freeze the circulant lift at the current estimate, solve
// the induced phase-synchronization problem on the full torus, re-anchor the
// global phase to the known DC phase, and (for real signals) project back onto
// the conjugate-symmetric slice.
inline Eigen::VectorXcd iterative_phase_sync(const PhaseProblem& p, const Eigen::VectorXcd& z0,
                                             const PhaseSyncOptions& opts = {}) {
  const int n = p.n();
  if (int(z0.size()) != n)
    throw std::invalid_argument("iterative_phase_sync: initial point size mismatch");
  TorusGeometry full{n, false};
  TorusGeometry sym_geom{n, true};

  const cd y0 = phase_of_scalar(p.y0, 0.0) == cd{0.0, 0.0} ? cd{1.0, 0.0}
                                                           : phase_of_scalar(p.y0, 0.0);
  Eigen::VectorXcd y = full.retract(Eigen::VectorXcd::Ones(n), z0 - Eigen::VectorXcd::Ones(n));

  for (int it = 0; it < opts.max_outer; ++it) {
    // K = b_tilde .* conj(T(y)), treated as constant for this round
    Eigen::MatrixXcd k(n, n);
    for (int k2 = 0; k2 < n; ++k2)
      for (int k1 = 0; k1 < n; ++k1) {
        int d = k2 - k1;
        if (d < 0) d += n;
        k(k1, k2) = p.b_tilde(k1, k2) * std::conj(y[d]);
      }
    detail::PhaseSyncObj obj{k + k.adjoint()};
    RtrResult sub = rtr_maximize(obj, full, y, opts.inner);
    Eigen::VectorXcd y_next = sub.z;
    y_next *= y0 / y_next[0];
    if (p.is_real) {
      // project to the conjugate-symmetric slice, keeping unit modulus
      Eigen::VectorXcd avg = sym_geom.conj_sym_average(y_next);
      y_next = sym_geom.retract(y_next, avg - y_next);
    }
    const double change = (y_next - y).cwiseAbs().maxCoeff();
    y = y_next;
    if (change < opts.tol) break;
  }
  return y;
}

}  // namespace mra
