#include <catch_amalgamated.hpp>

#include "oracles.hpp"

using namespace mra;

namespace {

Eigen::VectorXcd modulation(int n, int s) {
  Eigen::VectorXcd m(n);
  for (int k = 0; k < n; ++k) m[k] = std::polar(1.0, -2.0 * std::numbers::pi * k * s / n);
  return m;
}

// Random conjugate-symmetric unit-modulus vector (a point on the real slice).
Eigen::VectorXcd random_symmetric_point(int n, std::mt19937_64& eng) {
  TorusGeometry geom{n, true};
  return geom.random_point(eng, cd{1.0, 0.0});
}

// Random conjugate-symmetric ambient direction.
Eigen::VectorXcd random_symmetric_dir(int n, std::mt19937_64& eng) {
  TorusGeometry geom{n, true};
  return geom.conj_sym_average(oracles::random_complex(n, eng));
}

Eigen::VectorXcd assemble(const Eigen::VectorXd& mags, const Eigen::VectorXcd& z) {
  return oracles::naive_idft(mags.cast<cd>().cwiseProduct(z));
}

}  // namespace

TEST_CASE("make_phase_problem validates and symmetrizes", "[manifold]") {
  std::mt19937_64 eng(51);
  const int n = 6;
  Eigen::MatrixXcd b = Eigen::MatrixXcd::Random(n, n);
  Eigen::MatrixXd w = Eigen::MatrixXd::Random(n, n).cwiseAbs();

  REQUIRE_THROWS_AS(make_phase_problem(Eigen::MatrixXcd::Random(n, n + 1), w, false),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(make_phase_problem(b, Eigen::MatrixXd::Random(n + 1, n + 1), false),
                    std::invalid_argument);
  Eigen::MatrixXd wneg = w;
  wneg(2, 3) = -1.0;
  REQUIRE_THROWS_AS(make_phase_problem(b, wneg, false), std::invalid_argument);

  // each entry ends up equal to its orbit partner (k1,k2) <-> (k2-k1,k2)
  const PhaseProblem p = make_phase_problem(b, w, false);
  for (int k2 = 0; k2 < n; ++k2)
    for (int k1 = 0; k1 < n; ++k1) {
      const int k1p = ((k2 - k1) % n + n) % n;
      REQUIRE(std::abs(p.b_tilde(k1, k2) - p.b_tilde(k1p, k2)) < 1e-14);
      REQUIRE(std::abs(p.w(k1, k2) - p.w(k1p, k2)) < 1e-14);
    }

  // real-signal data comes out Hermitian
  const Signal x = oracles::random_nonvanishing(n, eng, true);
  const Eigen::MatrixXcd bx = bispectrum_of(x);
  const PhaseProblem pr = make_phase_problem(normalized_bispectrum(bx), default_weights(bx), true);
  REQUIRE((pr.b_tilde - pr.b_tilde.adjoint()).norm() < 1e-12);
}

TEST_CASE("fit cost peaks at N^2 on the true phases and ignores shifts", "[manifold]") {
  std::mt19937_64 eng(52);
  const int n = 11;
  const Signal x = oracles::random_nonvanishing(n, eng, false);
  const Eigen::VectorXcd y = oracles::naive_dft(x.values);
  const Eigen::VectorXcd ytilde = phase_of(y);
  const PhaseProblem p = make_phase_problem(normalized_bispectrum(bispectrum_of(x)),
                                            Eigen::MatrixXd::Ones(n, n), false);

  REQUIRE(phase_fit_cost(p, ytilde) == Catch::Approx(double(n) * double(n)).epsilon(1e-10));

  // every shift modulation of the truth scores the same, as does any z
  const Eigen::VectorXcd z = oracles::random_torus_point(n, eng);
  const double f0 = phase_fit_cost(p, z);
  for (int s = 0; s < n; ++s) {
    const Eigen::VectorXcd zs = z.cwiseProduct(modulation(n, s));
    REQUIRE(std::abs(phase_fit_cost(p, zs) - f0) < 1e-10 * std::max(1.0, std::abs(f0)));
    REQUIRE(std::abs(phase_fit_cost(p, ytilde.cwiseProduct(modulation(n, s))) -
                     double(n) * double(n)) < 1e-8);
  }
}

TEST_CASE("operator adjoints match their defining identities", "[manifold]") {
  std::mt19937_64 eng(53);
  for (bool real_kind : {false, true}) {
    const int n = 8;
    const Signal x = oracles::random_nonvanishing(n, eng, real_kind);
    const Eigen::MatrixXcd bx = bispectrum_of(x);
    const PhaseProblem p =
        make_phase_problem(normalized_bispectrum(bx), default_weights(bx), real_kind);

    const Eigen::VectorXcd z = oracles::random_torus_point(n, eng);
    const Eigen::VectorXcd u = oracles::random_complex(n, eng);
    const Eigen::VectorXcd v = oracles::random_complex(n, eng);

    // the dense lift agrees with the matrix-free products
    const Eigen::MatrixXcd mz = m_of_z(p, z);
    REQUIRE((mz * u - apply_m(p, z, u)).norm() < 1e-12 * (1.0 + u.norm()));
    REQUIRE((mz.adjoint() * v - apply_m_adjoint_of_z(p, z, v)).norm() < 1e-12 * (1.0 + v.norm()));

    // <v, M(z) u> = <M(z)^* v, u>
    const cd lhs = v.dot(apply_m(p, z, u));
    const cd rhs = apply_m_adjoint_of_z(p, z, v).dot(u);
    REQUIRE(std::abs(lhs - rhs) < 1e-10 * (1.0 + std::abs(lhs)));

    // tr(X^* M(z)) = <z, m_adjoint(X)>
    const Eigen::MatrixXcd xm = Eigen::MatrixXcd::Random(n, n);
    const cd tl = (xm.adjoint() * mz).trace();
    const cd tr = z.dot(m_adjoint(p, xm));
    REQUIRE(std::abs(tl - tr) < 1e-10 * (1.0 + std::abs(tl)));
  }
}

TEST_CASE("frozen-lift symmetry M(z) zdot = M(zdot) z on the real slice", "[manifold]") {
  std::mt19937_64 eng(54);
  for (int n : {7, 10}) {
    const Signal x = oracles::random_nonvanishing(n, eng, true);
    const Eigen::MatrixXcd bx = bispectrum_of(x);
    const PhaseProblem p = make_phase_problem(normalized_bispectrum(bx), default_weights(bx), true);
    const Eigen::VectorXcd z = random_symmetric_point(n, eng);
    TorusGeometry geom{n, true};
    const Eigen::VectorXcd zdot = geom.proj(z, oracles::random_complex(n, eng));
    const Eigen::VectorXcd lhs = apply_m(p, z, zdot);
    const Eigen::VectorXcd rhs = apply_m(p, zdot, z);
    REQUIRE((lhs - rhs).norm() < 1e-10 * (1.0 + lhs.norm()));
  }
}

TEST_CASE("gradient and Hessian-vector products match finite differences", "[manifold]") {
  std::mt19937_64 eng(55);
  for (bool real_kind : {false, true}) {
    const int n = 9;
    const Signal x = oracles::random_nonvanishing(n, eng, real_kind);
    const Eigen::MatrixXcd bx = bispectrum_of(x);
    const PhaseProblem p =
        make_phase_problem(normalized_bispectrum(bx), default_weights(bx), real_kind);
    auto f = [&](const Eigen::VectorXcd& v) { return phase_fit_cost(p, v); };

    const Eigen::VectorXcd z =
        real_kind ? random_symmetric_point(n, eng) : oracles::random_torus_point(n, eng);
    const Eigen::VectorXcd g = phase_fit_egrad(p, z);

    for (int trial = 0; trial < 4; ++trial) {
      const Eigen::VectorXcd dir = oracles::random_complex(n, eng);
      const double fd = oracles::fd_directional(f, z, dir);
      const double an = oracles::rinner(g, dir);
      REQUIRE(std::abs(fd - an) < 1e-5 * std::max(1.0, std::abs(an)));
    }

    // second directional derivative along dz (symmetric dz on the real slice)
    for (int trial = 0; trial < 4; ++trial) {
      const Eigen::VectorXcd dz =
          real_kind ? random_symmetric_dir(n, eng) : oracles::random_complex(n, eng);
      const double h = 1e-3;
      const double fd2 = (f(z + h * dz) - 2.0 * f(z) + f(z - h * dz)) / (h * h);
      const double an2 = oracles::rinner(phase_fit_ehess(p, z, dz), dz);
      REQUIRE(std::abs(fd2 - an2) < 1e-5 * std::max(1.0, std::abs(an2)));
    }
  }
}

TEST_CASE("torus geometry projects, retracts, and stays on the slice", "[manifold]") {
  std::mt19937_64 eng(56);
  const int n = 10;
  for (bool real_sym : {false, true}) {
    TorusGeometry geom{n, real_sym};
    const Eigen::VectorXcd z =
        real_sym ? random_symmetric_point(n, eng) : oracles::random_torus_point(n, eng);
    const Eigen::VectorXcd u = oracles::random_complex(n, eng);
    const Eigen::VectorXcd t = geom.proj(z, u);

    // tangency: Re(t[k] conj(z[k])) = 0 entrywise; projection is idempotent
    for (int k = 0; k < n; ++k)
      REQUIRE(std::abs(t[k].real() * z[k].real() + t[k].imag() * z[k].imag()) < 1e-12);
    REQUIRE((geom.proj(z, t) - t).norm() < 1e-12 * (1.0 + t.norm()));

    const Eigen::VectorXcd r = geom.retract(z, 0.3 * t);
    for (int k = 0; k < n; ++k) REQUIRE(std::abs(std::abs(r[k]) - 1.0) < 1e-12);
    REQUIRE((geom.retract(z, Eigen::VectorXcd::Zero(n)) - z).norm() < 1e-12);
    if (real_sym) {
      for (int k = 0; k < n; ++k) REQUIRE(std::abs(r[k] - std::conj(r[(n - k) % n])) < 1e-12);
    }
  }
}

TEST_CASE("trust-region solver recovers exact phases from clean data", "[manifold]") {
  std::mt19937_64 eng(57);

  // full torus, complex signal
  {
    const int n = 11;
    const Signal x = oracles::random_nonvanishing(n, eng, false);
    const Eigen::MatrixXcd bx = bispectrum_of(x);
    const PhaseProblem p = make_phase_problem(normalized_bispectrum(bx), default_weights(bx),
                                              false, phase_of(oracles::naive_dft(x.values))[0]);
    const RtrResult res = rtr_solve(p, oracles::random_torus_point(n, eng));
    const Eigen::VectorXd mags = oracles::naive_dft(x.values).cwiseAbs();
    const Eigen::VectorXcd xhat = oracles::naive_idft(mags.cast<cd>().cwiseProduct(res.z));
    REQUIRE(relative_error(x.values, xhat) < 1e-6);
  }

  // conjugate-symmetric slice, odd and even N (even exercises the sign flip)
  for (int n : {9, 12}) {
    const Signal x = oracles::random_nonvanishing(n, eng, true);
    const Eigen::VectorXcd y = oracles::naive_dft(x.values);
    const Eigen::MatrixXcd bx = bispectrum_of(x);
    const PhaseProblem p =
        make_phase_problem(normalized_bispectrum(bx), default_weights(bx), true, phase_of(y)[0]);
    std::mt19937_64 start_eng(100 + n);
    TorusGeometry geom{n, true};
    const RtrResult res = rtr_solve(p, geom.random_point(start_eng, p.y0));
    const Eigen::VectorXcd xhat = assemble(y.cwiseAbs(), res.z);
    REQUIRE(xhat.imag().cwiseAbs().maxCoeff() < 1e-8);
    REQUIRE(relative_error(x.values, xhat) < 1e-6);
    REQUIRE(res.grad_norm <= 1e-8 * double(n) + 1e-12);
  }

  Eigen::VectorXcd wrong_size = Eigen::VectorXcd::Ones(5);
  const Signal x = oracles::random_nonvanishing(8, eng, true);
  const Eigen::MatrixXcd bx = bispectrum_of(x);
  const PhaseProblem p = make_phase_problem(normalized_bispectrum(bx), default_weights(bx), true);
  REQUIRE_THROWS_AS(rtr_solve(p, wrong_size), std::invalid_argument);
}

TEST_CASE("alternating phase synchronization also nails clean data", "[manifold]") {
  std::mt19937_64 eng(58);

  for (bool real_kind : {true, false}) {
    const int n = real_kind ? 8 : 9;
    const Signal x = oracles::random_nonvanishing(n, eng, real_kind);
    const Eigen::VectorXcd y = oracles::naive_dft(x.values);
    const Eigen::MatrixXcd bx = bispectrum_of(x);
    const PhaseProblem p = make_phase_problem(normalized_bispectrum(bx), default_weights(bx),
                                              real_kind, phase_of(y)[0]);
    const Eigen::VectorXcd z = iterative_phase_sync(p, Eigen::VectorXcd::Ones(n));
    Eigen::VectorXcd xhat = oracles::naive_idft(y.cwiseAbs().cast<cd>().cwiseProduct(z));
    if (real_kind) {
      REQUIRE(xhat.imag().cwiseAbs().maxCoeff() < 1e-7);
      xhat = xhat.real().cast<cd>();
    }
    REQUIRE(relative_error(x.values, xhat) < 1e-6);
  }
}
