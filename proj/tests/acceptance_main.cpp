// End-to-end acceptance checks.  Each criterion prints exactly one
// [PASS]/[FAIL] line with its runtime; failures add indented detail lines.
// The process exit code is the number of failed criteria.  Passing criterion
// ids as arguments (e.g. "mra_acceptance 1 6") runs just those.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "mra/experiment.hpp"
#include "mra/pipeline.hpp"

namespace {

using mra::cd;

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(3) << v;
  return ss.str();
}

struct Check {
  std::vector<std::string> problems;
  std::string info;
  void require(bool ok, const std::string& what) {
    if (!ok) problems.push_back(what);
  }
};

Eigen::VectorXcd random_cvec(int n, std::mt19937_64& eng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) v[i] = cd{gauss(eng), gauss(eng)};
  return v;
}

// Random signal whose DFT stays clear of zero (all recursions need |y[k]| > 0).
mra::Signal random_nonvanishing(int n, std::mt19937_64& eng, bool real_kind) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (;;) {
    Eigen::VectorXcd v(n);
    for (int i = 0; i < n; ++i)
      v[i] = real_kind ? cd{gauss(eng), 0.0} : cd{gauss(eng), gauss(eng)};
    mra::Signal x = real_kind ? mra::Signal::from_real(v.real()) : mra::Signal::from_complex(v);
    if (mra::dft(x.values).cwiseAbs().minCoeff() > 0.3) return x;
  }
}

double lsq_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = double(xs.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double rinner(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) { return a.dot(b).real(); }

// ---------------------------------------------------------------------------
// 1. Every inverter reconstructs a clean signal from a single observation.

void criterion1(Check& chk) {
  using mra::Method;
  auto run_case = [&](const mra::Signal& x, const std::string& label,
                      const std::vector<std::pair<Method, double>>& specs) {
    const mra::ObservationBatch batch = mra::generate_observations(x, 1, 0.0, 7001);
    const Eigen::VectorXcd ph = mra::phase_of(mra::dft(x.values));
    for (const auto& [method, tol] : specs) {
      mra::RecoverOptions opts;
      opts.method = method;
      opts.seed = 42;
      if (method == Method::Manifold) opts.restarts = 4;
      if (method == Method::FrequencyMarching || method == Method::PhaseUnwrap ||
          method == Method::Sdp) {
        opts.true_y0 = ph[0];
        opts.true_y1 = ph[1];
      }
      if (method == Method::Sdp) {
        opts.sdp.tol = 1e-10;
        opts.sdp.max_iter = 200000;
      }
      const mra::RecoveryResult res = mra_recover(batch, opts);
      const double err = mra::relative_error(x, res.estimate);
      chk.require(err < tol, label + " " + mra::method_to_string(method) + ": error " + fmt(err) +
                                 " (tol " + fmt(tol) + ")");
    }
  };

  const std::vector<std::pair<Method, double>> main_set = {
      {Method::Manifold, 1e-6},          {Method::IterPhaseSync, 1e-6},
      {Method::FrequencyMarching, 1e-6}, {Method::DirectInversion, 1e-6},
      {Method::PhaseUnwrap, 1e-5},
  };
  run_case(mra::window_signal(41, 21, 1.0), "real n=41", main_set);

  std::mt19937_64 eng(2024);
  run_case(random_nonvanishing(21, eng, false), "complex n=21", main_set);

  // the relaxation is only run at small sizes
  run_case(mra::window_signal(15, 7, 1.0), "real n=15", {{Method::Sdp, 1e-4}});
  run_case(random_nonvanishing(13, eng, false), "complex n=13", {{Method::Sdp, 1e-4}});
}

// ---------------------------------------------------------------------------
// 2. Invariant estimation error decays like M^(-1/2) on every noise curve.

void criterion2(Check& chk) {
  mra::ExperimentConfig cfg = mra::experiment_preset("figure2", 1);
  cfg.threads = 1;
  const auto rows = mra::run_experiment(cfg);

  std::map<std::pair<std::string, double>, std::map<long, std::vector<double>>> curves;
  for (const auto& r : rows) curves[{r.method, r.sigma}][r.m].push_back(r.rel_error);
  chk.require(curves.size() == 6, "expected 6 curves, got " + std::to_string(curves.size()));

  std::ostringstream info;
  for (const auto& [key, by_m] : curves) {
    std::vector<double> xs, ys;
    for (const auto& [m, errs] : by_m) {
      double mean = 0.0;
      for (double e : errs) mean += e;
      mean /= double(errs.size());
      xs.push_back(std::log10(double(m)));
      ys.push_back(std::log10(mean));
    }
    const double slope = lsq_slope(xs, ys);
    chk.require(-0.6 <= slope && slope <= -0.4,
                key.first + " sigma=" + fmt(key.second) + ": slope " + fmt(slope) +
                    " outside [-0.6, -0.4]");
    if (!info.str().empty()) info << ", ";
    info << key.first[0] << key.second << ":" << fmt(slope);
  }
  chk.info = "slopes " + info.str();
}

// ---------------------------------------------------------------------------
// 3. The additive bispectrum noise bias matches sigma^2 N^2 mu times the
//    0/1-patterned matrix, for both noise kinds.

void criterion3(Check& chk) {
  const int n = 8;
  const double sigma = 1.0;
  const long m = 200000;
  const double mu = 0.5;

  auto run_kind = [&](bool complex_kind) {
    std::mt19937_64 eng(complex_kind ? 303 : 302);
    std::normal_distribution<double> gauss(0.0, 0.3);
    Eigen::VectorXcd v(n);
    for (int i = 0; i < n; ++i)
      v[i] = complex_kind ? cd{gauss(eng), gauss(eng)} : cd{gauss(eng), 0.0};
    v.array() -= v.mean();
    v.array() += mu;
    const mra::Signal x =
        complex_kind ? mra::Signal::from_complex(v) : mra::Signal::from_real(v.real());

    const mra::ObservationBatch batch =
        mra::generate_observations(x, m, sigma, complex_kind ? 9301 : 9300);
    mra::InvariantAccumulator acc = mra::InvariantAccumulator::make(n, x.is_real, sigma);
    mra::accumulate(acc, batch);

    const Eigen::MatrixXcd raw_mean = acc.sum_bispec / double(acc.count);
    const Eigen::MatrixXcd ratio =
        (raw_mean - mra::bispectrum_of(x)) / (sigma * sigma * double(n) * double(n) * mu);
    const Eigen::MatrixXd a = mra::bias_matrix(n, complex_kind);
    const double dev = (ratio - a.cast<cd>()).cwiseAbs().maxCoeff();
    chk.require(dev < 0.1, std::string(complex_kind ? "complex" : "real") +
                               " noise: max deviation from the bias pattern " + fmt(dev));
    return dev;
  };

  const double dr = run_kind(false);
  const double dc = run_kind(true);
  chk.info = "max deviations real " + fmt(dr) + ", complex " + fmt(dc);
}

// ---------------------------------------------------------------------------
// 4. Frequency marching inverts exact bispectra across sizes and kinds.

void criterion4(Check& chk) {
  double worst = 0.0;
  int cases = 0;
  for (int n = 5; n <= 33; ++n) {
    for (int kind = 0; kind < 2; ++kind) {
      std::mt19937_64 eng(mra::derive_seed(4, std::uint64_t(n), std::uint64_t(kind)));
      for (int t = 0; t < 20; ++t) {
        const mra::Signal x = random_nonvanishing(n, eng, kind == 0);
        const Eigen::VectorXcd y = mra::dft(x.values);
        const Eigen::MatrixXcd b_tilde = mra::phase_of(mra::bispectrum_of(x));
        const Eigen::VectorXcd phases = mra::frequency_marching(
            b_tilde, mra::phase_of_scalar(y[0], 0.0), mra::phase_of_scalar(y[1], 0.0));
        Eigen::VectorXcd y_hat = y.cwiseAbs().cast<cd>().cwiseProduct(phases);
        mra::Signal x_hat;
        x_hat.values = mra::idft(y_hat);
        if (x.is_real) x_hat.values = x_hat.values.real().cast<cd>();
        x_hat.is_real = x.is_real;
        worst = std::max(worst, mra::relative_error(x, x_hat));
        ++cases;
      }
    }
  }
  chk.require(worst < 1e-8, "worst relative error " + fmt(worst) + " over " +
                                std::to_string(cases) + " signals (tol 1e-8)");
  chk.info = "worst error " + fmt(worst) + " over " + std::to_string(cases) + " signals";
}

// ---------------------------------------------------------------------------
// 5. Geometry of the phase-fit objective: invariances, adjoint identities,
//    derivative checks, the value bound at converged points, and the
//    real-slice commutation identity.

void criterion5(Check& chk) {
  const double kTol = 1e-10;

  for (int kind = 0; kind < 2; ++kind) {
    const bool real_kind = kind == 0;
    const std::string tag = real_kind ? "real" : "complex";
    const int n = real_kind ? 11 : 9;
    std::mt19937_64 eng(500 + kind);

    const mra::Signal x = random_nonvanishing(n, eng, real_kind);
    const Eigen::MatrixXcd b = mra::bispectrum_of(x);
    const cd y0p = mra::phase_of_scalar(mra::dft(x.values)[0], 0.0);
    const mra::PhaseProblem p =
        mra::make_phase_problem(mra::phase_of(b), mra::default_weights(b), real_kind, y0p);
    const mra::TorusGeometry geom{n, real_kind};

    const Eigen::VectorXcd z = geom.random_point(eng, y0p);
    const double f0 = mra::phase_fit_cost(p, z);
    const double fscale = std::max(1.0, std::abs(f0));

    for (int s : {1, 2, n - 1}) {
      Eigen::VectorXcd zm = z;
      for (int k = 0; k < n; ++k)
        zm[k] *= std::polar(1.0, 2.0 * std::numbers::pi * double(s) * double(k) / double(n));
      chk.require(std::abs(mra::phase_fit_cost(p, zm) - f0) <= kTol * fscale,
                  tag + ": cost changed under modulation s=" + std::to_string(s));
    }

    {
      const Eigen::VectorXcd u = random_cvec(n, eng);
      const Eigen::VectorXcd v = random_cvec(n, eng);
      const cd lhs = v.dot(apply_m(p, z, u));
      const cd rhs = mra::apply_m_adjoint_of_z(p, z, v).dot(u);
      chk.require(std::abs(lhs - rhs) <= kTol * std::max(1.0, std::abs(lhs)),
                  tag + ": adjoint identity off by " + fmt(std::abs(lhs - rhs)));

      Eigen::MatrixXcd xm(n, n);
      for (int j = 0; j < n; ++j) xm.col(j) = random_cvec(n, eng);
      const cd tr = (xm.adjoint() * mra::m_of_z(p, z)).trace();
      const cd via = z.dot(mra::m_adjoint(p, xm));
      chk.require(std::abs(tr - via) <= kTol * std::max(1.0, std::abs(tr)),
                  tag + ": trace adjoint identity off by " + fmt(std::abs(tr - via)));
    }

    for (int trial = 0; trial < 3; ++trial) {
      Eigen::VectorXcd dir = random_cvec(n, eng);
      if (real_kind) dir = geom.conj_sym_average(dir);

      const double hg = 1e-6;
      const double fd_g = (mra::phase_fit_cost(p, z + hg * dir) -
                           mra::phase_fit_cost(p, z - hg * dir)) /
                          (2.0 * hg);
      const double an_g = rinner(mra::phase_fit_egrad(p, z), dir);
      chk.require(std::abs(fd_g - an_g) <= 1e-5 * std::max(1.0, std::abs(fd_g)),
                  tag + ": gradient vs finite differences, rel err " +
                      fmt(std::abs(fd_g - an_g) / std::max(1.0, std::abs(fd_g))));

      const double hh = 1e-3;
      const double fd_h = (mra::phase_fit_cost(p, z + hh * dir) - 2.0 * f0 +
                           mra::phase_fit_cost(p, z - hh * dir)) /
                          (hh * hh);
      const double an_h = rinner(mra::phase_fit_ehess(p, z, dir), dir);
      chk.require(std::abs(fd_h - an_h) <= 1e-5 * std::max(1.0, std::abs(fd_h)),
                  tag + ": Hessian vs finite differences, rel err " +
                      fmt(std::abs(fd_h - an_h) / std::max(1.0, std::abs(fd_h))));
    }

    if (real_kind) {
      const Eigen::VectorXcd dz = geom.proj(z, geom.conj_sym_average(random_cvec(n, eng)));
      const Eigen::VectorXcd lhs = apply_m(p, z, dz);
      const Eigen::VectorXcd rhs = apply_m(p, dz, z);
      chk.require((lhs - rhs).norm() <= kTol * std::max(1.0, lhs.norm()),
                  tag + ": M(z) dz != M(dz) z on the symmetric slice");
    }
  }

  // value bound at converged points of the unit-weight fit
  const double coeff = 2.0 * (std::sqrt(3.0) - 1.0) / 3.0;
  double worst_ratio = std::numeric_limits<double>::infinity();
  for (int kind = 0; kind < 2; ++kind) {
    const bool real_kind = kind == 0;
    const int n = real_kind ? 11 : 9;
    std::mt19937_64 eng(520 + kind);
    const mra::Signal x = random_nonvanishing(n, eng, real_kind);
    const cd y0p = mra::phase_of_scalar(mra::dft(x.values)[0], 0.0);
    const mra::PhaseProblem p = mra::make_phase_problem(
        mra::phase_of(mra::bispectrum_of(x)), Eigen::MatrixXd::Ones(n, n), real_kind, y0p);
    const mra::TorusGeometry geom{n, real_kind};
    for (int trial = 0; trial < 4; ++trial) {
      const mra::RtrResult res = mra::rtr_solve(p, geom.random_point(eng, y0p));
      chk.require(res.grad_norm <= 1e-6 * double(n),
                  (real_kind ? std::string("real") : std::string("complex")) +
                      ": solver did not converge, grad norm " + fmt(res.grad_norm));
      chk.require(res.cost >= coeff * double(n) - 1e-9,
                  (real_kind ? std::string("real") : std::string("complex")) +
                      ": converged value " + fmt(res.cost) + " below the bound " +
                      fmt(coeff * double(n)));
      worst_ratio = std::min(worst_ratio, res.cost / (coeff * double(n)));
    }
  }
  chk.info = "converged value at least " + fmt(worst_ratio) + "x the bound";
}

// ---------------------------------------------------------------------------
// 6. The convex relaxation recovers clean phases exactly with a rank-one
//    certificate matrix, for every size in 5..15.

void criterion6(Check& chk) {
  double worst_phase = 0.0, worst_lift = 0.0;
  for (int n = 5; n <= 15; ++n) {
    std::mt19937_64 eng(600 + n);
    const mra::Signal x = random_nonvanishing(n, eng, true);
    const Eigen::MatrixXcd b = mra::bispectrum_of(x);
    const Eigen::VectorXcd ph = mra::phase_of(mra::dft(x.values));

    mra::SdpOptions opts;
    opts.tol = 1e-10;
    opts.max_iter = 200000;
    const mra::SdpSolution sol =
        mra::sdp_solve(mra::phase_of(b), b.cwiseAbs(), ph[0], ph[1], true, opts);

    const double phase_err = (mra::phase_of(sol.z) - ph).cwiseAbs().maxCoeff();
    const double lift_err = (sol.big_z - sol.z * sol.z.adjoint()).norm();
    worst_phase = std::max(worst_phase, phase_err);
    worst_lift = std::max(worst_lift, lift_err);
    chk.require(phase_err < 1e-4, "n=" + std::to_string(n) + ": phase error " + fmt(phase_err) +
                                      " (tol 1e-4, " + std::to_string(sol.iters) + " iters)");
    chk.require(lift_err < 1e-4,
                "n=" + std::to_string(n) + ": ||Z - z z*|| = " + fmt(lift_err) + " (tol 1e-4)");
  }
  chk.info = "worst phase error " + fmt(worst_phase) + ", worst lift gap " + fmt(worst_lift);
}

// ---------------------------------------------------------------------------
// 7. Randomized search for counterexamples to the nonnegative-DFT certificate:
//    every accepted vector must be the all-ones vector.

void criterion7(Check& chk) {
  long accepted = 0, counterexamples = 0;
  for (int n = 4; n <= 8; ++n) {
    std::mt19937_64 eng(700 + n);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int t = 0; t < 100000; ++t) {
      Eigen::VectorXcd u = Eigen::VectorXcd::Ones(n);
      // mix far-field and near-ones samples so the acceptance region is probed
      const bool wide = unif(eng) < 0.25;
      const double scale = wide ? std::numbers::pi : std::pow(10.0, -7.0 * unif(eng));
      for (int k = 2; k <= (n - 1) / 2; ++k) {
        const double theta =
            wide ? (2.0 * unif(eng) - 1.0) * std::numbers::pi : scale * gauss(eng);
        u[k] = std::polar(1.0, theta);
        u[n - k] = std::conj(u[k]);
      }
      if (n % 2 == 0 && n / 2 >= 2) u[n / 2] = unif(eng) < 0.9 ? cd{1.0, 0.0} : cd{-1.0, 0.0};
      if (mra::nonneg_dft_certificate(u)) {
        ++accepted;
        if ((u - Eigen::VectorXcd::Ones(n)).cwiseAbs().maxCoeff() >= 1e-4) ++counterexamples;
      }
    }
  }
  chk.require(counterexamples == 0,
              std::to_string(counterexamples) + " accepted vectors were not all-ones");
  chk.require(accepted > 0, "no sample ever satisfied the certificate hypotheses");
  chk.info = std::to_string(accepted) + " of 500000 samples accepted, all all-ones";
}

// ---------------------------------------------------------------------------
// 8. Error transfer between noise levels: multiplying sigma by 2 and M by 2^6
//    leaves the bispectrum estimation error unchanged up to a factor 2.

void criterion8(Check& chk) {
  const int n = 15;
  std::mt19937_64 eng(800);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = gauss(eng);
  const mra::Signal x = mra::Signal::from_real(v);
  const Eigen::MatrixXcd b_true = mra::bispectrum_of(x);

  auto rel_err = [&](double sigma, long m, std::uint64_t seed) {
    const mra::ObservationBatch batch = mra::generate_observations(x, m, sigma, seed);
    const mra::InvariantEstimates est = mra::estimate_invariants(batch);
    return (est.bispec_hat - b_true).norm() / b_true.norm();
  };

  double mean_low = 0.0, mean_high = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    mean_low += rel_err(1.0, 500, mra::derive_seed(801, std::uint64_t(trial)));
    mean_high += rel_err(2.0, 64L * 500L, mra::derive_seed(802, std::uint64_t(trial)));
  }
  mean_low /= 10.0;
  mean_high /= 10.0;
  const double ratio = mean_high / mean_low;
  chk.require(0.5 <= ratio && ratio <= 2.0,
              "error ratio " + fmt(ratio) + " outside [0.5, 2] (low " + fmt(mean_low) +
                  ", high " + fmt(mean_high) + ")");
  chk.info = "mean errors " + fmt(mean_low) + " vs " + fmt(mean_high) + ", ratio " + fmt(ratio);
}

// ---------------------------------------------------------------------------
// 9. Mean recovery error orders the methods as expected: the oracle, then EM,
//    then the bispectrum fit, then frequency marching at moderate noise; at
//    high noise the best invariant method is no worse than EM.

void criterion9(Check& chk) {
  using mra::Method;
  const mra::Signal x = mra::window_signal(41, 21, 1.0);

  auto aggregates = [&](const mra::ExperimentConfig& cfg) {
    std::map<std::string, mra::AggregateRow> by;
    for (const auto& a : mra::aggregate_rows(mra::run_experiment(cfg))) by[a.method] = a;
    return by;
  };

  mra::ExperimentConfig low;
  low.name = "ordering_low";
  low.signal = x;
  low.sigma_grid = {1.0};
  low.m_grid = {1000};
  low.reps = 5;
  low.methods = {Method::OracleAverage, Method::Em, Method::Manifold, Method::FrequencyMarching};
  low.seed = 900;
  low.base_opts.restarts = 4;
  const auto lows = aggregates(low);

  auto leq = [&](const std::string& a, const std::string& b) {
    const auto& ra = lows.at(a);
    const auto& rb = lows.at(b);
    const double slack = std::sqrt(ra.stderr_rel_error * ra.stderr_rel_error +
                                   rb.stderr_rel_error * rb.stderr_rel_error);
    chk.require(ra.mean_rel_error <= rb.mean_rel_error + slack,
                "sigma=1: mean(" + a + ") = " + fmt(ra.mean_rel_error) + " > mean(" + b +
                    ") = " + fmt(rb.mean_rel_error) + " + slack " + fmt(slack));
  };
  leq("oracle", "em");
  leq("em", "manifold");
  leq("manifold", "fm");

  mra::ExperimentConfig high;
  high.name = "ordering_high";
  high.signal = x;
  high.sigma_grid = {4.0};
  high.m_grid = {10000};
  high.reps = 5;
  high.methods = {Method::Em, Method::Manifold, Method::IterPhaseSync,
                  Method::FrequencyMarching};
  high.seed = 901;
  high.base_opts.restarts = 4;
  // EM mixes very slowly at this noise level; a bounded schedule reaches the
  // same error plateau as full convergence at a fraction of the cost.
  high.base_opts.em.batch_iters = 1000;
  high.base_opts.em.max_full_iters = 300;
  const auto highs = aggregates(high);

  std::string best = "manifold";
  for (const std::string name : {"iterps", "fm"})
    if (highs.at(name).mean_rel_error < highs.at(best).mean_rel_error) best = name;
  const auto& rb = highs.at(best);
  const auto& re = highs.at("em");
  const double slack = std::sqrt(rb.stderr_rel_error * rb.stderr_rel_error +
                                 re.stderr_rel_error * re.stderr_rel_error);
  chk.require(rb.mean_rel_error <= re.mean_rel_error + slack,
              "sigma=4: best invariant (" + best + ") = " + fmt(rb.mean_rel_error) +
                  " > em = " + fmt(re.mean_rel_error) + " + slack " + fmt(slack));

  chk.info = "sigma=1: oracle " + fmt(lows.at("oracle").mean_rel_error) + " <= em " +
             fmt(lows.at("em").mean_rel_error) + " <= manifold " +
             fmt(lows.at("manifold").mean_rel_error) + " <= fm " +
             fmt(lows.at("fm").mean_rel_error) + "; sigma=4: " + best + " " +
             fmt(rb.mean_rel_error) + " vs em " + fmt(re.mean_rel_error);
}

// ---------------------------------------------------------------------------
// 10. Sharded accumulation merged across 4 workers matches one sequential pass.

void criterion10(Check& chk) {
  const mra::Signal x = mra::window_signal(41, 21, 1.0);
  const long m = 10000;
  const mra::ObservationBatch batch = mra::generate_observations(x, m, 1.0, 1000);

  mra::InvariantAccumulator seq = mra::InvariantAccumulator::make(41, true, 1.0);
  mra::accumulate(seq, batch);

  std::vector<mra::InvariantAccumulator> shards(
      4, mra::InvariantAccumulator::make(41, true, 1.0));
  for (long j = 0; j < m; ++j) mra::accumulate(shards[std::size_t(j / (m / 4))], batch.observations.col(j));
  const mra::InvariantAccumulator merged =
      mra::merge(mra::merge(shards[0], shards[1]), mra::merge(shards[2], shards[3]));

  const mra::InvariantEstimates a = mra::finalize(seq);
  const mra::InvariantEstimates b = mra::finalize(merged);
  const double d_mu = std::abs(a.mu_hat - b.mu_hat) / std::max(1.0, std::abs(a.mu_hat));
  const double d_power = (a.power_hat - b.power_hat).norm() / a.power_hat.norm();
  const double d_bispec = (a.bispec_hat - b.bispec_hat).norm() / a.bispec_hat.norm();
  chk.require(d_mu <= 1e-9, "mean estimates differ by " + fmt(d_mu));
  chk.require(d_power <= 1e-9, "power estimates differ by " + fmt(d_power));
  chk.require(d_bispec <= 1e-9, "bispectrum estimates differ by " + fmt(d_bispec));
  chk.info = "relative differences " + fmt(d_mu) + ", " + fmt(d_power) + ", " + fmt(d_bispec);
}

struct Criterion {
  int id;
  const char* title;
  double budget_s;
  void (*run)(Check&);
};

const Criterion kCriteria[] = {
    {1, "noiseless recovery is exact for every inverter", 120.0, criterion1},
    {2, "feature estimation error decays like 1/sqrt(M)", 300.0, criterion2},
    {3, "bispectrum noise bias matches the additive pattern", 120.0, criterion3},
    {4, "frequency marching inverts exact bispectra", 60.0, criterion4},
    {5, "phase-fit geometry identities hold", 60.0, criterion5},
    {6, "convex relaxation is exact on clean data", 180.0, criterion6},
    {7, "nonnegative-DFT certificate has no random counterexample", 60.0, criterion7},
    {8, "bispectrum error tracks sigma^3/sqrt(M)", 180.0, criterion8},
    {9, "recovery error ordering across methods", 600.0, criterion9},
    {10, "sharded accumulation matches sequential", 60.0, criterion10},
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0, ran = 0;
  for (const Criterion& c : kCriteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    ++ran;
    Check chk;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(chk);
    } catch (const std::exception& e) {
      chk.problems.push_back(std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_s)
      chk.problems.push_back("runtime " + fmt(secs) + " s exceeds the budget " +
                             fmt(c.budget_s) + " s");

    const bool pass = chk.problems.empty();
    std::cout << (pass ? "[PASS]" : "[FAIL]") << " criterion " << c.id << ": " << c.title;
    if (pass && !chk.info.empty()) std::cout << " [" << chk.info << "]";
    std::cout << " (" << fmt(secs) << " s / budget " << fmt(c.budget_s) << " s)\n";
    for (const std::string& p : chk.problems) std::cout << "    - " << p << "\n";
    std::cout.flush();
    if (!pass) ++failures;
  }
  std::cout << (ran - failures) << "/" << ran << " criteria passed\n";
  return failures;
}
