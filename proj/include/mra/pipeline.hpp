#pragma once

// End-to-end recovery from a batch of noisy shifted observations.
//
// Invariant-feature methods share one scaffold:
//   1. accumulate mean / power / bispectrum estimates (one- or two-pass);
//   2. y[0] = N * mu_hat, magnitudes for k >= 1 from the power spectrum;
//   3. phases from the selected inverter applied to the normalized
//      bispectrum with the default weights;
//   4. inverse DFT (real batches are projected back onto real signals).
// fm / unwrap / sdp need the phases of y[0] and y[1] as anchors: the true
// values can be supplied (matching the evaluation protocol for these
// methods); otherwise every root candidate from the bispectrum is tried and
// the one with the best weighted bispectrum fit wins.
//
// em / template / oracle bypass the invariant features entirely.

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mra/baselines.hpp"
#include "mra/em.hpp"
#include "mra/invariants.hpp"
#include "mra/inverters.hpp"
#include "mra/observations.hpp"
#include "mra/phase_manifold.hpp"
#include "mra/sdp.hpp"
#include "mra/signal.hpp"
#include "mra/unwrap.hpp"

namespace mra {

enum class Method {
  Manifold,       // trust-region maximization of the bispectrum fit
  IterPhaseSync,  // alternating phase synchronization
  FrequencyMarching,
  DirectInversion,
  PhaseUnwrap,
  Sdp,
  Em,
  TemplateAlign,
  OracleAverage,
};

inline const std::vector<std::pair<std::string, Method>>& method_names() {
  static const std::vector<std::pair<std::string, Method>> table = {
      {"manifold", Method::Manifold},
      {"iterps", Method::IterPhaseSync},
      {"fm", Method::FrequencyMarching},
      {"direct", Method::DirectInversion},
      {"unwrap", Method::PhaseUnwrap},
      {"sdp", Method::Sdp},
      {"em", Method::Em},
      {"template", Method::TemplateAlign},
      {"oracle", Method::OracleAverage},
  };
  return table;
}

inline Method method_from_string(const std::string& name) {
  for (const auto& [s, m] : method_names())
    if (s == name) return m;
  throw std::invalid_argument("unknown method: " + name);
}

inline std::string method_to_string(Method m) {
  for (const auto& [s, mm] : method_names())
    if (mm == m) return s;
  return "?";
}

struct RecoverOptions {
  Method method = Method::Manifold;
  std::uint64_t seed = 0;
  int restarts = 1;
  bool two_pass = false;  // centered (two-pass) bispectrum estimator

  // anchors for fm / unwrap / sdp; when set they are used directly
  std::optional<cd> true_y0;
  std::optional<cd> true_y1;

  RtrOptions rtr{};
  PhaseSyncOptions phase_sync{};
  UnwrapOptions unwrap{};
  SdpOptions sdp{};
  EmOptions em{};
  int threads = 1;
};

struct RecoveryResult {
  Method method = Method::Manifold;
  Signal estimate;
  double wall_time_s = 0.0;
  std::map<std::string, double> diagnostics;
};

namespace pipeline_detail {

struct PhaseInputs {
  InvariantEstimates est;
  Eigen::MatrixXcd b_tilde;
  Eigen::MatrixXd weights;
  cd y0_scaled;  // N * mu_hat (full complex value, not just the phase)
  cd y0_phase;
  Eigen::VectorXd magnitudes;
};

inline PhaseInputs make_phase_inputs(const ObservationBatch& batch, const RecoverOptions& opts) {
  PhaseInputs in;
  in.est = opts.two_pass ? finalize_two_pass(batch) : estimate_invariants(batch);
  in.b_tilde = normalized_bispectrum(in.est.bispec_hat);
  in.weights = default_weights(in.est.bispec_hat);
  in.y0_scaled = double(batch.n()) * in.est.mu_hat;
  const cd p = phase_of_scalar(in.y0_scaled, 0.0);
  in.y0_phase = p == cd{0.0, 0.0} ? cd{1.0, 0.0} : p;
  in.magnitudes = magnitudes_from_power_spectrum(in.est.power_hat);
  return in;
}

inline Signal assemble(const PhaseInputs& in, const Eigen::VectorXcd& phases, bool is_real) {
  const int n = int(phases.size());
  Eigen::VectorXcd y(n);
  y[0] = in.y0_scaled;
  for (int k = 1; k < n; ++k) y[k] = in.magnitudes[k] * phases[k];
  Signal out;
  out.values = idft(y);
  if (is_real) out.values = out.values.real().cast<cd>();
  out.is_real = is_real;
  return out;
}

// Anchor candidates for the methods that need phase(y[1]) up front.
inline std::vector<cd> y1_candidates(const PhaseInputs& in, const RecoverOptions& opts) {
  if (opts.true_y1) return {*opts.true_y1};
  return estimate_y1(in.est.bispec_hat);
}

}  // namespace pipeline_detail

inline RecoveryResult mra_recover(const ObservationBatch& batch, const RecoverOptions& opts) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const int n = batch.n();

  RecoveryResult res;
  res.method = opts.method;

  switch (opts.method) {
    case Method::Em: {
      EmOptions em = opts.em;
      em.seed = em.seed ? em.seed : opts.seed;
      em.threads = std::max(em.threads, opts.threads);
      res.estimate = em_run(batch, em);
      break;
    }
    case Method::TemplateAlign:
      res.estimate = template_align(batch);
      break;
    case Method::OracleAverage:
      res.estimate = oracle_average(batch);
      break;
    default: {
      const auto in = pipeline_detail::make_phase_inputs(batch, opts);
      Eigen::VectorXcd phases;

      switch (opts.method) {
        case Method::Manifold: {
          const PhaseProblem p =
              make_phase_problem(in.b_tilde, in.weights, batch.is_real, in.y0_phase);
          TorusGeometry geom{n, batch.is_real};
          RtrResult best;
          bool have = false;
          for (int r = 0; r < std::max(1, opts.restarts); ++r) {
            std::mt19937_64 eng(derive_seed(opts.seed, 0x5EEDULL, std::uint64_t(r)));
            const Eigen::VectorXcd z0 = geom.random_point(eng, in.y0_phase);
            RtrResult run = rtr_solve(p, z0, opts.rtr);
            if (!have || run.cost > best.cost) {
              best = run;
              have = true;
            }
          }
          phases = best.z;
          res.diagnostics["cost"] = best.cost;
          res.diagnostics["grad_norm"] = best.grad_norm;
          break;
        }
        case Method::IterPhaseSync: {
          const PhaseProblem p =
              make_phase_problem(in.b_tilde, in.weights, batch.is_real, in.y0_phase);
          TorusGeometry geom{n, batch.is_real};
          std::mt19937_64 eng(derive_seed(opts.seed, 0x5EEDULL));
          const Eigen::VectorXcd z0 = geom.random_point(eng, in.y0_phase);
          phases = iterative_phase_sync(p, z0, opts.phase_sync);
          break;
        }
        case Method::FrequencyMarching: {
          const cd y0 = opts.true_y0 ? *opts.true_y0 : in.y0_phase;
          const auto cands = pipeline_detail::y1_candidates(in, opts);
          const PhaseProblem p =
              make_phase_problem(in.b_tilde, in.weights, batch.is_real, in.y0_phase);
          double best_fit = 0.0;
          bool have = false;
          for (const cd& y1 : cands) {
            const Eigen::VectorXcd cand = frequency_marching(in.b_tilde, y0, y1);
            const double fit = phase_fit_cost(p, cand);
            if (!have || fit > best_fit) {
              best_fit = fit;
              phases = cand;
              have = true;
            }
          }
          res.diagnostics["cost"] = best_fit;
          break;
        }
        case Method::DirectInversion: {
          const Signal inv = direct_inversion(in.est.bispec_hat);
          phases = phase_of(dft(inv.values));
          // keep unit entries even where the inverted spectrum is tiny
          for (int k = 0; k < n; ++k)
            if (phases[k] == cd{0.0, 0.0}) phases[k] = cd{1.0, 0.0};
          break;
        }
        case Method::PhaseUnwrap: {
          UnwrapOptions uo = opts.unwrap;
          if (opts.true_y1) uo.y1_hint = *opts.true_y1;
          const UnwrapResult ur = phase_unwrap(in.b_tilde, batch.is_real, uo);
          phases = ur.phases;
          res.diagnostics["l1_converged"] = ur.l1_converged ? 1.0 : 0.0;
          break;
        }
        case Method::Sdp: {
          const cd y0 = opts.true_y0 ? *opts.true_y0 : in.y0_phase;
          const auto cands = pipeline_detail::y1_candidates(in, opts);
          const Eigen::MatrixXd w_abs = in.est.bispec_hat.cwiseAbs();
          const PhaseProblem p =
              make_phase_problem(in.b_tilde, in.weights, batch.is_real, in.y0_phase);
          double best_fit = 0.0;
          bool have = false;
          for (const cd& y1 : cands) {
            const SdpSolution sol = sdp_solve(in.b_tilde, w_abs, y0, y1, batch.is_real, opts.sdp);
            Eigen::VectorXcd cand = phase_of(sol.z);
            for (int k = 0; k < n; ++k)
              if (cand[k] == cd{0.0, 0.0}) cand[k] = cd{1.0, 0.0};
            const double fit = phase_fit_cost(p, cand);
            if (!have || fit > best_fit) {
              best_fit = fit;
              phases = cand;
              res.diagnostics["sdp_iters"] = double(sol.iters);
              res.diagnostics["sdp_converged"] = sol.converged ? 1.0 : 0.0;
              have = true;
            }
          }
          break;
        }
        default:
          throw std::logic_error("mra_recover: unhandled method");
      }

      res.estimate = pipeline_detail::assemble(in, phases, batch.is_real);
      break;
    }
  }

  res.wall_time_s = std::chrono::duration<double>(clock::now() - t0).count();
  return res;
}

}  // namespace mra
