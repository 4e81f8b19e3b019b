// Command-line front end.
//
//   mra gen         synthesize a signal and a batch of shifted noisy copies
//   mra invariants  estimate mean / power spectrum / bispectrum from a batch
//   mra recover     estimate the signal from a batch with a chosen method
//   mra experiment  run a preset Monte-Carlo sweep and write CSVs

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mra/experiment.hpp"
#include "mra/invariants.hpp"
#include "mra/io.hpp"
#include "mra/observations.hpp"
#include "mra/pipeline.hpp"
#include "mra/signal.hpp"

namespace {

struct GenArgs {
  std::string signal_spec = "window(41,21,1)";
  long m = 1000;
  double sigma = 1.0;
  std::uint64_t seed = 1;
  std::string out;
  std::string signal_out;
};

struct InvariantsArgs {
  std::string in;
  std::string out;
  bool two_pass = false;
};

struct RecoverArgs {
  std::string in;
  std::string out;
  std::string method = "manifold";
  std::string ref;  // optional reference signal, prints relative error
  mra::RecoverOptions opts;
  double tol_grad = 0.0;
  int max_iter = 0;
};

struct ExperimentArgs {
  std::string preset = "figure2";
  std::string out = ".";
  std::uint64_t seed = 1;
  int threads = 1;
};

int run_gen(const GenArgs& a) {
  const mra::Signal x = mra::signal_from_spec(a.signal_spec);
  const mra::ObservationBatch batch = mra::generate_observations(x, a.m, a.sigma, a.seed);
  mra::io::write_batch(a.out, batch);
  if (!a.signal_out.empty()) mra::io::write_signal(a.signal_out, x);
  std::cout << "wrote " << batch.m() << " observations of length " << batch.n() << " to " << a.out
            << "\n";
  return 0;
}

int run_invariants(const InvariantsArgs& a) {
  const mra::ObservationBatch batch = mra::io::read_batch(a.in);
  const mra::InvariantEstimates est =
      a.two_pass ? mra::finalize_two_pass(batch) : mra::estimate_invariants(batch);
  mra::io::write_estimates(a.out, est);
  std::cout << "wrote invariant estimates (N=" << est.n << ", M=" << est.count << ") to " << a.out
            << "\n";
  return 0;
}

int run_recover(RecoverArgs& a) {
  const mra::ObservationBatch batch = mra::io::read_batch(a.in);
  a.opts.method = mra::method_from_string(a.method);
  if (a.tol_grad > 0.0) a.opts.rtr.grad_tol = a.tol_grad;
  if (a.max_iter > 0) {
    a.opts.rtr.max_outer = a.max_iter;
    a.opts.phase_sync.inner.max_outer = a.max_iter;
  }
  const mra::RecoveryResult res = mra::mra_recover(batch, a.opts);
  if (!a.out.empty()) mra::io::write_signal(a.out, res.estimate);
  std::cout << "method=" << mra::method_to_string(res.method)
            << " wall_time_s=" << res.wall_time_s;
  for (const auto& [k, v] : res.diagnostics) std::cout << " " << k << "=" << v;
  if (!a.ref.empty()) {
    const mra::Signal x = mra::io::read_signal(a.ref);
    std::cout << " rel_error=" << mra::relative_error(x, res.estimate);
  }
  std::cout << "\n";
  return 0;
}

int run_experiment_cmd(const ExperimentArgs& a) {
  mra::ExperimentConfig cfg = mra::experiment_preset(a.preset, a.seed);
  cfg.threads = a.threads;
  mra::run_experiment_to_dir(cfg, a.out);
  std::cout << "wrote " << a.out << "/" << cfg.name << "_results.csv and "
            << cfg.name << "_aggregate.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shift-invariant multireference alignment toolkit"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* cg = app.add_subcommand("gen", "generate observations");
  cg->add_option("--signal", gen.signal_spec,
                 "signal spec: window(N,width,height) | gaussian(N,seed) | file:PATH");
  cg->add_option("--m", gen.m, "number of observations")->required();
  cg->add_option("--sigma", gen.sigma, "noise level (total variance per entry)");
  cg->add_option("--seed", gen.seed, "RNG seed");
  cg->add_option("--out", gen.out, "output batch file")->required();
  cg->add_option("--signal-out", gen.signal_out, "also write the clean signal here");

  InvariantsArgs inv;
  auto* ci = app.add_subcommand("invariants", "estimate invariant features");
  ci->add_option("--in", inv.in, "input batch file")->required();
  ci->add_option("--out", inv.out, "output estimates file")->required();
  ci->add_flag("--two-pass", inv.two_pass, "use the centered (two-pass) bispectrum estimator");

  RecoverArgs rec;
  auto* cr = app.add_subcommand("recover", "recover the signal from a batch");
  cr->add_option("--in", rec.in, "input batch file")->required();
  cr->add_option("--out", rec.out, "output signal file");
  cr->add_option("--method", rec.method,
                 "manifold | iterps | fm | direct | unwrap | sdp | em | template | oracle");
  cr->add_option("--ref", rec.ref, "reference signal file; prints shift-invariant error");
  cr->add_flag("--two-pass", rec.opts.two_pass, "centered bispectrum estimator");
  cr->add_option("--tol-grad", rec.tol_grad, "trust-region gradient tolerance");
  cr->add_option("--max-iter", rec.max_iter, "trust-region outer iteration cap");
  cr->add_option("--restarts", rec.opts.restarts, "random restarts for manifold optimization");
  cr->add_option("--seed", rec.opts.seed, "RNG seed for restarts / EM init");
  cr->add_option("--delta-lll", rec.opts.unwrap.delta_lll, "LLL reduction parameter");
  cr->add_option("--irls-max-iter", rec.opts.unwrap.l1.max_iter, "IRLS iteration cap");
  cr->add_option("--sdp-tol", rec.opts.sdp.tol, "ADMM residual tolerance");
  cr->add_option("--sdp-max-iter", rec.opts.sdp.max_iter, "ADMM iteration cap");
  cr->add_option("--em-tol", rec.opts.em.tol, "EM relative-change stopping tolerance");
  cr->add_option("--em-batch-iters", rec.opts.em.batch_iters, "EM warm-start batch iterations");
  cr->add_option("--em-batch-size", rec.opts.em.batch_size, "EM warm-start batch size");
  cr->add_option("--threads", rec.opts.threads, "worker threads (EM)");

  ExperimentArgs exp;
  auto* ce = app.add_subcommand("experiment", "run a preset sweep");
  ce->add_option("--preset", exp.preset, "figure2 | figure3 | figure4 | figure5 | figure6")
      ->required();
  ce->add_option("--out", exp.out, "output directory")->required();
  ce->add_option("--seed", exp.seed, "RNG seed");
  ce->add_option("--threads", exp.threads, "worker threads across sweep cells");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cg->parsed()) return run_gen(gen);
    if (ci->parsed()) return run_invariants(inv);
    if (cr->parsed()) return run_recover(rec);
    if (ce->parsed()) return run_experiment_cmd(exp);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
