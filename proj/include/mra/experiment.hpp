#pragma once

// Monte-Carlo sweep harness.
//
// A sweep is the Cartesian product sigma_grid x m_grid x reps.  Every cell
// generates one observation batch (seed derived from the config seed and the
// cell coordinates, so results are independent of evaluation order and thread
// count) and runs every configured method on that same batch.  Output: a raw
// CSV with one row per (method, sigma, m, rep) and an aggregate CSV with
// mean / standard-error per (method, sigma, m).
//
// estimator_error_mode replaces recovery with the accuracy of the invariant
// features themselves: relative Frobenius error of the centered bispectrum
// estimate and relative l2 error of the power-spectrum estimate.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "mra/invariants.hpp"
#include "mra/io.hpp"
#include "mra/observations.hpp"
#include "mra/pipeline.hpp"
#include "mra/signal.hpp"

namespace mra {

struct ExperimentConfig {
  std::string name = "custom";
  Signal signal;
  std::vector<double> sigma_grid;
  std::vector<long> m_grid;
  int reps = 5;
  std::vector<Method> methods;
  std::uint64_t seed = 1;
  int threads = 1;
  bool two_pass = false;
  bool give_true_anchors = true;  // pass the true phases of y[0], y[1] to fm/unwrap/sdp
  bool estimator_error_mode = false;
  RecoverOptions base_opts{};
};

struct ExperimentRow {
  std::string method;  // method name, or "power"/"bispectrum" in estimator mode
  double sigma = 0.0;
  long m = 0;
  int rep = 0;
  double rel_error = 0.0;
  double wall_time_s = 0.0;
};

// Built-in signal specs: "window(N,width,height)", "gaussian(N,seed)", "file:path".
inline Signal signal_from_spec(const std::string& spec) {
  if (spec.rfind("file:", 0) == 0) return io::read_signal(spec.substr(5));
  auto parse_args = [&](const std::string& name) {
    const auto open = spec.find('(');
    const auto close = spec.rfind(')');
    if (spec.rfind(name, 0) != 0 || open == std::string::npos || close == std::string::npos)
      throw std::invalid_argument("bad signal spec: " + spec);
    std::vector<double> args;
    std::istringstream ss(spec.substr(open + 1, close - open - 1));
    std::string tok;
    while (std::getline(ss, tok, ',')) args.push_back(std::stod(tok));
    return args;
  };
  if (spec.rfind("window", 0) == 0) {
    const auto a = parse_args("window");
    if (a.size() != 3) throw std::invalid_argument("window(N,width,height) expects 3 args");
    return window_signal(int(a[0]), int(a[1]), a[2]);
  }
  if (spec.rfind("gaussian", 0) == 0) {
    const auto a = parse_args("gaussian");
    if (a.size() != 2) throw std::invalid_argument("gaussian(N,seed) expects 2 args");
    const int n = int(a[0]);
    std::mt19937_64 eng(derive_seed(std::uint64_t(a[1]), 0x516EULL));
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = gauss(eng);
    return Signal::from_real(v);
  }
  throw std::invalid_argument("bad signal spec: " + spec);
}

namespace experiment_detail {

inline void estimator_error_rows(const ExperimentConfig& cfg, const ObservationBatch& batch,
                                 double sigma, long m, int rep, std::vector<ExperimentRow>& out) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const InvariantEstimates est = finalize_two_pass(batch);
  const double secs = std::chrono::duration<double>(clock::now() - t0).count();

  const Eigen::VectorXcd y = dft(cfg.signal.values);
  const Eigen::VectorXd p_true = y.cwiseAbs2();
  Signal centered = cfg.signal;
  centered.values.array() -= cfg.signal.values.mean();
  const Eigen::MatrixXcd b_true = bispectrum_of(centered);

  out.push_back({"power", sigma, m, rep, (est.power_hat - p_true).norm() / p_true.norm(), secs});
  out.push_back({"bispectrum", sigma, m, rep, (est.bispec_hat - b_true).norm() / b_true.norm(),
                 secs});
}

inline void recovery_rows(const ExperimentConfig& cfg, const ObservationBatch& batch, double sigma,
                          long m, int rep, std::uint64_t cell_seed,
                          std::vector<ExperimentRow>& out) {
  const Eigen::VectorXcd y_true = dft(cfg.signal.values);
  const Eigen::VectorXcd ph_true = phase_of(y_true);

  for (Method method : cfg.methods) {
    RecoverOptions opts = cfg.base_opts;
    opts.method = method;
    opts.seed = derive_seed(cell_seed, std::uint64_t(method));
    opts.two_pass = cfg.two_pass;
    if (cfg.give_true_anchors &&
        (method == Method::FrequencyMarching || method == Method::PhaseUnwrap ||
         method == Method::Sdp)) {
      if (ph_true[0] != cd{0.0, 0.0}) opts.true_y0 = ph_true[0];
      if (ph_true.size() > 1 && ph_true[1] != cd{0.0, 0.0}) opts.true_y1 = ph_true[1];
    }
    const RecoveryResult res = mra_recover(batch, opts);
    const double err = relative_error(cfg.signal, res.estimate);
    out.push_back({method_to_string(method), sigma, m, rep, err, res.wall_time_s});
  }
}

}  // namespace experiment_detail

inline std::vector<ExperimentRow> run_experiment(const ExperimentConfig& cfg) {
  struct Cell {
    int si, mi, rep;
  };
  std::vector<Cell> cells;
  for (int si = 0; si < int(cfg.sigma_grid.size()); ++si)
    for (int mi = 0; mi < int(cfg.m_grid.size()); ++mi)
      for (int rep = 0; rep < cfg.reps; ++rep) cells.push_back({si, mi, rep});

  std::vector<std::vector<ExperimentRow>> slots(cells.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const Cell c = cells[i];
      const double sigma = cfg.sigma_grid[std::size_t(c.si)];
      const long m = cfg.m_grid[std::size_t(c.mi)];
      const std::uint64_t cell_seed =
          derive_seed(cfg.seed, std::uint64_t(c.si) + 1, std::uint64_t(c.mi) + 1,
                      std::uint64_t(c.rep) + 1);
      const ObservationBatch batch = generate_observations(cfg.signal, m, sigma, cell_seed);
      if (cfg.estimator_error_mode)
        experiment_detail::estimator_error_rows(cfg, batch, sigma, m, c.rep, slots[i]);
      else
        experiment_detail::recovery_rows(cfg, batch, sigma, m, c.rep, cell_seed, slots[i]);
    }
  };

  const int t = std::max(1, cfg.threads);
  if (t == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < t; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<ExperimentRow> rows;
  for (auto& s : slots) rows.insert(rows.end(), s.begin(), s.end());
  return rows;
}

struct AggregateRow {
  std::string method;
  double sigma = 0.0;
  long m = 0;
  int count = 0;
  double mean_rel_error = 0.0;
  double stderr_rel_error = 0.0;
  double mean_wall_time_s = 0.0;
};

inline std::vector<AggregateRow> aggregate_rows(const std::vector<ExperimentRow>& rows) {
  std::map<std::tuple<std::string, double, long>, std::vector<const ExperimentRow*>> groups;
  for (const auto& r : rows) groups[{r.method, r.sigma, r.m}].push_back(&r);
  std::vector<AggregateRow> out;
  for (const auto& [key, members] : groups) {
    AggregateRow a;
    a.method = std::get<0>(key);
    a.sigma = std::get<1>(key);
    a.m = std::get<2>(key);
    a.count = int(members.size());
    double se = 0.0, st = 0.0;
    for (const auto* r : members) {
      se += r->rel_error;
      st += r->wall_time_s;
    }
    a.mean_rel_error = se / a.count;
    a.mean_wall_time_s = st / a.count;
    if (a.count > 1) {
      double var = 0.0;
      for (const auto* r : members) {
        const double d = r->rel_error - a.mean_rel_error;
        var += d * d;
      }
      var /= double(a.count - 1);
      a.stderr_rel_error = std::sqrt(var / a.count);
    }
    out.push_back(a);
  }
  return out;
}

inline void write_rows_csv(const std::string& path, const std::vector<ExperimentRow>& rows) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << std::setprecision(12);
  f << "method,sigma,m,rep,rel_error,wall_time_s\n";
  for (const auto& r : rows)
    f << r.method << "," << r.sigma << "," << r.m << "," << r.rep << "," << r.rel_error << ","
      << r.wall_time_s << "\n";
}

inline void write_aggregate_csv(const std::string& path, const std::vector<AggregateRow>& rows) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << std::setprecision(12);
  f << "method,sigma,m,count,mean_rel_error,stderr_rel_error,mean_wall_time_s\n";
  for (const auto& r : rows)
    f << r.method << "," << r.sigma << "," << r.m << "," << r.count << "," << r.mean_rel_error
      << "," << r.stderr_rel_error << "," << r.mean_wall_time_s << "\n";
}

// Desk-scale presets mirroring the reference experiments: estimator accuracy
// versus sample size (figure2), recovery error and timing versus M at sigma=1
// (figure3/figure4), and versus sigma at M=1e4 (figure5/figure6).
inline ExperimentConfig experiment_preset(const std::string& name, std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.name = name;
  cfg.seed = seed;
  const std::vector<Method> sweep_methods = {
      Method::OracleAverage, Method::TemplateAlign, Method::Em,     Method::Manifold,
      Method::IterPhaseSync, Method::FrequencyMarching,            Method::PhaseUnwrap,
  };
  if (name == "figure2") {
    std::mt19937_64 eng(derive_seed(seed, 0x516EULL));
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd v(41);
    for (int i = 0; i < 41; ++i) v[i] = gauss(eng);
    cfg.signal = Signal::from_real(v);
    cfg.sigma_grid = {0.5, 1.0, 2.0};
    cfg.m_grid = {100, 316, 1000, 3162, 10000};
    cfg.reps = 10;
    cfg.estimator_error_mode = true;
    return cfg;
  }
  if (name == "figure3" || name == "figure4") {
    cfg.signal = window_signal(41, 21, 1.0);
    cfg.sigma_grid = {1.0};
    cfg.m_grid = {100, 1000, 10000};
    cfg.reps = 5;
    cfg.methods = sweep_methods;
    return cfg;
  }
  if (name == "figure5" || name == "figure6") {
    cfg.signal = window_signal(41, 21, 1.0);
    cfg.sigma_grid = {0.5, 1.0, 2.0, 3.0, 4.0};
    cfg.m_grid = {10000};
    cfg.reps = 5;
    cfg.methods = sweep_methods;
    return cfg;
  }
  throw std::invalid_argument("unknown preset: " + name);
}

inline void run_experiment_to_dir(const ExperimentConfig& cfg, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto rows = run_experiment(cfg);
  write_rows_csv(out_dir + "/" + cfg.name + "_results.csv", rows);
  write_aggregate_csv(out_dir + "/" + cfg.name + "_aggregate.csv", aggregate_rows(rows));
}

}  // namespace mra
