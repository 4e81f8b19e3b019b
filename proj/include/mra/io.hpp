#pragma once

// Text formats used by the command-line tool.
//
// Signal file:
//   # N=<n> kind=<real|complex>
//   one entry per line; complex entries as "re im"
//
// Estimates file:
//   N=<n>
//   M=<m>
//   sigma=<s>
//   kind=<real|complex>
//   <mu re> <mu im>
//   N power-spectrum lines
//   N^2 bispectrum lines, row-major, "re im"
//
// Batch file:
//   # N=<n> M=<m> sigma=<s> kind=<real|complex> seed=<seed>
//   # shifts: s0 s1 ... (optional)
//   M observation lines (N entries each; complex entries as "re im")

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mra/invariants.hpp"
#include "mra/observations.hpp"
#include "mra/signal.hpp"

namespace mra {
namespace io {

namespace detail {

inline std::string kind_string(bool is_real) { return is_real ? "real" : "complex"; }

inline bool parse_kind(const std::string& s) {
  if (s == "real") return true;
  if (s == "complex") return false;
  throw std::runtime_error("unknown signal kind: " + s);
}

// "key=value" tokens on a header line
inline std::string header_value(const std::string& line, const std::string& key) {
  const std::string needle = key + "=";
  const auto pos = line.find(needle);
  if (pos == std::string::npos) throw std::runtime_error("missing header field " + key);
  const auto start = pos + needle.size();
  auto end = line.find_first_of(" \t\r", start);
  if (end == std::string::npos) end = line.size();
  return line.substr(start, end - start);
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << std::setprecision(17);
  return f;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  return f;
}

}  // namespace detail

inline void write_signal(const std::string& path, const Signal& x) {
  auto f = detail::open_out(path);
  f << "# N=" << x.n() << " kind=" << detail::kind_string(x.is_real) << "\n";
  for (int i = 0; i < x.n(); ++i) {
    if (x.is_real)
      f << x.values[i].real() << "\n";
    else
      f << x.values[i].real() << " " << x.values[i].imag() << "\n";
  }
}

inline Signal read_signal(const std::string& path) {
  auto f = detail::open_in(path);
  std::string header;
  std::getline(f, header);
  const int n = std::stoi(detail::header_value(header, "N"));
  const bool is_real = detail::parse_kind(detail::header_value(header, "kind"));
  Signal x;
  x.is_real = is_real;
  x.values.resize(n);
  for (int i = 0; i < n; ++i) {
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("signal file truncated");
    std::istringstream ss(line);
    double re = 0.0, im = 0.0;
    ss >> re;
    if (!is_real) ss >> im;
    if (!ss) throw std::runtime_error("bad signal entry on line " + std::to_string(i + 2));
    x.values[i] = cd{re, im};
  }
  return x;
}

inline void write_batch(const std::string& path, const ObservationBatch& b) {
  auto f = detail::open_out(path);
  f << "# N=" << b.n() << " M=" << b.m() << " sigma=" << b.sigma
    << " kind=" << detail::kind_string(b.is_real) << " seed=" << b.seed << "\n";
  if (b.true_shifts) {
    f << "# shifts:";
    for (int s : *b.true_shifts) f << " " << s;
    f << "\n";
  }
  for (long j = 0; j < b.m(); ++j) {
    for (int i = 0; i < b.n(); ++i) {
      if (i) f << " ";
      if (b.is_real)
        f << b.observations(i, j).real();
      else
        f << b.observations(i, j).real() << " " << b.observations(i, j).imag();
    }
    f << "\n";
  }
}

inline ObservationBatch read_batch(const std::string& path) {
  auto f = detail::open_in(path);
  std::string header;
  std::getline(f, header);
  ObservationBatch b;
  const int n = std::stoi(detail::header_value(header, "N"));
  const long m = std::stol(detail::header_value(header, "M"));
  b.sigma = std::stod(detail::header_value(header, "sigma"));
  b.is_real = detail::parse_kind(detail::header_value(header, "kind"));
  b.seed = std::stoull(detail::header_value(header, "seed"));
  b.observations.resize(n, m);

  std::string line;
  std::getline(f, line);
  if (line.rfind("# shifts:", 0) == 0) {
    std::istringstream ss(line.substr(9));
    std::vector<int> shifts;
    int s;
    while (ss >> s) shifts.push_back(s);
    if (long(shifts.size()) != m) throw std::runtime_error("bad shifts line");
    b.true_shifts = std::move(shifts);
    std::getline(f, line);
  }
  for (long j = 0; j < m; ++j) {
    if (j > 0 && !std::getline(f, line)) throw std::runtime_error("batch file truncated");
    std::istringstream ss(line);
    for (int i = 0; i < n; ++i) {
      double re = 0.0, im = 0.0;
      ss >> re;
      if (!b.is_real) ss >> im;
      if (!ss) throw std::runtime_error("bad observation entry");
      b.observations(i, j) = cd{re, im};
    }
  }
  return b;
}

inline void write_estimates(const std::string& path, const InvariantEstimates& e) {
  auto f = detail::open_out(path);
  f << "N=" << e.n << "\n";
  f << "M=" << e.count << "\n";
  f << "sigma=" << e.sigma << "\n";
  f << "kind=" << detail::kind_string(e.is_real) << "\n";
  f << e.mu_hat.real() << " " << e.mu_hat.imag() << "\n";
  for (int k = 0; k < e.n; ++k) f << e.power_hat[k] << "\n";
  for (int k1 = 0; k1 < e.n; ++k1)
    for (int k2 = 0; k2 < e.n; ++k2)
      f << e.bispec_hat(k1, k2).real() << " " << e.bispec_hat(k1, k2).imag() << "\n";
}

inline InvariantEstimates read_estimates(const std::string& path) {
  auto f = detail::open_in(path);
  InvariantEstimates e;
  std::string line;
  std::getline(f, line);
  e.n = std::stoi(detail::header_value(line, "N"));
  std::getline(f, line);
  e.count = std::stol(detail::header_value(line, "M"));
  std::getline(f, line);
  e.sigma = std::stod(detail::header_value(line, "sigma"));
  std::getline(f, line);
  e.is_real = detail::parse_kind(detail::header_value(line, "kind"));
  std::getline(f, line);
  {
    std::istringstream ss(line);
    double re, im;
    ss >> re >> im;
    if (!ss) throw std::runtime_error("bad mean line");
    e.mu_hat = cd{re, im};
  }
  e.power_hat.resize(e.n);
  for (int k = 0; k < e.n; ++k) {
    std::getline(f, line);
    e.power_hat[k] = std::stod(line);
  }
  e.bispec_hat.resize(e.n, e.n);
  for (int k1 = 0; k1 < e.n; ++k1)
    for (int k2 = 0; k2 < e.n; ++k2) {
      if (!std::getline(f, line)) throw std::runtime_error("estimates file truncated");
      std::istringstream ss(line);
      double re, im;
      ss >> re >> im;
      if (!ss) throw std::runtime_error("bad bispectrum entry");
      e.bispec_hat(k1, k2) = cd{re, im};
    }
  return e;
}

}  // namespace io
}  // namespace mra
