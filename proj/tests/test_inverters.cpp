#include <limits>

#include <catch_amalgamated.hpp>

#include "oracles.hpp"

using namespace mra;

TEST_CASE("frequency marching reproduces exact spectrum phases", "[inverters]") {
  std::mt19937_64 eng(61);
  for (bool real_kind : {false, true}) {
    for (int n : {5, 8, 13}) {
      const Signal x = oracles::random_nonvanishing(n, eng, real_kind);
      const Eigen::VectorXcd y = oracles::naive_dft(x.values);
      const Eigen::VectorXcd ph = phase_of(y);
      const Eigen::MatrixXcd bt = normalized_bispectrum(bispectrum_of(x));

      const Eigen::VectorXcd got = frequency_marching(bt, ph[0], ph[1]);
      REQUIRE((got - ph).cwiseAbs().maxCoeff() < 1e-10);

      const Eigen::VectorXcd xhat = oracles::naive_idft(y.cwiseAbs().cast<cd>().cwiseProduct(got));
      REQUIRE(relative_error(x.values, xhat) < 1e-8);
    }
  }
}

TEST_CASE("frequency marching falls back to unit phases on empty data", "[inverters]") {
  const int n = 7;
  const Eigen::MatrixXcd zeros = Eigen::MatrixXcd::Zero(n, n);
  const Eigen::VectorXcd y = frequency_marching(zeros, cd{0.0, 0.0}, cd{0.0, 0.0});
  for (int k = 0; k < n; ++k) REQUIRE(y[k] == cd{1.0, 0.0});
  REQUIRE_THROWS_AS(frequency_marching(Eigen::MatrixXcd::Zero(3, 4), cd{1, 0}, cd{1, 0}),
                    std::invalid_argument);
}

TEST_CASE("direct inversion recovers the orbit from an exact bispectrum", "[inverters]") {
  std::mt19937_64 eng(62);
  for (bool real_kind : {false, true}) {
    const int n = 11;
    const Signal x = oracles::random_nonvanishing(n, eng, real_kind);
    const Signal out = direct_inversion(bispectrum_of(x));
    REQUIRE(relative_error(x.values, out.values) < 1e-9);
    if (real_kind) {
      // up to alignment the values are real; the raw output may be any shift
      const long s = best_alignment_shift(x.values, out.values);
      REQUIRE(circular_shift(out.values, s).imag().cwiseAbs().maxCoeff() < 1e-9);
    }
  }

  // the bispectrum of a shifted copy is identical, so so is the recovery
  const Signal x = oracles::random_nonvanishing(9, eng, false);
  const Signal shifted = Signal::from_complex(circular_shift(x.values, 4));
  const Signal a = direct_inversion(bispectrum_of(x));
  const Signal b = direct_inversion(bispectrum_of(shifted));
  REQUIRE((a.values - b.values).norm() < 1e-10 * (1.0 + a.values.norm()));
}

TEST_CASE("direct inversion degrades linearly under small perturbations", "[inverters]") {
  std::mt19937_64 eng(63);
  const int n = 9;
  const Signal x = oracles::random_nonvanishing(n, eng, false);
  const Eigen::MatrixXcd b = bispectrum_of(x);

  Eigen::MatrixXcd noise(n, n);
  for (int j = 0; j < n; ++j) noise.col(j) = oracles::random_complex(n, eng);
  noise *= b.norm() / noise.norm();

  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {1e-4, 1e-6, 1e-8}) {
    const Signal out = direct_inversion(b + eps * noise);
    const double err = relative_error(x.values, out.values);
    REQUIRE(err < 1e2 * eps);  // first-order sensitivity with a generous constant
    REQUIRE(err < prev);
    prev = err;
  }
}

TEST_CASE("direct inversion validates input and refuses vanishing spectra", "[inverters]") {
  REQUIRE_THROWS_AS(direct_inversion(Eigen::MatrixXcd::Zero(4, 5)), std::invalid_argument);
  REQUIRE_THROWS_AS(direct_inversion(Eigen::MatrixXcd::Zero(2, 2)), std::invalid_argument);
  // width-3 window on N=6 kills y[2], which shows up on the diagonal
  const Signal bad = window_signal(6, 3, 1.0);
  REQUIRE_THROWS_AS(direct_inversion(bispectrum_of(bad)), vanishing_dft_error);
}
