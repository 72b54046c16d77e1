#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "anosov/algebraic.hpp"
#include "anosov/ergodic.hpp"
#include "anosov/random.hpp"
#include "anosov/suspension.hpp"

#include <cmath>
#include <numeric>

using namespace anosov;

namespace {
OrbitSeries constant_series(double c, double dt, Eigen::Index n, std::uint64_t seed) {
  OrbitSeries s(0.0, dt, n);
  s.r_u.setConstant(c);
  s.r_s.setConstant(-c);
  s.seed = seed;
  return s;
}
}  // namespace

TEST_CASE("ergodic: constant input gives its value with zero error") {
  const BirkhoffEstimate e = birkhoff(constant_series(0.7, 0.01, 1001, 1), "r_u");
  CHECK(e.mean == 0.7);
  CHECK(e.std_error == 0.0);
  CHECK(e.T == doctest::Approx(10.0));
  CHECK(e.batches == 10);
}

TEST_CASE("ergodic: batch means match an independent two-pass computation") {
  std::mt19937_64 rng(3);
  const Eigen::Index n = 10001;
  Eigen::ArrayXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = uniform01(rng);
  const BirkhoffEstimate e = birkhoff(v, 0.5);

  // Oracle: batches of exactly 1000 intervals each.
  std::vector<double> means;
  for (int k = 0; k < 10; ++k) {
    double s = 0.5 * v[k * 1000] + 0.5 * v[(k + 1) * 1000];
    for (int i = k * 1000 + 1; i < (k + 1) * 1000; ++i) s += v[i];
    means.push_back(s / 1000.0);
  }
  const double mean = std::accumulate(means.begin(), means.end(), 0.0) / 10.0;
  double ss = 0.0;
  for (double m : means) ss += (m - mean) * (m - mean);
  CHECK(e.mean == doctest::Approx(mean).epsilon(1e-13));
  CHECK(e.std_error == doctest::Approx(std::sqrt(ss / 9.0) / std::sqrt(10.0)).epsilon(1e-10));
  // iid uniform: stderr of the mean is about sqrt(1/12 / n)
  CHECK(e.std_error == doctest::Approx(std::sqrt(1.0 / 12.0 / n)).epsilon(0.6));
}

TEST_CASE("ergodic: too short series are rejected") {
  CHECK_THROWS_AS(birkhoff(Eigen::ArrayXd::Ones(10), 1.0), std::invalid_argument);
}

TEST_CASE("ergodic: Lyapunov exponent equals stretch over time") {
  OrbitSeries s(0.0, 0.01, 20001);
  for (Eigen::Index i = 0; i < s.size(); ++i) s.r_u[i] = 1.0 + 0.5 * std::cos(s.time(i));
  // (1/200) int_0^200 (1 + cos/2) = 1 + sin(200)/400
  CHECK(lyapunov_exponent(s) == doctest::Approx(1.0 + std::sin(200.0) / 400.0).epsilon(1e-8));
}

TEST_CASE("ergodic: algebraic Lyapunov exponent is lambda0") {
  const AlgebraicBackend b(0.5);
  std::mt19937_64 rng(11);
  CHECK(lyapunov_exponent(b, b.random_point(rng), 100.0, 0.5) == 0.5);
  CHECK_THROWS_AS(lyapunov_exponent(b, b.random_point(rng), 50.0, 0.5), std::invalid_argument);
}

TEST_CASE("ergodic: Pesin estimator pools by duration and sorts by seed") {
  std::vector<OrbitSeries> ens{constant_series(2.0, 0.01, 1001, 9), constant_series(1.0, 0.01, 3001, 2),
                               constant_series(1.0, 0.01, 1001, 5), constant_series(1.0, 0.01, 1001, 1)};
  const EntropyReport r = pesin_entropy(ens);
  // weights 10, 30, 10, 10
  CHECK(r.h_bar == doctest::Approx((20.0 + 30.0 + 10.0 + 10.0) / 60.0));
  CHECK(r.seeds == std::vector<std::uint64_t>{1, 2, 5, 9});
  CHECK(r.per_orbit_means.back() == 2.0);
  // constant per-orbit means with zero error differ: flagged
  CHECK(r.inconsistent);

  ens.pop_back();
  CHECK_THROWS_AS(pesin_entropy(ens), std::invalid_argument);
  ens.push_back(constant_series(1.0, 0.01, 1001, 2));
  CHECK_THROWS_AS(pesin_entropy(ens), std::invalid_argument);
}

TEST_CASE("ergodic: cat-map suspension entropy matches the eigenvalue") {
  SuspensionConfig cfg;
  cfg.delta = 0.0;
  cfg.epsilon = 0.0;
  const SuspensionBackend b(cfg);
  const auto ens = sample_ensemble(b, {1, 2, 3, 4}, 0.1, 2001);
  const EntropyReport r = pesin_entropy(ens);
  CHECK(std::abs(r.h_bar - std::log((3.0 + std::sqrt(5.0)) / 2.0)) < 1e-4);
  CHECK_FALSE(r.inconsistent);
}

TEST_CASE("ergodic: running average ends at the Birkhoff mean") {
  OrbitSeries s(0.0, 0.1, 1001);
  for (Eigen::Index i = 0; i < s.size(); ++i) s.r_u[i] = std::sin(0.37 * s.time(i)) + 1.0;
  const RunningAverage ra = running_average(s, 100);
  CHECK(ra.t[ra.t.size() - 1] == doctest::Approx(100.0));
  CHECK(ra.mean[ra.mean.size() - 1] == doctest::Approx(birkhoff(s).mean).epsilon(1e-12));
  CHECK(ra.std_error[ra.std_error.size() - 1] == doctest::Approx(birkhoff(s).std_error).epsilon(1e-10));
  CHECK(std::isnan(ra.std_error[0]));  // fewer samples than batches
}

TEST_CASE("ergodic: ensemble sampling is independent of the thread count") {
  const AlgebraicBackend b(1.0);
  const std::vector<std::uint64_t> seeds{4, 8, 15, 16, 23};
  const auto one = sample_ensemble(b, seeds, 0.1, 50, 1);
  const auto many = sample_ensemble(b, seeds, 0.1, 50, 3);
  REQUIRE(one.size() == many.size());
  for (std::size_t k = 0; k < one.size(); ++k) {
    CHECK(one[k].seed == seeds[k]);
    CHECK(many[k].seed == seeds[k]);
    CHECK((one[k].column("w_re") == many[k].column("w_re")).all());
    CHECK((one[k].column("psi") == many[k].column("psi")).all());
  }
}
