#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "anosov/algebraic.hpp"
#include "anosov/perturbed.hpp"

#include <cmath>
#include <numbers>

using namespace anosov;

namespace {
constexpr double pi = std::numbers::pi;

ConformalSpec working_spec() {
  ConformalSpec s;
  s.centers = {{0.3, 0.2}, {-0.3, -0.2}};
  s.amplitudes = {0.1, 0.1};
  s.width = 1.0;
  s.max_amplitude = 0.1;
  return s;
}

PerturbedConfig working_config() {
  PerturbedConfig c;
  c.factor = working_spec();
  c.warmup = 40.0;
  c.check_grid = 60;
  return c;
}

// Euclidean Laplacian by the 5-point stencil.
template <class F>
double fd_laplacian(F f, Complex w, double h) {
  return (f(w + h) + f(w - h) + f(w + Complex(0, h)) + f(w - Complex(0, h)) - 4.0 * f(w)) / (h * h);
}

double angle_diff(double a, double b) { return std::remainder(a - b, 2.0 * pi); }
}  // namespace

TEST_CASE("perturbed: bump profile derivatives match finite differences") {
  const double width = 1.0, h = 1e-4;
  for (double rho : {0.05, 0.3, 0.6, 0.9}) {
    auto b = [&](double r) { return bump_profile(r, width).value; };
    const double d1 = (b(rho + h) - b(rho - h)) / (2 * h);
    const double d2 = (b(rho + h) - 2 * b(rho) + b(rho - h)) / (h * h);
    const BumpProfile p = bump_profile(rho, width);
    CHECK(p.d_over_rho * rho == doctest::Approx(d1).epsilon(1e-6));
    CHECK(p.laplacian == doctest::Approx(d2 + d1 / std::tanh(rho)).epsilon(1e-5));
  }
  CHECK(bump_profile(0.0, 1.0).value == doctest::Approx(1.0));
  CHECK(bump_profile(1.0, 1.0).value == 0.0);
  CHECK(bump_profile(1.5, 1.0).laplacian == 0.0);
}

TEST_CASE("perturbed: bump gradient and hyperbolic Laplacian in the disk chart") {
  const Complex c{0.2, -0.1};
  const double width = 0.8, h = 1e-4;
  auto f = [&](Complex w) { return eval_bump(w, c, width).value; };
  for (Complex w : {Complex(0.25, -0.05), Complex(0.0, 0.1), Complex(0.4, 0.2)}) {
    const BumpEval e = eval_bump(w, c, width);
    CHECK(e.grad.real() == doctest::Approx((f(w + h) - f(w - h)) / (2 * h)).epsilon(1e-6));
    CHECK(e.grad.imag() ==
          doctest::Approx((f(w + Complex(0, h)) - f(w - Complex(0, h))) / (2 * h)).epsilon(1e-6));
    // Delta_hyp = ((1 - |w|^2)^2 / 4) Delta_euclid in the disk.
    const double lap = std::pow(1.0 - std::norm(w), 2) / 4.0 * fd_laplacian(f, w, 1e-3);
    CHECK(e.laplacian == doctest::Approx(lap).epsilon(1e-4));
  }
}

TEST_CASE("perturbed: Gauss curvature matches the conformal formula") {
  // Metric e^{2 phi}|dw|^2 with phi = u + log(2/(1-|w|^2)); K = -e^{-2 phi} Delta phi.
  const ConformalFactor u(working_spec());
  auto phi = [&](Complex w) { return u.value(w) + std::log(2.0 / (1.0 - std::norm(w))); };
  for (Complex w : {Complex(0.0, 0.0), Complex(0.3, 0.25), Complex(-0.2, -0.3), Complex(0.5, -0.1)}) {
    // Richardson-extrapolated stencil.
    const double lap = (4.0 * fd_laplacian(phi, w, 5e-4) - fd_laplacian(phi, w, 1e-3)) / 3.0;
    const double k = -std::exp(-2.0 * phi(w)) * lap;
    CHECK(u.curvature(w) == doctest::Approx(k).epsilon(1e-6));
  }
  const ConformalFactor flat(ConformalSpec{});
  CHECK(flat.curvature({0.3, 0.1}) == doctest::Approx(-1.0));
}

TEST_CASE("perturbed: conformal factor is invariant under the side pairings") {
  const ConformalFactor u(working_spec(), 6.0);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const DiskState d = sample_liouville_disk(rng);
    for (const Group& g : octagon_generators()) {
      const Complex gw = disk_action(g, d.w);
      CHECK(std::abs(u.value(gw) - u.value(d.w)) < 1e-12);
      CHECK(std::abs(u.curvature(gw) - u.curvature(d.w)) < 1e-9);
    }
  }
}

TEST_CASE("perturbed: construction guards") {
  PerturbedConfig c = working_config();
  c.factor.amplitudes = {0.2, 0.1};
  CHECK_THROWS_AS(PerturbedBackend{c}, std::invalid_argument);
  // A strong negative dip drives the curvature positive.
  c.factor.max_amplitude = 1.0;
  c.factor.amplitudes = {-0.5, 0.0};
  CHECK_THROWS_AS(PerturbedBackend{c}, std::invalid_argument);
  c = working_config();
  c.factor.centers = {{0.95, 0.0}, {0.0, 0.0}};
  CHECK_THROWS_AS(PerturbedBackend{c}, std::invalid_argument);
  c = working_config();
  c.warmup = 5.0;
  const PerturbedBackend short_warmup(c);
  CHECK_THROWS_AS(short_warmup.sample_orbit({{0.1, 0.0}, 0.3, 1.0}, 0.1, 10), std::invalid_argument);
}

TEST_CASE("perturbed: trivial factor reproduces the constant-curvature flow") {
  PerturbedConfig c;
  c.dt_max = 0.005;
  const PerturbedBackend pb(c);
  const AlgebraicBackend ab(1.0);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 10; ++i) {
    const DiskState d = sample_liouville_disk(rng);
    const double t = 3.0;
    const PerturbedState q = pb.advance({d.w, d.psi, 1.0}, t);
    const DiskState ref = to_disk(ab.advance(reduce(from_disk(d.w, d.psi)), t).g);
    CHECK(std::abs(q.w - ref.w) < 1e-7);
    CHECK(std::abs(angle_diff(q.psi, ref.psi)) < 1e-7);
  }
  const OrbitSeries s = pb.sample_orbit({{0.1, 0.2}, 1.0, 1.0}, 0.1, 50);
  CHECK((s.r_u - 1.0).abs().maxCoeff() < 1e-10);
  CHECK((s.r_s + 1.0).abs().maxCoeff() < 1e-10);
}

TEST_CASE("perturbed: flow has unit speed, is reversible and fourth order") {
  const PerturbedBackend pb(working_config());
  std::mt19937_64 rng(8);
  for (int i = 0; i < 5; ++i) {
    const PerturbedState p = pb.random_point(rng);
    const PerturbedState q = pb.advance(p, 4.0);
    const SurfaceTangent st = pb.tangent(q);
    const double speed = std::exp(pb.factor().value(st.w)) * 2.0 / (1.0 - std::norm(st.w)) *
                         std::abs(st.velocity);
    CHECK(speed == doctest::Approx(1.0).epsilon(1e-12));
    PerturbedState back = pb.advance({q.w, q.psi + pi, 1.0}, 4.0);
    CHECK(std::abs(back.w - p.w) < 1e-8);
    CHECK(std::abs(angle_diff(back.psi - pi, p.psi)) < 1e-8);
  }
  // Step halving without folding: RK4 error drops by about 16.
  const PerturbedState p{{0.05, -0.1}, 0.7, 1.0};
  auto run = [&](double h, int n) {
    PerturbedState y = p;
    for (int i = 0; i < n; ++i) y = pb.step(y, h);
    return y;
  };
  const PerturbedState ref = run(0.0125, 64);
  const double e1 = std::abs(run(0.2, 4).w - ref.w);
  const double e2 = std::abs(run(0.1, 8).w - ref.w);
  CHECK(e1 / e2 > 10.0);
  CHECK(e1 / e2 < 24.0);
}

TEST_CASE("perturbed: Riccati solver converges to the unstable branch") {
  for (double k : {-1.0, -4.0}) {
    const Eigen::ArrayXd track = Eigen::ArrayXd::Constant(4001, k);
    for (double r0 : {0.0, 3.0, 10.0}) {
      const Eigen::ArrayXd r = riccati_solve(track, 0.01, r0);
      CHECK(r[r.size() - 1] == doctest::Approx(std::sqrt(-k)).epsilon(1e-10));
    }
    CHECK(riccati_solve(track, 0.01)[500] == doctest::Approx(std::sqrt(-k)));
  }
  // r' = -r^2 + 1 from r0 = 0: r = tanh t.
  const Eigen::ArrayXd r = riccati_solve(Eigen::ArrayXd::Constant(201, -1.0), 0.01, 0.0);
  CHECK(r[100] == doctest::Approx(std::tanh(1.0)).epsilon(1e-9));
  CHECK_THROWS_AS(riccati_solve(Eigen::ArrayXd::Constant(200, -1.0), 0.01), std::invalid_argument);
  CHECK_THROWS_AS(riccati_solve(Eigen::ArrayXd::Constant(201, -1.0), 0.1, -20.0), NumericError);
  CHECK_THROWS_AS(riccati_rate(Eigen::ArrayXd::Constant(201, -1.0), 0.1, 5.0), std::invalid_argument);
}

TEST_CASE("perturbed: sampled rates solve the Riccati equation and are start independent") {
  const PerturbedBackend pb(working_config());
  std::mt19937_64 rng(12);
  const PerturbedState p = pb.random_point(rng);
  const OrbitSeries s = pb.sample_orbit(p, 0.01, 3001);
  // Integrated form over unit windows: r(t+1) - r(t) = -int (r^2 + K).
  const Eigen::ArrayXd& k = s.column("K");
  const Eigen::ArrayXd fu = cumulative_trapezoid(s.r_u.square() + k, s.dt);
  const Eigen::ArrayXd fs = cumulative_trapezoid(s.r_s.square() + k, s.dt);
  for (Eigen::Index i = 0; i + 100 < s.size(); i += 100) {
    CHECK(std::abs(s.r_u[i + 100] - s.r_u[i] + fu[i + 100] - fu[i]) < 5e-4);
    CHECK(std::abs(s.r_s[i + 100] - s.r_s[i] + fs[i + 100] - fs[i]) < 5e-4);
  }
  CHECK((s.r_u > 0.0).all());
  CHECK((s.r_s < 0.0).all());
  CHECK(k.maxCoeff() < 0.0);
  // Bounds from curvature comparison: sqrt(min|K|) <= r_u <= sqrt(max|K|).
  CHECK(s.r_u.minCoeff() >= std::sqrt(-k.maxCoeff()) - 0.05);
  CHECK(s.r_u.maxCoeff() <= std::sqrt(-k.minCoeff()) + 0.05);

  // Start independence after warmup.
  const double h = 0.01;
  const Eigen::ArrayXd track = pb.curvature_track(p, h, 6000);
  const Eigen::ArrayXd a = riccati_rate(track, h, 40.0, 0.2);
  const Eigen::ArrayXd b = riccati_rate(track, h, 40.0, 5.0);
  CHECK((a - b).abs().maxCoeff() < 1e-12);
}

TEST_CASE("perturbed: sampled orbits are deterministic and continuous") {
  const PerturbedBackend pb(working_config());
  const PerturbedState p{{0.1, 0.1}, 2.0, 1.0};
  const OrbitSeries a = pb.sample_orbit(p, 0.05, 401);
  const OrbitSeries b = pb.sample_orbit(p, 0.05, 401);
  CHECK((a.r_u == b.r_u).all());
  CHECK((a.r_s == b.r_s).all());
  CHECK(a.jumps.empty());
  // Output spacing does not change the integration when the substep is the same.
  const OrbitSeries c = pb.sample_orbit(p, 0.04, 501);
  const OrbitSeries f = pb.sample_orbit(p, 0.02, 1001);
  for (Eigen::Index i = 0; i < c.size(); ++i) CHECK(std::abs(c.r_u[i] - f.r_u[2 * i]) < 1e-9);
}
