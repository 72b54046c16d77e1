#include "anosov/suspension.hpp"

#include "anosov/algebraic.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace anosov {

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;

Eigen::Vector2d wrap(const Eigen::Vector2d& x) {
  return x.unaryExpr([](double v) {
    const double r = v - std::floor(v);
    return r >= 1.0 ? 0.0 : r;
  });
}

double wrap_centered(double v) { return v - std::round(v); }
}  // namespace

TorusMap::TorusMap(double epsilon) : eps_(epsilon) {
  if (!(std::abs(epsilon) <= 0.05))
    throw std::invalid_argument("torus map: |epsilon| must be <= 0.05");
}

Eigen::Matrix2d TorusMap::A() {
  Eigen::Matrix2d a;
  a << 2, 1, 1, 1;
  return a;
}

double TorusMap::unstable_eigenvalue() { return (3.0 + std::sqrt(5.0)) / 2.0; }

Eigen::Vector2d TorusMap::unstable_eigenvector() {
  return Eigen::Vector2d(1.0, unstable_eigenvalue() - 2.0).normalized();
}

Eigen::Vector2d TorusMap::stable_eigenvector() {
  return Eigen::Vector2d(1.0, 1.0 / unstable_eigenvalue() - 2.0).normalized();
}

Eigen::Vector2d TorusMap::apply(const Eigen::Vector2d& x) const {
  Eigen::Vector2d y = A() * x;
  y[0] += eps_ * std::sin(two_pi * x[1]);
  y[1] += eps_ * std::sin(two_pi * x[0]);
  return wrap(y);
}

Eigen::Matrix2d TorusMap::jacobian(const Eigen::Vector2d& x) const {
  Eigen::Matrix2d j = A();
  j(0, 1) += two_pi * eps_ * std::cos(two_pi * x[1]);
  j(1, 0) += two_pi * eps_ * std::cos(two_pi * x[0]);
  return j;
}

Eigen::Vector2d TorusMap::inverse(const Eigen::Vector2d& x) const {
  Eigen::Matrix2d ainv;
  ainv << 1, -1, -1, 2;
  Eigen::Vector2d y = wrap(ainv * x);
  if (eps_ == 0.0) return y;
  for (int it = 0; it < 50; ++it) {
    Eigen::Vector2d f = A() * y;
    f[0] += eps_ * std::sin(two_pi * y[1]) - x[0];
    f[1] += eps_ * std::sin(two_pi * y[0]) - x[1];
    f = f.unaryExpr([](double v) { return wrap_centered(v); });
    const Eigen::Vector2d step = jacobian(y).partialPivLu().solve(f);
    y -= step;
    if (step.lpNorm<Eigen::Infinity>() < 1e-15) break;
  }
  return wrap(y);
}

double TorusMap::cone_ratio(const Eigen::Vector2d& x0, int steps) const {
  Eigen::Matrix2d basis;
  basis.col(0) = unstable_eigenvector();
  basis.col(1) = stable_eigenvector();
  const Eigen::Matrix2d to_eig = basis.inverse();
  double worst = 0.0;
  Eigen::Vector2d x = x0;
  for (int k = 0; k < steps; ++k) {
    const Eigen::Matrix2d j = jacobian(x);
    for (double sgn : {1.0, -1.0}) {
      const Eigen::Vector2d v = basis * Eigen::Vector2d(1.0, sgn);
      const Eigen::Vector2d c = to_eig * (j * v);
      worst = std::max(worst, std::abs(c[1]) / std::abs(c[0]));
    }
    x = apply(x);
  }
  return worst;
}

SuspensionBackend::SuspensionBackend(const SuspensionConfig& cfg) : cfg_(cfg), map_(cfg.epsilon) {
  if (!(std::abs(cfg.delta) < 1.0))
    throw std::invalid_argument("suspension backend: |delta| must be < 1");
  if (cfg.warmup_iterations < 50)
    throw std::invalid_argument("suspension backend: warmup_iterations must be >= 50");
}

double SuspensionBackend::roof(const Eigen::Vector2d& x) const {
  return 1.0 + cfg_.delta * std::cos(two_pi * x[0]);
}

SuspensionPoint SuspensionBackend::advance(const Point& p, double t) const {
  Point q = p;
  q.s += t;
  while (q.s >= roof(q.x)) {
    q.s -= roof(q.x);
    q.x = map_.apply(q.x);
  }
  while (q.s < 0.0) {
    q.x = map_.inverse(q.x);
    q.s += roof(q.x);
  }
  return q;
}

Eigen::Vector2d SuspensionBackend::unstable_direction(const Eigen::Vector2d& x,
                                                      int iterations) const {
  std::vector<Eigen::Vector2d> back{x};
  for (int k = 0; k < iterations; ++k) back.push_back(map_.inverse(back.back()));
  Eigen::Vector2d v = TorusMap::unstable_eigenvector();
  for (int k = iterations; k >= 1; --k) {
    v = map_.jacobian(back[static_cast<std::size_t>(k)]) * v;
    const double nv = v.norm();
    if (!(nv > 1e-300)) throw NumericError("suspension: direction tracking collapsed");
    v /= nv;
  }
  return v;
}

OrbitSeries unstable_rate_series(const SuspensionBackend& b, const SuspensionPoint& p0,
                                 double dt, Eigen::Index n, int warmup_iterations) {
  if (!(dt > 0.0) || n < 1) throw std::invalid_argument("sample_orbit: need dt > 0 and n >= 1");
  if (warmup_iterations < 50)
    throw std::invalid_argument("unstable_rate_series: warmup_iterations must be >= 50");
  const TorusMap& f = b.map();

  // Forward base orbit covering the sampled window plus the stable warmup.
  std::vector<Eigen::Vector2d> xs{p0.x};
  std::vector<double> start{-p0.s};  // flow time at which fiber k begins
  const double t_end = static_cast<double>(n - 1) * dt;
  while (start.back() + b.roof(xs.back()) <= t_end) {
    start.push_back(start.back() + b.roof(xs.back()));
    xs.push_back(f.apply(xs.back()));
  }
  const std::size_t fibers = xs.size();
  for (int k = 0; k <= warmup_iterations; ++k) xs.push_back(f.apply(xs.back()));

  std::vector<double> ru(fibers), rs(fibers);
  Eigen::Vector2d vu = b.unstable_direction(p0.x, warmup_iterations);
  for (std::size_t k = 0; k < fibers; ++k) {
    const Eigen::Vector2d w = f.jacobian(xs[k]) * vu;
    const double nw = w.norm();
    if (!(nw > 1e-300)) throw NumericError("suspension: direction tracking collapsed");
    ru[k] = std::log(nw) / b.roof(xs[k]);
    vu = w / nw;
  }
  Eigen::Vector2d vs = TorusMap::stable_eigenvector();
  for (std::size_t k = xs.size() - 1; k-- > 0;) {
    const Eigen::Vector2d w = f.jacobian(xs[k]).partialPivLu().solve(vs);
    const double nw = w.norm();
    if (!(nw > 1e-300)) throw NumericError("suspension: direction tracking collapsed");
    if (k < fibers) rs[k] = -std::log(nw) / b.roof(xs[k]);
    vs = w / nw;
  }

  OrbitSeries out(0.0, dt, n);
  out.origin = b.name();
  Eigen::ArrayXd x1(n), x2(n), s(n);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = out.time(i);
    const std::size_t k_prev = k;
    while (k + 1 < fibers && start[k + 1] <= t) ++k;
    if (i > 0 && k != k_prev) out.jumps.push_back(i - 1);
    out.r_u[i] = ru[k];
    out.r_s[i] = rs[k];
    x1[i] = xs[k][0];
    x2[i] = xs[k][1];
    s[i] = t - start[k];
  }
  out.aux["x1"] = x1;
  out.aux["x2"] = x2;
  out.aux["s"] = s;
  out.check_finite();
  return out;
}

OrbitSeries SuspensionBackend::sample_orbit(const Point& p0, double dt, Eigen::Index n) const {
  return unstable_rate_series(*this, p0, dt, n, cfg_.warmup_iterations);
}

RateSample SuspensionBackend::rates(const Point& p) const {
  return sample_orbit(p, 1e-3, 1).sample(0);
}

SuspensionPoint SuspensionBackend::random_point(std::mt19937_64& rng) const {
  // Flow-invariant measure: Lebesgue on the base times length on the fiber.
  for (;;) {
    Eigen::Vector2d x(uniform01(rng), uniform01(rng));
    const double s = (1.0 + std::abs(cfg_.delta)) * uniform01(rng);
    if (s < roof(x)) return SuspensionPoint{x, s};
  }
}

}  // namespace anosov
