#include "anosov/uniformize.hpp"

#include "anosov/ergodic.hpp"
#include "anosov/random.hpp"

#include <cmath>
#include <limits>

namespace anosov {

namespace {

Eigen::Index window_steps(const OrbitSeries& s, double T) {
  if (!(T > 0.0)) throw std::invalid_argument("uniformize: T must be > 0");
  const double x = T / s.dt;
  const double r = std::round(x);
  if (std::abs(x - r) > 1e-9 * std::max(1.0, x) || r < 1.0)
    throw std::invalid_argument("uniformize: T must be a positive multiple of dt");
  return static_cast<Eigen::Index>(r);
}

// int_0^1 exp(x u) du
double exp_linear_mean(double x) {
  if (std::abs(x) < 1e-3) return 1.0 + x / 2.0 + x * x / 6.0 + x * x * x / 24.0;
  return std::expm1(x) / x;
}

// int_0^1 exp(x u) u (u - 1) du
double exp_quadratic_weight(double x) {
  if (std::abs(x) < 0.1) {
    double term = 1.0, sum = 0.0;
    for (int k = 0; k < 8; ++k) {
      if (k > 0) term *= x / k;
      sum -= term / ((k + 2.0) * (k + 3.0));
    }
    return sum;
  }
  return -(std::exp(x) + 1.0) / (x * x) + 2.0 * std::expm1(x) / (x * x * x);
}

// Fourth-order central differences inside, second order near the ends.
Eigen::ArrayXd derivative4(const Eigen::ArrayXd& v, double dt) {
  Eigen::ArrayXd d = finite_difference(v, dt);
  for (Eigen::Index i = 2; i + 2 < v.size(); ++i)
    d[i] = (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * dt);
  return d;
}

struct Profile {
  Eigen::Index w = 0;
  Eigen::ArrayXd m;  // window means, size ng
  Eigen::ArrayXd g;  // 2 (F - M), size ng
  Eigen::ArrayXd M;  // cumulative integral of m
};

Profile profile(const OrbitSeries& s, double T) {
  Profile p;
  p.w = window_steps(s, T);
  const Eigen::Index n = s.size();
  const Eigen::Index ng = n - p.w;
  if (ng < 3) throw std::invalid_argument("uniformize: series shorter than the window");
  const Eigen::ArrayXd F = cumulative_trapezoid(s.r_u, s.dt);
  p.m = (F.segment(p.w, ng) - F.head(ng)) / (static_cast<double>(p.w) * s.dt);
  p.M = cumulative_trapezoid(p.m, s.dt);
  p.g = 2.0 * (F.head(ng) - p.M);
  return p;
}

}  // namespace

Eigen::ArrayXd moving_average_rate(const OrbitSeries& series, double T) {
  const Eigen::Index w = window_steps(series, T);
  if (series.size() <= w) throw std::invalid_argument("moving_average_rate: insufficient tail");
  const Eigen::Index ng = series.size() - w;
  Eigen::ArrayXd out(ng);
  for (Eigen::Index i = 0; i < ng; ++i) out[i] = trapezoid_mean(series.r_u, i, i + w);
  return out;
}

EpsilonChoice default_epsilon(const OrbitSeries& series, double T) {
  EpsilonChoice c;
  c.delta_hat = series.r_u.maxCoeff() - series.r_u.minCoeff();
  c.eps = std::exp(-T * c.delta_hat);
  if (c.eps < kEpsilonFloor) {
    c.eps = kEpsilonFloor;
    c.floored = true;
  }
  return c;
}

AveragedNorm averaged_norm_sq(const OrbitSeries& s, const UniformizeConfig& cfg) {
  if (!(cfg.eps > 0.0)) throw std::invalid_argument("uniformize: eps_T must be > 0");
  const Profile p = profile(s, cfg.T);
  const Eigen::Index ng = p.g.size();
  const double dt = s.dt, eps = cfg.eps;

  // Keep a central band of at least a fifth of the usable samples.
  const Eigen::Index h_cap = (ng - 1 - std::max<Eigen::Index>(2, (ng - 1) / 5)) / 2;
  if (!(cfg.horizon_factor >= 5.0))
    throw std::invalid_argument("uniformize: horizon_factor must be >= 5");
  double L = cfg.horizon.value_or(cfg.horizon_factor * std::max(cfg.T, 1.0 / eps));
  auto H = static_cast<Eigen::Index>(std::llround(L / dt));
  if (!cfg.horizon) H = std::min(H, h_cap);
  if (H < 1 || H > h_cap)
    throw std::invalid_argument("uniformize: horizon " + std::to_string(L) +
                                " does not fit the series (need the series to cover about "
                                "2*horizon + T)");
  if (H * dt < 5.0 * cfg.T - 1e-9 && cfg.horizon)
    throw std::invalid_argument("uniformize: horizon must be >= 5 T");
  L = static_cast<double>(H) * dt;

  // Between grid points F and M are integrals of linear interpolants, so g
  // is quadratic on each cell with curvature kappa. Cells are integrated
  // exactly to first order in kappa dt^2.
  Eigen::ArrayXd kappa(ng - 1);
  for (Eigen::Index i = 0; i + 1 < ng; ++i)
    kappa[i] = 2.0 * ((s.r_u[i + 1] - s.r_u[i]) - (p.m[i + 1] - p.m[i])) / dt;
  auto cell = [dt](double x, double k) {
    return dt * exp_linear_mean(x) + 0.5 * k * dt * dt * dt * exp_quadratic_weight(x);
  };
  Eigen::ArrayXd Q(ng), P(ng);
  Q[ng - 1] = 0.0;
  for (Eigen::Index i = ng - 2; i >= 0; --i) {
    const double x = p.g[i + 1] - p.g[i] - 2.0 * eps * dt;
    Q[i] = cell(x, kappa[i]) + std::exp(x) * Q[i + 1];
  }
  P[0] = 0.0;
  for (Eigen::Index i = 1; i < ng; ++i) {
    const double x = p.g[i - 1] - p.g[i] - 2.0 * eps * dt;
    P[i] = cell(x, kappa[i - 1]) + std::exp(x) * P[i - 1];
  }

  const Eigen::Index first = H, count = ng - 2 * H;
  const Eigen::ArrayXd idx_t = Eigen::ArrayXd::LinSpaced(ng, 0.0, static_cast<double>(ng - 1)) * dt;
  const Eigen::ArrayXd hf = p.g - 2.0 * eps * idx_t;  // forward exponent
  const Eigen::ArrayXd hb = p.g + 2.0 * eps * idx_t;  // backward exponent
  const Eigen::Index D = std::max<Eigen::Index>(1, H / 10);
  // Tail beyond the horizon: mass of the last decade continued geometrically
  // at the nominal decay rate 2 eps.
  const double rho = std::exp(-2.0 * eps * static_cast<double>(D) * dt);
  const double continuation = rho / (1.0 - rho);

  AveragedNorm out;
  out.first = first;
  out.horizon = L;
  out.norm_sq.resize(count);
  out.A.resize(count);
  out.B.resize(count);
  out.window_mean = p.m.segment(first, count);
  double worst = 0.0;
  for (Eigen::Index k = 0; k < count; ++k) {
    const Eigen::Index i = first + k;
    const double ql = Q[i] - std::exp(hf[i + H] - hf[i]) * Q[i + H];
    const double pl = P[i] - std::exp(hb[i - H] - hb[i]) * P[i - H];
    const double n = pl + ql;
    out.norm_sq[k] = n;
    out.A[k] = (ql - pl) / n;
    out.B[k] = 1.0 / n;
    const Eigen::Index a = i + H - D, b = i - H + D;
    const double last_f =
        std::exp(hf[a] - hf[i]) * (Q[a] - std::exp(hf[i + H] - hf[a]) * Q[i + H]);
    const double last_b =
        std::exp(hb[b] - hb[i]) * (P[b] - std::exp(hb[i - H] - hb[b]) * P[i - H]);
    worst = std::max(worst, continuation * (last_f + last_b) / n);
  }
  out.truncation_error_bound = worst;
  if (!(worst <= 0.1))
    throw NumericError("uniformize: truncation bound " + std::to_string(worst) +
                       " exceeds 10% of the norm; use a larger horizon or a larger eps_T");
  return out;
}

UniformizedRate uniformized_rate(const OrbitSeries& s, const UniformizeConfig& cfg,
                                 double tolerance) {
  const AveragedNorm an = averaged_norm_sq(s, cfg);
  const Eigen::Index w = window_steps(s, cfg.T);
  const Eigen::Index count = an.A.size();
  const double eps = cfg.eps;

  UniformizedRate u;
  u.first = an.first;
  u.eps = eps;
  u.T = cfg.T;
  u.truncation_error_bound = an.truncation_error_bound;
  u.base_t.resize(count);
  u.r_u = s.r_u.segment(an.first, count);
  u.A_T = an.A;
  u.B_T = an.B;
  u.r_uT = eps * an.A + an.window_mean;
  const Eigen::ArrayXd ahead = s.r_u.segment(an.first + w, count);
  u.x_r_uT = 2.0 * eps * eps + (ahead - u.r_u) / cfg.T - 2.0 * eps * an.B -
             2.0 * eps * eps * an.A.square();
  for (Eigen::Index k = 0; k < count; ++k) u.base_t[k] = s.time(an.first + k);

  const Eigen::ArrayXd log_n = an.norm_sq.log();
  u.r_uT_direct = u.r_u + 0.5 * derivative4(log_n, s.dt);
  u.x_r_uT_direct = derivative4(u.r_uT_direct, s.dt);

  // Both stencils together reach four samples either side.
  for (Eigen::Index k = 4; k + 4 < count; ++k) {
    const Eigen::Index i = an.first + k;
    if (s.jump_between(i - 4, i + 4) || s.jump_between(i + w - 4, i + w + 4)) continue;
    u.smooth.push_back(k);
    u.max_rate_disagreement =
        std::max(u.max_rate_disagreement, std::abs(u.r_uT[k] - u.r_uT_direct[k]));
    u.max_derivative_disagreement =
        std::max(u.max_derivative_disagreement, std::abs(u.x_r_uT[k] - u.x_r_uT_direct[k]));
  }
  const double worst = std::max(u.max_rate_disagreement, u.max_derivative_disagreement);
  if (worst > tolerance)
    throw NumericError("uniformize: formula and direct modes disagree by " +
                       std::to_string(worst));
  return u;
}

Eigen::ArrayXd x_r_uT_half_window(const OrbitSeries& s, const UniformizedRate& u) {
  const Eigen::Index w = window_steps(s, u.T);
  const Eigen::Index count = u.r_u.size();
  const Eigen::ArrayXd ahead = s.r_u.segment(u.first + w, count);
  return 2.0 * u.eps * u.eps + (ahead - u.r_u) / (2.0 * u.T) - 2.0 * u.eps * u.B_T -
         2.0 * u.eps * u.eps * u.A_T.square();
}

DominationReport domination_check(const OrbitSeries& s, const UniformizeConfig& cfg) {
  const Profile p = profile(s, cfg.T);
  const double delta_hat = s.r_u.maxCoeff() - s.r_u.minCoeff();
  const Eigen::ArrayXd G = 0.5 * p.g;
  DominationReport r;
  r.bound = 0.5 * cfg.T * delta_hat;
  r.max_bounded_term = G.maxCoeff() - G.minCoeff();
  r.tolerance = 2.0 * s.dt * delta_hat + 1e-9;
  r.holds = r.max_bounded_term <= r.bound + r.tolerance;
  r.tightness = r.bound > 0.0 ? r.max_bounded_term / r.bound : 0.0;
  return r;
}

double cocycle_residual(const OrbitSeries& s, const UniformizeConfig& cfg, int trials,
                        std::mt19937_64& rng) {
  const Profile p = profile(s, cfg.T);
  const Eigen::Index ng = p.m.size();
  auto ln_r = [&](Eigen::Index a, Eigen::Index b) {  // ln R over grid [a, b]
    return -cfg.eps * static_cast<double>(b - a) * s.dt + (p.M[b] - p.M[a]);
  };
  double worst = 0.0;
  for (int k = 0; k < trials; ++k) {
    const Eigen::Index t0 = static_cast<Eigen::Index>(uniform_index(rng, ng / 2));
    const Eigen::Index a = static_cast<Eigen::Index>(uniform_index(rng, (ng - t0) / 2));
    const Eigen::Index b = static_cast<Eigen::Index>(uniform_index(rng, (ng - t0 - a) - 1));
    const double whole = ln_r(t0, t0 + a + b);
    const double first = ln_r(t0, t0 + a);
    const double second =
        -cfg.eps * static_cast<double>(b) * s.dt + (b > 0 ? trapezoid(p.m, s.dt, t0 + a, t0 + a + b) : 0.0);
    worst = std::max(worst, std::abs(whole - first - second));
  }
  return worst;
}

}  // namespace anosov
