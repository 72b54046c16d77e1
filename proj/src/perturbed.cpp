#include "anosov/perturbed.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <sstream>

namespace anosov {

BumpProfile bump_profile(double rho, double width) {
  BumpProfile out;
  const double s = rho / width;
  if (s >= 1.0) return out;
  const double q = 1.0 - s * s;
  const double b = std::exp(1.0 - 1.0 / q);
  const double w2 = width * width;
  out.value = b;
  out.d_over_rho = -2.0 * b / (w2 * q * q);
  const double b2 = (-2.0 * b / (q * q) + 4.0 * s * s * b / (q * q * q * q) -
                     8.0 * s * s * b / (q * q * q)) /
                    w2;
  const double rho_coth = rho < 1e-4 ? 1.0 + rho * rho / 3.0 : rho / std::tanh(rho);
  out.laplacian = b2 + rho_coth * out.d_over_rho;
  return out;
}

BumpEval eval_bump(Complex w, Complex c, double width) {
  BumpEval out;
  const Complex den = 1.0 - std::conj(c) * w;
  const Complex zeta = (w - c) / den;
  const double r = std::abs(zeta);
  if (r >= 1.0) return out;
  const double rho = 2.0 * std::atanh(r);
  const BumpProfile b = bump_profile(rho, width);
  if (b.value == 0.0) return out;
  const double rho_over_r = r < 1e-8 ? 2.0 : rho / r;
  const Complex dT = (1.0 - std::norm(c)) / (den * den);
  out.value = b.value;
  out.grad = b.d_over_rho * rho_over_r * 2.0 * zeta / (1.0 - r * r) * std::conj(dT);
  out.laplacian = b.laplacian;
  return out;
}

ConformalFactor::ConformalFactor(const ConformalSpec& spec, std::optional<double> reach)
    : spec_(spec) {
  if (spec.centers.size() != spec.amplitudes.size())
    throw std::invalid_argument("conformal factor: centers and amplitudes differ in length");
  if (!(spec.width > 0.0)) throw std::invalid_argument("conformal factor: width must be > 0");
  for (const Complex& c : spec.centers) {
    if (!in_octagon(c, 1e-12))
      throw std::invalid_argument("conformal factor: bump centre outside the octagon");
  }
  cosh_width_ = std::cosh(spec.width);
  if (spec.centers.empty()) return;

  const double keep = reach.value_or(Octagon::circumradius() + 0.5) + spec.width;
  const double expand = keep + Octagon::circumradius();
  const auto& gens = octagon_generators();

  // Breadth-first enumeration of tiles g(octagon) by their centres g(0).
  std::vector<Group> tiles{Group()};
  std::vector<Complex> tile_centres{Complex(0.0, 0.0)};
  std::deque<std::size_t> queue{0};
  while (!queue.empty()) {
    const Group g = tiles[queue.front()];
    queue.pop_front();
    for (const Group& s : gens) {
      const Group h = g * s;
      const Complex hc = disk_action(h, Complex(0.0, 0.0));
      if (disk_distance_to_origin(hc) > expand) continue;
      const bool seen = std::any_of(tile_centres.begin(), tile_centres.end(),
                                    [&](Complex x) { return std::abs(x - hc) < 1e-9; });
      if (seen) continue;
      tiles.push_back(h);
      tile_centres.push_back(hc);
      queue.push_back(tiles.size() - 1);
    }
  }
  for (const Group& g : tiles) {
    for (std::size_t i = 0; i < spec.centers.size(); ++i) {
      const Complex gc = disk_action(g, spec.centers[i]);
      if (disk_distance_to_origin(gc) > keep) continue;
      centers_.push_back(gc);
      amps_.push_back(spec.amplitudes[i]);
      cosh_cut_factor_.push_back(1.0 - std::norm(gc));
    }
  }
}

ConformalFactor::Eval ConformalFactor::eval(Complex w) const {
  Eval e;
  const double one_m_w2 = 1.0 - std::norm(w);
  for (std::size_t i = 0; i < centers_.size(); ++i) {
    const double cosh_rho =
        1.0 + 2.0 * std::norm(w - centers_[i]) / (one_m_w2 * cosh_cut_factor_[i]);
    if (cosh_rho >= cosh_width_) continue;
    const BumpEval b = eval_bump(w, centers_[i], spec_.width);
    e.u += amps_[i] * b.value;
    e.grad += amps_[i] * b.grad;
    e.lap_hyp += amps_[i] * b.laplacian;
  }
  return e;
}

double ConformalFactor::curvature(Complex w) const {
  const Eval e = eval(w);
  return std::exp(-2.0 * e.u) * (-1.0 - e.lap_hyp);
}

double ConformalFactor::max_curvature_on_grid(int grid) const {
  const double rmax = Octagon::disk_circumradius();
  double kmax = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      const Complex w{-rmax + 2.0 * rmax * (i + 0.5) / grid,
                      -rmax + 2.0 * rmax * (j + 0.5) / grid};
      if (std::abs(w) >= rmax || !in_octagon(w, 0.0)) continue;
      kmax = std::max(kmax, curvature(w));
    }
  }
  return kmax;
}

namespace {

struct Deriv {
  Complex dw;
  double dpsi;
  double dr;
  double K;
};

Deriv rhs(const ConformalFactor& u, Complex w, double psi, double r) {
  const ConformalFactor::Eval e = u.eval(w);
  const double one_m_w2 = 1.0 - std::norm(w);
  const double emphi = std::exp(-e.u) * one_m_w2 / 2.0;
  const Complex gphi = e.grad + 2.0 * w / one_m_w2;
  const double c = std::cos(psi), s = std::sin(psi);
  Deriv d;
  d.K = std::exp(-2.0 * e.u) * (-1.0 - e.lap_hyp);
  d.dw = emphi * Complex(c, s);
  d.dpsi = emphi * (gphi.imag() * c - gphi.real() * s);
  d.dr = -r * r - d.K;
  return d;
}

PerturbedState rk4(const ConformalFactor& u, const PerturbedState& y, const Deriv& k1, double h) {
  auto shift = [](const PerturbedState& p, const Deriv& d, double a) {
    return PerturbedState{p.w + a * d.dw, p.psi + a * d.dpsi, p.riccati_r + a * d.dr};
  };
  const PerturbedState y2 = shift(y, k1, h / 2);
  const Deriv k2 = rhs(u, y2.w, y2.psi, y2.riccati_r);
  const PerturbedState y3 = shift(y, k2, h / 2);
  const Deriv k3 = rhs(u, y3.w, y3.psi, y3.riccati_r);
  const PerturbedState y4 = shift(y, k3, h);
  const Deriv k4 = rhs(u, y4.w, y4.psi, y4.riccati_r);
  PerturbedState out;
  out.w = y.w + h / 6.0 * (k1.dw + 2.0 * k2.dw + 2.0 * k3.dw + k4.dw);
  out.psi = y.psi + h / 6.0 * (k1.dpsi + 2.0 * k2.dpsi + 2.0 * k3.dpsi + k4.dpsi);
  out.riccati_r = y.riccati_r + h / 6.0 * (k1.dr + 2.0 * k2.dr + 2.0 * k3.dr + k4.dr);
  return out;
}

void check_state(const PerturbedState& p, double t) {
  if (!std::isfinite(p.w.real()) || !std::isfinite(p.w.imag()) || !std::isfinite(p.psi) ||
      std::abs(p.w) >= 1.0) {
    std::ostringstream msg;
    msg << "perturbed geodesic: non-finite or escaped state at t = " << t;
    throw NumericError(msg.str());
  }
}

double wrap_angle(double a) {
  const double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  return a < 0 ? a + two_pi : a;
}

}  // namespace

PerturbedBackend::PerturbedBackend(const PerturbedConfig& cfg) : cfg_(cfg) {
  for (double a : cfg.factor.amplitudes) {
    if (std::abs(a) > cfg.factor.max_amplitude)
      throw std::invalid_argument("perturbed backend: amplitude " + std::to_string(a) +
                                  " exceeds the cap " + std::to_string(cfg.factor.max_amplitude));
  }
  if (!(cfg.dt_max > 0.0)) throw std::invalid_argument("perturbed backend: dt_max must be > 0");
  factor_ = ConformalFactor(cfg.factor);
  if (factor_.trivial()) {
    max_k_ = -1.0;
  } else {
    max_k_ = factor_.max_curvature_on_grid(cfg.check_grid);
    if (!(max_k_ < 0.0))
      throw std::invalid_argument("perturbed backend: curvature reaches " +
                                  std::to_string(max_k_) + " >= 0 on the verification grid");
  }
}

PerturbedState PerturbedBackend::step(const Point& p, double h) const {
  return rk4(factor_, p, rhs(factor_, p.w, p.psi, p.riccati_r), h);
}

PerturbedState PerturbedBackend::fold(const Point& p) const {
  const auto& gens = octagon_generators();
  Point q = p;
  for (int it = 0; it < 64; ++it) {
    const double d0 = disk_distance_to_origin(q.w);
    int best = -1;
    double best_d = d0 - 1e-12;
    for (int k = 0; k < 8; ++k) {
      const double dk = disk_distance_to_origin(disk_action(gens[k], q.w));
      if (dk < best_d) {
        best_d = dk;
        best = k;
      }
    }
    if (best < 0) {
      q.psi = wrap_angle(q.psi);
      return q;
    }
    q.psi += std::arg(disk_action_derivative(gens[best], q.w));
    q.w = disk_action(gens[best], q.w);
  }
  throw NumericError("perturbed geodesic: folding did not converge");
}

PerturbedState PerturbedBackend::advance(const Point& p, double t) const {
  const auto steps = static_cast<Eigen::Index>(std::ceil(std::abs(t) / cfg_.dt_max - 1e-9));
  if (steps == 0) return fold(p);
  const double h = t / static_cast<double>(steps);
  Point y = fold(p);
  for (Eigen::Index i = 0; i < steps; ++i) {
    y = fold(step(y, h));
    check_state(y, static_cast<double>(i + 1) * h);
  }
  return y;
}

Eigen::ArrayXd PerturbedBackend::curvature_track(const Point& p, double h, Eigen::Index steps,
                                                 std::vector<Point>* states,
                                                 Eigen::Index stride) const {
  Eigen::ArrayXd K(2 * steps + 1);
  Point y = fold(p);
  Deriv f0 = rhs(factor_, y.w, y.psi, 0.0);
  K[0] = f0.K;
  if (states) states->push_back(y);
  for (Eigen::Index i = 0; i < steps; ++i) {
    Point y1 = rk4(factor_, y, f0, h);
    y1.riccati_r = 0.0;
    check_state(y1, static_cast<double>(i + 1) * h);
    const Deriv f1 = rhs(factor_, y1.w, y1.psi, 0.0);
    // Cubic Hermite midpoint of the step.
    const Complex wm = 0.5 * (y.w + y1.w) + h / 8.0 * (f0.dw - f1.dw);
    K[2 * i + 1] = factor_.curvature(wm);
    K[2 * i + 2] = f1.K;
    const Point folded = fold(y1);
    if (folded.w != y1.w) {
      y = folded;
      f0 = rhs(factor_, y.w, y.psi, 0.0);
    } else {
      y = folded;
      f0 = f1;
    }
    if (states && (i + 1) % stride == 0) states->push_back(y);
  }
  return K;
}

Eigen::ArrayXd riccati_solve(const Eigen::Ref<const Eigen::ArrayXd>& K, double h,
                             std::optional<double> r0) {
  if (K.size() < 1 || K.size() % 2 == 0)
    throw std::invalid_argument("riccati_solve: curvature track must have odd length");
  const Eigen::Index steps = (K.size() - 1) / 2;
  Eigen::ArrayXd r(steps + 1);
  if (!r0 && !(K[0] < 0.0))
    throw std::invalid_argument("riccati_solve: default start needs K < 0");
  double x = r0.value_or(std::sqrt(-K[0]));
  r[0] = x;
  for (Eigen::Index j = 0; j < steps; ++j) {
    const double k0 = K[2 * j], km = K[2 * j + 1], k1 = K[2 * j + 2];
    const double a1 = -x * x - k0;
    const double x2 = x + h / 2 * a1;
    const double a2 = -x2 * x2 - km;
    const double x3 = x + h / 2 * a2;
    const double a3 = -x3 * x3 - km;
    const double x4 = x + h * a3;
    const double a4 = -x4 * x4 - k1;
    x += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
    if (!std::isfinite(x) || x < -1e6) {
      std::ostringstream msg;
      msg << "riccati: solution escaped below the stable branch at step " << j + 1
          << " (t = " << static_cast<double>(j + 1) * h << ")";
      throw NumericError(msg.str());
    }
    r[j + 1] = x;
  }
  return r;
}

Eigen::ArrayXd riccati_rate(const Eigen::Ref<const Eigen::ArrayXd>& K, double h, double warmup,
                            std::optional<double> r0) {
  const double kmin_abs = (-K).minCoeff();
  if (!(kmin_abs > 0.0)) throw std::invalid_argument("riccati_rate: curvature must be negative");
  if (warmup < 10.0 / std::sqrt(kmin_abs) - 1e-12)
    throw std::invalid_argument("riccati_rate: warmup " + std::to_string(warmup) +
                                " shorter than 10/sqrt(min|K|) = " +
                                std::to_string(10.0 / std::sqrt(kmin_abs)));
  const auto skip = static_cast<Eigen::Index>(std::llround(warmup / h));
  const Eigen::ArrayXd r = riccati_solve(K, h, r0);
  if (skip >= r.size()) throw std::invalid_argument("riccati_rate: warmup exceeds the track");
  return r.tail(r.size() - skip);
}

OrbitSeries PerturbedBackend::sample_orbit(const Point& p0, double dt, Eigen::Index n) const {
  if (!(dt > 0.0) || n < 1) throw std::invalid_argument("sample_orbit: need dt > 0 and n >= 1");
  const auto sub = static_cast<Eigen::Index>(std::ceil(dt / cfg_.dt_max - 1e-9));
  const double h = dt / static_cast<double>(sub);
  const auto nb = static_cast<Eigen::Index>(std::ceil(cfg_.warmup / h - 1e-9));
  const Eigen::Index nf = (n - 1) * sub + nb;
  const double kmin_abs = -max_k_;
  if (cfg_.warmup < 10.0 / std::sqrt(kmin_abs) - 1e-12)
    throw std::invalid_argument("perturbed backend: warmup " + std::to_string(cfg_.warmup) +
                                " shorter than 10/sqrt(min|K|) = " +
                                std::to_string(10.0 / std::sqrt(kmin_abs)));

  const Eigen::ArrayXd kb = curvature_track(p0, -h, nb);
  std::vector<Point> states;
  states.reserve(static_cast<std::size_t>(n) + static_cast<std::size_t>(nb / sub) + 2);
  const Eigen::ArrayXd kf = curvature_track(p0, h, nf, &states, sub);

  Eigen::ArrayXd k(2 * (nb + nf) + 1);
  k.head(2 * nb + 1) = kb.reverse();
  k.tail(2 * nf) = kf.tail(2 * nf);

  const Eigen::ArrayXd fwd = riccati_solve(k, h);
  const Eigen::ArrayXd k_rev = k.reverse();
  const Eigen::ArrayXd bwd = riccati_solve(k_rev, h);
  const Eigen::Index last = nb + nf;

  OrbitSeries out(0.0, dt, n);
  out.origin = name();
  Eigen::ArrayXd kcol(n), wre(n), wim(n), psi(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index j = nb + i * sub;
    out.r_u[i] = fwd[j];
    out.r_s[i] = -bwd[last - j];
    kcol[i] = k[2 * j];
    const Point& s = states[static_cast<std::size_t>(i)];
    wre[i] = s.w.real();
    wim[i] = s.w.imag();
    psi[i] = s.psi;
    if (!(out.r_u[i] > out.r_s[i]))
      throw NumericError("perturbed backend: domination r_u > r_s fails at t = " +
                         std::to_string(out.time(i)));
  }
  out.aux["K"] = kcol;
  out.aux["w_re"] = wre;
  out.aux["w_im"] = wim;
  out.aux["psi"] = psi;
  out.check_finite();
  return out;
}

RateSample PerturbedBackend::rates(const Point& p) const {
  const OrbitSeries s = sample_orbit(p, cfg_.dt_max, 1);
  return s.sample(0);
}

PerturbedState PerturbedBackend::random_point(std::mt19937_64& rng) const {
  double umax = 0.0;
  for (double a : cfg_.factor.amplitudes) umax += std::abs(a);
  for (;;) {
    const DiskState d = sample_liouville_disk(rng);
    const double accept = uniform01(rng);
    if (accept <= std::exp(2.0 * (factor_.value(d.w) - umax)))
      return PerturbedState{d.w, d.psi, 1.0};
  }
}

SurfaceTangent PerturbedBackend::tangent(Complex w, double psi) const {
  const double emu = std::exp(-factor_.value(w));
  return SurfaceTangent{w, emu * (1.0 - std::norm(w)) / 2.0 * std::polar(1.0, psi)};
}

SurfaceTangent PerturbedBackend::tangent(const Point& p) const { return tangent(p.w, p.psi); }

}  // namespace anosov
