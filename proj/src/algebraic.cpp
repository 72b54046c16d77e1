#include "anosov/algebraic.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace anosov {

namespace {
constexpr Complex I{0.0, 1.0};
constexpr double pi = std::numbers::pi;

// Convert a disk-model SU(1,1) matrix to SL(2,R) via the Cayley transform.
Group from_su11(const Eigen::Matrix2cd& u) {
  Eigen::Matrix2cd c;
  c << I, I, -1.0, 1.0;
  const Eigen::Matrix2cd h = c * u * c.inverse();
  if (h.imag().cwiseAbs().maxCoeff() > 1e-12)
    throw NumericError("octagon generator has non-real half-plane form");
  Group g(h.real());
  g.renormalize();
  return g;
}

std::array<Group, 8> build_generators() {
  const double d = Octagon::side_distance();
  Eigen::Matrix2cd t;
  t << std::cosh(d), std::sinh(d), std::sinh(d), std::cosh(d);
  std::array<Group, 8> gens;
  for (int k = 0; k < 8; ++k) {
    const double phi = k * pi / 4.0;
    Eigen::Matrix2cd r = Eigen::Matrix2cd::Zero();
    r(0, 0) = std::exp(I * (phi / 2.0));
    r(1, 1) = std::exp(-I * (phi / 2.0));
    gens[k] = from_su11(r * t * r.adjoint());
  }
  return gens;
}

// Translation-invariant canonical sign: largest-magnitude entry positive.
Eigen::Matrix2d canonical_sign(const Eigen::Matrix2d& m) {
  Eigen::Index r, c;
  m.cwiseAbs().maxCoeff(&r, &c);
  return m(r, c) < 0 ? Eigen::Matrix2d(-m) : m;
}
}  // namespace

Complex half_plane_to_disk(Complex z) { return (z - I) / (z + I); }
Complex disk_to_half_plane(Complex w) { return I * (1.0 + w) / (1.0 - w); }

double disk_distance_to_origin(Complex w) { return 2.0 * std::atanh(std::abs(w)); }

double disk_distance(Complex a, Complex b) {
  const double num = std::abs(a - b);
  const double den = std::abs(1.0 - std::conj(b) * a);
  return 2.0 * std::atanh(num / den);
}

Complex mobius(const Group& g, Complex z) {
  return (g.m(0, 0) * z + g.m(0, 1)) / (g.m(1, 0) * z + g.m(1, 1));
}

Complex mobius_derivative(const Group& g, Complex z) {
  const Complex den = g.m(1, 0) * z + g.m(1, 1);
  return 1.0 / (den * den);
}

Complex disk_action(const Group& g, Complex w) {
  return half_plane_to_disk(mobius(g, disk_to_half_plane(w)));
}

Complex disk_action_derivative(const Group& g, Complex w) {
  const Complex z = disk_to_half_plane(w);
  const Complex gz = mobius(g, z);
  const Complex dzdw = 2.0 * I / ((1.0 - w) * (1.0 - w));
  const Complex dwdz = 2.0 * I / ((gz + I) * (gz + I));
  return dwdz * mobius_derivative(g, z) * dzdw;
}

double Octagon::side_distance() { return std::acosh(1.0 + std::sqrt(2.0)); }
double Octagon::circumradius() { return std::acosh(3.0 + 2.0 * std::sqrt(2.0)); }
double Octagon::disk_circumradius() { return std::tanh(circumradius() / 2.0); }

const std::array<Group, 8>& octagon_generators() {
  static const std::array<Group, 8> gens = build_generators();
  return gens;
}

const std::vector<int>& octagon_relation() {
  static const std::vector<int> rel{0, 3, 6, 1, 4, 7, 2, 5};
  return rel;
}

Group word_product(const std::vector<int>& word) {
  const auto& gens = octagon_generators();
  Group g;
  for (int k : word) {
    if (k < 0 || k > 7) throw std::invalid_argument("generator index must be in 0..7");
    g = g * gens[k];
  }
  return g;
}

bool in_octagon(Complex w, double tol) {
  if (std::abs(w) >= 1.0) return false;
  const double d0 = disk_distance_to_origin(w);
  for (const Group& g : octagon_generators()) {
    if (disk_distance_to_origin(disk_action(g, w)) < d0 - tol) return false;
  }
  return true;
}

AlgebraicPoint reduce(const Group& g_in, int max_iter) {
  const auto& gens = octagon_generators();
  Group g = g_in;
  g.renormalize();
  for (int it = 0; it <= max_iter; ++it) {
    const Complex w = half_plane_to_disk(mobius(g, I));
    const double d0 = disk_distance_to_origin(w);
    int best = -1;
    double best_d = d0 - 1e-12;
    for (int k = 0; k < 8; ++k) {
      const double dk = disk_distance_to_origin(disk_action(gens[k], w));
      if (dk < best_d) {
        best_d = dk;
        best = k;
      }
    }
    if (best < 0) return AlgebraicPoint{Group(canonical_sign(g.m))};
    g = gens[best] * g;
  }
  std::ostringstream msg;
  msg << "reduce: no convergence after " << max_iter << " folds (disk point "
      << half_plane_to_disk(mobius(g_in, I)) << ")";
  throw NumericError(msg.str());
}

double point_distance(const AlgebraicPoint& a, const AlgebraicPoint& b) {
  return std::min((a.g.m - b.g.m).norm(), (a.g.m + b.g.m).norm());
}

DiskState to_disk(const Group& g) {
  const Complex z = mobius(g, I);
  const Complex v_h = mobius_derivative(g, I) * I;
  const Complex v_d = v_h * 2.0 * I / ((z + I) * (z + I));
  return DiskState{half_plane_to_disk(z), std::arg(v_d)};
}

Group from_disk(Complex w, double psi) {
  const Complex z = disk_to_half_plane(w);
  const double x = z.real(), y = z.imag();
  const double sy = std::sqrt(y);
  Eigen::Matrix2d g0;
  g0 << sy, x / sy, 0.0, 1.0 / sy;
  const double psi_h = psi - std::arg(2.0 * I / ((z + I) * (z + I)));
  const double s = (psi_h - pi / 2.0) / 2.0;
  Eigen::Matrix2d k;
  k << std::cos(s), std::sin(s), -std::sin(s), std::cos(s);
  Group g(g0 * k);
  g.renormalize();
  return g;
}

DiskState sample_liouville_disk(std::mt19937_64& rng) {
  const double rmax = Octagon::disk_circumradius();
  const double floor = (1.0 - rmax * rmax) * (1.0 - rmax * rmax);
  for (;;) {
    const double x = (2.0 * uniform01(rng) - 1.0) * rmax;
    const double y = (2.0 * uniform01(rng) - 1.0) * rmax;
    const double accept = uniform01(rng);
    const double r2 = x * x + y * y;
    if (r2 >= rmax * rmax) continue;
    if (accept * (1.0 - r2) * (1.0 - r2) > floor) continue;
    const Complex w{x, y};
    if (!in_octagon(w, 0.0)) continue;
    return DiskState{w, 2.0 * pi * uniform01(rng)};
  }
}

AlgebraicBackend::AlgebraicBackend(double lambda0) : lambda0_(lambda0) {
  if (!(lambda0 > 0.0)) throw std::invalid_argument("algebraic backend: lambda0 must be > 0");
}

AlgebraicPoint AlgebraicBackend::advance(const Point& p, double t) const {
  // Chunk long times so every fold sequence stays short.
  const double chunk = 1.0 / lambda0_;
  Group g = p.g;
  double left = t;
  while (std::abs(left) > chunk) {
    const double s = left > 0 ? chunk : -chunk;
    g = reduce(g * flow_element(s, lambda0_)).g;
    left -= s;
  }
  return reduce(g * flow_element(left, lambda0_));
}

RateSample AlgebraicBackend::rates(const Point& p) const {
  RateSample s;
  s.r_u = lambda0_;
  s.r_s = -lambda0_;
  s.aux["K"] = -lambda0_ * lambda0_;
  const DiskState d = to_disk(p.g);
  s.aux["w_re"] = d.w.real();
  s.aux["w_im"] = d.w.imag();
  s.aux["psi"] = d.psi;
  return s;
}

std::optional<double> AlgebraicBackend::volume() const {
  return Octagon::area() / (lambda0_ * lambda0_) * 2.0 * pi;
}

AlgebraicPoint AlgebraicBackend::random_point(std::mt19937_64& rng) const {
  const DiskState d = sample_liouville_disk(rng);
  return reduce(from_disk(d.w, d.psi));
}

SurfaceTangent AlgebraicBackend::tangent(Complex w, double psi) const {
  return SurfaceTangent{w, lambda0_ * (1.0 - std::norm(w)) / 2.0 * std::polar(1.0, psi)};
}

SurfaceTangent AlgebraicBackend::tangent(const Point& p) const {
  const DiskState d = to_disk(p.g);
  return tangent(d.w, d.psi);
}

ClosedGeodesic closed_geodesic_data(const std::vector<int>& word, double lambda0) {
  if (!(lambda0 > 0.0)) throw std::invalid_argument("closed_geodesic_data: lambda0 must be > 0");
  const Group m = word_product(word);
  const double tr = std::abs(m.trace());
  if (!(tr > 2.0 + 1e-12))
    throw std::invalid_argument("closed_geodesic_data: word is not hyperbolic (|tr| = " +
                                std::to_string(tr) + ")");
  Eigen::EigenSolver<Eigen::Matrix2d> es(m.m);
  const Eigen::Vector2cd ev = es.eigenvalues();
  const Eigen::Matrix2cd vecs = es.eigenvectors();
  const int big = std::abs(ev[0]) > std::abs(ev[1]) ? 0 : 1;
  Eigen::Matrix2d g;
  g.col(0) = vecs.col(big).real();
  g.col(1) = vecs.col(1 - big).real();
  if (g.determinant() < 0) g.col(1) = -g.col(1);
  Group axis(g);
  axis.renormalize();

  ClosedGeodesic out;
  out.word = word;
  out.T = 2.0 / lambda0 * std::acosh(tr / 2.0);
  out.lambda_u = std::exp(lambda0 * out.T);
  out.axis_point = reduce(axis);
  return out;
}

FrameCheck algebraic_frame_check(double lambda0) {
  const double l = lambda0;
  Eigen::Matrix2d h0, p, q;
  h0 << 1, 0, 0, -1;
  p << 0, 1, 1, 0;
  q << 0, 1, -1, 0;
  const Eigen::Matrix2d x = (l / 2.0) * h0;
  const Eigen::Matrix2d y = std::sqrt(l / 2.0) * q;
  const Eigen::Matrix2d z = std::sqrt(l / 2.0) * p;
  auto br = [](const Eigen::Matrix2d& a, const Eigen::Matrix2d& b) -> Eigen::Matrix2d {
    return a * b - b * a;
  };
  FrameCheck fc{};
  fc.bracket_residual = std::max({(br(y, z) - 2.0 * x).norm(), (br(z, x) + l * y).norm(),
                                      (br(x, y) - l * z).norm()});
  const Eigen::Matrix2d es = y + z;
  const Eigen::Matrix2d eu = z - y;
  fc.stable_rate = (br(x, es).array() * es.array()).sum() / es.squaredNorm();
  fc.unstable_rate = (br(x, eu).array() * eu.array()).sum() / eu.squaredNorm();
  const Group a = flow_element(-1.0, l);
  const Eigen::Matrix2d pushed = a.m * es * a.inverse().m;
  fc.pushforward_stable_rate = std::log(pushed.norm() / es.norm());
  return fc;
}

}  // namespace anosov
