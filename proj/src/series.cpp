#include "anosov/series.hpp"

#include <algorithm>
#include <cmath>

namespace anosov {

OrbitSeries::OrbitSeries(double t0_, double dt_, Eigen::Index n)
    : t0(t0_), dt(dt_), r_u(Eigen::ArrayXd::Zero(n)), r_s(Eigen::ArrayXd::Zero(n)) {}

RateSample OrbitSeries::sample(Eigen::Index i) const {
  RateSample s;
  s.t = time(i);
  s.r_u = r_u[i];
  s.r_s = r_s[i];
  for (const auto& [k, v] : aux) s.aux.emplace(k, v[i]);
  return s;
}

const Eigen::ArrayXd& OrbitSeries::column(const std::string& key) const {
  if (key == "r_u") return r_u;
  if (key == "r_s") return r_s;
  auto it = aux.find(key);
  if (it == aux.end()) throw std::out_of_range("OrbitSeries: no column '" + key + "'");
  return it->second;
}

bool OrbitSeries::jump_between(Eigen::Index i0, Eigen::Index i1) const {
  auto it = std::lower_bound(jumps.begin(), jumps.end(), i0);
  return it != jumps.end() && *it < i1;
}

void OrbitSeries::check_finite() const {
  for (Eigen::Index i = 0; i < size(); ++i) {
    if (!std::isfinite(r_u[i]) || !std::isfinite(r_s[i]))
      throw NumericError("non-finite rate at t = " + std::to_string(time(i)));
  }
}

double trapezoid(const Eigen::Ref<const Eigen::ArrayXd>& values, double dt, Eigen::Index i0,
                 Eigen::Index i1) {
  if (i0 == i1) return 0.0;
  if (i0 > i1) return -trapezoid(values, dt, i1, i0);
  KahanSum s;
  s.add(0.5 * values[i0]);
  for (Eigen::Index i = i0 + 1; i < i1; ++i) s.add(values[i]);
  s.add(0.5 * values[i1]);
  return dt * s.value();
}

Eigen::ArrayXd cumulative_trapezoid(const Eigen::Ref<const Eigen::ArrayXd>& values, double dt) {
  const Eigen::Index n = values.size();
  Eigen::ArrayXd out(n);
  if (n == 0) return out;
  KahanSum s;
  out[0] = 0.0;
  for (Eigen::Index i = 1; i < n; ++i) {
    s.add(0.5 * dt * (values[i - 1] + values[i]));
    out[i] = s.value();
  }
  return out;
}

namespace {
Eigen::Index grid_index(const OrbitSeries& s, double t) {
  const double x = (t - s.t0) / s.dt;
  const double r = std::round(x);
  if (std::abs(x - r) > 1e-9 || r < 0.0 || r > static_cast<double>(s.size() - 1))
    throw std::out_of_range("stretch_integral: time " + std::to_string(t) +
                            " is off-grid or outside the series");
  return static_cast<Eigen::Index>(r);
}
}  // namespace

double stretch_integral(const OrbitSeries& series, double t0, double t1) {
  return trapezoid(series.r_u, series.dt, grid_index(series, t0), grid_index(series, t1));
}

Eigen::ArrayXd finite_difference(const Eigen::Ref<const Eigen::ArrayXd>& f, double dt) {
  const Eigen::Index n = f.size();
  if (n < 3) throw std::invalid_argument("flow_derivative: need at least 3 samples");
  Eigen::ArrayXd d(n);
  d.segment(1, n - 2) = (f.tail(n - 2) - f.head(n - 2)) / (2.0 * dt);
  d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dt);
  d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dt);
  return d;
}

Eigen::ArrayXd flow_derivative(const OrbitSeries& series,
                               const Eigen::Ref<const Eigen::ArrayXd>& field_values) {
  if (field_values.size() != series.size())
    throw std::invalid_argument("flow_derivative: field length " +
                                std::to_string(field_values.size()) + " != series length " +
                                std::to_string(series.size()));
  return finite_difference(field_values, series.dt);
}

}  // namespace anosov
