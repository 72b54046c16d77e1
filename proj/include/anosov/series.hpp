#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <concepts>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace anosov {

// Raised when an integrator or a rate computation produces non-finite or
// otherwise unusable numbers.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RateSample {
  double t = 0.0;
  double r_u = 0.0;
  double r_s = 0.0;
  std::map<std::string, double> aux;
};

// Uniformly sampled orbit. Rates are stored column-wise; sample(i) assembles
// a RateSample on demand. Time of sample i is t0 + i*dt.
class OrbitSeries {
 public:
  OrbitSeries() = default;
  OrbitSeries(double t0, double dt, Eigen::Index n);

  Eigen::Index size() const { return r_u.size(); }
  double time(Eigen::Index i) const { return t0 + static_cast<double>(i) * dt; }
  double duration() const { return static_cast<double>(size() - 1) * dt; }
  RateSample sample(Eigen::Index i) const;

  bool has_aux(const std::string& key) const { return aux.count(key) > 0; }
  const Eigen::ArrayXd& column(const std::string& key) const;

  // True if some recorded rate discontinuity lies in [i0, i1).
  bool jump_between(Eigen::Index i0, Eigen::Index i1) const;

  void check_finite() const;

  double t0 = 0.0;
  double dt = 0.0;
  Eigen::ArrayXd r_u;
  Eigen::ArrayXd r_s;
  std::map<std::string, Eigen::ArrayXd> aux;
  // Index i in jumps means r_u is discontinuous between samples i and i+1.
  std::vector<Eigen::Index> jumps;
  std::string origin;
  std::uint64_t seed = 0;
};

// Compensated accumulator.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - c_;
    const double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

// Trapezoid integral of values[i0..i1] on a uniform grid of step dt.
double trapezoid(const Eigen::Ref<const Eigen::ArrayXd>& values, double dt, Eigen::Index i0,
                 Eigen::Index i1);

// Cumulative trapezoid: out[i] = integral from sample 0 to sample i.
Eigen::ArrayXd cumulative_trapezoid(const Eigen::Ref<const Eigen::ArrayXd>& values, double dt);

// Integral of r_u over [t0, t1]. Endpoints must lie on the grid (within
// 1e-9 dt) and inside the series.
double stretch_integral(const OrbitSeries& series, double t0, double t1);

// Second-order finite differences: centered inside, one-sided (three-point)
// at the ends.
Eigen::ArrayXd flow_derivative(const OrbitSeries& series,
                               const Eigen::Ref<const Eigen::ArrayXd>& field_values);
Eigen::ArrayXd finite_difference(const Eigen::Ref<const Eigen::ArrayXd>& values, double dt);

template <class B>
concept FlowBackend = requires(const B& b, const typename B::Point& p, double t) {
  typename B::Point;
  { b.advance(p, t) } -> std::same_as<typename B::Point>;
  { b.rates(p) } -> std::same_as<RateSample>;
  { B::is_contact } -> std::convertible_to<bool>;
  { b.volume() } -> std::same_as<std::optional<double>>;
  { b.name() } -> std::convertible_to<std::string>;
};

template <class B>
concept HasOrbitSampler = requires(const B& b, const typename B::Point& p, double dt,
                                   Eigen::Index n) {
  { b.sample_orbit(p, dt, n) } -> std::same_as<OrbitSeries>;
};

// Generic sampler: steps sample-to-sample and queries rates. Backends with
// history-dependent rates supply their own sample_orbit.
template <FlowBackend B>
OrbitSeries sample_orbit(const B& backend, const typename B::Point& p0, double dt,
                         Eigen::Index n) {
  if (!(dt > 0.0) || n < 1) throw std::invalid_argument("sample_orbit: need dt > 0 and n >= 1");
  if constexpr (HasOrbitSampler<B>) {
    return backend.sample_orbit(p0, dt, n);
  } else {
    OrbitSeries out(0.0, dt, n);
    out.origin = backend.name();
    typename B::Point p = p0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i > 0) p = backend.advance(p, dt);
      const RateSample s = backend.rates(p);
      if (!std::isfinite(s.r_u) || !std::isfinite(s.r_s))
        throw NumericError("sample_orbit: non-finite rate at t = " + std::to_string(out.time(i)));
      out.r_u[i] = s.r_u;
      out.r_s[i] = s.r_s;
      for (const auto& [k, v] : s.aux) {
        auto it = out.aux.find(k);
        if (it == out.aux.end()) it = out.aux.emplace(k, Eigen::ArrayXd::Zero(n)).first;
        it->second[i] = v;
      }
    }
    return out;
  }
}

}  // namespace anosov
