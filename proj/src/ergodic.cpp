#include "anosov/ergodic.hpp"

#include <cmath>
#include <numeric>

namespace anosov {

double trapezoid_mean(const Eigen::Ref<const Eigen::ArrayXd>& v, Eigen::Index i0,
                      Eigen::Index i1) {
  if (i1 <= i0) throw std::invalid_argument("trapezoid_mean: empty range");
  KahanSum s;
  s.add(0.5 * v[i0]);
  for (Eigen::Index i = i0 + 1; i < i1; ++i) s.add(v[i]);
  s.add(0.5 * v[i1]);
  return s.value() / static_cast<double>(i1 - i0);
}

namespace {
double batch_stderr(const std::vector<double>& m) {
  const double b = static_cast<double>(m.size());
  KahanSum s;
  for (double x : m) s.add(x);
  const double mean = s.value() / b;
  KahanSum ss;
  for (double x : m) ss.add((x - mean) * (x - mean));
  return std::sqrt(ss.value() / (b - 1.0)) / std::sqrt(b);
}

Eigen::Index boundary(Eigen::Index intervals, int k) {
  return static_cast<Eigen::Index>(
      std::llround(static_cast<double>(k) * static_cast<double>(intervals) / kBatches));
}
}  // namespace

BirkhoffEstimate birkhoff(const Eigen::Ref<const Eigen::ArrayXd>& v, double dt) {
  const Eigen::Index intervals = v.size() - 1;
  if (intervals < kBatches)
    throw std::invalid_argument("birkhoff: series too short for " + std::to_string(kBatches) +
                                " batches");
  BirkhoffEstimate e;
  e.mean = trapezoid_mean(v, 0, intervals);
  e.T = static_cast<double>(intervals) * dt;
  e.batches = kBatches;
  std::vector<double> means;
  for (int k = 0; k < kBatches; ++k)
    means.push_back(trapezoid_mean(v, boundary(intervals, k), boundary(intervals, k + 1)));
  e.std_error = batch_stderr(means);
  return e;
}

BirkhoffEstimate birkhoff(const OrbitSeries& series, const std::string& key) {
  return birkhoff(series.column(key), series.dt);
}

double lyapunov_exponent(const OrbitSeries& series) {
  const double mean = birkhoff(series, "r_u").mean;
  const double T = series.duration();
  const double direct = stretch_integral(series, series.t0, series.t0 + T) / T;
  if (std::abs(direct - mean) > 1e-12 * std::max(1.0, std::abs(mean)))
    throw NumericError("lyapunov_exponent: stretch integral disagrees with Birkhoff mean");
  return mean;
}

EntropyReport pesin_entropy(const std::vector<OrbitSeries>& ensemble) {
  if (ensemble.size() < 4) throw std::invalid_argument("pesin_entropy: need at least 4 orbits");
  std::vector<std::size_t> order(ensemble.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return ensemble[a].seed < ensemble[b].seed; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (ensemble[order[i]].seed == ensemble[order[i - 1]].seed)
      throw std::invalid_argument("pesin_entropy: orbit seeds must be distinct");
  }
  EntropyReport r;
  KahanSum wsum, msum, vsum;
  for (std::size_t idx : order) {
    const OrbitSeries& s = ensemble[idx];
    const BirkhoffEstimate e = birkhoff(s, "r_u");
    r.per_orbit_means.push_back(e.mean);
    r.per_orbit_stderr.push_back(e.std_error);
    r.seeds.push_back(s.seed);
    wsum.add(e.T);
    msum.add(e.T * e.mean);
    vsum.add(e.T * e.T * e.std_error * e.std_error);
  }
  r.h_bar = msum.value() / wsum.value();
  r.std_error = std::sqrt(vsum.value()) / wsum.value();
  for (std::size_t i = 0; i < r.per_orbit_means.size(); ++i) {
    for (std::size_t j = i + 1; j < r.per_orbit_means.size(); ++j) {
      const double sig = std::hypot(r.per_orbit_stderr[i], r.per_orbit_stderr[j]);
      if (std::abs(r.per_orbit_means[i] - r.per_orbit_means[j]) > 5.0 * sig) r.inconsistent = true;
    }
  }
  return r;
}

RunningAverage running_average(const OrbitSeries& series, Eigen::Index stride) {
  const Eigen::ArrayXd c = cumulative_trapezoid(series.r_u, 1.0);
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 1; i < series.size(); i += stride) rows.push_back(i);
  if (rows.empty() || rows.back() != series.size() - 1) rows.push_back(series.size() - 1);
  RunningAverage out;
  const auto m = static_cast<Eigen::Index>(rows.size());
  out.t.resize(m);
  out.mean.resize(m);
  out.std_error.resize(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index i = rows[static_cast<std::size_t>(r)];
    out.t[r] = series.time(i);
    out.mean[r] = c[i] / static_cast<double>(i);
    if (i < kBatches) {
      out.std_error[r] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    std::vector<double> means;
    for (int k = 0; k < kBatches; ++k) {
      const Eigen::Index a = boundary(i, k), b = boundary(i, k + 1);
      means.push_back((c[b] - c[a]) / static_cast<double>(b - a));
    }
    out.std_error[r] = batch_stderr(means);
  }
  return out;
}

}  // namespace anosov
