#pragma once

#include "anosov/series.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace anosov {

struct BirkhoffEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  double T = 0.0;
  int batches = 0;
};

struct EntropyReport {
  double h_bar = 0.0;
  double std_error = 0.0;
  std::vector<double> per_orbit_means;
  std::vector<double> per_orbit_stderr;
  std::vector<std::uint64_t> seeds;
  bool inconsistent = false;
};

constexpr int kBatches = 10;

// Trapezoid mean of values[i0..i1] on a uniform grid (grid-step free, so a
// constant input returns that constant exactly).
double trapezoid_mean(const Eigen::Ref<const Eigen::ArrayXd>& values, Eigen::Index i0,
                      Eigen::Index i1);

// Batch-means estimate of the time average of one column.
BirkhoffEstimate birkhoff(const Eigen::Ref<const Eigen::ArrayXd>& values, double dt);
BirkhoffEstimate birkhoff(const OrbitSeries& series, const std::string& key = "r_u");

// (1/T) * stretch over the whole series; identical to birkhoff(r_u).mean.
double lyapunov_exponent(const OrbitSeries& series);

template <FlowBackend B>
double lyapunov_exponent(const B& backend, const typename B::Point& p0, double T, double dt) {
  if (T < 100.0) throw std::invalid_argument("lyapunov_exponent: T must be >= 100");
  const auto n = static_cast<Eigen::Index>(std::llround(T / dt)) + 1;
  return lyapunov_exponent(sample_orbit(backend, p0, dt, n));
}

// Pooled estimate over orbits (sorted by seed); flags pairwise disagreement
// beyond 5 sigma.
EntropyReport pesin_entropy(const std::vector<OrbitSeries>& ensemble);

// Running mean and batch-means stderr of r_u at every `stride` samples.
struct RunningAverage {
  Eigen::ArrayXd t;
  Eigen::ArrayXd mean;
  Eigen::ArrayXd std_error;
};
RunningAverage running_average(const OrbitSeries& series, Eigen::Index stride);

// Samples one orbit per seed from Liouville-distributed starting points.
// Orbits run on up to `threads` workers; output order follows `seeds`.
template <class B>
std::vector<OrbitSeries> sample_ensemble(const B& backend, const std::vector<std::uint64_t>& seeds,
                                         double dt, Eigen::Index n, int threads = 1) {
  std::vector<OrbitSeries> out(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  auto run = [&](std::size_t i) {
    try {
      std::mt19937_64 rng(seeds[i]);
      const auto p0 = backend.random_point(rng);
      out[i] = sample_orbit(backend, p0, dt, n);
      out[i].seed = seeds[i];
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t workers =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1, seeds.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i) run(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < seeds.size(); i += workers) run(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace anosov
