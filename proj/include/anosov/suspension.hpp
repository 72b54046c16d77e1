#pragma once

#include "anosov/series.hpp"

#include <Eigen/Dense>

#include <optional>
#include <random>
#include <string>

namespace anosov {

// F(x) = A x + eps (sin 2 pi x2, sin 2 pi x1) mod 1 with A = [[2,1],[1,1]].
class TorusMap {
 public:
  explicit TorusMap(double epsilon = 0.0);

  double epsilon() const { return eps_; }
  Eigen::Vector2d apply(const Eigen::Vector2d& x) const;
  Eigen::Vector2d inverse(const Eigen::Vector2d& x) const;
  Eigen::Matrix2d jacobian(const Eigen::Vector2d& x) const;

  static Eigen::Matrix2d A();
  static double unstable_eigenvalue();  // (3 + sqrt 5)/2
  static Eigen::Vector2d unstable_eigenvector();
  static Eigen::Vector2d stable_eigenvector();

  // Largest |stable|/|unstable| coordinate ratio (in the eigenbasis of A)
  // of the image of the unit cone along an orbit of the given length; the
  // cone is invariant when this stays below 1.
  double cone_ratio(const Eigen::Vector2d& x0, int steps) const;

 private:
  double eps_;
};

struct SuspensionPoint {
  Eigen::Vector2d x = Eigen::Vector2d::Zero();
  double s = 0.0;
};

struct SuspensionConfig {
  double epsilon = 0.02;
  double delta = 0.3;
  int warmup_iterations = 50;
};

class SuspensionBackend {
 public:
  using Point = SuspensionPoint;
  static constexpr bool is_contact = false;
  static constexpr bool is_anosov = true;

  explicit SuspensionBackend(const SuspensionConfig& cfg);

  double roof(const Eigen::Vector2d& x) const;
  Point advance(const Point& p, double t) const;
  RateSample rates(const Point& p) const;
  std::optional<double> volume() const { return std::nullopt; }
  std::string name() const { return "suspension"; }

  OrbitSeries sample_orbit(const Point& p0, double dt, Eigen::Index n) const;
  Point random_point(std::mt19937_64& rng) const;

  const TorusMap& map() const { return map_; }
  const SuspensionConfig& config() const { return cfg_; }

  // Unstable direction at x obtained by pushing forward along the backward
  // pseudo-orbit of the given length.
  Eigen::Vector2d unstable_direction(const Eigen::Vector2d& x, int iterations) const;

 private:
  SuspensionConfig cfg_;
  TorusMap map_;
};

// Rate series with r_u constant on each roof interval: ln|DF v_u| / rho(x).
// Aux columns: x1, x2, s. Jumps are recorded at every roof crossing.
OrbitSeries unstable_rate_series(const SuspensionBackend& backend, const SuspensionPoint& p0,
                                 double dt, Eigen::Index n, int warmup_iterations);

}  // namespace anosov
