#pragma once

#include "anosov/series.hpp"

#include <complex>
#include <optional>
#include <random>
#include <string>

namespace anosov {

// Reeb flow of the standard contact form on the unit 3-sphere: the Hopf
// circle action. Zero torsion; the Boothby-Wang sanity case.
struct HopfPoint {
  std::complex<double> z1;
  std::complex<double> z2;
};

struct HopfTorsion {
  double lambda = 0.0;
  double ricci_x = 2.0;
};

class HopfBackend {
 public:
  using Point = HopfPoint;
  static constexpr bool is_contact = true;
  static constexpr bool is_anosov = false;

  Point advance(const Point& p, double t) const;
  // No invariant hyperbolic splitting: both rates are zero. Torsion data is
  // reported in aux ("lambda", "ricci_x").
  RateSample rates(const Point& p) const;
  std::optional<double> volume() const;
  std::string name() const { return "hopf"; }

  Point random_point(std::mt19937_64& rng) const;
};

HopfTorsion hopf_rates(const HopfPoint& p);

}  // namespace anosov
