#include "anosov/hopf.hpp"

#include "anosov/algebraic.hpp"

#include <cmath>
#include <numbers>

namespace anosov {

HopfPoint HopfBackend::advance(const Point& p, double t) const {
  const std::complex<double> e = std::polar(1.0, t);
  return HopfPoint{e * p.z1, e * p.z2};
}

HopfTorsion hopf_rates(const HopfPoint&) { return HopfTorsion{}; }

RateSample HopfBackend::rates(const Point& p) const {
  const HopfTorsion h = hopf_rates(p);
  RateSample s;
  s.aux["lambda"] = h.lambda;
  s.aux["ricci_x"] = h.ricci_x;
  return s;
}

// alpha ^ d(alpha) = 2 vol on the unit sphere, total 2 * 2 pi^2.
std::optional<double> HopfBackend::volume() const {
  return 4.0 * std::numbers::pi * std::numbers::pi;
}

HopfPoint HopfBackend::random_point(std::mt19937_64& rng) const {
  // Box-Muller keeps the stream portable across standard libraries.
  double v[4];
  for (int i = 0; i < 4; i += 2) {
    const double u1 = 1.0 - uniform01(rng);
    const double u2 = uniform01(rng);
    const double rad = std::sqrt(-2.0 * std::log(u1));
    v[i] = rad * std::cos(2.0 * std::numbers::pi * u2);
    v[i + 1] = rad * std::sin(2.0 * std::numbers::pi * u2);
  }
  const double r = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3]);
  return HopfPoint{{v[0] / r, v[1] / r}, {v[2] / r, v[3] / r}};
}

}  // namespace anosov
