#pragma once

#include "anosov/algebraic.hpp"
#include "anosov/series.hpp"

#include <Eigen/Dense>

#include <optional>
#include <random>
#include <string>
#include <vector>

namespace anosov {

// Compactly supported radial profile exp(1 - 1/(1 - (rho/width)^2)) in
// hyperbolic distance rho, with its radial derivatives.
struct BumpProfile {
  double value = 0.0;
  double d_over_rho = 0.0;  // b'(rho)/rho
  double laplacian = 0.0;   // hyperbolic Laplacian b'' + coth(rho) b'
};
BumpProfile bump_profile(double rho, double width);

// Radial bump centred at c, evaluated in disk coordinates.
struct BumpEval {
  double value = 0.0;
  Complex grad;             // Euclidean gradient d/dx + i d/dy
  double laplacian = 0.0;   // hyperbolic Laplacian
};
BumpEval eval_bump(Complex w, Complex c, double width);

struct ConformalSpec {
  std::vector<Complex> centers;
  std::vector<double> amplitudes;
  double width = 1.0;
  double max_amplitude = 0.1;
};

// Gamma-invariant sum of bumps. Only translates whose support can meet the
// disk of radius `reach` (hyperbolic) about the origin are kept, so values
// are exact for points within that radius.
class ConformalFactor {
 public:
  struct Eval {
    double u = 0.0;
    Complex grad;
    double lap_hyp = 0.0;
  };

  ConformalFactor() = default;
  explicit ConformalFactor(const ConformalSpec& spec, std::optional<double> reach = std::nullopt);

  Eval eval(Complex w) const;
  double value(Complex w) const { return eval(w).u; }
  double curvature(Complex w) const;
  const ConformalSpec& spec() const { return spec_; }
  std::size_t translate_count() const { return centers_.size(); }
  bool trivial() const { return centers_.empty(); }

  // Maximum of K over a grid x grid sample of the octagon.
  double max_curvature_on_grid(int grid) const;

 private:
  ConformalSpec spec_;
  std::vector<Complex> centers_;
  std::vector<double> amps_;
  std::vector<double> cosh_cut_factor_;  // (1 - |c|^2) for the fast reject test
  double cosh_width_ = 1.0;
};

struct PerturbedState {
  Complex w;
  double psi = 0.0;
  double riccati_r = 1.0;
};

struct PerturbedConfig {
  ConformalSpec factor;
  double warmup = 20.0;
  double dt_max = 0.01;
  int check_grid = 200;
};

class PerturbedBackend {
 public:
  using Point = PerturbedState;
  static constexpr bool is_contact = true;
  static constexpr bool is_anosov = true;

  // Throws std::invalid_argument if an amplitude exceeds the cap or the
  // curvature is not negative on the verification grid.
  explicit PerturbedBackend(const PerturbedConfig& cfg);

  // RK4 steps of size <= dt_max; the Riccati variable is carried along.
  Point advance(const Point& p, double t) const;
  // Rates from warmup runs on both sides of p; slow, meant for spot checks.
  RateSample rates(const Point& p) const;
  std::optional<double> volume() const { return std::nullopt; }
  std::string name() const { return "perturbed"; }

  // Series with aux columns K, w_re, w_im, psi. r_u from the forward
  // Riccati run after a backward warmup, r_s from the mirrored run.
  OrbitSeries sample_orbit(const Point& p0, double dt, Eigen::Index n) const;

  Point random_point(std::mt19937_64& rng) const;
  SurfaceTangent tangent(const Point& p) const;
  SurfaceTangent tangent(Complex w, double psi) const;

  const ConformalFactor& factor() const { return factor_; }
  const PerturbedConfig& config() const { return cfg_; }
  double max_curvature() const { return max_k_; }

  // One RK4 step of the geodesic equations (no folding).
  Point step(const Point& p, double h) const;
  // Fold into the octagon, transporting the direction.
  Point fold(const Point& p) const;

  // Curvature samples along the orbit from p over signed time `span` with
  // step h, at half-step spacing (2*steps+1 values, ordered in the direction
  // of travel). Optionally records states at every `stride` steps.
  Eigen::ArrayXd curvature_track(const Point& p, double h, Eigen::Index steps,
                                 std::vector<Point>* states = nullptr,
                                 Eigen::Index stride = 1) const;

 private:
  PerturbedConfig cfg_;
  ConformalFactor factor_;
  double max_k_ = -1.0;
};

// Integrates r' = -r^2 - K by RK4 on a curvature track with half-step
// spacing h/2, starting from r0 (default sqrt(-K[0])). Returns r at every
// full step (size (K.size()+1)/2). Throws NumericError on blowup.
Eigen::ArrayXd riccati_solve(const Eigen::Ref<const Eigen::ArrayXd>& K_half, double h,
                             std::optional<double> r0 = std::nullopt);

// Unstable rate with the warmup prefix discarded: K_half covers
// [0, warmup + span]; the result covers [warmup, warmup + span].
Eigen::ArrayXd riccati_rate(const Eigen::Ref<const Eigen::ArrayXd>& K_half, double h,
                            double warmup, std::optional<double> r0 = std::nullopt);

}  // namespace anosov
