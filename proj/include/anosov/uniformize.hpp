#pragma once

#include "anosov/series.hpp"

#include <Eigen/Dense>

#include <optional>
#include <random>
#include <string>
#include <vector>

namespace anosov {

struct UniformizeConfig {
  double T = 1.0;
  double eps = 1.0;
  std::optional<double> horizon;  // default: horizon_factor max(T, 1/eps), capped by the series
  double horizon_factor = 5.0;
};

// Window average (1/T) int_0^T r_u(t + tau) dtau for every grid time with a
// full window ahead (size n - T/dt).
Eigen::ArrayXd moving_average_rate(const OrbitSeries& series, double T);

struct EpsilonChoice {
  double eps = 1.0;
  double delta_hat = 0.0;
  bool floored = false;
};
constexpr double kEpsilonFloor = 1e-6;
EpsilonChoice default_epsilon(const OrbitSeries& series, double T);

// Averaged norm of the unit unstable vector at every evaluable grid point:
// N = P + Q with P (Q) the backward (forward) integral truncated at the
// horizon.
struct AveragedNorm {
  Eigen::Index first = 0;  // series index of the first evaluated sample
  Eigen::ArrayXd norm_sq;
  Eigen::ArrayXd A;
  Eigen::ArrayXd B;
  Eigen::ArrayXd window_mean;  // (1/T) int_0^T r_u(t + tau) dtau
  double horizon = 0.0;
  // Worst estimated tail mass relative to the norm: last-decade mass
  // continued geometrically at rate 2 eps.
  double truncation_error_bound = 0.0;
};
AveragedNorm averaged_norm_sq(const OrbitSeries& series, const UniformizeConfig& cfg);

struct UniformizedRate {
  Eigen::Index first = 0;
  Eigen::ArrayXd base_t;
  Eigen::ArrayXd r_u;      // base rate on the same samples
  Eigen::ArrayXd r_uT;
  Eigen::ArrayXd x_r_uT;
  Eigen::ArrayXd A_T;
  Eigen::ArrayXd B_T;
  Eigen::ArrayXd r_uT_direct;
  Eigen::ArrayXd x_r_uT_direct;
  // Samples whose finite-difference stencils avoid rate discontinuities.
  std::vector<Eigen::Index> smooth;
  double max_rate_disagreement = 0.0;
  double max_derivative_disagreement = 0.0;
  double truncation_error_bound = 0.0;
  double eps = 0.0;
  double T = 0.0;
};

// Uniformized rate eps A_T + (window mean of r_u) and its flow derivative
//   X.r_{u,T} = 2 eps^2 + (r_u(T) - r_u)/T - 2 eps B_T - 2 eps^2 A_T^2,
// cross-checked against finite differences of (1/2) ln |dX^k v|_T^2.
// Throws NumericError if the two disagree by more than `tolerance`.
UniformizedRate uniformized_rate(const OrbitSeries& series, const UniformizeConfig& cfg,
                                 double tolerance = 1e-4);

// Derivative with the factor 1/(2T) on the window term, for comparison.
Eigen::ArrayXd x_r_uT_half_window(const OrbitSeries& series, const UniformizedRate& u);

struct DominationReport {
  double bound = 0.0;          // (T/2) * delta_hat
  double max_bounded_term = 0.0;
  double tolerance = 0.0;      // quadrature allowance
  bool holds = false;
  double tightness = 0.0;      // max_bounded_term / bound
};
DominationReport domination_check(const OrbitSeries& series, const UniformizeConfig& cfg);

// |ln R_{t+k} - ln R_t - ln R_k(t)| over random (t, k), with R_k(t) computed
// by independent quadrature.
double cocycle_residual(const OrbitSeries& series, const UniformizeConfig& cfg, int trials,
                        std::mt19937_64& rng);

}  // namespace anosov
