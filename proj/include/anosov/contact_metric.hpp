#pragma once

#include "anosov/algebraic.hpp"
#include "anosov/ergodic.hpp"
#include "anosov/perturbed.hpp"
#include "anosov/random.hpp"
#include "anosov/series.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace anosov {

// Pointwise formulas of the (gauge, angle) parametrization. All of them
// accept scalars or Eigen arrays.

template <typename T>
auto gauge_rate(const T& r_u, const T& x_f) {
  return r_u + x_f;
}

template <typename Scalar>
Scalar cot(Scalar theta) {
  return std::cos(theta) / std::sin(theta);
}

// X.cot(theta) = -csc^2(theta) X.theta
template <typename Scalar>
Scalar x_cot(Scalar theta, Scalar x_theta) {
  const Scalar s = std::sin(theta);
  return -x_theta / (s * s);
}

// X.csc(theta) = -csc(theta) cot(theta) X.theta
template <typename Scalar>
Scalar x_csc(Scalar theta, Scalar x_theta) {
  const Scalar s = std::sin(theta);
  return -std::cos(theta) * x_theta / (s * s);
}

// Invariance of d(alpha) gives sin(theta) ~ exp(-int (r_s + r_u)), hence
// r_s + r_u = -cot(theta) X.theta.
template <typename Scalar>
Scalar stable_rate_from_angle(Scalar r_u, Scalar theta, Scalar x_theta) {
  return -cot(theta) * x_theta - r_u;
}

// Components of 2h in the (e_s, e_u) basis.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 2> h_matrix(Scalar r_u, Scalar r_s, Scalar theta, Scalar x_theta) {
  const Scalar csc = 1 / std::sin(theta);
  const Scalar xcot = x_cot(theta, x_theta);
  const Scalar xcsc = x_csc(theta, x_theta);
  Eigen::Matrix<Scalar, 2, 2> m;
  m << -xcot, -xcsc + (r_s - r_u) * csc, xcsc + (r_s - r_u) * csc, xcot;
  return m;
}

// lambda^2 with r_s eliminated through the angle relation.
template <typename Scalar>
Scalar torsion_sq(Scalar r_u, Scalar theta, Scalar x_theta) {
  const Scalar b = x_cot(theta, x_theta) - 2 * r_u * cot(theta);
  return r_u * r_u + b * b / 4;
}

template <typename Scalar>
Scalar ricci_x(Scalar lambda_sq) {
  return 2 - 2 * lambda_sq;
}

template <typename Scalar>
struct SectionalPair {
  Scalar kappa_u;
  Scalar kappa_s;
  Scalar c_u;
  Scalar c_s;
};

template <typename Scalar>
SectionalPair<Scalar> sectional_curvatures(Scalar r_u, Scalar r_s, Scalar theta, Scalar x_theta,
                                           Scalar x_r_u, Scalar x_r_s) {
  const Scalar csc = 1 / std::sin(theta);
  const Scalar cs = std::cos(theta);
  const Scalar xcot = x_cot(theta, x_theta);
  const Scalar xcsc = x_csc(theta, x_theta);
  SectionalPair<Scalar> k;
  k.c_u = -1 + (xcsc + (r_u - r_s) * csc) * cs / 2 - xcot / 2;
  k.c_s = -1 + xcot / 2 - (xcsc + (r_s - r_u) * csc) * cs / 2;
  k.kappa_u = k.c_u * k.c_u - r_u * r_u - x_r_u;
  k.kappa_s = k.c_s * k.c_s - r_s * r_s - x_r_s;
  return k;
}

// Realization target 2 - 2(h + X.eta)^2 - 2[X.sigma - 2 sigma (h + X.eta)]^2.
template <typename Scalar>
Scalar ricci_target(Scalar h_bar, Scalar x_eta, Scalar sigma, Scalar x_sigma) {
  const Scalar r = h_bar + x_eta;
  const Scalar b = x_sigma - 2 * sigma * r;
  return 2 - 2 * r * r - 2 * b * b;
}

// A function on the surface (pulled back to the unit tangent bundle) with an
// optional closed-form derivative along the flow.
struct ScalarField {
  std::string name;
  std::function<double(const SurfaceTangent&)> value;
  std::function<double(const SurfaceTangent&)> x_derivative;  // empty: finite differences
  std::optional<double> constant;

  static ScalarField constant_field(double c, std::string name = "constant");
  // Gamma-invariant sum of width-`width` bumps with the given coefficients.
  static ScalarField bumps(const std::vector<Complex>& centers, const std::vector<double>& coeffs,
                           double width, double offset = 0.0, std::string name = "bumps");
  bool has_closed_form() const { return static_cast<bool>(x_derivative); }
};

// Default metric basis: 4x4 grid of bump centres in the octagon.
std::vector<Complex> default_basis_centers();

// sum_j coeffs[j] * bump(centers[j]) + offset; a constant field when coeffs
// is empty.
ScalarField basis_field(const std::vector<Complex>& centers, const std::vector<double>& coeffs,
                        double width, double offset = 0.0, std::string name = "basis");

struct MetricParams {
  ScalarField f = ScalarField::constant_field(0.0, "zero");
  ScalarField theta = ScalarField::constant_field(M_PI / 2, "half_pi");
  double theta_margin = 0.1;

  bool canonical() const;
};

// Surface tangent of sample i of a series carrying w_re, w_im, psi columns.
template <class B>
SurfaceTangent series_tangent(const B& backend, const OrbitSeries& s, Eigen::Index i) {
  return backend.tangent(Complex(s.aux.at("w_re")[i], s.aux.at("w_im")[i]), s.aux.at("psi")[i]);
}

struct FieldSeries {
  Eigen::ArrayXd value;
  Eigen::ArrayXd x_derivative;
};

template <class B>
FieldSeries evaluate_field(const ScalarField& f, const B& backend, const OrbitSeries& s) {
  const Eigen::Index n = s.size();
  FieldSeries out{Eigen::ArrayXd(n), Eigen::ArrayXd(n)};
  if (f.constant) {
    out.value.setConstant(*f.constant);
    out.x_derivative.setZero();
    return out;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const SurfaceTangent st = series_tangent(backend, s, i);
    out.value[i] = f.value(st);
    if (f.has_closed_form()) out.x_derivative[i] = f.x_derivative(st);
  }
  if (!f.has_closed_form()) out.x_derivative = flow_derivative(s, out.value);
  return out;
}

struct MetricSeries {
  Eigen::ArrayXd x_f;
  Eigen::ArrayXd theta;
  Eigen::ArrayXd x_theta;
};

template <class B>
MetricSeries evaluate_metric(const MetricParams& p, const B& backend, const OrbitSeries& s) {
  const FieldSeries f = evaluate_field(p.f, backend, s);
  const FieldSeries th = evaluate_field(p.theta, backend, s);
  if ((th.value <= p.theta_margin).any() || (th.value >= M_PI - p.theta_margin).any())
    throw std::invalid_argument("metric: theta leaves (margin, pi - margin)");
  return MetricSeries{f.x_derivative, th.value, th.x_derivative};
}

// Canonical metric of an orbit: f = 0, theta = pi/2.
MetricSeries canonical_metric(const OrbitSeries& s);

struct TorsionSeries {
  Eigen::ArrayXd t;
  Eigen::ArrayXd r_u;  // gauged
  Eigen::ArrayXd r_s;  // from the angle relation
  Eigen::ArrayXd lambda_sq;
  Eigen::ArrayXd ricci_x;
  Eigen::ArrayXd kappa_u;
  Eigen::ArrayXd kappa_s;
  Eigen::ArrayXd x_r_u;
  Eigen::ArrayXd angle_residual;  // r_s + r_u + cot(theta) X.theta
};

// X.r_u is taken from the Riccati identity when the series carries K and
// the backend is a geodesic flow; otherwise by finite differences.
TorsionSeries torsion_series(const OrbitSeries& s, const MetricSeries& m,
                             bool riccati_identity = false);

struct EnergyEstimate {
  double e_bar = 0.0;  // per-volume energy
  double std_error = 0.0;
  std::optional<double> energy;  // V * e_bar when the volume is known
};

// Pooled Birkhoff mean of lambda^2 over an ensemble of torsion series.
EnergyEstimate dirichlet_energy(const std::vector<Eigen::ArrayXd>& lambda_sq, double dt,
                                std::optional<double> volume);

template <class B>
EnergyEstimate dirichlet_energy(const B& backend, const MetricParams& params,
                                const std::vector<OrbitSeries>& ensemble) {
  if constexpr (!B::is_contact) {
    throw std::invalid_argument("dirichlet_energy: backend is not a contact flow");
  } else {
    std::vector<Eigen::ArrayXd> l2;
    for (const OrbitSeries& s : ensemble) {
      if constexpr (!B::is_anosov) {
        l2.push_back(s.column("lambda").square());
      } else {
        l2.push_back(torsion_series(s, evaluate_metric(params, backend, s),
                                    s.has_aux("K") && backend.name() == "perturbed")
                         .lambda_sq);
      }
    }
    return dirichlet_energy(l2, ensemble.front().dt, backend.volume());
  }
}

struct IdentityResiduals {
  double angle = 0.0;        // max |r_s + r_u + cot(theta) X.theta|
  double determinant = 0.0;  // max |-det(2h)/4 - lambda^2|
  double reduction = 0.0;    // max |lambda^2 - r_u^2| at theta = pi/2
  Eigen::Index samples = 0;
};

// Pointwise identities for gauged rates r_u and angle data (theta, X.theta).
IdentityResiduals metric_identities(const Eigen::Ref<const Eigen::ArrayXd>& r_u,
                                    const Eigen::Ref<const Eigen::ArrayXd>& theta,
                                    const Eigen::Ref<const Eigen::ArrayXd>& x_theta);

// Identities on `samples` random orbit points, each with its own random
// coefficients (uniform in [-amplitude, amplitude]) for f and theta - pi/2
// over the bump basis.
template <class B>
IdentityResiduals random_field_identities(const B& backend, const std::vector<OrbitSeries>& orbits,
                                          int samples, std::mt19937_64& rng,
                                          const std::vector<Complex>& centers, double width,
                                          double amplitude = 0.25) {
  std::vector<ScalarField> basis;
  for (const Complex& c : centers) basis.push_back(ScalarField::bumps({c}, {1.0}, width));
  const auto nb = static_cast<Eigen::Index>(basis.size());
  Eigen::ArrayXd r_u(samples), theta(samples), x_theta(samples);
  for (int k = 0; k < samples; ++k) {
    const OrbitSeries& s = orbits[uniform_index(rng, orbits.size())];
    const auto i = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(s.size())));
    const SurfaceTangent st = series_tangent(backend, s, i);
    double x_f = 0.0, th = M_PI / 2, x_th = 0.0;
    for (Eigen::Index j = 0; j < nb; ++j) {
      const double a = amplitude * (2.0 * uniform01(rng) - 1.0);
      const double b = amplitude * (2.0 * uniform01(rng) - 1.0);
      const ScalarField& f = basis[static_cast<std::size_t>(j)];
      const double dj = f.x_derivative(st);
      x_f += a * dj;
      th += b * f.value(st);
      x_th += b * dj;
    }
    r_u[k] = gauge_rate(s.r_u[i], x_f);
    theta[k] = th;
    x_theta[k] = x_th;
  }
  return metric_identities(r_u, theta, x_theta);
}

struct TannoReport {
  double residual = 0.0;      // max over samples of |nabla_X h - 2 h phi|
  double x_lambda = 0.0;      // max |X.lambda|
  double mu = 0.0;            // frame rotation rate from the Koszul formula
  double connection_residual = 0.0;  // |nabla_X h - 2 h phi| from structure constants
};

// Criticality check of the canonical metric on the algebraic model.
TannoReport tanno_residual_canonical(const AlgebraicBackend& backend, const MetricParams& params,
                                     const OrbitSeries& orbit);

struct RealizationResult {
  Eigen::ArrayXd f_target;
  Eigen::ArrayXd ricci_achieved;
  double max_abs_diff = 0.0;
};

// theta = arccot(2 sigma), f = eta on the algebraic backend.
RealizationResult realize_ricci(const AlgebraicBackend& backend, const ScalarField& eta,
                                const ScalarField& sigma, const OrbitSeries& orbit,
                                double theta_margin = 0.1);

}  // namespace anosov
