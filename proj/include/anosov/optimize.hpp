#pragma once

#include "anosov/contact_metric.hpp"
#include "anosov/series.hpp"

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace anosov {

struct NelderMeadOptions {
  int budget = 500;        // objective evaluations
  double step = 0.05;      // initial simplex edge
  double f_tol = 1e-12;    // stop when the simplex spread falls below this
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double f = 0.0;
  std::vector<double> trace;  // best-so-far after every evaluation
  int evaluations = 0;
  bool budget_exhausted = false;
};

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, const NelderMeadOptions& opt = {});

// Ensemble energy as a function of basis coefficients (a for f, b for
// theta - pi/2), evaluated on thinned samples of a fixed ensemble.
class EnergyObjective {
 public:
  template <class B>
  EnergyObjective(const B& backend, const std::vector<OrbitSeries>& ensemble,
                  const std::vector<Complex>& centers, double width, Eigen::Index samples_per_orbit,
                  double theta_margin = 0.1);

  Eigen::Index dimension() const { return 2 * basis_; }
  double operator()(const Eigen::VectorXd& c) const;
  // Energy at c = 0 (theta = pi/2, f = 0).
  double canonical() const { return (*this)(Eigen::VectorXd::Zero(dimension())); }
  Eigen::Index samples() const { return r_u_.size(); }

 private:
  Eigen::Index basis_ = 0;
  double margin_ = 0.1;
  Eigen::ArrayXd r_u_;
  Eigen::MatrixXd value_;  // samples x basis
  Eigen::MatrixXd deriv_;  // samples x basis
};

template <class B>
EnergyObjective::EnergyObjective(const B& backend, const std::vector<OrbitSeries>& ensemble,
                                 const std::vector<Complex>& centers, double width,
                                 Eigen::Index samples_per_orbit, double theta_margin)
    : basis_(static_cast<Eigen::Index>(centers.size())), margin_(theta_margin) {
  std::vector<ScalarField> fields;
  for (std::size_t j = 0; j < centers.size(); ++j)
    fields.push_back(ScalarField::bumps({centers[j]}, {1.0}, width));
  Eigen::Index total = 0;
  std::vector<Eigen::Index> strides;
  for (const OrbitSeries& s : ensemble) {
    const Eigen::Index stride = std::max<Eigen::Index>(1, s.size() / samples_per_orbit);
    strides.push_back(stride);
    total += (s.size() + stride - 1) / stride;
  }
  r_u_.resize(total);
  value_.resize(total, basis_);
  deriv_.resize(total, basis_);
  Eigen::Index row = 0;
  for (std::size_t o = 0; o < ensemble.size(); ++o) {
    const OrbitSeries& s = ensemble[o];
    for (Eigen::Index i = 0; i < s.size(); i += strides[o], ++row) {
      const SurfaceTangent st = series_tangent(backend, s, i);
      r_u_[row] = s.r_u[i];
      for (Eigen::Index j = 0; j < basis_; ++j) {
        value_(row, j) = fields[static_cast<std::size_t>(j)].value(st);
        deriv_(row, j) = fields[static_cast<std::size_t>(j)].x_derivative(st);
      }
    }
  }
}

struct EnergyOptimization {
  NelderMeadResult search;
  double e_canonical = 0.0;
  double e_best = 0.0;
};

EnergyOptimization optimize_energy(const EnergyObjective& objective,
                                   const NelderMeadOptions& opt = {});

}  // namespace anosov
