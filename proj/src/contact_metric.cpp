#include "anosov/contact_metric.hpp"

#include <memory>

namespace anosov {

ScalarField ScalarField::constant_field(double c, std::string name) {
  ScalarField f;
  f.name = std::move(name);
  f.value = [c](const SurfaceTangent&) { return c; };
  f.x_derivative = [](const SurfaceTangent&) { return 0.0; };
  f.constant = c;
  return f;
}

ScalarField ScalarField::bumps(const std::vector<Complex>& centers,
                               const std::vector<double>& coeffs, double width, double offset,
                               std::string name) {
  ConformalSpec spec;
  spec.centers = centers;
  spec.amplitudes = coeffs;
  spec.width = width;
  auto u = std::make_shared<const ConformalFactor>(spec);
  ScalarField f;
  f.name = std::move(name);
  f.value = [u, offset](const SurfaceTangent& st) { return offset + u->value(st.w); };
  f.x_derivative = [u](const SurfaceTangent& st) {
    const Complex g = u->eval(st.w).grad;
    return g.real() * st.velocity.real() + g.imag() * st.velocity.imag();
  };
  return f;
}

std::vector<Complex> default_basis_centers() {
  const double g[4] = {-0.45, -0.15, 0.15, 0.45};
  std::vector<Complex> c;
  for (double y : g)
    for (double x : g) c.emplace_back(x, y);
  return c;
}

ScalarField basis_field(const std::vector<Complex>& centers, const std::vector<double>& coeffs,
                        double width, double offset, std::string name) {
  if (coeffs.empty()) return ScalarField::constant_field(offset, std::move(name));
  if (coeffs.size() != centers.size())
    throw std::invalid_argument("basis_field: expected " + std::to_string(centers.size()) +
                                " coefficients, got " + std::to_string(coeffs.size()));
  return ScalarField::bumps(centers, coeffs, width, offset, std::move(name));
}

IdentityResiduals metric_identities(const Eigen::Ref<const Eigen::ArrayXd>& r_u,
                                    const Eigen::Ref<const Eigen::ArrayXd>& theta,
                                    const Eigen::Ref<const Eigen::ArrayXd>& x_theta) {
  IdentityResiduals out;
  out.samples = r_u.size();
  for (Eigen::Index i = 0; i < r_u.size(); ++i) {
    const double r_s = stable_rate_from_angle(r_u[i], theta[i], x_theta[i]);
    out.angle = std::max(out.angle, std::abs(r_s + r_u[i] + cot(theta[i]) * x_theta[i]));
    const double l2 = torsion_sq(r_u[i], theta[i], x_theta[i]);
    const double det = h_matrix(r_u[i], r_s, theta[i], x_theta[i]).determinant();
    out.determinant = std::max(out.determinant, std::abs(-det / 4.0 - l2));
    const double l2_half_pi = torsion_sq(r_u[i], M_PI / 2, 0.0);
    out.reduction = std::max(out.reduction, std::abs(l2_half_pi - r_u[i] * r_u[i]));
  }
  return out;
}

bool MetricParams::canonical() const {
  return f.constant.has_value() && theta.constant.has_value() &&
         std::abs(*theta.constant - M_PI / 2) < 1e-15;
}

MetricSeries canonical_metric(const OrbitSeries& s) {
  const Eigen::Index n = s.size();
  return MetricSeries{Eigen::ArrayXd::Zero(n), Eigen::ArrayXd::Constant(n, M_PI / 2),
                      Eigen::ArrayXd::Zero(n)};
}

TorsionSeries torsion_series(const OrbitSeries& s, const MetricSeries& m, bool riccati_identity) {
  const Eigen::Index n = s.size();
  if (m.x_f.size() != n || m.theta.size() != n || m.x_theta.size() != n)
    throw std::invalid_argument("torsion_series: metric arrays do not match the series");
  TorsionSeries out;
  out.t = Eigen::ArrayXd::LinSpaced(n, 0.0, static_cast<double>(n - 1)) * s.dt + s.t0;
  out.r_u = gauge_rate<Eigen::ArrayXd>(s.r_u, m.x_f);
  const Eigen::ArrayXd cot_xtheta = m.theta.cos() / m.theta.sin() * m.x_theta;
  out.r_s = -cot_xtheta - out.r_u;
  out.angle_residual = out.r_s + out.r_u + cot_xtheta;

  Eigen::ArrayXd x_r_u_base;
  if (riccati_identity && s.has_aux("K")) {
    x_r_u_base = -s.r_u.square() - s.column("K");
  } else if (n >= 3) {
    x_r_u_base = flow_derivative(s, s.r_u);
  } else {
    x_r_u_base = Eigen::ArrayXd::Zero(n);
  }
  const bool fd_ok = n >= 3;
  out.x_r_u = x_r_u_base + (fd_ok ? flow_derivative(s, m.x_f) : Eigen::ArrayXd::Zero(n));
  const Eigen::ArrayXd x_r_s =
      -(fd_ok ? flow_derivative(s, cot_xtheta) : Eigen::ArrayXd::Zero(n)) - out.x_r_u;

  out.lambda_sq.resize(n);
  out.ricci_x.resize(n);
  out.kappa_u.resize(n);
  out.kappa_s.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.lambda_sq[i] = torsion_sq(out.r_u[i], m.theta[i], m.x_theta[i]);
    out.ricci_x[i] = ricci_x(out.lambda_sq[i]);
    const SectionalPair<double> k = sectional_curvatures(out.r_u[i], out.r_s[i], m.theta[i],
                                                         m.x_theta[i], out.x_r_u[i], x_r_s[i]);
    out.kappa_u[i] = k.kappa_u;
    out.kappa_s[i] = k.kappa_s;
  }
  return out;
}

EnergyEstimate dirichlet_energy(const std::vector<Eigen::ArrayXd>& lambda_sq, double dt,
                                std::optional<double> volume) {
  if (lambda_sq.empty()) throw std::invalid_argument("dirichlet_energy: empty ensemble");
  KahanSum w, m, v;
  for (const Eigen::ArrayXd& l2 : lambda_sq) {
    const BirkhoffEstimate e = birkhoff(l2, dt);
    w.add(e.T);
    m.add(e.T * e.mean);
    v.add(e.T * e.T * e.std_error * e.std_error);
  }
  EnergyEstimate out;
  out.e_bar = m.value() / w.value();
  out.std_error = std::sqrt(v.value()) / w.value();
  if (volume) out.energy = *volume * out.e_bar;
  return out;
}

namespace {

// Coordinates of a traceless 2x2 matrix in the basis (X, Y, Z).
Eigen::Vector3d sl2_coords(const Eigen::Matrix2d& m, const Eigen::Matrix3d& basis_inv) {
  return basis_inv * Eigen::Vector3d(m(0, 0), m(0, 1), m(1, 0));
}

}  // namespace

TannoReport tanno_residual_canonical(const AlgebraicBackend& backend, const MetricParams& params,
                                     const OrbitSeries& orbit) {
  if (!params.canonical())
    throw std::invalid_argument("tanno_residual_canonical: metric parameters are not canonical");
  const double l = backend.lambda0();
  Eigen::Matrix2d h0, p, q;
  h0 << 1, 0, 0, -1;
  p << 0, 1, 1, 0;
  q << 0, 1, -1, 0;
  const std::array<Eigen::Matrix2d, 3> e{(l / 2.0) * h0, std::sqrt(l / 2.0) * q,
                                         std::sqrt(l / 2.0) * p};
  Eigen::Matrix3d basis;
  for (int j = 0; j < 3; ++j) basis.col(j) = Eigen::Vector3d(e[j](0, 0), e[j](0, 1), e[j](1, 0));
  const Eigen::Matrix3d basis_inv = basis.inverse();

  // c[i][j] = coordinates of [e_i, e_j]; the frame is orthonormal.
  std::array<std::array<Eigen::Vector3d, 3>, 3> c;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) c[i][j] = sl2_coords(e[i] * e[j] - e[j] * e[i], basis_inv);

  // Koszul: <nabla_{e_i} e_j, e_k> = 1/2 (c_ij^k - c_jk^i + c_ki^j).
  Eigen::Matrix3d nabla_x;  // column j = nabla_X e_j
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) nabla_x(k, j) = 0.5 * (c[0][j][k] - c[j][k][0] + c[k][0][j]);

  Eigen::Matrix3d phi = Eigen::Matrix3d::Zero();  // phi Y = Z, phi Z = -Y
  phi(2, 1) = 1.0;
  phi(1, 2) = -1.0;
  // h = 1/2 L_X phi, (L_X phi) V = [X, phi V] - phi [X, V].
  Eigen::Matrix3d ad_x;
  for (int j = 0; j < 3; ++j) ad_x.col(j) = c[0][j];
  const Eigen::Matrix3d h = 0.5 * (ad_x * phi - phi * ad_x);

  TannoReport r;
  r.connection_residual = (nabla_x * h - h * nabla_x - 2.0 * h * phi).norm();
  r.mu = -nabla_x(2, 1);  // nabla_X e_1 = -mu e_2

  const MetricSeries m = canonical_metric(orbit);
  const TorsionSeries ts = torsion_series(orbit, m);
  const Eigen::ArrayXd lambda = ts.lambda_sq.sqrt();
  const Eigen::ArrayXd x_lambda =
      orbit.size() >= 3 ? flow_derivative(orbit, lambda) : Eigen::ArrayXd::Zero(orbit.size());
  r.x_lambda = x_lambda.abs().maxCoeff();
  // In the eigenframe: (nabla_X h) e_1 - 2 h phi e_1 = X.lambda e_1 + 2 lambda (1 - mu) e_2.
  r.residual = (x_lambda.square() + (2.0 * lambda * (1.0 - r.mu)).square()).sqrt().maxCoeff();
  return r;
}

RealizationResult realize_ricci(const AlgebraicBackend& backend, const ScalarField& eta,
                                const ScalarField& sigma, const OrbitSeries& orbit,
                                double theta_margin) {
  const FieldSeries e = evaluate_field(eta, backend, orbit);
  const FieldSeries s = evaluate_field(sigma, backend, orbit);
  const Eigen::Index n = orbit.size();
  const double h_bar = backend.lambda0();
  RealizationResult out;
  out.f_target.resize(n);
  out.ricci_achieved.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double theta = M_PI / 2 - std::atan(2.0 * s.value[i]);
    if (theta <= theta_margin || theta >= M_PI - theta_margin)
      throw std::invalid_argument("realize_ricci: sigma drives theta out of the safe range");
    const double x_theta = -2.0 * s.x_derivative[i] / (1.0 + 4.0 * s.value[i] * s.value[i]);
    const double r_u = gauge_rate(orbit.r_u[i], e.x_derivative[i]);
    out.ricci_achieved[i] = ricci_x(torsion_sq(r_u, theta, x_theta));
    out.f_target[i] = ricci_target(h_bar, e.x_derivative[i], s.value[i], s.x_derivative[i]);
  }
  out.max_abs_diff = (out.f_target - out.ricci_achieved).abs().maxCoeff();
  return out;
}

}  // namespace anosov
