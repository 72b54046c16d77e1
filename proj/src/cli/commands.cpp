#include "anosov/cli.hpp"

#include "anosov/algebraic.hpp"
#include "anosov/contact_metric.hpp"
#include "anosov/ergodic.hpp"
#include "anosov/hopf.hpp"
#include "anosov/optimize.hpp"
#include "anosov/perturbed.hpp"
#include "anosov/suspension.hpp"
#include "anosov/uniformize.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

namespace anosov::cli {

using nlohmann::json;

namespace {

struct Context {
  const ExperimentConfig& cfg;
  std::string out_dir;
  int threads = 1;
  json results = json::object();
  std::vector<std::string> warnings;
  int exit_code = kOk;

  std::string path(const std::string& name) const {
    return (std::filesystem::path(out_dir) / name).string();
  }
};

std::string label(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

template <class B>
std::vector<OrbitSeries> ensemble(const B& backend, const Context& ctx) {
  std::vector<OrbitSeries> ens =
      sample_ensemble(backend, ctx.cfg.orbit_seeds(), ctx.cfg.dt, ctx.cfg.samples(), ctx.threads);
  for (const OrbitSeries& s : ens) s.check_finite();
  return ens;
}

MetricParams metric_params(const ExperimentConfig& c) {
  const std::vector<Complex> centers = default_basis_centers();
  MetricParams p;
  p.f = basis_field(centers, c.metric_f, c.basis_width, 0.0, "f");
  p.theta = basis_field(centers, c.metric_theta, c.basis_width, M_PI / 2, "theta");
  p.theta_margin = c.theta_margin;
  return p;
}

bool metric_is_default(const ExperimentConfig& c) {
  return c.metric_f.empty() && c.metric_theta.empty();
}

// Duration-weighted pooled mean of r_u (the Pesin estimator when the
// ensemble is large enough).
struct Pooled {
  double mean = 0.0;
  double std_error = 0.0;
};
Pooled pooled_rate(const std::vector<OrbitSeries>& ens) {
  if (ens.size() >= 4) {
    const EntropyReport r = pesin_entropy(ens);
    return {r.h_bar, r.std_error};
  }
  KahanSum w, m, v;
  for (const OrbitSeries& s : ens) {
    const BirkhoffEstimate e = birkhoff(s, "r_u");
    w.add(e.T);
    m.add(e.T * e.mean);
    v.add(e.T * e.T * e.std_error * e.std_error);
  }
  return {m.value() / w.value(), std::sqrt(v.value()) / w.value()};
}

template <class B>
Eigen::ArrayXd lambda_sq_series(const B& backend, const MetricParams& params,
                                const OrbitSeries& s) {
  if constexpr (!B::is_anosov) {
    return s.column("lambda").square();
  } else {
    return torsion_series(s, evaluate_metric(params, backend, s), s.has_aux("K"))
        .lambda_sq;
  }
}

json stats(const Eigen::ArrayXd& v) {
  return json{{"min", v.minCoeff()}, {"max", v.maxCoeff()}, {"mean", v.mean()}};
}

// ---------------------------------------------------------------- entropy

template <class B>
void cmd_entropy(const B& backend, Context& ctx) {
  if constexpr (!B::is_anosov) {
    throw ConfigError("backend is not Anosov");
  } else {
    const std::vector<OrbitSeries> ens = ensemble(backend, ctx);
    const EntropyReport rep = pesin_entropy(ens);
    CsvWriter summary(ctx.path("entropy_summary.csv"), {"seed", "mean_r_u", "batch_stderr"});
    for (std::size_t k = 0; k < rep.seeds.size(); ++k)
      summary.row(std::vector<std::string>{std::to_string(rep.seeds[k]),
                                           format_double(rep.per_orbit_means[k]),
                                           format_double(rep.per_orbit_stderr[k])});
    for (const OrbitSeries& s : ens) {
      const RunningAverage ra = running_average(s, ctx.cfg.output_stride);
      CsvWriter csv(ctx.path("entropy_seed_" + std::to_string(s.seed) + ".csv"),
                    {"t", "running_mean_r_u", "batch_stderr"});
      for (Eigen::Index i = 0; i < ra.t.size(); ++i)
        csv.row({ra.t[i], ra.mean[i], ra.std_error[i]});
    }
    ctx.results["h_bar"] = rep.h_bar;
    ctx.results["std_error"] = rep.std_error;
    ctx.results["per_orbit_means"] = rep.per_orbit_means;
    ctx.results["per_orbit_stderr"] = rep.per_orbit_stderr;
    ctx.results["seeds"] = rep.seeds;
    ctx.results["inconsistent"] = rep.inconsistent;
    if (rep.inconsistent)
      ctx.warnings.push_back("per-orbit means differ by more than 5 sigma; convergence not reached");
  }
}

// ----------------------------------------------------------------- energy

template <class B>
void cmd_energy(const B& backend, Context& ctx) {
  if constexpr (!B::is_contact) {
    throw ConfigError("backend is not a contact flow");
  } else {
    if (!B::is_anosov && !metric_is_default(ctx.cfg))
      throw ConfigError("metric.f / metric.theta need a surface backend");
    const MetricParams params = metric_params(ctx.cfg);
    const std::vector<OrbitSeries> ens = ensemble(backend, ctx);
    const Pooled h = pooled_rate(ens);

    std::vector<Eigen::ArrayXd> l2;
    CsvWriter csv(ctx.path("energy.csv"), {"seed", "e_bar", "std_error", "mean_r_u"});
    for (const OrbitSeries& s : ens) {
      l2.push_back(lambda_sq_series(backend, params, s));
      const BirkhoffEstimate e = birkhoff(l2.back(), s.dt);
      const BirkhoffEstimate r = birkhoff(s, "r_u");
      csv.row(std::vector<std::string>{std::to_string(s.seed), format_double(e.mean),
                                       format_double(e.std_error), format_double(r.mean)});
    }
    const EnergyEstimate E = dirichlet_energy(l2, ens.front().dt, backend.volume());
    const double gap = E.e_bar - h.mean * h.mean;
    const double gap_err = std::hypot(E.std_error, 2.0 * h.mean * h.std_error);
    ctx.results["e_bar"] = E.e_bar;
    ctx.results["e_bar_std_error"] = E.std_error;
    if (E.energy) ctx.results["energy"] = *E.energy;
    ctx.results["h_bar"] = h.mean;
    ctx.results["h_bar_std_error"] = h.std_error;
    ctx.results["h_bar_sq"] = h.mean * h.mean;
    ctx.results["gap"] = gap;
    ctx.results["gap_std_error"] = gap_err;
    const bool violation = gap < -4.0 * gap_err - 1e-12;
    ctx.results["jensen_violation"] = violation;
    if (violation) ctx.warnings.push_back("energy below the entropy floor beyond 4 sigma");

    if constexpr (B::is_anosov) {
      if (ctx.cfg.optimize_budget > 0) {
        const EnergyObjective obj(backend, ens, default_basis_centers(), ctx.cfg.basis_width,
                                  ctx.cfg.samples_per_orbit, ctx.cfg.theta_margin);
        NelderMeadOptions opt;
        opt.budget = ctx.cfg.optimize_budget;
        opt.step = ctx.cfg.optimize_step;
        const EnergyOptimization o = optimize_energy(obj, opt);
        CsvWriter trace(ctx.path("optimize_trace.csv"), {"evaluation", "best_e_bar"});
        for (std::size_t k = 0; k < o.search.trace.size(); ++k)
          trace.row({static_cast<double>(k + 1), o.search.trace[k]});
        std::vector<double> coeffs(o.search.x.data(), o.search.x.data() + o.search.x.size());
        ctx.results["optimize"] = json{{"e_canonical", o.e_canonical},
                                       {"e_best", o.e_best},
                                       {"evaluations", o.search.evaluations},
                                       {"budget_exhausted", o.search.budget_exhausted},
                                       {"coefficients", coeffs},
                                       {"samples", obj.samples()}};
        if (o.e_best < h.mean * h.mean - 3.0 * h.std_error)
          ctx.warnings.push_back("optimized energy falls below the entropy floor by > 3 sigma");
      }
    }
  }
}

// ------------------------------------------------------------- uniformize

double policy_eps(const ExperimentConfig& c, const OrbitSeries& s, double T, bool* floored) {
  *floored = false;
  if (c.eps_policy == "fixed") return c.eps;
  if (c.eps_policy == "inverse_square") return 1.0 / (T * T);
  const EpsilonChoice e = default_epsilon(s, T);
  *floored = e.floored;
  return e.eps;
}

template <class B>
void cmd_uniformize(const B& backend, Context& ctx) {
  if constexpr (!B::is_anosov) {
    throw ConfigError("backend is not Anosov");
  } else {
    const std::vector<OrbitSeries> ens = ensemble(backend, ctx);
    const Pooled h = pooled_rate(ens);
    const Eigen::Index stride = ctx.cfg.output_stride;
    CsvWriter summary(ctx.path("uniformize_summary.csv"),
                      {"T", "eps", "max_abs_A", "min_B", "max_B", "sup_abs_x_r_uT",
                       "max_abs_dev_r_uT", "truncation_bound", "domination_tightness"});
    std::optional<CsvWriter> sweep;
    if constexpr (B::is_contact)
      sweep.emplace(ctx.path("energy_sweep.csv"),
                    std::vector<std::string>{"T", "e_bar", "std_error", "gap"});
    json per_t = json::array();
    for (double T : ctx.cfg.uniformize_T) {
      double max_a = 0.0, min_b = std::numeric_limits<double>::infinity(), max_b = 0.0;
      double sup_x = 0.0, max_dev = 0.0, trunc = 0.0, tight = 0.0, eps_used = 0.0;
      bool band_ok = true, domination_ok = true, floored_any = false;
      std::vector<Eigen::ArrayXd> l2;
      for (std::size_t k = 0; k < ens.size(); ++k) {
        const OrbitSeries& s = ens[k];
        bool floored = false;
        UniformizeConfig ucfg{T, policy_eps(ctx.cfg, s, T, &floored), ctx.cfg.horizon,
                              ctx.cfg.horizon_factor};
        floored_any = floored_any || floored;
        eps_used = ucfg.eps;
        const UniformizedRate u = uniformized_rate(s, ucfg, ctx.cfg.uniformize_tolerance);
        const DominationReport dom = domination_check(s, ucfg);
        const double delta = s.r_u.maxCoeff() - s.r_u.minCoeff();
        max_a = std::max(max_a, u.A_T.abs().maxCoeff());
        min_b = std::min(min_b, u.B_T.minCoeff());
        max_b = std::max(max_b, u.B_T.maxCoeff());
        band_ok = band_ok && (u.B_T >= ucfg.eps * std::exp(-T * delta) * (1 - 1e-9)).all() &&
                  (u.B_T <= ucfg.eps * std::exp(T * delta) * (1 + 1e-9)).all();
        sup_x = std::max(sup_x, u.x_r_uT.abs().maxCoeff());
        max_dev = std::max(max_dev, (u.r_uT - h.mean).abs().maxCoeff());
        trunc = std::max(trunc, u.truncation_error_bound);
        tight = std::max(tight, dom.tightness);
        domination_ok = domination_ok && dom.holds;
        if constexpr (B::is_contact) l2.push_back(u.r_uT.square());
        if (k == 0) {
          CsvWriter csv(ctx.path("uniformize_T" + label(T) + ".csv"),
                        {"t", "r_u", "r_uT", "x_r_uT", "A_T", "B_T"});
          for (Eigen::Index i = 0; i < u.r_uT.size(); i += stride)
            csv.row({u.base_t[i], u.r_u[i], u.r_uT[i], u.x_r_uT[i], u.A_T[i], u.B_T[i]});
        }
      }
      summary.row({T, eps_used, max_a, min_b, max_b, sup_x, max_dev, trunc, tight});
      json entry{{"T", T},
                 {"eps", eps_used},
                 {"eps_floored", floored_any},
                 {"max_abs_A", max_a},
                 {"B_min", min_b},
                 {"B_max", max_b},
                 {"B_in_band", band_ok},
                 {"sup_abs_x_r_uT", sup_x},
                 {"max_abs_dev_r_uT", max_dev},
                 {"truncation_bound", trunc},
                 {"domination_holds", domination_ok},
                 {"domination_tightness", tight}};
      if (floored_any)
        ctx.warnings.push_back("T = " + label(T) + ": eps floored at 1e-6 (exp(-T delta) underflows"
                               " any usable horizon)");
      if (max_a > 1.0 + 1e-12) ctx.warnings.push_back("T = " + label(T) + ": |A_T| exceeds 1");
      if (!band_ok)
        ctx.warnings.push_back("T = " + label(T) +
                               ": B_T leaves the band [eps e^{-T delta}, eps e^{T delta}]");
      if constexpr (B::is_contact) {
        const EnergyEstimate E = dirichlet_energy(l2, ens.front().dt, backend.volume());
        const double gap = E.e_bar - h.mean * h.mean;
        sweep->row({T, E.e_bar, E.std_error, gap});
        entry["e_bar"] = E.e_bar;
        entry["e_bar_std_error"] = E.std_error;
        entry["gap"] = gap;
      }
      per_t.push_back(entry);
    }
    ctx.results["h_bar"] = h.mean;
    ctx.results["h_bar_std_error"] = h.std_error;
    ctx.results["per_T"] = per_t;
  }
}

// -------------------------------------------------------------- curvature

template <class B>
void cmd_curvature(const B& backend, Context& ctx) {
  if constexpr (!B::is_contact || !B::is_anosov) {
    throw ConfigError("curvature needs a contact Anosov backend (algebraic or perturbed)");
  } else {
    const MetricParams params = metric_params(ctx.cfg);
    const std::vector<OrbitSeries> ens = ensemble(backend, ctx);
    json per_orbit = json::array();
    for (std::size_t k = 0; k < ens.size(); ++k) {
      const OrbitSeries& s = ens[k];
      const TorsionSeries ts = torsion_series(s, evaluate_metric(params, backend, s), s.has_aux("K"));
      per_orbit.push_back(json{{"seed", s.seed},
                               {"lambda_sq", stats(ts.lambda_sq)},
                               {"ricci_x", stats(ts.ricci_x)},
                               {"kappa_u", stats(ts.kappa_u)},
                               {"kappa_s", stats(ts.kappa_s)}});
      if (k == 0) {
        CsvWriter csv(ctx.path("curvature.csv"),
                      {"t", "lambda_sq", "ricci_x", "kappa_u", "kappa_s"});
        for (Eigen::Index i = 0; i < s.size(); i += ctx.cfg.output_stride)
          csv.row({ts.t[i], ts.lambda_sq[i], ts.ricci_x[i], ts.kappa_u[i], ts.kappa_s[i]});
      }
    }
    ctx.results["orbits"] = per_orbit;
  }
}

// ---------------------------------------------------------------- realize

template <class B>
void cmd_realize(const B& backend, Context& ctx) {
  if constexpr (!std::is_same_v<B, AlgebraicBackend>) {
    throw ConfigError("realize needs the algebraic backend");
  } else {
    const std::vector<Complex> centers = default_basis_centers();
    const ScalarField eta = basis_field(centers, ctx.cfg.realize_eta, ctx.cfg.basis_width, 0.0, "eta");
    const ScalarField sigma =
        basis_field(centers, ctx.cfg.realize_sigma, ctx.cfg.basis_width, 0.0, "sigma");
    const std::vector<OrbitSeries> ens = ensemble(backend, ctx);
    double worst = 0.0;
    for (std::size_t k = 0; k < ens.size(); ++k) {
      const RealizationResult r =
          realize_ricci(backend, eta, sigma, ens[k], ctx.cfg.theta_margin);
      worst = std::max(worst, r.max_abs_diff);
      if (k == 0) {
        CsvWriter csv(ctx.path("realize.csv"), {"t", "f_target", "ricci_achieved"});
        for (Eigen::Index i = 0; i < ens[k].size(); i += ctx.cfg.output_stride)
          csv.row({ens[k].time(i), r.f_target[i], r.ricci_achieved[i]});
      }
    }
    ctx.results["max_abs_diff"] = worst;
    ctx.results["constant_ricci"] = 2.0 - 2.0 * backend.lambda0() * backend.lambda0();
  }
}

// ------------------------------------------------------------------ tanno

template <class B>
void cmd_tanno(const B& backend, Context& ctx) {
  if constexpr (!std::is_same_v<B, AlgebraicBackend>) {
    throw ConfigError("tanno needs the algebraic backend");
  } else {
    if (!metric_is_default(ctx.cfg))
      throw ConfigError("tanno is defined for the canonical metric only (metric.f, metric.theta empty)");
    const MetricParams params = metric_params(ctx.cfg);
    const std::vector<OrbitSeries> ens = ensemble(backend, ctx);
    CsvWriter csv(ctx.path("tanno.csv"),
                  {"seed", "residual", "x_lambda", "mu", "connection_residual"});
    double worst = 0.0, worst_x = 0.0;
    for (const OrbitSeries& s : ens) {
      const TannoReport r = tanno_residual_canonical(backend, params, s);
      csv.row(std::vector<std::string>{std::to_string(s.seed), format_double(r.residual),
                                       format_double(r.x_lambda), format_double(r.mu),
                                       format_double(r.connection_residual)});
      worst = std::max(worst, std::max(r.residual, r.connection_residual));
      worst_x = std::max(worst_x, r.x_lambda);
    }
    ctx.results["residual"] = worst;
    ctx.results["x_lambda"] = worst_x;
  }
}

// ------------------------------------------------------------- identities

struct Check {
  std::string name;
  double value;
  double tolerance;
};

template <class B>
std::vector<Check> battery(const B& backend, Context& ctx) {
  std::vector<Check> checks;
  const std::vector<OrbitSeries> ens = ensemble(backend, ctx);
  std::mt19937_64 rng(ctx.cfg.orbit_seeds().front() ^ 0x9e3779b97f4a7c15ULL);

  double additivity = 0.0;
  for (const OrbitSeries& s : ens) {
    const Eigen::Index mid = s.size() / 2;
    const double whole = stretch_integral(s, s.time(0), s.time(s.size() - 1));
    const double parts = stretch_integral(s, s.time(0), s.time(mid)) +
                         stretch_integral(s, s.time(mid), s.time(s.size() - 1));
    additivity = std::max(additivity, std::abs(whole - parts) / std::max(1.0, std::abs(whole)));
  }
  checks.push_back({"stretch_additivity", additivity, 1e-12});

  if constexpr (B::is_anosov) {
    double margin = std::numeric_limits<double>::infinity();
    for (const OrbitSeries& s : ens) margin = std::min(margin, (s.r_u - s.r_s).minCoeff());
    checks.push_back({"splitting_r_u_minus_r_s_negative_part", std::max(0.0, -margin), 0.0});
  }

  if constexpr (std::is_same_v<B, AlgebraicBackend>) {
    const double l = backend.lambda0();
    const FrameCheck fc = algebraic_frame_check(l);
    checks.push_back({"frame_brackets", fc.bracket_residual, 1e-12});
    // [X, e] = -r e for a frame vector with rate r.
    checks.push_back({"frame_stable_rate", std::abs(fc.stable_rate - l), 1e-12});
    checks.push_back({"frame_unstable_rate", std::abs(fc.unstable_rate + l), 1e-12});
    checks.push_back({"frame_pushforward", std::abs(fc.pushforward_stable_rate + l), 1e-12});
    const Group rel = word_product(octagon_relation());
    checks.push_back({"octagon_relation",
                      std::min((rel.m - Eigen::Matrix2d::Identity()).norm(),
                               (rel.m + Eigen::Matrix2d::Identity()).norm()),
                      1e-9});
    double du = 0.0, ds = 0.0;
    for (const OrbitSeries& s : ens) {
      du = std::max(du, (s.r_u - l).abs().maxCoeff());
      ds = std::max(ds, (s.r_s + l).abs().maxCoeff());
    }
    checks.push_back({"constant_r_u", du, 1e-9});
    checks.push_back({"constant_r_s", ds, 1e-9});
    const MetricParams canonical;
    double tanno = 0.0, xl = 0.0;
    for (const OrbitSeries& s : ens) {
      const TannoReport t = tanno_residual_canonical(backend, canonical, s);
      tanno = std::max({tanno, t.residual, t.connection_residual});
      xl = std::max(xl, t.x_lambda);
    }
    checks.push_back({"tanno_residual", tanno, 1e-9});
    checks.push_back({"x_lambda", xl, 1e-10});
    const ScalarField zero = ScalarField::constant_field(0.0);
    const RealizationResult r = realize_ricci(backend, zero, zero, ens.front());
    checks.push_back({"realize_constant",
                      std::max(r.max_abs_diff,
                               (r.ricci_achieved - (2.0 - 2.0 * l * l)).abs().maxCoeff()),
                      1e-8});
    double periodic = 0.0;
    for (const std::vector<int>& w : std::vector<std::vector<int>>{{0}, {1}, {0, 1}, {0, 2}, {1, 3, 5}}) {
      const ClosedGeodesic g = closed_geodesic_data(w, l);
      const double rate = std::log(g.lambda_u) / g.T;
      periodic = std::max(periodic, std::abs((2.0 - 2.0 * rate * rate) - (2.0 - 2.0 * l * l)));
    }
    checks.push_back({"periodic_orbit_ricci", periodic, 1e-9});
  }

  if constexpr (B::is_contact && B::is_anosov) {
    const IdentityResiduals id = random_field_identities(backend, ens, 1000, rng,
                                                         default_basis_centers(),
                                                         ctx.cfg.basis_width);
    checks.push_back({"angle_relation", id.angle, 1e-8});
    checks.push_back({"h_matrix_determinant", id.determinant, 1e-8});
    checks.push_back({"half_pi_reduction", id.reduction, 1e-8});
    const MetricParams canonical;
    std::vector<Eigen::ArrayXd> l2;
    double ricci = 0.0;
    for (const OrbitSeries& s : ens) {
      const TorsionSeries ts = torsion_series(s, canonical_metric(s), s.has_aux("K"));
      ricci = std::max(ricci, (ts.ricci_x - (2.0 - 2.0 * ts.lambda_sq)).abs().maxCoeff());
      l2.push_back(ts.lambda_sq);
    }
    checks.push_back({"ricci_identity", ricci, 0.0});
    const EnergyEstimate E = dirichlet_energy(l2, ens.front().dt, backend.volume());
    const Pooled h = pooled_rate(ens);
    const double floor_gap = E.e_bar - h.mean * h.mean;
    const double sig = std::hypot(E.std_error, 2.0 * h.mean * h.std_error);
    checks.push_back({"jensen_floor_deficit", std::max(0.0, -floor_gap - 4.0 * sig), 1e-12});
  }

  if constexpr (std::is_same_v<B, PerturbedBackend>) {
    checks.push_back({"curvature_negative", std::max(0.0, backend.max_curvature()), 0.0});
  }

  if constexpr (std::is_same_v<B, SuspensionBackend>) {
    const double T = ctx.cfg.uniformize_T.front();
    const OrbitSeries& s = ens.front();
    const UniformizeConfig ucfg{T, 1.0 / (T * T), std::nullopt, ctx.cfg.horizon_factor};
    const UniformizedRate u =
        uniformized_rate(s, ucfg, std::numeric_limits<double>::infinity());
    checks.push_back({"abs_A_le_1", std::max(0.0, u.A_T.abs().maxCoeff() - 1.0), 0.0});
    checks.push_back({"formula_vs_direct",
                      std::max(u.max_rate_disagreement, u.max_derivative_disagreement), 1e-4});
    checks.push_back({"cocycle", cocycle_residual(s, ucfg, 200, rng), 1e-9});
    const DominationReport dom = domination_check(s, ucfg);
    checks.push_back({"domination_excess",
                      std::max(0.0, dom.max_bounded_term - dom.bound - dom.tolerance), 0.0});
  }

  if constexpr (std::is_same_v<B, HopfBackend>) {
    double lam = 0.0, ric = 0.0;
    for (const OrbitSeries& s : ens) {
      lam = std::max(lam, s.column("lambda").abs().maxCoeff());
      ric = std::max(ric, (s.column("ricci_x") - 2.0).abs().maxCoeff());
    }
    checks.push_back({"hopf_lambda_zero", lam, 0.0});
    checks.push_back({"hopf_ricci_two", ric, 0.0});
    std::vector<Eigen::ArrayXd> l2;
    for (const OrbitSeries& s : ens) l2.push_back(s.column("lambda").square());
    checks.push_back({"hopf_energy_zero",
                      std::abs(dirichlet_energy(l2, ens.front().dt, backend.volume()).e_bar), 0.0});
  }
  return checks;
}

template <class B>
void cmd_identities(const B& backend, Context& ctx) {
  const std::vector<Check> checks = battery(backend, ctx);
  CsvWriter csv(ctx.path("identities.csv"), {"check", "value", "tolerance", "pass"});
  json list = json::array();
  bool all = true;
  for (const Check& c : checks) {
    const bool pass = c.value <= c.tolerance;
    all = all && pass;
    csv.row(std::vector<std::string>{c.name, format_double(c.value), format_double(c.tolerance),
                                     pass ? "1" : "0"});
    list.push_back(json{{"check", c.name}, {"value", c.value}, {"tolerance", c.tolerance},
                        {"pass", pass}});
  }
  ctx.results["checks"] = list;
  ctx.results["all_pass"] = all;
  if (!all) ctx.exit_code = kIdentityViolation;
}

// ------------------------------------------------------------------ orbit

template <class B>
void cmd_orbit(const B& backend, Context& ctx) {
  const std::vector<OrbitSeries> ens = ensemble(backend, ctx);
  for (const OrbitSeries& s : ens) {
    std::vector<std::string> header{"t", "r_u", "r_s"};
    for (const auto& [k, v] : s.aux) header.push_back(k);
    CsvWriter csv(ctx.path("orbit_seed_" + std::to_string(s.seed) + ".csv"), header);
    std::vector<double> row(header.size());
    for (Eigen::Index i = 0; i < s.size(); i += ctx.cfg.output_stride) {
      row[0] = s.time(i);
      row[1] = s.r_u[i];
      row[2] = s.r_s[i];
      std::size_t c = 3;
      for (const auto& [k, v] : s.aux) row[c++] = v[i];
      csv.row(row);
    }
  }
  ctx.results["orbits"] = ens.size();
  ctx.results["samples_per_orbit"] = ctx.cfg.samples();
}

template <class B>
void dispatch_command(const std::string& cmd, const B& backend, Context& ctx) {
  if (cmd == "entropy") return cmd_entropy(backend, ctx);
  if (cmd == "energy") return cmd_energy(backend, ctx);
  if (cmd == "uniformize") return cmd_uniformize(backend, ctx);
  if (cmd == "curvature") return cmd_curvature(backend, ctx);
  if (cmd == "realize") return cmd_realize(backend, ctx);
  if (cmd == "tanno") return cmd_tanno(backend, ctx);
  if (cmd == "identities") return cmd_identities(backend, ctx);
  if (cmd == "orbit") return cmd_orbit(backend, ctx);
  throw ConfigError("unknown command: " + cmd);
}

void execute(const std::string& cmd, Context& ctx) {
  const ExperimentConfig& c = ctx.cfg;
  if (c.backend == "algebraic") {
    dispatch_command(cmd, AlgebraicBackend(c.lambda0), ctx);
  } else if (c.backend == "perturbed") {
    PerturbedConfig pc;
    pc.factor = c.conformal;
    pc.warmup = c.perturbed_warmup;
    pc.dt_max = c.perturbed_dt_max;
    dispatch_command(cmd, PerturbedBackend(pc), ctx);
  } else if (c.backend == "suspension") {
    dispatch_command(cmd, SuspensionBackend(c.suspension), ctx);
  } else {
    dispatch_command(cmd, HopfBackend{}, ctx);
  }
}

void write_report(const Context& ctx, const std::string& cmd, int code, double seconds,
                  const std::string& error) {
  json report{{"command", cmd},
              {"config", ctx.cfg.echo},
              {"config_hash", ctx.cfg.config_hash},
              {"backend", ctx.cfg.backend},
              {"seeds", ctx.cfg.orbit_seeds()},
              {"results", ctx.results},
              {"warnings", ctx.warnings},
              {"exit_code", code},
              {"wall_clock_seconds", seconds}};
  if (!error.empty()) report["error"] = error;
  std::filesystem::create_directories(ctx.out_dir);
  std::ofstream out(ctx.path("report.json"), std::ios::binary | std::ios::trunc);
  out << report.dump(2) << '\n';
}

}  // namespace

const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"entropy", "energy",  "uniformize", "curvature",
                                          "realize", "tanno",   "identities", "orbit"};
  return c;
}

int run(const RunOptions& opt, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig cfg;
  try {
    if (std::find(commands().begin(), commands().end(), opt.command) == commands().end())
      throw ConfigError("unknown command: " + opt.command);
    cfg = load_config(opt.config_path);
    if (opt.seed) {
      cfg.seed = *opt.seed;
      cfg.echo["orbit.seed"] = *opt.seed;
    }
    if (opt.out_dir) cfg.output_dir = *opt.out_dir;
    if (opt.threads < 1) throw ConfigError("--threads must be >= 1");
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  Context ctx{cfg, cfg.output_dir, opt.threads, json::object(), {}, kOk};
  int code = kOk;
  std::string error;
  try {
    execute(opt.command, ctx);
    code = ctx.exit_code;
  } catch (const ConfigError& e) {
    code = kConfigError;
    error = e.what();
  } catch (const std::invalid_argument& e) {
    code = kConfigError;
    error = e.what();
  } catch (const NumericError& e) {
    code = kNumericFailure;
    error = e.what();
  } catch (const std::exception& e) {
    code = kNumericFailure;
    error = e.what();
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!error.empty()) log << (code == kConfigError ? "config error: " : "numeric failure: ") << error << '\n';
  for (const std::string& w : ctx.warnings) log << "warning: " << w << '\n';
  try {
    write_report(ctx, opt.command, code, seconds, error);
  } catch (const std::exception& e) {
    log << "cannot write report: " << e.what() << '\n';
    if (code == kOk) code = kNumericFailure;
  }
  return code;
}

}  // namespace anosov::cli
