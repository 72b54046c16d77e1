// Acceptance battery: one PASS/FAIL line per criterion.

#include "anosov/algebraic.hpp"
#include "anosov/cli.hpp"
#include "anosov/contact_metric.hpp"
#include "anosov/ergodic.hpp"
#include "anosov/hopf.hpp"
#include "anosov/optimize.hpp"
#include "anosov/perturbed.hpp"
#include "anosov/suspension.hpp"
#include "anosov/uniformize.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace anosov;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    notes.push_back(std::string(ok ? "ok " : "FAILED ") + what);
    pass = pass && ok;
  }
};

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<std::uint64_t> seeds(int n) {
  std::vector<std::uint64_t> s;
  for (int k = 1; k <= n; ++k) s.push_back(static_cast<std::uint64_t>(k));
  return s;
}

PerturbedConfig perturbed_config() {
  PerturbedConfig c;
  c.factor.centers = {{0.3, 0.2}, {-0.3, -0.2}};
  c.factor.amplitudes = {0.1, 0.1};
  c.factor.width = 1.0;
  c.factor.max_amplitude = 0.1;
  c.warmup = 40.0;
  return c;
}

// 1. Constant-curvature ground truth.
Outcome algebraic_ground_truth() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const AlgebraicBackend b(1.0);
  const auto ens = sample_ensemble(b, seeds(4), 0.01, 10001);
  double rate_err = 0.0, l2_err = 0.0, ricci_err = 0.0, kappa_err = 0.0;
  for (const OrbitSeries& s : ens) {
    rate_err = std::max({rate_err, (s.r_u - 1.0).abs().maxCoeff(), (s.r_s + 1.0).abs().maxCoeff()});
    const TorsionSeries ts = torsion_series(s, canonical_metric(s));
    l2_err = std::max(l2_err, (ts.lambda_sq - 1.0).abs().maxCoeff());
    ricci_err = std::max(ricci_err, ts.ricci_x.abs().maxCoeff());
    kappa_err = std::max({kappa_err, ts.kappa_u.abs().maxCoeff(), ts.kappa_s.abs().maxCoeff()});
  }
  const EntropyReport h = pesin_entropy(ens);
  const EnergyEstimate e = dirichlet_energy(b, MetricParams{}, ens);
  const TannoReport tr = tanno_residual_canonical(b, MetricParams{}, ens.front());
  const double runtime = seconds_since(t0);
  o.check(rate_err < 1e-9, "|r_u - 1|, |r_s + 1| = " + fmt(rate_err));
  o.check(h.h_bar == 1.0, "h_bar = " + fmt(h.h_bar));
  o.check(l2_err < 1e-9 && ricci_err < 1e-9 && kappa_err < 1e-9,
          "lambda^2, Ricci(X), kappa residuals " + fmt(l2_err) + ", " + fmt(ricci_err) + ", " +
              fmt(kappa_err));
  o.check(std::abs(e.e_bar - 1.0) < 1e-9 && std::abs(e.e_bar - h.h_bar * h.h_bar) < 1e-9,
          "E_bar = " + fmt(e.e_bar) + ", gap = " + fmt(e.e_bar - h.h_bar * h.h_bar));
  o.check(tr.residual < 1e-9, "Tanno residual " + fmt(tr.residual));
  o.check(tr.x_lambda < 1e-10, "X.lambda " + fmt(tr.x_lambda));
  o.check(runtime < 5.0, "runtime " + fmt(runtime) + " s");
  return o;
}

// 2. Riccati anchor on the trivial conformal factor.
Outcome riccati_anchor() {
  Outcome o;
  PerturbedConfig c;
  const PerturbedBackend pb(c);
  std::mt19937_64 rng(2);
  double conv = 0.0, indep = 0.0;
  for (int k = 0; k < 4; ++k) {
    const PerturbedState p = pb.random_point(rng);
    const double h = 0.01;
    const Eigen::ArrayXd track = pb.curvature_track(p, h, 3000);  // 30 time units
    const Eigen::ArrayXd a = riccati_rate(track, h, 20.0, 0.25);
    const Eigen::ArrayXd b = riccati_rate(track, h, 20.0, 4.0);
    conv = std::max({conv, (a - 1.0).abs().maxCoeff(), (b - 1.0).abs().maxCoeff()});
    indep = std::max(indep, (a - b).abs().maxCoeff());
  }
  o.check(conv < 1e-6, "|r_u - 1| after 20 units " + fmt(conv));
  o.check(indep < 1e-8, "start independence " + fmt(indep));
  return o;
}

// 3. Pointwise identities on random closed-form fields.
Outcome identity_battery() {
  Outcome o;
  auto report = [&](const std::string& name, const IdentityResiduals& r) {
    o.check(r.samples == 1000, name + " samples " + std::to_string(r.samples));
    o.check(r.angle < 1e-8, name + " angle relation " + fmt(r.angle));
    o.check(r.determinant < 1e-8, name + " determinant vs 4 lambda^2 " + fmt(r.determinant));
    o.check(r.reduction < 1e-8, name + " half-pi reduction " + fmt(r.reduction));
  };
  {
    const AlgebraicBackend b(1.0);
    const auto ens = sample_ensemble(b, seeds(4), 0.05, 2001);
    std::mt19937_64 rng(31);
    report("algebraic", random_field_identities(b, ens, 1000, rng, default_basis_centers(), 0.4));
  }
  {
    const PerturbedBackend b(perturbed_config());
    const auto ens = sample_ensemble(b, seeds(4), 0.05, 2001);
    std::mt19937_64 rng(32);
    report("perturbed", random_field_identities(b, ens, 1000, rng, default_basis_centers(), 0.4));
  }
  return o;
}

// Pooled Birkhoff mean and stderr of a list of columns.
EnergyEstimate pooled(const std::vector<Eigen::ArrayXd>& cols, double dt) {
  return dirichlet_energy(cols, dt, std::nullopt);
}

// 4. Energy infimum on the perturbed backend.
Outcome infimum() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const PerturbedBackend pb(perturbed_config());
  const double dt = 0.05, duration = 2e4;
  const auto n = static_cast<Eigen::Index>(std::llround(duration / dt)) + 1;
  const auto ens = sample_ensemble(pb, seeds(8), dt, n, 1);
  const EntropyReport h = pesin_entropy(ens);
  const double h2 = h.h_bar * h.h_bar;

  const EnergyEstimate e = dirichlet_energy(pb, MetricParams{}, ens);
  // Delta method: gap = mean(r^2) - h^2 has the fluctuation of r^2 - 2 h r.
  std::vector<Eigen::ArrayXd> lin;
  for (const OrbitSeries& s : ens) lin.push_back(s.r_u.square() - 2.0 * h.h_bar * s.r_u);
  const double sigma = pooled(lin, dt).std_error;
  const double gap = e.e_bar - h2;
  o.check(gap > 5.0 * sigma, "canonical gap " + fmt(gap) + " = " + fmt(gap / sigma) + " stderr (h_bar " +
                                 fmt(h.h_bar) + ", E_bar " + fmt(e.e_bar) + ")");

  std::vector<double> gaps;
  for (double T : {1.0, 4.0, 16.0, 64.0}) {
    UniformizeConfig cfg;
    cfg.T = T;
    cfg.eps = 1.0 / (T * T);
    cfg.horizon_factor = 10.0;
    std::vector<Eigen::ArrayXd> l2;
    double trunc = 0.0;
    for (const OrbitSeries& s : ens) {
      const UniformizedRate u = uniformized_rate(s, cfg, std::numeric_limits<double>::infinity());
      l2.push_back(u.r_uT.square());
      trunc = std::max(trunc, u.truncation_error_bound);
    }
    gaps.push_back(pooled(l2, dt).e_bar - h2);
    o.notes.push_back("   T = " + fmt(T) + ": E_bar(T) - h^2 = " + fmt(gaps.back()) + ", truncation " +
                      fmt(trunc));
  }
  o.check(gaps.back() <= 0.1 * gaps.front(),
          "uniformized gap T=64 " + fmt(gaps.back()) + " <= 0.1 x T=1 " + fmt(gaps.front()));

  const EnergyObjective obj(pb, ens, default_basis_centers(), 0.4, 2000);
  NelderMeadOptions opt;
  opt.budget = 1500;
  opt.step = 0.05;
  const EnergyOptimization r = optimize_energy(obj, opt);
  double lowest = std::numeric_limits<double>::infinity();
  for (double v : r.search.trace) lowest = std::min(lowest, v);
  o.check(lowest >= h2 - 3.0 * sigma, "optimizer best " + fmt(lowest) + " vs floor " + fmt(h2 - 3.0 * sigma) +
                                          " (canonical " + fmt(r.e_canonical) + ", " +
                                          std::to_string(r.search.evaluations) + " evaluations)");
  const double runtime = seconds_since(t0);
  o.check(runtime < 600.0, "runtime " + fmt(runtime) + " s single-threaded");
  return o;
}

// 5. Uniformization battery on the suspension.
Outcome suspension_battery() {
  Outcome o;
  for (double map_eps : {0.0, 0.02}) {
    const std::string tag = "eps " + fmt(map_eps) + ": ";
    const SuspensionBackend b({map_eps, 0.3, 50});
    const double dt = 0.01;
    const auto ens = sample_ensemble(b, {1}, dt, static_cast<Eigen::Index>(2e4 / dt) + 1);
    const OrbitSeries& s = ens.front();
    const double mean = birkhoff(s).mean;
    const double delta = s.r_u.maxCoeff() - s.r_u.minCoeff();
    std::mt19937_64 rng(5);

    double max_a = 0.0, cocycle = 0.0, disagreement = 0.0;
    bool band = true;
    std::vector<double> sup_x;
    std::vector<UniformizedRate> rates;
    for (double T : {1.0, 4.0, 16.0, 64.0}) {
      UniformizeConfig cfg;
      cfg.T = T;
      cfg.eps = 1.0 / (T * T);
      cfg.horizon_factor = 10.0;
      UniformizedRate u = uniformized_rate(s, cfg, std::numeric_limits<double>::infinity());
      max_a = std::max(max_a, u.A_T.abs().maxCoeff());
      band = band && (u.B_T >= cfg.eps * std::exp(-T * delta)).all() &&
             (u.B_T <= cfg.eps * std::exp(T * delta)).all();
      cocycle = std::max(cocycle, cocycle_residual(s, cfg, 1000, rng));
      disagreement =
          std::max({disagreement, u.max_rate_disagreement, u.max_derivative_disagreement});
      sup_x.push_back(u.x_r_uT.abs().maxCoeff());
      o.notes.push_back("   " + tag + "T = " + fmt(T) + ": sup|X.r_uT| " + fmt(sup_x.back()) +
                        ", truncation " + fmt(u.truncation_error_bound) + ", smooth " +
                        std::to_string(u.smooth.size()) + "/" + std::to_string(u.r_uT.size()));
      rates.push_back(std::move(u));
    }
    o.check(max_a <= 1.0, tag + "max |A_T| " + fmt(max_a));
    o.check(band, tag + "B_T inside [eps e^{-T delta}, eps e^{T delta}]");
    o.check(cocycle < 1e-9, tag + "cocycle " + fmt(cocycle));
    o.check(disagreement < 1e-4, tag + "formula vs direct " + fmt(disagreement));
    o.check(sup_x.back() <= 0.1 * sup_x.front(),
            tag + "sup|X.r_uT| ratio T=64/T=1 " + fmt(sup_x.back() / sup_x.front()));

    // Samples shared by the T = 4 and T = 64 evaluation bands.
    const UniformizedRate& a = rates[1];
    const UniformizedRate& c = rates[3];
    const Eigen::Index lo = std::max(a.first, c.first);
    const Eigen::Index hi = std::min(a.first + a.r_uT.size(), c.first + c.r_uT.size());
    Eigen::Index better = 0, total = 0;
    for (Eigen::Index i = lo; i < hi; ++i, ++total) {
      if (std::abs(c.r_uT[i - c.first] - mean) <= std::abs(a.r_uT[i - a.first] - mean)) ++better;
    }
    const double frac = total ? static_cast<double>(better) / static_cast<double>(total) : 0.0;
    o.check(frac >= 0.9, tag + "closer to the Birkhoff mean at T=64 than T=4 on " + fmt(100.0 * frac) +
                             "% of " + std::to_string(total) + " samples");
  }
  return o;
}

// 6. Cat-map entropy.
Outcome cat_entropy() {
  Outcome o;
  const SuspensionBackend b({0.0, 0.0, 50});
  const auto ens = sample_ensemble(b, seeds(4), 0.01, 1000001);
  const double h = pesin_entropy(ens).h_bar;
  const double truth = std::log((3.0 + std::sqrt(5.0)) / 2.0);
  o.check(std::abs(h - truth) < 1e-4, "h_bar " + fmt(h) + ", |h - ln lambda| " + fmt(std::abs(h - truth)));
  return o;
}

// 7. Closed geodesics.
Outcome periodic_orbits() {
  Outcome o;
  const double l0 = 1.0;
  const AlgebraicBackend b(l0);
  const std::vector<std::vector<int>> words{{0}, {1}, {0, 1}, {0, 2}, {1, 3, 5}};
  double closure = 0.0, rate = 0.0;
  bool ricci_exact = true;
  for (const auto& w : words) {
    const ClosedGeodesic cg = closed_geodesic_data(w, l0);
    closure = std::max(closure, point_distance(b.advance(cg.axis_point, cg.T), cg.axis_point));
    const double lu = std::log(cg.lambda_u) / cg.T;
    rate = std::max(rate, std::abs(lu - l0));
    const OrbitSeries s = sample_orbit(b, cg.axis_point, cg.T / 100.0, 101);
    const TorsionSeries ts = torsion_series(s, canonical_metric(s));
    for (Eigen::Index i = 0; i < ts.ricci_x.size(); ++i)
      ricci_exact = ricci_exact && (ts.ricci_x[i] == 2.0 - 2.0 * lu * lu);
  }
  o.check(closure < 1e-6, "closure " + fmt(closure));
  o.check(rate < 1e-9, "|ln(lambda_u)/T - lambda0| " + fmt(rate));
  o.check(ricci_exact, "2 - 2 (ln lambda_u / T)^2 equals the canonical Ricci(X)");
  return o;
}

// 8. Prescribed Ricci curvature.
Outcome realization() {
  Outcome o;
  const AlgebraicBackend b(1.0);
  const auto ens = sample_ensemble(b, seeds(1), 0.05, 2001);
  const auto centers = default_basis_centers();
  std::mt19937_64 rng(8);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    std::vector<double> a(centers.size()), c(centers.size());
    for (std::size_t j = 0; j < centers.size(); ++j) {
      a[j] = 0.2 * (2.0 * uniform01(rng) - 1.0);
      c[j] = 0.2 * (2.0 * uniform01(rng) - 1.0);
    }
    const RealizationResult r =
        realize_ricci(b, basis_field(centers, a, 0.4), basis_field(centers, c, 0.4), ens.front());
    worst = std::max(worst, r.max_abs_diff);
  }
  o.check(worst < 1e-8, "max |Ricci - target| over 10 pairs " + fmt(worst));
  const RealizationResult z = realize_ricci(b, ScalarField::constant_field(0.0),
                                            ScalarField::constant_field(0.0), ens.front());
  const double c = 2.0 - 2.0 * b.lambda0() * b.lambda0();
  o.check((z.ricci_achieved - c).abs().maxCoeff() == 0.0, "eta = sigma = 0 gives 2 - 2 h^2 = " + fmt(c));
  return o;
}

// 9. Hopf fibration.
Outcome hopf() {
  Outcome o;
  const HopfBackend b;
  const auto ens = sample_ensemble(b, seeds(4), 0.01, 1001);
  bool zero = true, two = true;
  for (const OrbitSeries& s : ens) {
    zero = zero && (s.column("lambda") == 0.0).all();
    two = two && (s.column("ricci_x") == 2.0).all();
  }
  const EnergyEstimate e = dirichlet_energy(b, MetricParams{}, ens);
  o.check(zero, "lambda == 0");
  o.check(two, "Ricci(X) == 2");
  o.check(e.e_bar == 0.0, "E_bar = " + fmt(e.e_bar));
  return o;
}

// 10. Byte-identical outputs.
Outcome determinism() {
  namespace fs = std::filesystem;
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "anosov_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  struct Case {
    std::string command;
    std::string config;
  };
  const std::vector<Case> cases{
      {"entropy", R"({"backend":"algebraic","orbit.duration":50})"},
      {"energy", R"({"backend":"perturbed","perturbed.centers":[[0.3,0.2],[-0.3,-0.2]],
                     "perturbed.amplitudes":[0.1,0.1],"perturbed.warmup":40,"orbit.dt":0.05,
                     "orbit.duration":200,"optimize.budget":50})"},
      {"uniformize", R"({"backend":"suspension","orbit.duration":300,"orbit.ensemble":2,
                         "uniformize.T":[1,4],"uniformize.eps_policy":"inverse_square",
                         "uniformize.horizon_factor":10,"uniformize.tolerance":1e-3})"},
      {"curvature", R"({"backend":"perturbed","perturbed.centers":[[0.3,0.2]],
                        "perturbed.amplitudes":[0.1],"perturbed.warmup":40,"orbit.dt":0.05,
                        "orbit.duration":50,"metric.theta":[0.05,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0.05]})"},
      {"realize", R"({"backend":"algebraic","orbit.duration":20,
                      "realize.eta":[0.1,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0]})"},
      {"identities", R"({"backend":"suspension","orbit.duration":200,"uniformize.T":[1],
                         "uniformize.horizon_factor":10})"},
  };
  std::size_t compared = 0;
  for (const Case& c : cases) {
    const fs::path cfg = root / (c.command + ".json");
    std::ofstream(cfg, std::ios::binary) << c.config;
    for (int run = 0; run < 2; ++run) {
      cli::RunOptions opt;
      opt.command = c.command;
      opt.config_path = cfg.string();
      opt.out_dir = (root / (c.command + std::to_string(run))).string();
      opt.threads = run == 0 ? 1 : 4;
      std::ostringstream log;
      const int code = cli::run(opt, log);
      if (code != 0) o.check(false, c.command + " exited with " + std::to_string(code) + ": " + log.str());
    }
    for (const auto& entry : fs::directory_iterator(root / (c.command + "0"))) {
      if (entry.path().extension() != ".csv") continue;
      const fs::path other = root / (c.command + "1") / entry.path().filename();
      auto read = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
      };
      const bool same = fs::exists(other) && read(entry.path()) == read(other);
      if (!same) o.check(false, c.command + "/" + entry.path().filename().string() + " differs");
      ++compared;
    }
  }
  o.check(compared >= 6, std::to_string(compared) + " CSV files identical across runs (1 vs 4 threads)");
  fs::remove_all(root);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"algebraic ground truth", algebraic_ground_truth},
      {"Riccati anchor", riccati_anchor},
      {"identity battery", identity_battery},
      {"energy infimum (perturbed)", infimum},
      {"uniformization battery (suspension)", suspension_battery},
      {"cat-map entropy", cat_entropy},
      {"closed geodesics", periodic_orbits},
      {"Ricci realization", realization},
      {"Hopf fibration", hopf},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    failed += o.pass ? 0 : 1;
    std::cout << "criterion " << k + 1 << " [" << criteria[k].first << "]: " << (o.pass ? "PASS" : "FAIL")
              << " (" << fmt(seconds_since(t0)) << " s)\n";
    for (const std::string& n : o.notes) std::cout << "    " << n << "\n";
    std::cout.flush();
  }
  std::cout << criteria.size() - static_cast<std::size_t>(failed) << "/" << criteria.size()
            << " criteria pass\n";
  return 0;
}
