#include "anosov/optimize.hpp"

#include <algorithm>
#include <numeric>

namespace anosov {

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, const NelderMeadOptions& opt) {
  const Eigen::Index n = x0.size();
  NelderMeadResult res;
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x = x0;
  auto eval = [&](const Eigen::VectorXd& x) {
    const double v = f(x);
    ++res.evaluations;
    if (v < best) {
      best = v;
      best_x = x;
    }
    res.trace.push_back(best);
    return v;
  };

  std::vector<Eigen::VectorXd> pts{x0};
  std::vector<double> vals{eval(x0)};
  for (Eigen::Index i = 0; i < n && res.evaluations < opt.budget; ++i) {
    Eigen::VectorXd p = x0;
    p[i] += opt.step;
    pts.push_back(p);
    vals.push_back(eval(p));
  }
  const auto m = static_cast<std::size_t>(n + 1);
  std::vector<std::size_t> idx(pts.size());

  while (pts.size() == m && res.evaluations < opt.budget) {
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return vals[a] < vals[b];
    });
    const std::size_t lo = idx.front(), hi = idx.back(), nh = idx[m - 2];
    if (vals[hi] - vals[lo] < opt.f_tol) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k + 1 < m; ++k) centroid += pts[idx[k]];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd xr = centroid + (centroid - pts[hi]);
    const double fr = eval(xr);
    if (fr < vals[lo]) {
      if (res.evaluations >= opt.budget) {
        pts[hi] = xr;
        vals[hi] = fr;
        break;
      }
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[hi]);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[hi] = xe;
        vals[hi] = fe;
      } else {
        pts[hi] = xr;
        vals[hi] = fr;
      }
    } else if (fr < vals[nh]) {
      pts[hi] = xr;
      vals[hi] = fr;
    } else {
      if (res.evaluations >= opt.budget) break;
      const bool outside = fr < vals[hi];
      const Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid))
                                         : Eigen::VectorXd(centroid + 0.5 * (pts[hi] - centroid));
      const double fc = eval(xc);
      if (fc < (outside ? fr : vals[hi])) {
        pts[hi] = xc;
        vals[hi] = fc;
      } else {
        for (std::size_t k = 0; k < m && res.evaluations < opt.budget; ++k) {
          if (k == lo) continue;
          pts[k] = pts[lo] + 0.5 * (pts[k] - pts[lo]);
          vals[k] = eval(pts[k]);
        }
      }
    }
  }
  res.x = best_x;
  res.f = best;
  res.budget_exhausted = res.evaluations >= opt.budget;
  return res;
}

double EnergyObjective::operator()(const Eigen::VectorXd& c) const {
  const Eigen::VectorXd a = c.head(basis_);
  const Eigen::VectorXd b = c.tail(basis_);
  const Eigen::ArrayXd r = r_u_ + (deriv_ * a).array();
  const Eigen::ArrayXd theta = M_PI / 2 + (value_ * b).array();
  const Eigen::ArrayXd x_theta = (deriv_ * b).array();
  const double lo = margin_, hi = M_PI - margin_;
  const double violation =
      (lo - theta).max(0.0).sum() + (theta - hi).max(0.0).sum();
  if (violation > 0.0) return 1e3 * (1.0 + violation);
  const Eigen::ArrayXd sn = theta.sin();
  const Eigen::ArrayXd ct = theta.cos() / sn;
  const Eigen::ArrayXd xcot = -x_theta / sn.square();
  const Eigen::ArrayXd l2 = r.square() + 0.25 * (xcot - 2.0 * r * ct).square();
  KahanSum s;
  for (Eigen::Index i = 0; i < l2.size(); ++i) s.add(l2[i]);
  return s.value() / static_cast<double>(l2.size());
}

EnergyOptimization optimize_energy(const EnergyObjective& objective, const NelderMeadOptions& opt) {
  EnergyOptimization out;
  out.e_canonical = objective.canonical();
  out.search = nelder_mead(objective, Eigen::VectorXd::Zero(objective.dimension()), opt);
  out.e_best = out.search.f;
  return out;
}

}  // namespace anosov
