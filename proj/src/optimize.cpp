#include "optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace snfit::detail {

Eigen::VectorXd num_gradient(const Objective& f, const Eigen::VectorXd& x, int* evals) {
  const auto n = x.size();
  Eigen::VectorXd g(n);
  Eigen::VectorXd y = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x(i)));
    y(i) = x(i) + h;
    const double fp = f(y);
    y(i) = x(i) - h;
    const double fm = f(y);
    y(i) = x(i);
    g(i) = (fp - fm) / (2.0 * h);
  }
  if (evals) *evals += static_cast<int>(2 * n);
  return g;
}

Eigen::MatrixXd num_hessian(const Objective& f, const Eigen::VectorXd& x, double fx, int* evals) {
  const auto n = x.size();
  Eigen::VectorXd h(n);
  for (Eigen::Index i = 0; i < n; ++i) h(i) = 1e-4 * std::max(1.0, std::abs(x(i)));
  Eigen::MatrixXd hess(n, n);
  Eigen::VectorXd y = x;
  int count = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i) = x(i) + h(i);
    const double fp = f(y);
    y(i) = x(i) - h(i);
    const double fm = f(y);
    y(i) = x(i);
    hess(i, i) = (fp - 2.0 * fx + fm) / (h(i) * h(i));
    count += 2;
    for (Eigen::Index j = 0; j < i; ++j) {
      double v[4];
      const int si[4] = {1, 1, -1, -1}, sj[4] = {1, -1, 1, -1};
      for (int k = 0; k < 4; ++k) {
        y(i) = x(i) + si[k] * h(i);
        y(j) = x(j) + sj[k] * h(j);
        v[k] = f(y);
      }
      y(i) = x(i);
      y(j) = x(j);
      hess(i, j) = hess(j, i) = (v[0] - v[1] - v[2] + v[3]) / (4.0 * h(i) * h(j));
      count += 4;
    }
  }
  if (evals) *evals += count;
  return hess;
}

OptResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0, double step, int max_evals, double ftol) {
  const auto n = x0.size();
  std::vector<Eigen::VectorXd> pts(n + 1, x0);
  std::vector<double> vals(n + 1);
  for (Eigen::Index i = 0; i < n; ++i) pts[i + 1](i) += step * std::max(1.0, std::abs(x0(i)));
  int evals = 0;
  for (auto i = 0u; i < pts.size(); ++i) vals[i] = f(pts[i]);
  evals += static_cast<int>(n + 1);
  std::vector<std::size_t> idx(n + 1);
  int iter = 0;
  while (evals < max_evals) {
    ++iter;
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
    const std::size_t best = idx.front(), worst = idx.back(), second = idx[n - 1];
    double size = 0.0;
    for (const auto& p : pts) size = std::max(size, (p - pts[best]).lpNorm<Eigen::Infinity>());
    if (std::isfinite(vals[worst]) && vals[worst] - vals[best] <= ftol * (std::abs(vals[best]) + 1e-10) &&
        size < 1e-8)
      break;
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i <= static_cast<std::size_t>(n); ++i)
      if (i != worst) centroid += pts[i];
    centroid /= static_cast<double>(n);
    const Eigen::VectorXd xr = centroid + (centroid - pts[worst]);
    const double fr = f(xr);
    ++evals;
    if (fr < vals[best]) {
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = f(xe);
      ++evals;
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = xr;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const Eigen::VectorXd xc =
        outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid)) : Eigen::VectorXd(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = f(xc);
    ++evals;
    if (fc < std::min(fr, vals[worst])) {
      pts[worst] = xc;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= static_cast<std::size_t>(n); ++i) {
      if (i == best) continue;
      pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
      vals[i] = f(pts[i]);
      ++evals;
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
  return {pts[best], vals[best], evals, iter};
}

OptResult bfgs(const Objective& f, const Eigen::VectorXd& x0, int max_evals, double gtol) {
  const auto n = x0.size();
  int evals = 0;
  Eigen::VectorXd x = x0;
  double fx = f(x);
  ++evals;
  Eigen::VectorXd g = num_gradient(f, x, &evals);
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n);
  int iter = 0;
  bool reset = false;
  while (evals < max_evals && std::isfinite(fx)) {
    ++iter;
    if (!g.allFinite() || g.lpNorm<Eigen::Infinity>() < gtol * (1.0 + std::abs(fx))) break;
    Eigen::VectorXd d = -hinv * g;
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      hinv.setIdentity();
      d = -g;
      slope = g.dot(d);
    }
    double alpha = 1.0;
    double fn = fx;
    Eigen::VectorXd xn = x;
    bool ok = false;
    for (int k = 0; k < 50 && evals < max_evals; ++k) {
      xn = x + alpha * d;
      fn = f(xn);
      ++evals;
      if (std::isfinite(fn) && fn <= fx + 1e-4 * alpha * slope) {
        ok = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!ok) {
      if (reset) break;
      hinv.setIdentity();
      reset = true;
      continue;
    }
    reset = false;
    const Eigen::VectorXd s = xn - x;
    const Eigen::VectorXd gn = num_gradient(f, xn, &evals);
    const Eigen::VectorXd y = gn - g;
    const double sy = s.dot(y);
    const double df = fx - fn;
    x = xn;
    fx = fn;
    g = gn;
    if (sy > 1e-14 * s.norm() * y.norm()) {
      if (iter == 1) hinv *= sy / y.dot(y);
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
      hinv = (id - rho * s * y.transpose()) * hinv * (id - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    if (s.lpNorm<Eigen::Infinity>() < 1e-13 * (1.0 + x.lpNorm<Eigen::Infinity>()) && df < 1e-14 * (1.0 + std::abs(fx)))
      break;
  }
  return {x, fx, evals, iter};
}

OptResult minimize(const Objective& f, const Eigen::VectorXd& x0, int max_evals) {
  OptResult best = nelder_mead(f, x0, 0.2, max_evals / 3, 1e-10);
  int evals = best.evals, iters = best.iterations;
  // A second, smaller simplex guards against premature collapse.
  OptResult nm2 = nelder_mead(f, best.x, 0.05, std::max(100, max_evals / 6), 1e-12);
  evals += nm2.evals;
  iters += nm2.iterations;
  if (nm2.f <= best.f) best = nm2;
  OptResult q = bfgs(f, best.x, std::max(100, max_evals - evals - 200));
  evals += q.evals;
  iters += q.iterations;
  if (q.f <= best.f) best = q;
  // Newton polish.
  for (int k = 0; k < 8 && evals < max_evals; ++k) {
    const Eigen::VectorXd g = num_gradient(f, best.x, &evals);
    const Eigen::MatrixXd h = num_hessian(f, best.x, best.f, &evals);
    Eigen::LLT<Eigen::MatrixXd> llt(h);
    if (llt.info() != Eigen::Success || !g.allFinite()) break;
    const Eigen::VectorXd step = -llt.solve(g);
    double alpha = 1.0;
    bool improved = false;
    for (int j = 0; j < 20; ++j) {
      const Eigen::VectorXd xn = best.x + alpha * step;
      const double fn = f(xn);
      ++evals;
      if (std::isfinite(fn) && fn <= best.f) {
        improved = fn < best.f;
        best.x = xn;
        best.f = fn;
        break;
      }
      alpha *= 0.5;
    }
    ++iters;
    if (!improved || (alpha * step).lpNorm<Eigen::Infinity>() < 1e-9 * (1.0 + best.x.lpNorm<Eigen::Infinity>())) break;
  }
  best.evals = evals;
  best.iterations = iters;
  return best;
}

}  // namespace snfit::detail
