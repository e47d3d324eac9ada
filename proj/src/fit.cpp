#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fit_internal.hpp"
#include "numeric_util.hpp"
#include "snfit/errors.hpp"
#include "snfit/inference.hpp"

namespace snfit {
namespace {

using detail::kInf;
using detail::to_eigen;
using detail::to_std;

constexpr double kPenalty = -1e10;
constexpr double kQlogisWall = 20.0;

struct Line {
  double a0;
  double a1;
  double sd;
};

// Least squares of log N on x(S) over the failures.
template <class X>
Line ols(const Dataset& d, X x) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& o : d.observations()) {
    if (o.status != Status::Failure) continue;
    const double xi = x(o.stress), yi = std::log(o.cycles);
    if (!std::isfinite(xi)) continue;
    sx += xi;
    sy += yi;
    sxx += xi * xi;
    sxy += xi * yi;
    ++n;
  }
  if (n == 0) return {0.0, -1.0, 1.0};
  const double mx = sx / n, my = sy / n;
  const double vxx = sxx / n - mx * mx;
  double a1 = vxx > 0.0 ? (sxy / n - mx * my) / vxx : -1.0;
  if (!(a1 < -1e-3)) a1 = -1.0;
  const double a0 = my - a1 * mx;
  double ss = 0.0;
  for (const auto& o : d.observations()) {
    if (o.status != Status::Failure) continue;
    const double xi = x(o.stress);
    if (!std::isfinite(xi)) continue;
    const double r = std::log(o.cycles) - a0 - a1 * xi;
    ss += r * r;
  }
  return {a0, a1, std::max(std::sqrt(ss / n), 0.05)};
}

double box_cox(double s, double lambda) {
  if (std::abs(lambda) < 1e-12) return std::log(s);
  return std::expm1(lambda * std::log(s)) / lambda;
}

void push_spread(const FitSpec& spec, std::vector<double>& v, const Line& l) {
  const double sigma = spec.orientation == Orientation::LifeSpecified ? l.sd : std::max(l.sd / std::abs(l.a1), 0.01);
  if (spec.spread == SpreadKind::Constant) {
    v.push_back(sigma);
  } else {
    v.push_back(std::log(sigma));
    v.push_back(0.0);
  }
}

void push_stable_spread(const FitSpec& spec, std::vector<double>& t, const Line& l) {
  const double sigma = spec.orientation == Orientation::LifeSpecified ? l.sd : std::max(l.sd / std::abs(l.a1), 0.01);
  t.push_back(std::log(sigma));
  if (spec.spread == SpreadKind::LogLinear) t.push_back(std::log(sigma));
}

// Candidate starting points in stable coordinates.
std::vector<std::vector<double>> starting_points(const FitSpec& spec, const Dataset& d, const Anchors& a) {
  std::vector<std::vector<double>> out;
  auto add_natural = [&](std::vector<double> v) {
    try {
      out.push_back(to_stable(spec, v, a));
    } catch (const std::exception&) {
    }
  };
  const Line base = ols(d, [](double s) { return std::log(s); });
  if (spec.rfl) {
    for (double f : {0.5, 0.8, 0.95}) {
      const double g = f * a.s_low;
      const Line l = ols(d, [&](double s) { return s > g ? std::log(s - g) : std::numeric_limits<double>::quiet_NaN(); });
      for (double sg : {0.05, 0.2}) add_natural({l.a0, l.a1, l.sd, std::log(g), sg});
    }
    return out;
  }
  switch (spec.family) {
    case Family::Basquin: {
      std::vector<double> v{base.a0, base.a1};
      push_spread(spec, v, base);
      add_natural(v);
      break;
    }
    case Family::Stromeyer:
      for (double f : {0.3, 0.6, 0.8, 0.95}) {
        const double g = f * a.s_low;
        const Line l = ols(d, [&](double s) { return s > g ? std::log(s - g) : std::numeric_limits<double>::quiet_NaN(); });
        std::vector<double> v{l.a0, l.a1, g};
        push_spread(spec, v, l);
        add_natural(v);
      }
      break;
    case Family::BoxCox:
      for (double lam : {-0.05, -0.5, -1.0, -2.0, -3.0}) {
        const Line l = ols(d, [&](double s) { return box_cox(s, lam); });
        std::vector<double> v{l.a0, l.a1, lam};
        push_spread(spec, v, l);
        add_natural(v);
      }
      break;
    case Family::CoffinManson:
    case Family::Nishijima:
    case Family::RectHyperbola: {
      // Straight log-log line through the failures, read at the anchors.
      const double yl = (std::log(a.n_high) - base.a0) / base.a1;
      const double yh = (std::log(a.n_low) - base.a0) / base.a1;
      if (!(yh > yl)) break;
      const double slope = (yl - yh) / (std::log(a.n_high) - std::log(a.n_low));
      if (spec.family == Family::CoffinManson) {
        for (double q : {-2.0, 0.0, 2.0})
          for (double f : {0.5, 2.0}) {
            std::vector<double> t{yl, std::log(yh - yl), q, std::log(f * std::abs(slope))};
            push_stable_spread(spec, t, base);
            out.push_back(t);
          }
        break;
      }
      std::vector<double> gaps;
      for (double f : {0.5, 0.8, 0.95})
        if (yl > std::log(f * a.s_low)) gaps.push_back(std::log(yl - std::log(f * a.s_low)));
      for (double g : {0.02, 0.2}) gaps.push_back(std::log(g));
      for (double g : gaps) {
        if (spec.family == Family::RectHyperbola) {
          std::vector<double> t{yl, std::log(yh - yl), g};
          push_stable_spread(spec, t, base);
          out.push_back(t);
          continue;
        }
        for (double q : {-2.0, 0.0, 2.0, 5.0}) {
          std::vector<double> t{yl, std::log(yh - yl), q, g};
          push_stable_spread(spec, t, base);
          out.push_back(t);
        }
      }
      break;
    }
    case Family::ModifiedBastenaire:
      for (double f : {0.3, 0.6, 0.9}) {
        const double e = f * a.s_low;
        auto dcurve = [&](double s) { return base.a0 + base.a1 * std::log(s) + std::log(s - e); };
        const double dh = dcurve(a.s_high);
        const double gap = std::max(dcurve(a.s_low) - dh, 0.1);
        for (double logc : {0.0, std::log(2.0)}) {
          std::vector<double> t{detail::logit(f), logc, dh, std::log(gap)};
          push_stable_spread(spec, t, base);
          out.push_back(t);
        }
      }
      break;
  }
  return out;
}

Eigen::MatrixXd jacobian(const std::function<std::vector<double>(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                         std::size_t m) {
  Eigen::MatrixXd j(static_cast<Eigen::Index>(m), x.size());
  Eigen::VectorXd y = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x(i)));
    y(i) = x(i) + h;
    const auto fp = f(y);
    y(i) = x(i) - h;
    const auto fm = f(y);
    y(i) = x(i);
    for (std::size_t r = 0; r < m; ++r) j(static_cast<Eigen::Index>(r), i) = (fp[r] - fm[r]) / (2.0 * h);
  }
  return j;
}

FittedModel fit_core(const FitSpec& spec, const Dataset& d, const FitOptions& opt) {
  if (d.failures() == 0) throw DataError("no failures: likelihood unbounded/uninformative");
  const double ms = opt.scale ? d.s_max() : 1.0;
  const double mn = opt.scale ? d.n_max() : 1.0;
  const Dataset sd = d.scaled(ms, mn);
  const Anchors a = compute_anchors(sd);
  const auto obj = detail::make_objective(spec, sd, a);

  auto starts = starting_points(spec, sd, a);
  if (opt.start) {
    try {
      starts.insert(starts.begin(), to_stable(spec, scale_natural(spec, *opt.start, ms, mn), a));
    } catch (const DomainError& e) {
      throw DomainError(std::string("starting point rejected: ") + e.what());
    }
  }
  std::vector<std::pair<double, Eigen::VectorXd>> ranked;
  for (const auto& s : starts) {
    const Eigen::VectorXd x = to_eigen(s);
    const double f = obj(x);
    if (std::isfinite(f)) ranked.emplace_back(f, x);
  }
  if (ranked.empty()) throw FitError("no valid starting point for the requested model", -kInf);
  if (opt.start) {
    ranked.resize(1);
  } else {
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
    ranked.resize(std::min<std::size_t>(ranked.size(), 3));
  }

  detail::OptResult best;
  best.f = kInf;
  int evals = 0, iters = 0;
  for (const auto& [f0, x0] : ranked) {
    auto r = detail::minimize(obj, x0, opt.max_evals);
    evals += r.evals;
    iters += r.iterations;
    if (r.f < best.f) best = r;
  }
  if (!std::isfinite(best.f)) throw FitError("optimization found no finite log-likelihood", -kInf);

  FittedModel fit(spec, build_model(spec, from_stable(spec, to_std(best.x), a)));
  fit.names = natural_names(spec);
  fit.stable = to_std(best.x);
  fit.anchors = a;
  fit.s_max = ms;
  fit.n_max = mn;
  fit.failures = d.failures();
  fit.observations = d.size();
  fit.iterations = iters;

  const auto natural_scaled = from_stable(spec, fit.stable, a);
  fit.natural = unscale_natural(spec, natural_scaled, ms, mn);
  fit.model = build_model(spec, fit.natural);

  const LogLik ll = log_likelihood(build_model(spec, natural_scaled), sd);
  fit.loglik = ll.value - static_cast<double>(d.failures()) * std::log(mn);
  if (ll.penalized > 0) {
    std::ostringstream os;
    os << "threshold conflict: " << ll.penalized << " failure(s) lie outside the fitted model's support";
    throw FitError(os.str(), fit.loglik);
  }

  const Eigen::VectorXd g = detail::num_gradient(obj, best.x, &evals);
  const bool grad_ok = g.allFinite() && g.lpNorm<Eigen::Infinity>() < 1e-6 * (1.0 + std::abs(best.f));
  fit.hessian = -detail::num_hessian(obj, best.x, best.f, &evals);
  fit.evaluations = evals;
  const auto n = best.x.size();
  fit.natural_se.assign(fit.natural.size(), std::numeric_limits<double>::quiet_NaN());
  if (fit.hessian.allFinite()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fit.hessian);
    fit.hessian_ok = es.info() == Eigen::Success && es.eigenvalues().maxCoeff() < 0.0;
  }
  fit.converged = grad_ok && fit.hessian_ok;
  if (fit.hessian_ok) {
    fit.covariance = (-fit.hessian).inverse();
    auto nat = [&](const Eigen::VectorXd& x) { return natural_from_stable(fit, to_std(x)); };
    try {
      const Eigen::MatrixXd j = jacobian(nat, best.x, fit.natural.size());
      const Eigen::MatrixXd cov = j * fit.covariance * j.transpose();
      for (std::size_t i = 0; i < fit.natural.size(); ++i)
        fit.natural_se[i] = std::sqrt(std::max(0.0, cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i))));
    } catch (const DomainError&) {
      // A neighbour of the optimum left the valid region; SEs stay NaN.
    }
  } else {
    fit.covariance = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
  }
  return fit;
}

// Relative profile likelihood of Nishijima's qlogisp at fixed values.
double relative_profile(const FittedModel& fit, const detail::Objective& obj, double q) {
  const auto [lp, x] = detail::profile_fixed(obj, to_eigen(fit.stable), 2, q, 3000);
  (void)x;
  const double lhat = -obj(to_eigen(fit.stable));
  return std::exp(std::min(0.0, lp - lhat));
}

}  // namespace

namespace detail {

Objective make_objective(const FitSpec& spec, const Dataset& scaled, const Anchors& a) {
  return [spec, &scaled, a](const Eigen::VectorXd& x) {
    if (!spec.rfl && spec.family == Family::Nishijima && std::abs(x(2)) > kQlogisWall) return kInf;
    try {
      const auto nat = from_stable(spec, to_std(x), a);
      const LogLik ll = log_likelihood(build_model(spec, nat), scaled);
      return std::isfinite(ll.value) ? -ll.value : kInf;
    } catch (const std::exception&) {
      return kInf;
    }
  };
}

std::pair<double, Eigen::VectorXd> profile_fixed(const Objective& obj, const Eigen::VectorXd& start, int fixed,
                                                 double value, int max_evals) {
  const auto n = start.size();
  Eigen::VectorXd rest(n - 1);
  for (Eigen::Index i = 0, k = 0; i < n; ++i)
    if (i != fixed) rest(k++) = start(i);
  auto expand = [&](const Eigen::VectorXd& r) {
    Eigen::VectorXd full(n);
    for (Eigen::Index i = 0, k = 0; i < n; ++i) full(i) = i == fixed ? value : r(k++);
    return full;
  };
  Objective sub = [&](const Eigen::VectorXd& r) { return obj(expand(r)); };
  const auto r = minimize(sub, rest, max_evals);
  return {-r.f, expand(r.x)};
}

}  // namespace detail

LogLik log_likelihood(const AnyModel& model, const Dataset& d) {
  LogLik out;
  if (d.empty()) {
    out.empty = true;
    return out;
  }
  auto add = [&](double lv) {
    if (std::isfinite(lv)) {
      out.value += lv;
    } else {
      out.value += kPenalty;
      ++out.penalized;
    }
  };
  if (const auto* m = std::get_if<ModelSpec>(&model)) {
    for (const auto& o : d.observations()) {
      if (o.status == Status::Failure) add(life_log_pdf(*m, o.cycles, o.stress));
      else add(life_log_sf(*m, o.cycles, o.stress));
    }
    return out;
  }
  const auto& r = std::get<RflModel>(model);
  for (const auto& o : d.observations()) {
    if (o.status == Status::Failure) add(std::log(rfl_life_pdf(r, o.cycles, o.stress)));
    else add(std::log1p(-rfl_life_cdf(r, o.cycles, o.stress)));
  }
  return out;
}

std::vector<double> natural_from_stable(const FittedModel& fit, std::span<const double> stable) {
  return unscale_natural(fit.spec, from_stable(fit.spec, stable, fit.anchors), fit.s_max, fit.n_max);
}

double stable_loglik(const FittedModel& fit, const Dataset& d, std::span<const double> stable) {
  const Dataset sd = d.scaled(fit.s_max, fit.n_max);
  return -detail::make_objective(fit.spec, sd, fit.anchors)(Eigen::Map<const Eigen::VectorXd>(
      stable.data(), static_cast<Eigen::Index>(stable.size())));
}

FittedModel fit_mle(const FitSpec& spec, const Dataset& d, const FitOptions& opt) {
  FittedModel fit = fit_core(spec, d, opt);
  if (spec.rfl || spec.family != Family::Nishijima || fit.stable[2] < 2.0) return fit;
  // A ridge toward large qlogisp means the data cannot tell the Nishijima
  // curve from its rectangular-hyperbola limit.
  const Dataset sd = d.scaled(fit.s_max, fit.n_max);
  const auto obj = detail::make_objective(spec, sd, fit.anchors);
  const double r10 = relative_profile(fit, obj, 10.0);
  const double r15 = relative_profile(fit, obj, 15.0);
  const double r20 = relative_profile(fit, obj, kQlogisWall);
  const double hi = std::max({r10, r15, r20}), lo = std::min({r10, r15, r20});
  if (!(r20 > 0.147 && hi - lo < 0.02)) return fit;
  FitSpec rh = spec;
  rh.family = Family::RectHyperbola;
  FitOptions o2 = opt;
  o2.start.reset();
  FittedModel alt = fit_core(rh, d, o2);
  std::ostringstream os;
  os << "nishijima profile likelihood for qlogisp is flat (relative likelihood " << r10 << " to " << r20
     << " over [10, 20]); reporting the rectangular-hyperbola limit as an equivalent fit";
  alt.note = os.str();
  return alt;
}

}  // namespace snfit
