#include <algorithm>
#include <cmath>

#include "fit_internal.hpp"
#include "numeric_util.hpp"
#include "snfit/errors.hpp"
#include "snfit/inference.hpp"

namespace snfit {
namespace {

using detail::kInf;
using detail::kNaN;
using detail::to_eigen;
using detail::to_std;

// The query on its working scale: log of a quantile, logit of a probability.
struct Target {
  const FittedModel& fit;
  Query q;

  double from_value(double v) const { return q.is_probability() ? detail::logit(v) : std::log(v); }
  double to_value(double tau) const { return q.is_probability() ? detail::inv_logit(tau) : std::exp(tau); }

  double operator()(const Eigen::VectorXd& th) const {
    try {
      const AnyModel m = build_model(fit.spec, natural_from_stable(fit, to_std(th)));
      const ExtendedQuantile e = evaluate(m, q);
      if (!e.is_finite()) return kInf;
      return from_value(e.value);
    } catch (const std::exception&) {
      return kNaN;
    }
  }
};

Eigen::VectorXd target_gradient(const Target& tau, const Eigen::VectorXd& x, double t0) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd y = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-5 * std::max(1.0, std::abs(x(i)));
    y(i) = x(i) + h;
    const double fp = tau(y);
    y(i) = x(i) - h;
    const double fm = tau(y);
    y(i) = x(i);
    if (std::isfinite(fp) && std::isfinite(fm)) g(i) = (fp - fm) / (2.0 * h);
    else if (std::isfinite(fp)) g(i) = (fp - t0) / h;
    else if (std::isfinite(fm)) g(i) = (t0 - fm) / h;
    else g(i) = kNaN;
  }
  return g;
}

double z_two_sided(double level) { return std_quantile(StdDist::Normal, 0.5 * (1.0 + level)); }

void check_level(double level) {
  if (!(level > 0.5 && level < 1.0)) throw DomainError("confidence level must lie in (0.5, 1)");
}

double unbounded_end(const Query& q, int dir) {
  if (q.is_probability()) return dir < 0 ? 0.0 : 1.0;
  return dir < 0 ? 0.0 : kInf;
}

ExtendedQuantile estimate_of(const FittedModel& fit, const Query& q) {
  const ExtendedQuantile e = evaluate(fit.model, q);
  if (!e.is_finite())
    throw RangeError("the estimate is infinite (atom at infinity); no interval on the log scale",
                     RangeError::Side::AboveSupremum, kInf);
  return e;
}

// Profile log-likelihood with the query held at tau = v.
class Profiler {
 public:
  Profiler(const FittedModel& fit, const Dataset& d, const Query& q)
      : tau_{fit, q}, scaled_(d.scaled(fit.s_max, fit.n_max)),
        obj_(detail::make_objective(fit.spec, scaled_, fit.anchors)), theta_hat_(to_eigen(fit.stable)) {
    lhat_ = -obj_(theta_hat_);
    tau_hat_ = tau_(theta_hat_);
    grad_ = target_gradient(tau_, theta_hat_, tau_hat_);
    if (grad_.allFinite()) grad_.cwiseAbs().maxCoeff(&j_);
  }

  double lhat() const { return lhat_; }
  double tau_hat() const { return tau_hat_; }
  bool degenerate() const { return !grad_.allFinite() || grad_.cwiseAbs().maxCoeff() < 1e-12; }
  const Target& tau() const { return tau_; }

  /// Maximized log-likelihood at tau = v, warm-started from `start`
  /// (updated to the maximizing point). -inf when v is unattainable.
  double at(double v, Eigen::VectorXd& start) const {
    const auto n = start.size();
    Eigen::VectorXd rest(n - 1);
    for (Eigen::Index i = 0, k = 0; i < n; ++i)
      if (i != j_) rest(k++) = start(i);
    double last = start(j_);
    auto expand = [&](const Eigen::VectorXd& r, double xj) {
      Eigen::VectorXd full(n);
      for (Eigen::Index i = 0, k = 0; i < n; ++i) full(i) = i == j_ ? xj : r(k++);
      return full;
    };
    detail::Objective sub = [&](const Eigen::VectorXd& r) {
      double xj = last;
      if (!solve(expand(r, xj), v, xj)) return kInf;
      const double f = obj_(expand(r, xj));
      if (std::isfinite(f)) last = xj;
      return f;
    };
    const double f0 = sub(rest);
    if (!std::isfinite(f0)) {
      // Re-solve from the MLE's coordinate before giving up.
      last = theta_hat_(j_);
      if (!std::isfinite(sub(rest))) return -kInf;
    }
    const auto r = detail::minimize(sub, rest, 4000);
    double xj = last;
    if (!std::isfinite(r.f) || !solve(expand(r.x, xj), v, xj)) return -kInf;
    start = expand(r.x, xj);
    return -r.f;
  }

 private:
  // Newton on the eliminated coordinate so that tau(theta) = v.
  bool solve(Eigen::VectorXd th, double v, double& xj) const {
    const double tol = 1e-10 * std::max(1.0, std::abs(v));
    double step_scale = 1.0;
    for (int it = 0; it < 60; ++it) {
      th(j_) = xj;
      const double f = tau_(th) - v;
      if (!std::isfinite(f)) return false;
      if (std::abs(f) < tol) return true;
      const double h = 1e-6 * std::max(1.0, std::abs(xj));
      th(j_) = xj + h;
      const double fp = tau_(th) - v;
      th(j_) = xj - h;
      const double fm = tau_(th) - v;
      double d = (fp - fm) / (2.0 * h);
      if (!std::isfinite(d) || d == 0.0) return false;
      double dx = -f / d;
      // Backtrack while the step leaves the valid region or does not help.
      bool moved = false;
      for (int k = 0; k < 30; ++k) {
        th(j_) = xj + step_scale * dx;
        const double fn = tau_(th) - v;
        if (std::isfinite(fn) && std::abs(fn) < std::abs(f)) {
          xj += step_scale * dx;
          moved = true;
          step_scale = std::min(1.0, step_scale * 2.0);
          break;
        }
        step_scale *= 0.5;
      }
      if (!moved) return false;
    }
    return false;
  }

  Target tau_;
  Dataset scaled_;
  detail::Objective obj_;
  Eigen::VectorXd theta_hat_;
  Eigen::VectorXd grad_;
  Eigen::Index j_ = 0;
  double lhat_ = 0.0;
  double tau_hat_ = 0.0;
};

struct SideResult {
  std::vector<double> ends;  // per critical value; NaN when unbounded
};

// Walks outward from the MLE until the deviance passes each critical value
// (ascending), then refines each crossing by regula falsi.
SideResult search_side(const Profiler& pr, int dir, double step, std::span<const double> crits) {
  SideResult out;
  out.ends.assign(crits.size(), kNaN);
  Eigen::VectorXd start = to_eigen(pr.tau().fit.stable);
  auto deviance = [&](double v, Eigen::VectorXd& st) {
    const double lp = pr.at(v, st);
    return std::isfinite(lp) ? std::max(0.0, 2.0 * (pr.lhat() - lp)) : kInf;
  };
  double v_in = pr.tau_hat(), d_in = 0.0;
  Eigen::VectorXd st_in = start;
  std::size_t next = 0;
  double h = step;
  for (int k = 0; k < 40 && next < crits.size(); ++k) {
    const double v = v_in + dir * h;
    Eigen::VectorXd st = st_in;
    const double dv = deviance(v, st);
    if (!std::isfinite(dv)) return out;  // unattainable beyond here: unbounded
    while (next < crits.size() && dv >= crits[next]) {
      // Regula falsi (Illinois) between v_in and v.
      double a = v_in, fa = d_in - crits[next], b = v, fb = dv - crits[next];
      Eigen::VectorXd sta = st_in;
      int side = 0;
      for (int it = 0; it < 40 && std::abs(b - a) > 1e-7 * std::max(1.0, std::abs(b)); ++it) {
        const double c = b - fb * (b - a) / (fb - fa);
        Eigen::VectorXd stc = sta;
        const double dc = deviance(c, stc);
        if (!std::isfinite(dc)) break;
        const double fc = dc - crits[next];
        if (std::abs(fc) < 1e-8) {
          a = b = c;
          break;
        }
        if (fc < 0.0) {
          a = c;
          fa = fc;
          sta = stc;
          if (side == -1) fb *= 0.5;
          side = -1;
        } else {
          b = c;
          fb = fc;
          if (side == 1) fa *= 0.5;
          side = 1;
        }
      }
      out.ends[next] = std::abs(fa) < std::abs(fb) ? a : b;
      ++next;
    }
    // Flat far from the MLE: treat as unbounded.
    if (k > 6 && dv - d_in < 1e-6) return out;
    v_in = v;
    d_in = dv;
    st_in = st;
    if (k >= 3) h *= 1.6;
  }
  return out;
}

}  // namespace

ExtendedQuantile evaluate(const AnyModel& model, const Query& q) {
  if (q.is_probability() ? !(q.p_or_value > 0.0) : !(q.p_or_value > 0.0 && q.p_or_value < 1.0))
    throw DomainError(q.is_probability() ? "value must be positive" : "probability must lie in (0, 1)");
  if (const auto* m = std::get_if<ModelSpec>(&model)) {
    switch (q.kind) {
      case Query::Kind::LifeQuantile: return life_quantile(*m, q.p_or_value, q.at);
      case Query::Kind::StrengthQuantile: return strength_quantile(*m, q.p_or_value, q.at);
      case Query::Kind::LifeCdf: return ExtendedQuantile::finite(life_cdf(*m, q.p_or_value, q.at));
      case Query::Kind::StrengthCdf: return ExtendedQuantile::finite(strength_cdf(*m, q.p_or_value, q.at));
    }
  }
  const auto& r = std::get<RflModel>(model);
  switch (q.kind) {
    case Query::Kind::LifeQuantile: return ExtendedQuantile::finite(rfl_quantile(r, q.p_or_value, Axis::Life, q.at));
    case Query::Kind::StrengthQuantile:
      return ExtendedQuantile::finite(rfl_quantile(r, q.p_or_value, Axis::Strength, q.at));
    case Query::Kind::LifeCdf: return ExtendedQuantile::finite(rfl_life_cdf(r, q.p_or_value, q.at));
    case Query::Kind::StrengthCdf: return ExtendedQuantile::finite(rfl_strength_cdf(r, q.p_or_value, q.at));
  }
  return ExtendedQuantile::finite(kNaN);
}

Interval wald_ci(const FittedModel& fit, const Query& q, double level) {
  check_level(level);
  if (!fit.hessian_ok) throw FitError("singular or indefinite Hessian; use the profile-likelihood method", fit.loglik);
  const ExtendedQuantile e = estimate_of(fit, q);
  Interval out;
  out.estimate = out.lower = out.upper = e.value;
  out.level = level;
  out.one_sided_lower = e.value;
  const Target tau{fit, q};
  const Eigen::VectorXd x = to_eigen(fit.stable);
  const double t0 = tau(x);
  if (!std::isfinite(t0)) return out;  // probability 0 or 1: nothing to spread
  const Eigen::VectorXd g = target_gradient(tau, x, t0);
  if (!g.allFinite()) throw FitError("target is not differentiable at the estimate; use the profile method", fit.loglik);
  const double se = std::sqrt(std::max(0.0, g.dot(fit.covariance * g)));
  const double z = z_two_sided(level);
  out.lower = tau.to_value(t0 - z * se);
  out.upper = tau.to_value(t0 + z * se);
  out.one_sided_lower = tau.to_value(t0 - z_two_sided(2.0 * level - 1.0) * se);
  return out;
}

Interval profile_lr_ci(const FittedModel& fit, const Dataset& d, const Query& q, double level) {
  check_level(level);
  const ExtendedQuantile e = estimate_of(fit, q);
  Interval out;
  out.estimate = out.lower = out.upper = e.value;
  out.level = level;
  out.one_sided_lower = e.value;
  const Profiler pr(fit, d, q);
  if (!std::isfinite(pr.tau_hat()) || pr.degenerate()) return out;

  double step = 0.0;
  if (fit.hessian_ok) {
    const Eigen::VectorXd g = target_gradient(pr.tau(), to_eigen(fit.stable), pr.tau_hat());
    step = std::sqrt(std::max(0.0, g.dot(fit.covariance * g)));
  }
  if (!(step > 1e-8) || !std::isfinite(step)) step = 0.05 * std::max(1.0, std::abs(pr.tau_hat()));
  step *= 0.75;

  const double z = z_two_sided(level), z1 = z_two_sided(2.0 * level - 1.0);
  const double c_two = z * z, c_one = z1 * z1;
  const double lo_crits[] = {c_one, c_two};
  const double hi_crits[] = {c_two};
  const SideResult lo = search_side(pr, -1, step, lo_crits);
  const SideResult hi = search_side(pr, +1, step, hi_crits);

  const Target& tau = pr.tau();
  out.one_sided_lower = std::isnan(lo.ends[0]) ? unbounded_end(q, -1) : tau.to_value(lo.ends[0]);
  out.lower_bounded = !std::isnan(lo.ends[1]);
  out.lower = out.lower_bounded ? tau.to_value(lo.ends[1]) : unbounded_end(q, -1);
  out.upper_bounded = !std::isnan(hi.ends[0]);
  out.upper = out.upper_bounded ? tau.to_value(hi.ends[0]) : unbounded_end(q, +1);
  return out;
}

}  // namespace snfit
