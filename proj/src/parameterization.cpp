// Natural parameter vectors, data scaling, and the unrestricted stable
// parameterization used for fitting.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "numeric_util.hpp"
#include "snfit/errors.hpp"
#include "snfit/inference.hpp"

namespace snfit {
namespace {

using detail::inv_logit;
using detail::logit;

[[noreturn]] void outside(const std::string& what) { throw DomainError("parameters outside the stable region: " + what); }

std::size_t curve_size(Family f) { return Relationship::parameter_names(f).size(); }

double box_cox(double s, double lambda) {
  const double ls = std::log(s);
  if (std::abs(lambda) < 1e-12) return ls;
  return std::expm1(lambda * ls) / lambda;
}

double checked_log(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) outside(what);
  return std::log(v);
}

double checked_logit(double p, const char* what) {
  if (!(p > 0.0 && p < 1.0)) outside(what);
  return logit(p);
}

// Curve part of the stable vector.
std::vector<double> curve_to_stable(Family f, std::span<const double> v, const Anchors& a) {
  const Relationship r = Relationship::from_values(f, v);
  switch (f) {
    case Family::Basquin: {
      const double gh = r.log_g(a.s_high), gl = r.log_g(a.s_low);
      return {gh, checked_log(gl - gh, "log g(s_low) <= log g(s_high)")};
    }
    case Family::Stromeyer: {
      const double gamma = v[2];
      if (!(gamma < a.s_low)) outside("gamma at or above the lowest failure stress");
      const double gh = r.log_g(a.s_high), gl = r.log_g(a.s_low);
      return {gh, checked_log(gl - gh, "log g(s_low) <= log g(s_high)"),
              checked_logit(gamma / a.s_low, "gamma / s_low outside (0, 1)")};
    }
    case Family::BoxCox: {
      const double gh = r.log_g(a.s_high), gl = r.log_g(a.s_low);
      return {gh, checked_log(gl - gh, "log g(s_low) <= log g(s_high)"), v[2]};
    }
    case Family::CoffinManson: {
      const double yl = r.log_h(a.n_high), yh = r.log_h(a.n_low);
      const double slope = (yl - yh) / (std::log(a.n_high) - std::log(a.n_low));
      return {yl, checked_log(yh - yl, "flat curve"), checked_logit(v[2] / slope, "b / limit slope outside (0, 1)"),
              checked_log(slope - v[3], "c not below the limit slope")};
    }
    case Family::Nishijima: {
      const double e = v[3];
      const double yl = r.log_h(a.n_high), ym = r.log_h(a.n_mid), yh = r.log_h(a.n_low);
      const double ul = yl - e, uh = yh - e;
      const double mid_u = 0.5 * (yl + yh);
      const double mid_l = 2.0 * ul * uh / (ul + uh) + e;
      const double p = (mid_u - ym) / (mid_u - mid_l);
      return {yl, checked_log(yh - yl, "flat curve"), checked_logit(p, "mid-curve position outside (0, 1)"),
              checked_log(ul, "E at or above log s_low")};
    }
    case Family::RectHyperbola: {
      const double yl = r.log_h(a.n_high), yh = r.log_h(a.n_low);
      return {yl, checked_log(yh - yl, "flat curve"), checked_log(yl - v[2], "E at or above log s_low")};
    }
    case Family::ModifiedBastenaire: {
      const double e = v[3];
      if (!(e < a.s_low)) outside("E at or above the lowest failure stress");
      const double dh = r.log_g(a.s_high) + std::log(a.s_high - e);
      const double dl = r.log_g(a.s_low) + std::log(a.s_low - e);
      return {checked_logit(e / a.s_low, "E / s_low outside (0, 1)"), std::log(v[2]), dh,
              checked_log(dl - dh, "d(s_low) <= d(s_high)")};
    }
  }
  return {};
}

std::vector<double> curve_from_stable(Family f, std::span<const double> t, const Anchors& a) {
  const double lsl = std::log(a.s_low), lsh = std::log(a.s_high);
  switch (f) {
    case Family::Basquin: {
      const double b1 = std::exp(t[1]) / (lsl - lsh);
      return {t[0] - b1 * lsh, b1};
    }
    case Family::Stromeyer: {
      const double gamma = a.s_low * inv_logit(t[2]);
      const double xl = std::log(a.s_low - gamma), xh = std::log(a.s_high - gamma);
      const double b1 = std::exp(t[1]) / (xl - xh);
      return {t[0] - b1 * xh, b1, gamma};
    }
    case Family::BoxCox: {
      const double lambda = t[2];
      const double xl = box_cox(a.s_low, lambda), xh = box_cox(a.s_high, lambda);
      const double b1 = std::exp(t[1]) / (xl - xh);
      return {t[0] - b1 * xh, b1, lambda};
    }
    case Family::CoffinManson: {
      const double yl = t[0], yh = t[0] + std::exp(t[1]);
      const double xl = std::log(2.0 * a.n_low), xh = std::log(2.0 * a.n_high);
      const double slope = (yl - yh) / (std::log(a.n_high) - std::log(a.n_low));
      const double b = slope * inv_logit(t[2]);
      const double c = slope - std::exp(t[3]);
      // Solve Ael (2N)^b + Apl (2N)^c = S at both anchors.
      const double m11 = std::exp(b * xh), m12 = std::exp(c * xh);
      const double m21 = std::exp(b * xl), m22 = std::exp(c * xl);
      const double sl = std::exp(yl), sh = std::exp(yh);
      const double det = m11 * m22 - m12 * m21;
      const double a_el = (sl * m22 - m12 * sh) / det;
      const double a_pl = (m11 * sh - sl * m21) / det;
      if (!(a_el > 0.0) || !(a_pl >= 0.0)) outside("anchors imply a negative Coffin-Manson amplitude");
      return {a_el, a_pl, b, c};
    }
    case Family::Nishijima: {
      const double yl = t[0], yh = t[0] + std::exp(t[1]);
      const double e = yl - std::exp(t[3]);
      const double ul = yl - e, uh = yh - e;
      const double mid_u = 0.5 * (yl + yh);
      const double mid_l = 2.0 * ul * uh / (ul + uh) + e;
      const double ym = mid_u - inv_logit(t[2]) * (mid_u - mid_l);
      // A x - B - C / u = -y at the three anchor points.
      const double xs[3] = {std::log(a.n_high), std::log(a.n_mid), std::log(a.n_low)};
      const double ys[3] = {yl, ym, yh};
      Eigen::Matrix3d m;
      Eigen::Vector3d rhs;
      for (int i = 0; i < 3; ++i) {
        m(i, 0) = xs[i];
        m(i, 1) = -1.0;
        m(i, 2) = -1.0 / (ys[i] - e);
        rhs(i) = -ys[i];
      }
      const Eigen::Vector3d sol = m.fullPivLu().solve(rhs);
      if (!(sol(0) > 0.0) || !(sol(2) > 0.0) || !sol.allFinite()) outside("anchors imply A <= 0 or C <= 0");
      return {sol(0), sol(1), sol(2), e};
    }
    case Family::RectHyperbola: {
      const double yl = t[0], yh = t[0] + std::exp(t[1]);
      const double e = yl - std::exp(t[2]);
      const double ul = yl - e, uh = yh - e;
      const double xl = std::log(a.n_low), xh = std::log(a.n_high);
      const double b = (xl * uh - xh * ul) / (uh - ul);
      return {b, (xh - b) * ul, e};
    }
    case Family::ModifiedBastenaire: {
      const double e = a.s_low * inv_logit(t[0]);
      const double c = std::exp(t[1]);
      const double ph = std::pow(a.s_high - e, c), pl = std::pow(a.s_low - e, c);
      // B^-C = exp(t3) / ((s_high - E)^C - (s_low - E)^C)
      const double b = std::pow((ph - pl) / std::exp(t[3]), 1.0 / c);
      const double log_a = t[2] + std::pow((a.s_high - e) / b, c);
      return {std::exp(log_a), b, c, e};
    }
  }
  return {};
}

}  // namespace

std::vector<std::string> natural_names(const FitSpec& spec) {
  if (spec.rfl) return {"beta0", "beta1", "sigma", "mu_log_gamma", "sigma_log_gamma"};
  std::vector<std::string> out;
  for (auto n : Relationship::parameter_names(spec.family)) out.emplace_back(n);
  if (spec.spread == SpreadKind::Constant) {
    out.emplace_back("sigma");
  } else {
    out.emplace_back("sigma_b0");
    out.emplace_back("sigma_b1");
  }
  return out;
}

AnyModel build_model(const FitSpec& spec, std::span<const double> v) {
  if (v.size() != natural_names(spec).size()) throw DomainError("wrong number of natural parameters");
  for (double x : v)
    if (!std::isfinite(x)) throw DomainError("non-finite natural parameter");
  if (spec.rfl) {
    RflModel m{v[0], v[1], v[2], v[3], v[4], spec.dist, spec.rfl_gamma_dist};
    validate(m);
    return m;
  }
  const std::size_t k = curve_size(spec.family);
  Relationship r = Relationship::from_values(spec.family, v.subspan(0, k));
  Spread s = spec.spread == SpreadKind::Constant ? Spread(ConstantSpread{v[k]}) : Spread(LogLinearSpread{v[k], v[k + 1]});
  return ModelSpec(spec.orientation, std::move(r), spec.dist, s);
}

std::vector<double> natural_values(const FitSpec& spec, const AnyModel& model) {
  if (spec.rfl) {
    const auto& m = std::get<RflModel>(model);
    return {m.beta0, m.beta1, m.sigma_eps, m.mu_log_gamma, m.sigma_log_gamma};
  }
  const auto& m = std::get<ModelSpec>(model);
  std::vector<double> out = m.rel().values();
  if (const auto* c = std::get_if<ConstantSpread>(&m.spread())) {
    out.push_back(c->sigma);
  } else {
    const auto& l = std::get<LogLinearSpread>(m.spread());
    out.push_back(l.b0);
    out.push_back(l.b1);
  }
  return out;
}

std::vector<double> scale_natural(const FitSpec& spec, std::span<const double> v, double ms, double mn) {
  std::vector<double> o(v.begin(), v.end());
  const double a = std::log(ms), c = std::log(mn);
  if (spec.rfl) {
    o[0] = v[0] + v[1] * a - c;
    o[3] = v[3] - a;
    return o;
  }
  switch (spec.family) {
    case Family::Basquin: o[0] = v[0] + v[1] * a - c; break;
    case Family::Stromeyer:
      o[0] = v[0] + v[1] * a - c;
      o[2] = v[2] / ms;
      break;
    case Family::BoxCox:
      o[0] = v[0] + v[1] * box_cox(ms, v[2]) - c;
      o[1] = v[1] * std::pow(ms, v[2]);
      break;
    case Family::CoffinManson:
      o[0] = v[0] * std::pow(mn, v[2]) / ms;
      o[1] = v[1] * std::pow(mn, v[3]) / ms;
      break;
    case Family::Nishijima:
      o[1] = v[1] - a - v[0] * c;
      o[3] = v[3] - a;
      break;
    case Family::RectHyperbola:
      o[0] = v[0] - c;
      o[2] = v[2] - a;
      break;
    case Family::ModifiedBastenaire:
      o[0] = v[0] / (mn * ms);
      o[1] = v[1] / ms;
      o[3] = v[3] / ms;
      break;
  }
  if (spec.spread == SpreadKind::LogLinear) {
    const std::size_t k = curve_size(spec.family);
    o[k] = v[k] + v[k + 1] * a;
  }
  return o;
}

std::vector<double> unscale_natural(const FitSpec& spec, std::span<const double> v, double ms, double mn) {
  return scale_natural(spec, v, 1.0 / ms, 1.0 / mn);
}

Anchors compute_anchors(const Dataset& d) {
  Anchors a{std::numeric_limits<double>::infinity(), 0.0, std::numeric_limits<double>::infinity(), 0.0, 0.0};
  for (const auto& o : d.observations()) {
    a.n_low = std::min(a.n_low, o.cycles);
    if (o.status != Status::Failure) continue;
    a.s_low = std::min(a.s_low, o.stress);
    a.s_high = std::max(a.s_high, o.stress);
    a.n_high = std::max(a.n_high, o.cycles);
  }
  if (d.failures() == 0) throw DataError("no failures: likelihood unbounded/uninformative");
  if (!(a.s_high > a.s_low * (1.0 + 1e-12)))
    throw DataError("insufficient design: failures at a single stress level");
  if (!(a.n_high > a.n_low * (1.0 + 1e-12)))
    throw DataError("insufficient design: no spread in cycles between the shortest test and the longest failure");
  a.n_mid = std::sqrt(a.n_low * a.n_high);
  return a;
}

std::vector<std::string> stable_names(const FitSpec& spec) {
  if (spec.rfl) return {"beta0", "log_neg_beta1", "log_sigma", "mu_log_gamma", "log_sigma_log_gamma"};
  std::vector<std::string> out;
  switch (spec.family) {
    case Family::Basquin: out = {"log_g_high", "log_delta_g"}; break;
    case Family::Stromeyer: out = {"log_g_high", "log_delta_g", "logit_gamma"}; break;
    case Family::BoxCox: out = {"log_g_high", "log_delta_g", "lambda"}; break;
    case Family::CoffinManson: out = {"log_s_low", "log_delta_high_low", "qlogisp", "log_delta_slopes"}; break;
    case Family::Nishijima: out = {"log_s_low", "log_delta_high_low", "qlogisp", "log_delta_s_low_e"}; break;
    case Family::RectHyperbola: out = {"log_s_low", "log_delta_high_low", "log_delta_s_low_e"}; break;
    case Family::ModifiedBastenaire: out = {"logit_e", "log_c", "d_high", "log_delta_d"}; break;
  }
  if (spec.spread == SpreadKind::Constant) {
    out.emplace_back("log_sigma");
  } else {
    out.emplace_back("log_sigma_high");
    out.emplace_back("log_sigma_low");
  }
  return out;
}

std::vector<double> to_stable(const FitSpec& spec, std::span<const double> v, const Anchors& a) {
  build_model(spec, v);
  if (spec.rfl) return {v[0], std::log(-v[1]), std::log(v[2]), v[3], std::log(v[4])};
  const std::size_t k = curve_size(spec.family);
  std::vector<double> out = curve_to_stable(spec.family, v.subspan(0, k), a);
  if (spec.spread == SpreadKind::Constant) {
    out.push_back(std::log(v[k]));
  } else {
    out.push_back(v[k] + v[k + 1] * std::log(a.s_high));
    out.push_back(v[k] + v[k + 1] * std::log(a.s_low));
  }
  return out;
}

std::vector<double> from_stable(const FitSpec& spec, std::span<const double> t, const Anchors& a) {
  if (t.size() != stable_names(spec).size()) throw DomainError("wrong number of stable parameters");
  for (double x : t)
    if (!std::isfinite(x)) throw DomainError("non-finite stable parameter");
  std::vector<double> out;
  if (spec.rfl) {
    out = {t[0], -std::exp(t[1]), std::exp(t[2]), t[3], std::exp(t[4])};
  } else {
    const std::size_t k = curve_size(spec.family);
    out = curve_from_stable(spec.family, t.subspan(0, k), a);
    if (spec.spread == SpreadKind::Constant) {
      out.push_back(std::exp(t[k]));
    } else {
      const double b1 = (t[k + 1] - t[k]) / (std::log(a.s_low) - std::log(a.s_high));
      out.push_back(t[k] - b1 * std::log(a.s_high));
      out.push_back(b1);
    }
  }
  for (double x : out)
    if (!std::isfinite(x)) throw DomainError("stable point maps to non-finite parameters");
  build_model(spec, out);  // validates
  return out;
}

}  // namespace snfit
