#include "snfit/relationships.hpp"

#include <array>
#include <cmath>
#include <sstream>
#include <string>

#include "numeric_util.hpp"
#include "snfit/errors.hpp"

namespace snfit {
namespace {

using detail::kInf;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kLog2 = 0.69314718055994530942;
constexpr double kLambdaZero = 1e-12;
constexpr double kRootTol = 1e-12;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

[[noreturn]] void invalid(const std::string& what) { throw DomainError("invalid relationship: " + what); }

// Box-Cox transform (S^lambda - 1)/lambda with the log limit at lambda = 0.
double box_cox(double s, double lambda) {
  const double ls = std::log(s);
  if (std::abs(lambda) < kLambdaZero) return ls;
  return std::expm1(lambda * ls) / lambda;
}

// ---- Coffin-Manson: log h and its numeric inverse ----

double cm_log_h(const CoffinManson& p, double log_n) {
  const double l2n = log_n + kLog2;
  const double el = std::log(p.a_el) + p.b * l2n;
  if (p.a_pl == 0.0) return el;
  return detail::log_add_exp(el, std::log(p.a_pl) + p.c * l2n);
}

// d log h / d log N
double cm_elasticity(const CoffinManson& p, double log_n) {
  if (p.a_pl == 0.0) return p.b;
  const double l2n = log_n + kLog2;
  const double el = std::log(p.a_el) + p.b * l2n;
  const double pl = std::log(p.a_pl) + p.c * l2n;
  const double w_pl = detail::inv_logit(pl - el);
  return p.b * (1.0 - w_pl) + p.c * w_pl;
}

double cm_log_g(const CoffinManson& p, double stress) {
  const double ls = std::log(stress);
  if (p.a_pl == 0.0) return (ls - std::log(p.a_el)) / p.b - kLog2;
  if (p.b == 0.0 && ls <= std::log(p.a_el)) return kInf;
  // Each pure power-law term bounds the sum: the root lies between the
  // largest single-term solution at S and the largest one at S/2.
  auto term_root = [&](double target) {
    double r = (target - std::log(p.a_pl)) / p.c - kLog2;
    if (p.b < 0.0) r = std::max(r, (target - std::log(p.a_el)) / p.b - kLog2);
    return r;
  };
  double lo = term_root(ls);
  double hi = term_root(ls - kLog2);
  if (p.b == 0.0) {
    // Elastic term is the constant a_el: solve a_pl (2N)^c = S - a_el.
    hi = (std::log(stress - p.a_el) - std::log(p.a_pl)) / p.c - kLog2;
    lo = std::min(lo, hi) - 1.0;
    hi += 1.0;
  }
  if (!(hi > lo)) hi = lo + 1e-9;
  return detail::safe_newton(
      [&](double x) { return std::pair{cm_log_h(p, x) - ls, cm_elasticity(p, x)}; }, lo - 1e-9, hi + 1e-9,
      kRootTol);
}

// ---- Modified Bastenaire: log g and its numeric inverse ----

double mb_log_g(const ModifiedBastenaire& p, double stress) {
  const double d = stress - p.e;
  if (!(d > 0.0)) return kInf;
  return std::log(p.a) - std::pow(d / p.b, p.c) - std::log(d);
}

double mb_log_h(const ModifiedBastenaire& p, double cycles) {
  // Solve in v = log(S - E): log A - (e^v / B)^C - v = log N; strictly
  // decreasing and concave in v.
  const double target = std::log(cycles);
  const double log_b = std::log(p.b);
  auto f = [&](double v) { return std::log(p.a) - std::exp(p.c * (v - log_b)) - v - target; };
  auto fdf = [&](double v) {
    const double e = std::exp(p.c * (v - log_b));
    return std::pair{std::log(p.a) - e - v - target, -p.c * e - 1.0};
  };
  double hi = std::log(p.a) - target;  // f(hi) <= 0
  double lo = hi - 1.0;
  for (int k = 0; f(lo) < 0.0 && k < 200; ++k) lo -= std::ldexp(1.0, k);
  const double v = detail::safe_newton(fdf, lo, hi, kRootTol);
  if (p.e == 0.0) return v;
  return detail::log_add_exp(std::log(p.e), v);
}

double mb_dlogg_dx(const ModifiedBastenaire& p, double stress) {
  const double d = stress - p.e;
  return -(p.c / p.b) * std::pow(d / p.b, p.c - 1.0) - 1.0 / d;
}

void check_monotone(const Relationship& r) {
  // Slope sign on a log-spaced grid of the curve's natural direction.
  const Family f = r.family();
  const bool g_side = f == Family::Basquin || f == Family::Stromeyer || f == Family::BoxCox ||
                      f == Family::ModifiedBastenaire;
  for (int i = -8; i <= 8; ++i) {
    if (g_side) {
      const double lo = r.stress_lower();
      const double s = (lo > 0.0 ? lo : 1.0) * (1.0 + std::exp(0.5 * i));
      const double d = r.dlogg_dx_unchecked(s);
      if (!(d < 0.0)) invalid("curve is not strictly decreasing at stress " + fmt(s));
    } else {
      const double lo = r.cycles_lower();
      const double n = (lo > 0.0 ? lo : 1.0) * (1.0 + std::exp(1.5 * i));
      const double d = r.dlogh_dt_unchecked(n);
      if (!(d < 0.0)) invalid("curve is not strictly decreasing at cycles " + fmt(n));
    }
  }
}

const std::array<std::string_view, 7> kFamilyNames{"basquin",   "stromeyer",      "boxcox",
                                                   "coffin-manson", "nishijima", "rect-hyperbola",
                                                   "modified-bastenaire"};

}  // namespace

std::string_view to_string(Family f) { return kFamilyNames[static_cast<std::size_t>(f)]; }

Family family_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kFamilyNames.size(); ++i)
    if (kFamilyNames[i] == name) return static_cast<Family>(i);
  if (name == "box-cox") return Family::BoxCox;
  if (name == "coffinmanson" || name == "coffin_manson") return Family::CoffinManson;
  if (name == "rh" || name == "recthyperbola" || name == "rectangular-hyperbola") return Family::RectHyperbola;
  if (name == "bastenaire" || name == "modbastenaire") return Family::ModifiedBastenaire;
  throw DomainError("unknown relationship '" + std::string(name) + "'");
}

Relationship::Relationship(Params p) : params_(p) {
  std::visit(Overloaded{
                 [](const Basquin& q) {
                   if (!std::isfinite(q.beta0) || !(q.beta1 < 0.0)) invalid("basquin requires beta1 < 0");
                 },
                 [](const Stromeyer& q) {
                   if (!std::isfinite(q.beta0) || !(q.beta1 < 0.0)) invalid("stromeyer requires beta1 < 0");
                   if (!(q.gamma >= 0.0) || !std::isfinite(q.gamma)) invalid("stromeyer requires gamma >= 0");
                 },
                 [](const BoxCox& q) {
                   if (!std::isfinite(q.beta0) || !(q.beta1 < 0.0)) invalid("box-cox requires beta1 < 0");
                   if (!(q.lambda <= 0.0) || !std::isfinite(q.lambda)) invalid("box-cox requires lambda <= 0");
                 },
                 [](const CoffinManson& q) {
                   if (!(q.a_el > 0.0) || !std::isfinite(q.a_el)) invalid("coffin-manson requires Ael > 0");
                   if (!(q.a_pl >= 0.0) || !std::isfinite(q.a_pl)) invalid("coffin-manson requires Apl >= 0");
                   if (!(q.b <= 0.0)) invalid("coffin-manson requires b <= 0");
                   if (!(q.c < q.b)) invalid("coffin-manson requires c < b <= 0 (|c| > |b|)");
                   if (q.b == 0.0 && q.a_pl == 0.0) invalid("coffin-manson with b = 0 needs Apl > 0");
                 },
                 [](const Nishijima& q) {
                   if (!(q.a > 0.0) || !std::isfinite(q.a)) invalid("nishijima requires A > 0");
                   if (!(q.c > 0.0) || !std::isfinite(q.c)) invalid("nishijima requires C > 0");
                   if (!std::isfinite(q.b) || !std::isfinite(q.e)) invalid("nishijima requires finite B, E");
                 },
                 [](const RectHyperbola& q) {
                   if (!(q.c > 0.0) || !std::isfinite(q.c)) invalid("rect-hyperbola requires C > 0");
                   if (!std::isfinite(q.b) || !std::isfinite(q.e)) invalid("rect-hyperbola requires finite B, E");
                 },
                 [](const ModifiedBastenaire& q) {
                   if (!(q.a > 0.0) || !(q.b > 0.0) || !(q.c > 0.0) || !std::isfinite(q.a) ||
                       !std::isfinite(q.b) || !std::isfinite(q.c))
                     invalid("modified-bastenaire requires A, B, C > 0");
                   if (!(q.e >= 0.0) || !std::isfinite(q.e)) invalid("modified-bastenaire requires E >= 0");
                 },
             },
             params_);
  check_monotone(*this);
}

Relationship Relationship::from_values(Family f, std::span<const double> v) {
  const auto need = parameter_names(f).size();
  if (v.size() != need) invalid("expected " + std::to_string(need) + " parameters for " + std::string(to_string(f)));
  switch (f) {
    case Family::Basquin: return Relationship(Basquin{v[0], v[1]});
    case Family::Stromeyer: return Relationship(Stromeyer{v[0], v[1], v[2]});
    case Family::BoxCox: return Relationship(BoxCox{v[0], v[1], v[2]});
    case Family::CoffinManson: return Relationship(CoffinManson{v[0], v[1], v[2], v[3]});
    case Family::Nishijima: return Relationship(Nishijima{v[0], v[1], v[2], v[3]});
    case Family::RectHyperbola: return Relationship(RectHyperbola{v[0], v[1], v[2]});
    case Family::ModifiedBastenaire: return Relationship(ModifiedBastenaire{v[0], v[1], v[2], v[3]});
  }
  invalid("unknown family");
}

std::span<const std::string_view> Relationship::parameter_names(Family f) {
  static constexpr std::array<std::string_view, 2> basquin{"beta0", "beta1"};
  static constexpr std::array<std::string_view, 3> stromeyer{"beta0", "beta1", "gamma"};
  static constexpr std::array<std::string_view, 3> boxcox{"beta0", "beta1", "lambda"};
  static constexpr std::array<std::string_view, 4> cm{"Ael", "Apl", "b", "c"};
  static constexpr std::array<std::string_view, 4> nish{"A", "B", "C", "E"};
  static constexpr std::array<std::string_view, 3> rh{"B", "C", "E"};
  static constexpr std::array<std::string_view, 4> mb{"A", "B", "C", "E"};
  switch (f) {
    case Family::Basquin: return basquin;
    case Family::Stromeyer: return stromeyer;
    case Family::BoxCox: return boxcox;
    case Family::CoffinManson: return cm;
    case Family::Nishijima: return nish;
    case Family::RectHyperbola: return rh;
    case Family::ModifiedBastenaire: return mb;
  }
  return {};
}

std::vector<double> Relationship::values() const {
  return std::visit(Overloaded{
                        [](const Basquin& q) { return std::vector{q.beta0, q.beta1}; },
                        [](const Stromeyer& q) { return std::vector{q.beta0, q.beta1, q.gamma}; },
                        [](const BoxCox& q) { return std::vector{q.beta0, q.beta1, q.lambda}; },
                        [](const CoffinManson& q) { return std::vector{q.a_el, q.a_pl, q.b, q.c}; },
                        [](const Nishijima& q) { return std::vector{q.a, q.b, q.c, q.e}; },
                        [](const RectHyperbola& q) { return std::vector{q.b, q.c, q.e}; },
                        [](const ModifiedBastenaire& q) { return std::vector{q.a, q.b, q.c, q.e}; },
                    },
                    params_);
}

double Relationship::stress_lower() const {
  return std::visit(Overloaded{
                        [](const Stromeyer& q) { return q.gamma; },
                        [](const Nishijima& q) { return std::exp(q.e); },
                        [](const RectHyperbola& q) { return std::exp(q.e); },
                        [](const ModifiedBastenaire& q) { return q.e; },
                        [](const CoffinManson& q) { return q.b == 0.0 ? q.a_el : 0.0; },
                        [](const auto&) { return 0.0; },
                    },
                    params_);
}

double Relationship::cycles_lower() const {
  return std::visit(Overloaded{
                        [](const BoxCox& q) {
                          return std::abs(q.lambda) < kLambdaZero ? 0.0 : std::exp(q.beta0 - q.beta1 / q.lambda);
                        },
                        [](const RectHyperbola& q) { return std::exp(q.b); },
                        [](const auto&) { return 0.0; },
                    },
                    params_);
}

AsymptoteInfo Relationship::asymptotes() const {
  AsymptoteInfo a;
  std::visit(Overloaded{
                 [&](const Stromeyer& q) {
                   if (q.gamma > 0.0) a.horizontal = std::log(q.gamma);
                 },
                 [&](const BoxCox& q) {
                   if (std::abs(q.lambda) >= kLambdaZero) a.vertical = q.beta0 - q.beta1 / q.lambda;
                 },
                 [&](const CoffinManson& q) {
                   if (q.b == 0.0) a.horizontal = std::log(q.a_el);
                 },
                 [&](const Nishijima& q) { a.horizontal = q.e; },
                 [&](const RectHyperbola& q) {
                   a.vertical = q.b;
                   a.horizontal = q.e;
                 },
                 [&](const ModifiedBastenaire& q) {
                   if (q.e > 0.0) a.horizontal = std::log(q.e);
                 },
                 [](const Basquin&) {},
             },
             params_);
  return a;
}

double Relationship::log_g(double s) const {
  return std::visit(Overloaded{
                        [&](const Basquin& q) { return q.beta0 + q.beta1 * std::log(s); },
                        [&](const Stromeyer& q) {
                          const double d = s - q.gamma;
                          return d > 0.0 ? q.beta0 + q.beta1 * std::log(d) : kInf;
                        },
                        [&](const BoxCox& q) { return q.beta0 + q.beta1 * box_cox(s, q.lambda); },
                        [&](const CoffinManson& q) { return cm_log_g(q, s); },
                        [&](const Nishijima& q) {
                          const double u = std::log(s) - q.e;
                          return u > 0.0 ? (q.c / u - std::log(s) + q.b) / q.a : kInf;
                        },
                        [&](const RectHyperbola& q) {
                          const double u = std::log(s) - q.e;
                          return u > 0.0 ? q.b + q.c / u : kInf;
                        },
                        [&](const ModifiedBastenaire& q) { return mb_log_g(q, s); },
                    },
                    params_);
}

double Relationship::log_h(double n) const {
  return std::visit(Overloaded{
                        [&](const Basquin& q) { return (std::log(n) - q.beta0) / q.beta1; },
                        [&](const Stromeyer& q) {
                          const double u = (std::log(n) - q.beta0) / q.beta1;
                          return q.gamma > 0.0 ? detail::log_add_exp(std::log(q.gamma), u) : u;
                        },
                        [&](const BoxCox& q) {
                          const double r = (std::log(n) - q.beta0) / q.beta1;
                          if (std::abs(q.lambda) < kLambdaZero) return r;
                          const double w = q.lambda * r;
                          return w > -1.0 ? std::log1p(w) / q.lambda : kInf;
                        },
                        [&](const CoffinManson& q) { return cm_log_h(q, std::log(n)); },
                        [&](const Nishijima& q) {
                          const double d = q.a * std::log(n) - (q.b - q.e);
                          const double r = std::sqrt(d * d + 4.0 * q.c);
                          // E + (r - d)/2, written to avoid cancellation for d >> 0
                          return q.e + (d > 0.0 ? 2.0 * q.c / (r + d) : 0.5 * (r - d));
                        },
                        [&](const RectHyperbola& q) {
                          const double u = std::log(n) - q.b;
                          return u > 0.0 ? q.c / u + q.e : kInf;
                        },
                        [&](const ModifiedBastenaire& q) { return mb_log_h(q, n); },
                    },
                    params_);
}

double Relationship::dlogh_dt_unchecked(double t) const {
  return std::visit(Overloaded{
                        [&](const Basquin& q) { return 1.0 / (q.beta1 * t); },
                        [&](const Stromeyer& q) {
                          const double u = (std::log(t) - q.beta0) / q.beta1;
                          // e^u / (gamma + e^u)
                          const double frac = q.gamma > 0.0 ? detail::inv_logit(u - std::log(q.gamma)) : 1.0;
                          return frac / (t * q.beta1);
                        },
                        [&](const BoxCox& q) {
                          const double r = (std::log(t) - q.beta0) / q.beta1;
                          const double w = std::abs(q.lambda) < kLambdaZero ? 1.0 : 1.0 + q.lambda * r;
                          return 1.0 / (t * q.beta1 * w);
                        },
                        [&](const CoffinManson& q) { return cm_elasticity(q, std::log(t)) / t; },
                        [&](const Nishijima& q) {
                          const double d = q.a * std::log(t) - (q.b - q.e);
                          const double r = std::sqrt(d * d + 4.0 * q.c);
                          // -1 + d/r, cancellation-free for d >> 0
                          const double k = d > 0.0 ? -4.0 * q.c / (r * (r + d)) : (d - r) / r;
                          return q.a / (2.0 * t) * k;
                        },
                        [&](const RectHyperbola& q) {
                          const double u = std::log(t) - q.b;
                          return -q.c / (t * u * u);
                        },
                        [&](const ModifiedBastenaire& q) {
                          const double s = std::exp(mb_log_h(q, t));
                          return 1.0 / (t * s * mb_dlogg_dx(q, s));
                        },
                    },
                    params_);
}

double Relationship::dlogg_dx_unchecked(double x) const {
  return std::visit(Overloaded{
                        [&](const Basquin& q) { return q.beta1 / x; },
                        [&](const Stromeyer& q) { return q.beta1 / (x - q.gamma); },
                        [&](const BoxCox& q) { return q.beta1 * std::pow(x, q.lambda - 1.0); },
                        [&](const ModifiedBastenaire& q) { return mb_dlogg_dx(q, x); },
                        [&](const auto&) {
                          // Inverse-function rule through h.
                          const double t = std::exp(log_g(x));
                          return 1.0 / (x * t * dlogh_dt_unchecked(t));
                        },
                    },
                    params_);
}

double Relationship::eval_log_g(double s) const {
  if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("stress must be positive and finite");
  const double lo = stress_lower();
  if (s <= lo) throw DomainError("stress " + fmt(s) + " is at or below the curve's lower bound " + fmt(lo), lo, true);
  return log_g(s);
}

double Relationship::eval_log_h(double n) const {
  if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("cycles must be positive and finite");
  const double lo = cycles_lower();
  if (n <= lo) throw DomainError("cycles " + fmt(n) + " is at or below the curve's threshold " + fmt(lo), lo, true);
  return log_h(n);
}

double Relationship::invert_h(double s) const {
  if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("stress must be positive and finite");
  const double lo = stress_lower();
  if (s <= lo)
    throw RangeError("stress " + fmt(s) + " is below the horizontal asymptote " + fmt(lo),
                     RangeError::Side::BelowInfimum, lo);
  const double lg = log_g(s);
  if (!(lg < kInf) || std::isnan(lg))
    throw RangeError("stress " + fmt(s) + " is above the supremum of the curve", RangeError::Side::AboveSupremum, kInf);
  return std::exp(lg);
}

double Relationship::dlogh_dt(double t) const {
  eval_log_h(t);
  return dlogh_dt_unchecked(t);
}

double Relationship::dlogg_dx(double x) const {
  eval_log_g(x);
  return dlogg_dx_unchecked(x);
}

}  // namespace snfit
