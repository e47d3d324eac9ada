#include "snfit/models.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "numeric_util.hpp"
#include "snfit/errors.hpp"

namespace snfit {
namespace {

using detail::kInf;

void check_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(name) + " must be positive and finite");
}

void check_p(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("probability must lie in (0, 1)");
}

bool is_life(const ModelSpec& m) { return m.orientation() == Orientation::LifeSpecified; }

// Life-specified models need Se inside the domain of g.
void check_life_stress(const ModelSpec& m, double se) {
  check_positive(se, "stress");
  if (!is_life(m)) return;
  const double lo = m.rel().stress_lower();
  if (se <= lo) throw DomainError("stress is at or below the curve's lower bound " + std::to_string(lo), lo, true);
}

// Strength-specified models need Ne inside the domain of h.
void check_strength_cycles(const ModelSpec& m, double ne) {
  check_positive(ne, "cycles");
  if (is_life(m)) return;
  const double lo = m.rel().cycles_lower();
  if (ne <= lo) throw DomainError("cycles is at or below the curve's threshold " + std::to_string(lo), lo, true);
}

double sigma_x(const ModelSpec& m) { return std::get<ConstantSpread>(m.spread()).sigma; }

// Standardized argument of the life cdf: F_N(t; Se) = Phi(z).
double life_z(const ModelSpec& m, double t, double se) {
  if (is_life(m)) return (std::log(t) - m.rel().log_g(se)) / sigma_at(m, se);
  return (std::log(se) - m.rel().log_h(t)) / sigma_x(m);
}

// Standardized argument of the strength cdf: F_X(x; Ne) = Phi(z).
double strength_z(const ModelSpec& m, double x, double ne) {
  if (is_life(m)) return (std::log(ne) - m.rel().log_g(x)) / sigma_at(m, x);
  return (std::log(x) - m.rel().log_h(ne)) / sigma_x(m);
}

// exp(log_value), or Infinite when it overflows the double range.
ExtendedQuantile from_log(double log_value) {
  const double v = std::exp(log_value);
  return std::isfinite(v) ? ExtendedQuantile::finite(v) : ExtendedQuantile::infinite();
}

// Solves F_X(x; Ne) = p for life-specified models with stress-dependent
// spread, where no closed form exists.
ExtendedQuantile strength_quantile_numeric(const ModelSpec& m, double p, double ne) {
  const Relationship& r = m.rel();
  auto f = [&](double lx) { return detail::cdf(m.dist(), strength_z(m, std::exp(lx), ne)) - p; };
  const double lo_bound = r.stress_lower() > 0.0 ? std::log(r.stress_lower()) : -700.0;
  double start = std::log(r.cycles_lower()) < std::log(ne) ? r.log_h(ne) : lo_bound + 1.0;
  if (!std::isfinite(start)) start = lo_bound + 1.0;
  double hi = start;
  double step = 0.25;
  while (f(hi) < 0.0) {
    hi += step;
    step *= 2.0;
    if (hi > 700.0) return ExtendedQuantile::infinite();
  }
  double lo = std::min(start, hi - 1e-3);
  step = 0.25;
  while (lo > lo_bound && f(lo) >= 0.0) {
    lo = std::max(lo - step, lo_bound);
    step *= 2.0;
  }
  if (lo <= lo_bound) {
    const double eps = std::max(1e-12, std::abs(lo_bound) * 1e-15);
    lo = lo_bound + eps;
    if (f(lo) >= 0.0) return ExtendedQuantile::at_threshold(std::exp(lo_bound));
  }
  return ExtendedQuantile::finite(std::exp(detail::bisect(f, lo, hi, 1e-13)));
}

}  // namespace

ExtendedQuantile ExtendedQuantile::infinite() { return {Kind::Infinite, kInf}; }

std::string_view to_string(Orientation o) { return o == Orientation::LifeSpecified ? "life" : "strength"; }

Orientation orientation_from_string(std::string_view name) {
  if (name == "life" || name == "life-specified") return Orientation::LifeSpecified;
  if (name == "strength" || name == "strength-specified") return Orientation::StrengthSpecified;
  throw DomainError("unknown orientation '" + std::string(name) + "' (expected life or strength)");
}

ModelSpec::ModelSpec(Orientation o, Relationship rel, StdDist dist, Spread spread)
    : orientation_(o), rel_(std::move(rel)), dist_(dist), spread_(spread) {
  if (const auto* c = std::get_if<ConstantSpread>(&spread_)) {
    if (!(c->sigma > 0.0) || !std::isfinite(c->sigma)) throw DomainError("spread sigma must be positive");
  } else {
    const auto& l = std::get<LogLinearSpread>(spread_);
    if (!std::isfinite(l.b0) || !std::isfinite(l.b1)) throw DomainError("log-linear spread needs finite coefficients");
    if (o != Orientation::LifeSpecified)
      throw DomainError("log-linear spread is only available for life-specified models");
  }
}

double sigma_at(const ModelSpec& m, double stress) {
  if (const auto* c = std::get_if<ConstantSpread>(&m.spread())) return c->sigma;
  const auto& l = std::get<LogLinearSpread>(m.spread());
  return std::exp(l.b0 + l.b1 * std::log(stress));
}

double life_cdf(const ModelSpec& m, double t, double se) {
  check_positive(t, "cycles");
  check_life_stress(m, se);
  return detail::cdf(m.dist(), life_z(m, t, se));
}

double life_pdf(const ModelSpec& m, double t, double se) {
  check_positive(t, "cycles");
  check_life_stress(m, se);
  return std::exp(life_log_pdf(m, t, se));
}

double life_log_pdf(const ModelSpec& m, double t, double se) {
  const Relationship& r = m.rel();
  if (is_life(m)) {
    const double lg = r.log_g(se);
    if (!std::isfinite(lg)) return -kInf;
    const double s = sigma_at(m, se);
    const double z = (std::log(t) - lg) / s;
    return detail::log_pdf(m.dist(), z) - std::log(t * s);
  }
  const double lh = r.log_h(t);
  if (!std::isfinite(lh)) return -kInf;
  const double s = sigma_x(m);
  const double z = (std::log(se) - lh) / s;
  const double d = r.dlogh_dt_unchecked(t);
  if (!(d < 0.0)) return -kInf;
  return detail::log_pdf(m.dist(), z) - std::log(s) + std::log(-d);
}

double life_log_sf(const ModelSpec& m, double t, double se) {
  return detail::log_sf(m.dist(), life_z(m, t, se));
}

ExtendedQuantile life_quantile(const ModelSpec& m, double p, double se) {
  check_p(p);
  check_life_stress(m, se);
  const double z = detail::quantile(m.dist(), p);
  const Relationship& r = m.rel();
  if (is_life(m)) return from_log(r.log_g(se) + z * sigma_at(m, se));
  if (p >= 1.0 - atom_probability(m, Axis::Life, se)) return ExtendedQuantile::infinite();
  const double lg = r.log_g(se * std::exp(-z * sigma_x(m)));
  if (!std::isfinite(lg)) return ExtendedQuantile::infinite();
  const double thr = r.cycles_lower();
  if (std::exp(lg) <= thr) return ExtendedQuantile::at_threshold(thr);
  return from_log(lg);
}

double strength_cdf(const ModelSpec& m, double x, double ne) {
  check_positive(x, "stress");
  check_strength_cycles(m, ne);
  return detail::cdf(m.dist(), strength_z(m, x, ne));
}

double strength_pdf(const ModelSpec& m, double x, double ne) {
  check_positive(x, "stress");
  check_strength_cycles(m, ne);
  const Relationship& r = m.rel();
  if (!is_life(m)) {
    const double s = sigma_x(m);
    return detail::pdf(m.dist(), (std::log(x) - r.log_h(ne)) / s) / (x * s);
  }
  if (x <= r.stress_lower()) return 0.0;
  const double lg = r.log_g(x);
  const double s = sigma_at(m, x);
  const double z = (std::log(ne) - lg) / s;
  // dz/dx, including the stress dependence of a log-linear spread
  double dz = -r.dlogg_dx_unchecked(x) / s;
  if (const auto* l = std::get_if<LogLinearSpread>(&m.spread())) dz -= z * l->b1 / x;
  return detail::pdf(m.dist(), z) * dz;
}

ExtendedQuantile strength_quantile(const ModelSpec& m, double p, double ne) {
  check_p(p);
  check_strength_cycles(m, ne);
  const double z = detail::quantile(m.dist(), p);
  const Relationship& r = m.rel();
  if (!is_life(m)) return from_log(r.log_h(ne) + z * sigma_x(m));
  if (std::holds_alternative<LogLinearSpread>(m.spread())) return strength_quantile_numeric(m, p, ne);
  if (p >= 1.0 - atom_probability(m, Axis::Strength, ne)) return ExtendedQuantile::infinite();
  const double lh = r.log_h(ne * std::exp(-z * sigma_x(m)));
  if (!std::isfinite(lh)) return ExtendedQuantile::infinite();
  const double x = std::exp(lh);
  const double thr = r.stress_lower();
  if (x <= thr) return ExtendedQuantile::at_threshold(thr);
  return ExtendedQuantile::finite(x);
}

double atom_probability(const ModelSpec& m, Axis axis, double at) {
  const AsymptoteInfo a = m.rel().asymptotes();
  if (axis == Axis::Life) {
    check_life_stress(m, at);
    if (is_life(m) || !a.horizontal) return 0.0;
    return detail::sf(m.dist(), (std::log(at) - *a.horizontal) / sigma_x(m));
  }
  check_strength_cycles(m, at);
  if (!is_life(m) || !a.vertical) return 0.0;
  const double d = std::log(at) - *a.vertical;
  if (const auto* c = std::get_if<ConstantSpread>(&m.spread())) return detail::sf(m.dist(), d / c->sigma);
  // Log-linear spread: sigma(x) tends to 0, a constant, or infinity as x grows.
  const double b1 = std::get<LogLinearSpread>(m.spread()).b1;
  if (b1 > 0.0) return detail::sf(m.dist(), 0.0);
  if (b1 == 0.0) return detail::sf(m.dist(), d / std::exp(std::get<LogLinearSpread>(m.spread()).b0));
  return d > 0.0 ? 0.0 : (d < 0.0 ? 1.0 : detail::sf(m.dist(), 0.0));
}

std::optional<MonotoneRange> monotone_range(const ModelSpec& m, double s_lo, double s_hi, double p_lo, double p_hi) {
  check_positive(s_lo, "stress");
  check_positive(s_hi, "stress");
  const auto* l = std::get_if<LogLinearSpread>(&m.spread());
  if (l == nullptr) return MonotoneRange{s_lo, s_hi, true};
  const Relationship& r = m.rel();
  const double z_lo = detail::quantile(m.dist(), p_lo);
  const double z_hi = detail::quantile(m.dist(), p_hi);
  constexpr int kGrid = 400;
  const double a = std::log(std::max(s_lo, r.stress_lower() * (1.0 + 1e-9)));
  const double b = std::log(s_hi);
  if (!(b > a)) return std::nullopt;
  // d log t_p / d log S = S g'(S)/g(S) + z_p sigma(S) b1 must be negative.
  std::vector<bool> ok(kGrid + 1);
  for (int i = 0; i <= kGrid; ++i) {
    const double s = std::exp(a + (b - a) * i / kGrid);
    const double base = s * r.dlogg_dx_unchecked(s);
    const double sg = sigma_at(m, s) * l->b1;
    ok[i] = base + z_lo * sg < 0.0 && base + z_hi * sg < 0.0;
  }
  int best_start = -1, best_len = 0;
  for (int i = 0; i <= kGrid;) {
    if (!ok[i]) {
      ++i;
      continue;
    }
    int j = i;
    while (j <= kGrid && ok[j]) ++j;
    if (j - i > best_len) {
      best_len = j - i;
      best_start = i;
    }
    i = j;
  }
  if (best_start < 0) return std::nullopt;
  const int end = best_start + best_len - 1;
  return MonotoneRange{std::exp(a + (b - a) * best_start / kGrid), std::exp(a + (b - a) * end / kGrid),
                       best_len == kGrid + 1};
}

}  // namespace snfit
