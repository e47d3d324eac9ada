#include "snfit/extended_models.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <string>

#include "numeric_util.hpp"
#include "snfit/errors.hpp"
#include "snfit/random.hpp"

namespace snfit {
namespace {

using boost::math::quadrature::gauss_kronrod;
using detail::kInf;

constexpr double kQuadTol = 1e-10;
constexpr double kQuadTarget = 1e-8;

// Standardized log-gamma range outside of which the kernel has < 1e-15 mass.
// The SEV lower tail decays only like e^u, hence the wide left bound.
double u_lower(StdDist d) { return d == StdDist::Normal ? -8.5 : -37.5; }
double u_upper(StdDist d) { return d == StdDist::Normal ? 8.5 : 3.7; }

void check_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(name) + " must be positive and finite");
}

// log(S - gamma) for log gamma = nu < log S, without cancellation.
double log_excess(double log_s, double nu) { return log_s + std::log(-std::expm1(nu - log_s)); }

// Integral over standardized u of integrand(log(S - gamma), log gamma) weighted by
// the log-gamma density, for fatigue limits below S.
template <class F>
double integrate_below(const RflModel& m, double stress, F integrand) {
  const double log_s = std::log(stress);
  const double a = u_lower(m.dist_gamma);
  const double b = std::min(u_upper(m.dist_gamma), (log_s - m.mu_log_gamma) / m.sigma_log_gamma);
  if (!(b > a)) return 0.0;
  auto f = [&](double u) {
    const double nu = m.mu_log_gamma + m.sigma_log_gamma * u;
    if (nu >= log_s) return 0.0;
    return integrand(log_excess(log_s, nu), nu) * detail::pdf(m.dist_gamma, u);
  };
  double err = 0.0;
  const double v = gauss_kronrod<double, 31>::integrate(f, a, b, 20, kQuadTol, &err);
  if (!(err <= kQuadTarget) || !std::isfinite(v))
    throw NumericError("random fatigue-limit quadrature did not converge", err);
  return v;
}

// F_N(t; S): the conditional life cdf averaged over fatigue limits below S.
double rfl_cdf_core(const RflModel& m, double log_t, double stress) {
  return integrate_below(m, stress, [&](double lx, double) {
    return detail::cdf(m.dist_n, (log_t - m.beta0 - m.beta1 * lx) / m.sigma_eps);
  });
}

template <class F>
double solve_increasing_log(F cdf_at_log, double p, double guess) {
  auto f = [&](double y) { return cdf_at_log(y) - p; };
  double lo = guess, hi = guess;
  double step = 0.5;
  while (f(hi) < 0.0) {
    lo = hi;
    hi += step;
    step *= 2.0;
    if (hi > 700.0) throw NumericError("quantile bracket search left the double range", hi);
  }
  step = 0.5;
  if (lo == hi) {
    while (f(lo) >= 0.0) {
      hi = lo;
      lo -= step;
      step *= 2.0;
      if (lo < -700.0) throw NumericError("quantile bracket search left the double range", lo);
    }
  }
  const double tol = 1e-11 * std::max(1.0, std::abs(hi));
  return detail::bisect(f, lo, hi, tol);
}

}  // namespace

void validate(const RflModel& m) {
  if (!std::isfinite(m.beta0) || !(m.beta1 < 0.0) || !std::isfinite(m.beta1))
    throw DomainError("random fatigue-limit model requires finite beta0 and beta1 < 0");
  if (!(m.sigma_eps > 0.0) || !(m.sigma_log_gamma > 0.0) || !std::isfinite(m.sigma_eps) ||
      !std::isfinite(m.sigma_log_gamma))
    throw DomainError("random fatigue-limit model requires positive scale parameters");
  if (!std::isfinite(m.mu_log_gamma)) throw DomainError("random fatigue-limit model requires finite mu_log_gamma");
}

double rfl_life_cdf(const RflModel& m, double t, double se) {
  validate(m);
  check_positive(t, "cycles");
  check_positive(se, "stress");
  return rfl_cdf_core(m, std::log(t), se);
}

double rfl_life_pdf(const RflModel& m, double t, double se) {
  validate(m);
  check_positive(t, "cycles");
  check_positive(se, "stress");
  const double log_t = std::log(t);
  return integrate_below(m, se, [&](double lx, double) {
           return detail::pdf(m.dist_n, (log_t - m.beta0 - m.beta1 * lx) / m.sigma_eps);
         }) /
         (t * m.sigma_eps);
}

double rfl_strength_cdf(const RflModel& m, double x, double ne) {
  validate(m);
  check_positive(x, "stress");
  check_positive(ne, "cycles");
  // A unit is weaker than x at Ne exactly when it fails by Ne at stress x.
  return rfl_cdf_core(m, std::log(ne), x);
}

double rfl_strength_pdf(const RflModel& m, double x, double ne) {
  validate(m);
  check_positive(x, "stress");
  check_positive(ne, "cycles");
  const double log_n = std::log(ne);
  // d/dx of the conditional cdf; the moving upper limit contributes nothing
  // because the conditional cdf vanishes as gamma approaches x.
  return integrate_below(m, x, [&](double lx, double) {
    const double z = (log_n - m.beta0 - m.beta1 * lx) / m.sigma_eps;
    return detail::pdf(m.dist_n, z) * (-m.beta1) / (m.sigma_eps * std::exp(lx));
  });
}

double rfl_quantile(const RflModel& m, double p, Axis axis, double at) {
  validate(m);
  if (!(p > 0.0 && p < 1.0)) throw DomainError("probability must lie in (0, 1)");
  check_positive(at, "conditioning value");
  if (axis == Axis::Life) {
    // As t grows the cdf tends to P(gamma < Se).
    const double sup = detail::cdf(m.dist_gamma, (std::log(at) - m.mu_log_gamma) / m.sigma_log_gamma);
    if (p >= sup - 1e-12)
      throw RangeError("probability " + std::to_string(p) + " exceeds the life cdf supremum " + std::to_string(sup),
                       RangeError::Side::AboveSupremum, sup);
    const double g = std::exp(m.mu_log_gamma);
    const double guess = m.beta0 + m.beta1 * std::log(at > g ? at - g : at * 0.5);
    return std::exp(solve_increasing_log([&](double y) { return rfl_cdf_core(m, y, at); }, p, guess));
  }
  const double log_n = std::log(at);
  const double guess = std::log(std::exp(m.mu_log_gamma) + std::exp((log_n - m.beta0) / m.beta1));
  return std::exp(solve_increasing_log([&](double y) { return rfl_cdf_core(m, log_n, std::exp(y)); }, p, guess));
}

double rfl_sample_life(const RflModel& m, double se, std::mt19937_64& rng) {
  const double nu = m.mu_log_gamma + m.sigma_log_gamma * draw_std(m.dist_gamma, rng);
  const double eps = draw_std(m.dist_n, rng);
  const double log_s = std::log(se);
  if (nu >= log_s) return kInf;
  return std::exp(m.beta0 + m.beta1 * log_excess(log_s, nu) + m.sigma_eps * eps);
}

void validate(const CastilloModel& m) {
  if (!std::isfinite(m.b) || !std::isfinite(m.e)) throw DomainError("castillo model requires finite B and E");
  if (!(m.gamma_c >= 0.0) || !std::isfinite(m.gamma_c)) throw DomainError("castillo model requires gamma >= 0");
  if (!(m.eta > 0.0) || !(m.beta_w > 0.0) || !std::isfinite(m.eta) || !std::isfinite(m.beta_w))
    throw DomainError("castillo model requires positive eta and beta");
}

CastilloWeibull castillo_weibull(const CastilloModel& m, double given, Axis axis) {
  validate(m);
  check_positive(given, "conditioning value");
  const double asym = axis == Axis::Life ? m.e : m.b;
  const double u = std::log(given) - asym;
  if (!(u > 0.0))
    throw DomainError(std::string(axis == Axis::Life ? "stress" : "cycles") + " must exceed the asymptote exp(" +
                          std::to_string(asym) + ")",
                      std::exp(asym), true);
  const double other = axis == Axis::Life ? m.b : m.e;
  return {other + m.gamma_c / u, m.eta / u};
}

double castillo_cdf(const CastilloModel& m, double value, double given, Axis axis) {
  check_positive(value, "value");
  const auto w = castillo_weibull(m, given, axis);
  const double r = (std::log(value) - w.threshold) / w.scale;
  if (!(r > 0.0)) return 0.0;
  return -std::expm1(-std::pow(r, m.beta_w));
}

double castillo_pdf(const CastilloModel& m, double value, double given, Axis axis) {
  check_positive(value, "value");
  const auto w = castillo_weibull(m, given, axis);
  const double r = (std::log(value) - w.threshold) / w.scale;
  if (!(r > 0.0)) return 0.0;
  const double rb = std::pow(r, m.beta_w);
  return m.beta_w / w.scale * rb / r * std::exp(-rb) / value;
}

double castillo_quantile(const CastilloModel& m, double p, double given, Axis axis) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("probability must lie in (0, 1)");
  const auto w = castillo_weibull(m, given, axis);
  return std::exp(w.threshold + w.scale * std::pow(-std::log1p(-p), 1.0 / m.beta_w));
}

double castillo_sample_life(const CastilloModel& m, double se, std::mt19937_64& rng) {
  const auto w = castillo_weibull(m, se, Axis::Life);
  const double e = -std::log(uniform_open(rng));
  return std::exp(w.threshold + w.scale * std::pow(e, 1.0 / m.beta_w));
}

}  // namespace snfit
