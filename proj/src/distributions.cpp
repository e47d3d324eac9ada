#include "snfit/distributions.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "snfit/errors.hpp"

namespace snfit {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

// Acklam's rational approximation to the normal quantile on (0, 0.5].
// Relative error below 1.2e-9; refined by one Newton step afterwards.
double normal_quantile_lower(double p) {
  static constexpr std::array<double, 6> a{-3.969683028665376e+01, 2.209460984245205e+02,
                                           -2.759285104469687e+02, 1.383577518672690e+02,
                                           -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr std::array<double, 5> b{-5.447609879822406e+01, 1.615858368580409e+02,
                                           -1.556989798598866e+02, 6.680131188771972e+01,
                                           -1.328068155288572e+01};
  static constexpr std::array<double, 6> c{-7.784894002430293e-03, -3.223964580411365e-01,
                                           -2.400758277161838e+00, -2.549732539343734e+00,
                                           4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr std::array<double, 4> d{7.784695709041462e-03, 3.224671290700398e-01,
                                           2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double z;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    z = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    z = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  // Newton refinement against the erfc-based cdf.
  const double err = 0.5 * std::erfc(-z * kInvSqrt2) - p;
  const double dens = std::exp(-0.5 * z * z - kLogSqrt2Pi);
  if (dens > 0.0) z -= err / dens;
  return z;
}

void check_z(double z) {
  if (!std::isfinite(z)) throw DomainError("standardized argument must be finite");
}

}  // namespace

std::string_view to_string(StdDist d) {
  return d == StdDist::Normal ? "lognormal" : "weibull";
}

StdDist std_dist_from_string(std::string_view name) {
  if (name == "lognormal" || name == "normal") return StdDist::Normal;
  if (name == "weibull" || name == "sev") return StdDist::SEV;
  throw DomainError("unknown distribution '" + std::string(name) + "' (expected lognormal or weibull)");
}

namespace detail {

double cdf(StdDist d, double z) noexcept {
  if (d == StdDist::Normal) return 0.5 * std::erfc(-z * kInvSqrt2);
  // 1 - exp(-exp(z)) without cancellation for very negative z.
  return -std::expm1(-std::exp(z));
}

double sf(StdDist d, double z) noexcept {
  if (d == StdDist::Normal) return 0.5 * std::erfc(z * kInvSqrt2);
  return std::exp(-std::exp(z));
}

double pdf(StdDist d, double z) noexcept {
  if (std::isinf(z)) return 0.0;
  return std::exp(log_pdf(d, z));
}

double log_pdf(StdDist d, double z) noexcept {
  if (std::isinf(z)) return -std::numeric_limits<double>::infinity();
  if (d == StdDist::Normal) return -0.5 * z * z - kLogSqrt2Pi;
  return z - std::exp(z);
}

double log_sf(StdDist d, double z) noexcept {
  if (d == StdDist::SEV) return -std::exp(z);
  if (z < 30.0) return std::log(0.5 * std::erfc(z * kInvSqrt2));
  if (std::isinf(z)) return -std::numeric_limits<double>::infinity();
  // Mills-ratio asymptotic series; erfc underflows out here.
  const double r = 1.0 / (z * z);
  const double series = 1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r));
  return -0.5 * z * z - kLogSqrt2Pi - std::log(z) + std::log(series);
}

double quantile(StdDist d, double p) noexcept {
  if (d == StdDist::SEV) return std::log(-std::log1p(-p));
  if (p <= 0.5) return normal_quantile_lower(p);
  // 1 - p is exact for p in [0.5, 1].
  return -normal_quantile_lower(1.0 - p);
}

}  // namespace detail

double std_cdf(StdDist d, double z) {
  check_z(z);
  return detail::cdf(d, z);
}

double std_pdf(StdDist d, double z) {
  check_z(z);
  return detail::pdf(d, z);
}

double std_sf(StdDist d, double z) {
  check_z(z);
  return detail::sf(d, z);
}

double std_log_sf(StdDist d, double z) {
  check_z(z);
  return detail::log_sf(d, z);
}

double std_log_pdf(StdDist d, double z) {
  check_z(z);
  return detail::log_pdf(d, z);
}

double std_quantile(StdDist d, double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("probability must lie in (0, 1)");
  return detail::quantile(d, p);
}

}  // namespace snfit
