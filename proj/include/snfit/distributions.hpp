#pragma once

#include <string_view>

namespace snfit {

/// Standardized location-scale kernel. Exponentiating a location-scale
/// variable with this kernel gives the lognormal (Normal) or Weibull (SEV)
/// distribution.
enum class StdDist { Normal, SEV };

std::string_view to_string(StdDist d);
StdDist std_dist_from_string(std::string_view name);

// All functions throw DomainError for non-finite z or p outside (0,1).
double std_cdf(StdDist d, double z);
double std_pdf(StdDist d, double z);
double std_quantile(StdDist d, double p);

/// log(1 - cdf), accurate far into the upper tail.
double std_log_sf(StdDist d, double z);
/// 1 - cdf without cancellation.
double std_sf(StdDist d, double z);
double std_log_pdf(StdDist d, double z);

}  // namespace snfit

namespace snfit::detail {

// Unchecked kernels used on hot paths; accept z = +-infinity.
double cdf(StdDist d, double z) noexcept;
double sf(StdDist d, double z) noexcept;
double pdf(StdDist d, double z) noexcept;
double log_pdf(StdDist d, double z) noexcept;
double log_sf(StdDist d, double z) noexcept;
double quantile(StdDist d, double p) noexcept;

}  // namespace snfit::detail
