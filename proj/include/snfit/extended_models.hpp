#pragma once

#include <random>

#include "snfit/distributions.hpp"
#include "snfit/models.hpp"

namespace snfit {

/// Random fatigue-limit model: given a unit's fatigue limit gamma,
/// log N = beta0 + beta1 log(Se - gamma) + sigma_eps eps for Se > gamma,
/// and log gamma is location-scale with (mu_log_gamma, sigma_log_gamma).
struct RflModel {
  double beta0;
  double beta1;
  double sigma_eps;
  double mu_log_gamma;
  double sigma_log_gamma;
  StdDist dist_n = StdDist::Normal;
  StdDist dist_gamma = StdDist::Normal;
};

/// Throws DomainError unless beta1 < 0 and both scales are positive.
void validate(const RflModel& m);

// Throw NumericError if the quadrature misses its 1e-8 absolute target.
double rfl_life_cdf(const RflModel& m, double t, double se);
double rfl_life_pdf(const RflModel& m, double t, double se);
double rfl_strength_cdf(const RflModel& m, double x, double ne);
double rfl_strength_pdf(const RflModel& m, double x, double ne);

/// Axis::Life: the p quantile of life at stress `at`; Axis::Strength: the p
/// quantile of strength at cycles `at`. RangeError (AboveSupremum, limit =
/// cdf supremum) when p is not attained because of fatigue-limit mass.
double rfl_quantile(const RflModel& m, double p, Axis axis, double at);

/// Cycles to failure of one random unit at stress se; +inf when the unit's
/// fatigue limit is at or above se.
double rfl_sample_life(const RflModel& m, double se, std::mt19937_64& rng);

/// Castillo model: [log N - B][log S - E] - gamma_c is Weibull
/// distributed with scale eta and shape beta_w, giving hyperbolic quantile
/// curves with asymptotes B and E.
struct CastilloModel {
  double b;
  double e;
  double gamma_c;
  double eta;
  double beta_w;
};

void validate(const CastilloModel& m);

/// Axis::Life: cdf of life at `value` cycles given stress `given`;
/// Axis::Strength: cdf of strength at `value` given cycles `given`.
/// Zero at and below the hyperbolic lower bound.
double castillo_cdf(const CastilloModel& m, double value, double given, Axis axis);
double castillo_pdf(const CastilloModel& m, double value, double given, Axis axis);
double castillo_quantile(const CastilloModel& m, double p, double given, Axis axis);

/// Three-parameter Weibull (threshold, scale) of log N at stress se, or of
/// log X at cycles ne: {gamma_N, eta_N} or {gamma_X, eta_X}.
struct CastilloWeibull {
  double threshold;
  double scale;
};
CastilloWeibull castillo_weibull(const CastilloModel& m, double given, Axis axis);

double castillo_sample_life(const CastilloModel& m, double se, std::mt19937_64& rng);

}  // namespace snfit
