#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "snfit/dataset.hpp"
#include "snfit/extended_models.hpp"
#include "snfit/models.hpp"

namespace snfit {

enum class SpreadKind { Constant, LogLinear };

/// What to fit. With `rfl` set the random fatigue-limit model is used and
/// family, orientation and spread are ignored.
struct FitSpec {
  Family family = Family::Basquin;
  Orientation orientation = Orientation::LifeSpecified;
  StdDist dist = StdDist::Normal;
  SpreadKind spread = SpreadKind::Constant;
  bool rfl = false;
  StdDist rfl_gamma_dist = StdDist::Normal;
};

using AnyModel = std::variant<ModelSpec, RflModel>;

/// Natural parameter names: the curve's parameters followed by "sigma", or
/// by "sigma_b0", "sigma_b1" for log-linear spread. For the random
/// fatigue-limit model: beta0, beta1, sigma, mu_log_gamma, sigma_log_gamma.
std::vector<std::string> natural_names(const FitSpec& spec);

/// Throws DomainError for an invalid parameter vector.
AnyModel build_model(const FitSpec& spec, std::span<const double> natural);
std::vector<double> natural_values(const FitSpec& spec, const AnyModel& model);

/// Natural parameters after dividing stress by ms and cycles by mn.
std::vector<double> scale_natural(const FitSpec& spec, std::span<const double> natural, double ms, double mn);
std::vector<double> unscale_natural(const FitSpec& spec, std::span<const double> scaled, double ms, double mn);

/// Data anchors for the stable parameterization: failure stress range,
/// smallest cycles overall, largest failure cycles, and their geometric mean.
struct Anchors {
  double s_low;
  double s_high;
  double n_low;
  double n_high;
  double n_mid;
};

/// Throws DataError("insufficient design ...") when the anchors coincide.
Anchors compute_anchors(const Dataset& d);

std::vector<std::string> stable_names(const FitSpec& spec);
/// Unrestricted coordinates. DomainError when the natural parameters fall
/// outside the region the parameterization covers (e.g. gamma >= s_low).
std::vector<double> to_stable(const FitSpec& spec, std::span<const double> natural, const Anchors& a);
/// Inverse of to_stable; DomainError when the point maps to invalid
/// natural parameters.
std::vector<double> from_stable(const FitSpec& spec, std::span<const double> stable, const Anchors& a);

struct LogLik {
  double value = 0.0;
  int penalized = 0;  // failures at or beyond a model threshold
  bool empty = false;
};

/// Censored-data log-likelihood: log density for failures, log survival
/// for runouts. Failures the model cannot produce (below exp(B), or at a
/// stress under a life-specified fatigue limit) add -1e10 each.
LogLik log_likelihood(const AnyModel& m, const Dataset& d);

struct FitOptions {
  bool scale = true;
  int max_evals = 10000;
  /// Optional starting point in unscaled natural parameters.
  std::optional<std::vector<double>> start;
};

struct FittedModel {
  FittedModel(FitSpec s, AnyModel m) : spec(s), model(std::move(m)) {}

  FitSpec spec;
  AnyModel model;  // unscaled natural parameters
  std::vector<std::string> names;
  std::vector<double> natural;     // unscaled
  std::vector<double> natural_se;  // delta method; NaN when unavailable
  std::vector<double> stable;      // in scaled coordinates
  Anchors anchors{};               // of the scaled data
  double loglik = 0.0;             // on the original (unscaled) data
  Eigen::MatrixXd hessian;         // of the log-likelihood in stable coordinates
  Eigen::MatrixXd covariance;      // inverse of -hessian when definite
  bool converged = false;
  bool hessian_ok = false;
  int iterations = 0;
  int evaluations = 0;
  double s_max = 1.0;
  double n_max = 1.0;
  std::size_t failures = 0;
  std::size_t observations = 0;
  std::string note;
};

/// Maximum likelihood in stable coordinates on the scaled data. Throws
/// DataError for unusable data and FitError for threshold conflicts (best
/// log-likelihood attached). A fit that stops short of a verified maximum
/// is returned with converged = false.
FittedModel fit_mle(const FitSpec& spec, const Dataset& d, const FitOptions& opt = {});

/// Natural parameters (unscaled) as a function of the fit's stable
/// coordinates; DomainError outside the valid region.
std::vector<double> natural_from_stable(const FittedModel& fit, std::span<const double> stable);

/// Log-likelihood of the fit's data at stable coordinates (scaled data,
/// penalties included, -inf for invalid points).
double stable_loglik(const FittedModel& fit, const Dataset& d, std::span<const double> stable);

/// A quantity derived from a fitted model.
struct Query {
  enum class Kind { LifeQuantile, StrengthQuantile, LifeCdf, StrengthCdf };
  Kind kind;
  double p_or_value;  // probability for quantiles, cycles/stress for cdfs
  double at;          // stress Se (life) or cycles Ne (strength)

  static Query life_quantile(double p, double se) { return {Kind::LifeQuantile, p, se}; }
  static Query strength_quantile(double p, double ne) { return {Kind::StrengthQuantile, p, ne}; }
  static Query life_cdf(double t, double se) { return {Kind::LifeCdf, t, se}; }
  static Query strength_cdf(double x, double ne) { return {Kind::StrengthCdf, x, ne}; }
  bool is_probability() const noexcept { return kind == Kind::LifeCdf || kind == Kind::StrengthCdf; }
};

/// Query value under a model. Quantiles may be Infinite (atom at infinity);
/// RangeError for unattainable random fatigue-limit quantiles.
ExtendedQuantile evaluate(const AnyModel& m, const Query& q);

struct Interval {
  double estimate = 0.0;
  double lower = 0.0;  // 0 (or probability 0) when unbounded below
  double upper = 0.0;  // +inf (or probability 1) when unbounded above
  bool lower_bounded = true;
  bool upper_bounded = true;
  double level = 0.95;
  /// Lower end of the two-sided interval at level 2*level - 1, i.e. the
  /// one-sided lower bound at `level`.
  double one_sided_lower = 0.0;
};

/// Delta-method interval on the log scale of a quantile (logit scale of a
/// probability). Throws FitError for a singular Hessian.
Interval wald_ci(const FittedModel& fit, const Query& q, double level = 0.95);

/// Likelihood-ratio interval by profiling the query over the remaining
/// stable coordinates. `d` must be the data the model was fit to.
Interval profile_lr_ci(const FittedModel& fit, const Dataset& d, const Query& q, double level = 0.95);

struct Residual {
  double value;
  bool censored;
};

/// Standardized residuals: life-specified (log N - log g(S)) / sigma_N(S),
/// strength-specified (log S - log h(N)) / sigma_X; for the random
/// fatigue-limit model the kernel quantile of the fitted life cdf.
std::vector<Residual> residuals(const FittedModel& fit, const Dataset& d);

/// Median life at stress `at` (Axis::Life) or median strength at cycles
/// `at` (Axis::Strength).
ExtendedQuantile fitted_value(const FittedModel& fit, Axis axis, double at);

struct DesignPoint {
  double stress;
  int count;
};

/// One unit per design slot in order; lives beyond censor_at, and units
/// that never fail, become runouts at censor_at.
Dataset simulate_dataset(const AnyModel& m, std::span<const DesignPoint> design, double censor_at,
                         std::uint64_t seed);

}  // namespace snfit
