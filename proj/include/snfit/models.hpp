#pragma once

#include <optional>
#include <string_view>
#include <variant>

#include "snfit/distributions.hpp"
#include "snfit/relationships.hpp"

namespace snfit {

enum class Orientation { LifeSpecified, StrengthSpecified };

std::string_view to_string(Orientation o);
Orientation orientation_from_string(std::string_view name);

struct ConstantSpread {
  double sigma;
};

// sigma(S) = exp(b0 + b1 log S)
struct LogLinearSpread {
  double b0;
  double b1;
};

using Spread = std::variant<ConstantSpread, LogLinearSpread>;

/// A quantile that may be infinite because of an atom of probability at
/// infinity, or pinned to a threshold (exp(B), exp(E), gamma) because the
/// requested probability is numerically indistinguishable from zero.
struct ExtendedQuantile {
  enum class Kind { Finite, Infinite, AtThreshold };
  Kind kind = Kind::Finite;
  double value = 0.0;  // threshold value for AtThreshold, +inf for Infinite

  static ExtendedQuantile finite(double v) { return {Kind::Finite, v}; }
  static ExtendedQuantile infinite();
  static ExtendedQuantile at_threshold(double v) { return {Kind::AtThreshold, v}; }
  bool is_finite() const noexcept { return kind != Kind::Infinite; }
};

/// Orientation + curve + error kernel + spread. LogLinear spread is only
/// allowed with LifeSpecified models (throws DomainError otherwise).
class ModelSpec {
 public:
  ModelSpec(Orientation o, Relationship rel, StdDist dist, Spread spread);

  Orientation orientation() const noexcept { return orientation_; }
  const Relationship& rel() const noexcept { return rel_; }
  StdDist dist() const noexcept { return dist_; }
  const Spread& spread() const noexcept { return spread_; }

 private:
  Orientation orientation_;
  Relationship rel_;
  StdDist dist_;
  Spread spread_;
};

double sigma_at(const ModelSpec& m, double stress);

// Fatigue life N at stress Se.
double life_cdf(const ModelSpec& m, double t, double se);
double life_pdf(const ModelSpec& m, double t, double se);
ExtendedQuantile life_quantile(const ModelSpec& m, double p, double se);

// Fatigue strength X at cycles Ne.
double strength_cdf(const ModelSpec& m, double x, double ne);
double strength_pdf(const ModelSpec& m, double x, double ne);
ExtendedQuantile strength_quantile(const ModelSpec& m, double p, double ne);

enum class Axis { Life, Strength };

/// Probability of the atom at infinity: of never failing at stress `at`
/// (Axis::Life) or of a strength above every stress at cycles `at`
/// (Axis::Strength). Zero when the relevant asymptote is absent.
double atom_probability(const ModelSpec& m, Axis axis, double at);

// Log density / log survival of life for the likelihood. No domain checks:
// points outside the support give -inf density and zero log survival.
double life_log_pdf(const ModelSpec& m, double t, double se);
double life_log_sf(const ModelSpec& m, double t, double se);

/// Stress interval over which every life quantile curve with p in
/// [p_lo, p_hi] is strictly decreasing, searched on a log grid over
/// [s_lo, s_hi]. Constant-spread models always return the full interval.
/// Empty when no grid cell qualifies.
struct MonotoneRange {
  double s_lo;
  double s_hi;
  bool full;
};
std::optional<MonotoneRange> monotone_range(const ModelSpec& m, double s_lo, double s_hi, double p_lo = 0.001,
                                            double p_hi = 0.999);

}  // namespace snfit
