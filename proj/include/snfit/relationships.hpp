#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace snfit {

enum class Family { Basquin, Stromeyer, BoxCox, CoffinManson, Nishijima, RectHyperbola, ModifiedBastenaire };

inline constexpr Family kAllFamilies[] = {Family::Basquin,      Family::Stromeyer,     Family::BoxCox,
                                          Family::CoffinManson, Family::Nishijima,     Family::RectHyperbola,
                                          Family::ModifiedBastenaire};

std::string_view to_string(Family f);
Family family_from_string(std::string_view name);

// log N = beta0 + beta1 log S
struct Basquin {
  double beta0;
  double beta1;
};

// log N = beta0 + beta1 log(S - gamma), S > gamma
struct Stromeyer {
  double beta0;
  double beta1;
  double gamma;
};

// log N = beta0 + beta1 (S^lambda - 1) / lambda
struct BoxCox {
  double beta0;
  double beta1;
  double lambda;
};

// S = a_el (2N)^b + a_pl (2N)^c
struct CoffinManson {
  double a_el;
  double a_pl;
  double b;
  double c;
};

// (log S - E)(log S + A log N - B) = C
struct Nishijima {
  double a;
  double b;
  double c;
  double e;
};

// (log N - B)(log S - E) = C
struct RectHyperbola {
  double b;
  double c;
  double e;
};

// N = A exp(-((S - E)/B)^C) / (S - E), S > E. The original three-parameter
// Bastenaire curve is the C = 1 case.
struct ModifiedBastenaire {
  double a;
  double b;
  double c;
  double e;
};

/// Coordinate asymptotes of the log-log curve: `vertical` is the log-cycles
/// lower bound B, `horizontal` the log-stress lower bound E.
struct AsymptoteInfo {
  std::optional<double> vertical;
  std::optional<double> horizontal;
};

/// A strictly decreasing S-N curve, usable in both directions:
/// N = g(S) and S = h(N) = g^{-1}(N).
class Relationship {
 public:
  using Params = std::variant<Basquin, Stromeyer, BoxCox, CoffinManson, Nishijima, RectHyperbola, ModifiedBastenaire>;

  /// Validates sign constraints and monotonicity; throws DomainError.
  explicit Relationship(Params p);

  static Relationship from_values(Family f, std::span<const double> values);
  static std::span<const std::string_view> parameter_names(Family f);
  static Relationship bastenaire(double a, double b, double e) { return Relationship(ModifiedBastenaire{a, b, 1.0, e}); }

  Family family() const noexcept { return static_cast<Family>(params_.index()); }
  const Params& params() const noexcept { return params_; }
  std::vector<double> values() const;

  // Checked evaluation: DomainError outside the curve's domain.
  double eval_log_g(double stress) const;
  double eval_log_h(double cycles) const;
  /// Cycles N with h(N) = stress; RangeError if stress is not attained.
  double invert_h(double stress) const;
  double dlogh_dt(double cycles) const;
  double dlogg_dx(double stress) const;

  AsymptoteInfo asymptotes() const;

  /// Infimum of the stress domain of g (exp(E), gamma, or 0).
  double stress_lower() const;
  /// Infimum of the cycles domain of h (exp(B) or 0).
  double cycles_lower() const;

  // Unchecked forms for hot loops. log_g returns +inf at or below
  // stress_lower(); log_h returns +inf at or below cycles_lower().
  double log_g(double stress) const;
  double log_h(double cycles) const;
  double dlogh_dt_unchecked(double cycles) const;
  double dlogg_dx_unchecked(double stress) const;

 private:
  Params params_;
};

}  // namespace snfit
