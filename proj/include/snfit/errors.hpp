#pragma once

#include <stdexcept>
#include <string>

namespace snfit {

/// Argument outside the domain of a function (stress below a fatigue limit,
/// probability outside (0,1), non-finite input). Carries the violated bound
/// when there is one so callers can print it.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what, double bound = 0.0, bool has_bound = false)
      : std::domain_error(what), bound_(bound), has_bound_(has_bound) {}

  double bound() const noexcept { return bound_; }
  bool has_bound() const noexcept { return has_bound_; }

 private:
  double bound_;
  bool has_bound_;
};

/// A requested value lies outside the attainable range of a monotone curve.
class RangeError : public std::range_error {
 public:
  enum class Side { BelowInfimum, AboveSupremum };

  RangeError(const std::string& what, Side side, double limit)
      : std::range_error(what), side_(side), limit_(limit) {}

  Side side() const noexcept { return side_; }
  double limit() const noexcept { return limit_; }

 private:
  Side side_;
  double limit_;
};

/// Quadrature or root finding failed to reach its tolerance.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, double achieved)
      : std::runtime_error(what), achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

/// Bad or unusable input data (parse errors, degenerate designs).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what, long row = -1)
      : std::runtime_error(what), row_(row) {}
  long row() const noexcept { return row_; }

 private:
  long row_;
};

/// Model fitting failed; `best_loglik` is the best value seen.
class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, double best_loglik)
      : std::runtime_error(what), best_loglik_(best_loglik) {}
  double best_loglik() const noexcept { return best_loglik_; }

 private:
  double best_loglik_;
};

}  // namespace snfit
