#pragma once

// Pieces of the fitting code shared between fit.cpp and intervals.cpp.

#include <Eigen/Dense>

#include "optimize.hpp"
#include "snfit/inference.hpp"

namespace snfit::detail {

/// Negative log-likelihood of scaled data at stable coordinates; +inf for
/// invalid points. Nishijima's qlogisp is walled at |q| > 20.
Objective make_objective(const FitSpec& spec, const Dataset& scaled, const Anchors& a);

inline Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

/// Maximizes over all coordinates except `fixed`, which is held at `value`.
/// Returns the maximized log-likelihood (negated objective) and the point.
std::pair<double, Eigen::VectorXd> profile_fixed(const Objective& obj, const Eigen::VectorXd& start, int fixed,
                                                 double value, int max_evals);

}  // namespace snfit::detail
