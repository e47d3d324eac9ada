#pragma once

// Unconstrained minimizers used by the fitting code. Objectives may return
// +inf to reject a point.

#include <Eigen/Dense>
#include <functional>

namespace snfit::detail {

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct OptResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int evals = 0;
  int iterations = 0;
};

/// Central-difference gradient with step 1e-6 relative to each coordinate.
Eigen::VectorXd num_gradient(const Objective& f, const Eigen::VectorXd& x, int* evals = nullptr);

/// Central-difference Hessian; the step scales with the fourth root of
/// machine epsilon.
Eigen::MatrixXd num_hessian(const Objective& f, const Eigen::VectorXd& x, double fx, int* evals = nullptr);

OptResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0, double step, int max_evals,
                      double ftol = 1e-12);

OptResult bfgs(const Objective& f, const Eigen::VectorXd& x0, int max_evals, double gtol = 1e-8);

/// Simplex, then quasi-Newton, then Newton polish with a numeric Hessian.
OptResult minimize(const Objective& f, const Eigen::VectorXd& x0, int max_evals);

}  // namespace snfit::detail
