#pragma once

#include <Eigen/Dense>
#include <functional>

namespace pdcount {

struct OptimResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int n_iter = 0;
  bool converged = false;
  double gradient_norm = 0.0;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;
using Gradient = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// BFGS maximizer with backtracking line search. The objective may return
// -inf at infeasible points; the line search then shrinks the step.
// Convergence: sup-norm of the gradient below grad_tol.
OptimResult maximize_bfgs(const Objective& fn, const Gradient& grad,
                          const Eigen::VectorXd& x0, int max_iter = 500,
                          double grad_tol = 1e-8);

// Central-difference gradient, step rel_step * (1 + |x_i|).
Eigen::VectorXd numerical_gradient(const Objective& fn, const Eigen::VectorXd& x,
                                   double rel_step = 1e-6);

}  // namespace pdcount
