#pragma once

#include <Eigen/Dense>
#include <vector>

namespace pdcount {

// A Poisson HMM materialized for the forward pass: conditional means from
// the regression part, K log-scale states, transition matrix, and the
// initial (stationary) distribution.
struct HmmEval {
  Eigen::VectorXd mu;      // n
  Eigen::VectorXd states;  // K
  Eigen::MatrixXd P;       // K x K
  Eigen::VectorXd pi;      // K
};

// Scaled forward recursion; returns sum_t log Lambda_t where
// Lambda_t = P(Y_t | Y_1..Y_{t-1}). Underflow-safe: emissions are
// max-shifted per step and the forward vector renormalized.
double forward_loglik(const Eigen::VectorXd& y, const HmmEval& model);

// Derivatives of the model primitives w.r.t. a p-dim working parameter
// vector theta. The first beta_dim components of theta are the regression
// coefficients, entering emissions through log mu_t = X_t' beta; dstates,
// dpi and dP cover the remaining dependence.
struct HmmEvalDerivs {
  int beta_dim = 0;
  Eigen::MatrixXd dstates;          // K x p
  Eigen::MatrixXd dpi;              // K x p
  std::vector<Eigen::MatrixXd> dP;  // p matrices, each K x K
};

struct ForwardResult {
  double loglik = 0.0;
  Eigen::MatrixXd scores;  // n x p; row t = d log Lambda_t / d theta
};

// Lystig-Hughes single forward pass: propagates the scaled forward
// probabilities together with their first derivatives in all p parameters.
// Row sums of `scores` telescope exactly to the total log-likelihood
// gradient.
ForwardResult forward_scores(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                             const HmmEval& model, const HmmEvalDerivs& derivs);

}  // namespace pdcount
