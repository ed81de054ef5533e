#pragma once

#include "pdcount/types.hpp"

namespace pdcount {

struct GlmOptions {
  int max_iter = 100;
  double grad_tol = 1e-8;  // sup-norm of the score vector
};

// Poisson log-linear regression by iteratively reweighted least squares.
// Throws on rank-deficient designs, all-zero counts, separation-like
// divergence, and non-convergence.
FittedModel glm_fit(const CountSeries& data, const GlmOptions& opts = {});

// Full Poisson log-likelihood (including the lgamma(y+1) terms, so values
// are comparable with the mixture and HMM likelihoods).
double glm_loglik(const Eigen::VectorXd& beta, const CountSeries& data);

}  // namespace pdcount
