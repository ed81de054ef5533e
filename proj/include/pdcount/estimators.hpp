#pragma once

#include <cstdint>

#include "pdcount/forward.hpp"
#include "pdcount/types.hpp"

namespace pdcount {

struct FitOptions {
  int max_iter = 500;
  double grad_tol = 1e-8;  // sup-norm of the working-scale gradient
  int starts = 10;         // multistart budget
  std::uint64_t seed = 0x5eedULL;  // jitter stream for starts beyond the grid
};

// Working-scale parameter vector theta:
//   FMM2: (beta[0..d-1], logit p_1, S_1)               length d+2
//   HMM2: (beta[0..d-1], logit p_11, logit p_22, S_1)  length d+3
// S_2 is derived from the mean-one constraint E[exp(alpha)] = 1 and is
// never free. The map is a bijection onto the feasible set pi_1 e^{S_1} < 1.
Eigen::Index working_dim(ModelKind kind, Eigen::Index d);

bool working_feasible(const Eigen::VectorXd& theta, ModelKind kind, Eigen::Index d);

// theta -> (beta, latent). The latent states come out in parameterization
// order (S_1 first); callers wanting the canonical increasing order use
// canonicalize() below. Throws std::domain_error off the feasible set.
std::pair<Eigen::VectorXd, LatentSpec> constrain(const Eigen::VectorXd& theta,
                                                 ModelKind kind, Eigen::Index d);

// (beta, latent) -> theta, the exact inverse of constrain.
Eigen::VectorXd unconstrain(const Eigen::VectorXd& beta, const LatentSpec& latent,
                            ModelKind kind);

// Swap the two states into increasing order (relabeling the transition
// matrix or weights accordingly); identity when already ordered.
LatentSpec canonicalize(const LatentSpec& latent);

// Forward-pass model and its parameter Jacobians at a working point.
HmmEval working_eval(const Eigen::VectorXd& theta, ModelKind kind,
                     const CountSeries& data);
HmmEvalDerivs working_derivs(const Eigen::VectorXd& theta, ModelKind kind,
                             const CountSeries& data);

// Mixture likelihood: sum_t log sum_i Pois(y_t; mu_t e^{S_i}) p_i,
// evaluated in log space with a max shift. -inf off the feasible set.
double fmm_loglik(const Eigen::VectorXd& theta, const CountSeries& data);

// Scaled forward-recursion likelihood of the stationary 2-state HMM.
double hmm_loglik(const Eigen::VectorXd& theta, const CountSeries& data);

// Total working-scale log-likelihood gradient (Lystig-Hughes pass).
Eigen::VectorXd loglik_gradient(const Eigen::VectorXd& theta, ModelKind kind,
                                const CountSeries& data);

FittedModel fmm_fit(const CountSeries& data, const FitOptions& opts = {});
FittedModel hmm_fit(const CountSeries& data, const FitOptions& opts = {});

// Raw-parameter evaluators for explicit latent specs (any K). No mean-one
// check; the latent is taken as given.
double poisson_fmm_loglik(const Eigen::VectorXd& beta, const FmmLatent& latent,
                          const CountSeries& data);
double poisson_hmm_loglik(const Eigen::VectorXd& beta, const HmmLatent& latent,
                          const CountSeries& data);

}  // namespace pdcount
