#pragma once

#include "pdcount/types.hpp"

namespace pdcount {

// Per-step gradients of the conditional log-density
// log g(Y_t | Y_1..Y_{t-1}, X, theta) at the fitted parameters.
struct ConditionalScores {
  Eigen::MatrixXd scores;  // n x p
};

struct SandwichCovariance {
  Eigen::MatrixXd h_hat;  // p x p mean second derivative (negative definite)
  Eigen::MatrixXd i_hat;  // p x p score covariance including lag terms
  Eigen::MatrixXd cov;    // H^{-1} I H^{-1} / n, symmetrized
  Eigen::VectorXd se;     // sqrt of the diagonal
  int ell = 1;
  bool truncated_sigma = false;  // DDW only: sigma_alpha^2 clipped at 0
};

ConditionalScores glm_scores(const FittedModel& fit, const CountSeries& data);

// H_hat for the GLM: -(1/n) sum_t mu_t X_t X_t'
Eigen::MatrixXd glm_mean_hessian(const FittedModel& fit, const CountSeries& data);

// Lystig-Hughes conditional scores for FMM2/HMM2 fits (one forward pass).
ConditionalScores hmm_scores_lystig_hughes(const FittedModel& fit,
                                           const CountSeries& data);

// H_hat for mixture fits: central finite differences of the analytic
// gradient, step 1e-5 (1 + |theta_i|), symmetrized and divided by n.
Eigen::MatrixXd hmm_mean_hessian(const FittedModel& fit, const CountSeries& data);

// White sandwich: I_hat with lag truncation ell (requires ell < n^{1/3}),
// cov = H^{-1} I H^{-1} / n. Throws on singular H_hat, on a negative
// covariance diagonal, and when the scores do not sum to approximately zero.
SandwichCovariance sandwich(const ConditionalScores& scores,
                            const Eigen::MatrixXd& h_hat, int ell);

// Convenience dispatch on the fitted model kind.
SandwichCovariance white_se(const FittedModel& fit, const CountSeries& data,
                            int ell = 1);

// Moment estimates of the latent covariances from GLM residuals:
//   sigma^2 = sum[(y-mu)^2 - mu] / sum mu^2
//   gamma_tau = sum (y_t-mu_t)(y_{t+tau}-mu_{t+tau}) / sum mu_t mu_{t+tau}
// gamma[0] is the (possibly clipped) sigma^2.
struct DdwMoments {
  double sigma_alpha_sq = 0.0;
  std::vector<double> gamma;
  bool truncated = false;
};

DdwMoments ddw_latent_moments(const FittedModel& fit, const CountSeries& data,
                              int max_lag);

// DDW-style SE for the GLM estimator: W^{-1} + W^{-1} V W^{-1} with
// W = sum mu X X' and V = sum_{|s-t|<=max_lag} mu_s mu_t gamma_{|s-t|} X_s X_t'.
// max_lag < 0 selects the default floor(n^{1/3}).
SandwichCovariance ddw_moment_se(const FittedModel& fit, const CountSeries& data,
                                 int max_lag = -1);

SandwichCovariance ddw_covariance(const FittedModel& fit, const CountSeries& data,
                                  const DdwMoments& moments);

}  // namespace pdcount
