#pragma once

#include <Eigen/Dense>

#include "pdcount/types.hpp"

namespace pdcount {

// mu_t = exp(X_t' beta). Throws std::domain_error if a linear predictor
// exceeds the representable exponent.
Eigen::VectorXd marginal_mean(const Eigen::VectorXd& beta, const Eigen::MatrixXd& X);

// Var(Y_t) = mu + mu^2 sigma_alpha^2
double marginal_variance(double mu, double sigma_alpha_sq);

// Cov(Y_s, Y_t) = mu_s mu_t gamma_{t-s}
double marginal_covariance(double mu_s, double mu_t, double gamma_lag);

// Corr(Y_s, Y_t), bounded by |rho_{t-s}| for any latent distribution
double marginal_correlation(double mu_s, double mu_t, double gamma_lag,
                            double sigma_alpha_sq);

// Unique stationary distribution of an ergodic chain; throws on a reducible
// or periodic transition matrix.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& transition);

LatentMoments latent_moments(const LatentSpec& spec, int tau_max);

// mean over t of 1 + sigma_alpha^2 mu_t
double overdispersion_factor(const Eigen::VectorXd& mu, double sigma_alpha_sq);

// 1 - sum_i min{Pois(i; mu e^{s_lo}), Pois(i; mu e^{s_hi})}; the sum stops
// once both upper tails are below 1e-12.
double separation_probability(double mu, double s_lo, double s_hi);

// series-level SP: unweighted mean over the covariate values
double mean_separation_probability(const Eigen::VectorXd& mu, double s_lo, double s_hi);

Level classify_od(double od);
Level classify_ac1(double ac1);
Level classify_sp(double sp);

// Analytic factor profile of a latent spec against a given mean curve.
// AC1 is the mean over t of Corr(Y_t, Y_{t+1}); SP holds the K-1 adjacent
// separations (empty for AR(1), where SP is defined as 0).
FactorProfile factor_profile(const LatentSpec& spec, const Eigen::VectorXd& mu);

}  // namespace pdcount
