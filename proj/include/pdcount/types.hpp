#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace pdcount {

// Observed counts with their design matrix. Row order is time order and the
// first column of X is the intercept (all ones).
struct CountSeries {
  Eigen::VectorXd y;                // length n, non-negative integers
  Eigen::MatrixXd X;                // n x d
  std::vector<std::string> labels;  // d covariate names

  Eigen::Index n() const { return y.size(); }
  Eigen::Index d() const { return X.cols(); }

  // Throws std::invalid_argument on any violated invariant.
  void validate() const;
};

// Latent process on the log scale, alpha_t, with E[exp(alpha_t)] = 1.

struct HmmLatent {
  Eigen::VectorXd states;      // K, strictly increasing
  Eigen::MatrixXd transition;  // K x K, rows sum to 1
};

struct FmmLatent {
  Eigen::VectorXd states;   // K, strictly increasing
  Eigen::VectorXd weights;  // K, sums to 1
};

struct Ar1Latent {
  double phi;     // in (-1, 1)
  double sigma2;  // innovation variance, >= 0
  // the AR(1) intercept keeping E[exp(alpha)] = 1
  double intercept() const { return -sigma2 / (2.0 * (1.0 + phi)); }
};

using LatentSpec = std::variant<HmmLatent, FmmLatent, Ar1Latent>;

void validate(const LatentSpec& spec);

// An FMM is an HMM whose transition rows are all equal to the weights.
HmmLatent as_hmm(const FmmLatent& fmm);

// Moments of exp(alpha_t): variance, autocovariance and autocorrelation
// by lag, gamma[0] == sigma_alpha_sq.
struct LatentMoments {
  double sigma_alpha_sq = 0.0;
  std::vector<double> gamma;
  std::vector<double> rho;
};

enum class Level { Low, Medium, High };

const char* to_string(Level level);

// Data-property factors averaged over the covariate values, plus their
// discretized levels (nearest anchor of OD 1.5/3/5, AC1 .15/.25/.5,
// SP .25/.45/.7).
struct FactorProfile {
  double od = 1.0;
  double ac1 = 0.0;
  std::vector<double> sp;  // K-1 adjacent-state separations; empty for AR(1)
  Level od_level = Level::Low;
  Level ac1_level = Level::Low;
  Level sp_level = Level::Low;

  double sp_mean() const;
};

enum class ModelKind { Glm, Fmm2, Hmm2 };

const char* to_string(ModelKind kind);

// Output of an estimator. theta holds the working-scale parameters at the
// optimum (just beta for the GLM); latent is absent for the GLM.
struct FittedModel {
  ModelKind model = ModelKind::Glm;
  Eigen::VectorXd beta;
  std::optional<LatentSpec> latent;
  double loglik = 0.0;
  int n_iter = 0;
  bool converged = false;
  double gradient_norm = 0.0;
  bool degenerate = false;  // boundary estimate (p near 0/1, near-absorbing rows)
  Eigen::VectorXd theta;

  Eigen::Index n_params() const { return theta.size(); }
};

}  // namespace pdcount
