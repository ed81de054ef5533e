#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "pdcount/types.hpp"

namespace pdcount {

// Covariate generators. One design column each; the intercept column is
// always prepended and is not part of the plan.
struct BinaryCovariate {
  double p = 0.5;
};
struct NormalCovariate {};
struct TrendCovariate {};  // t/n in (0, 1]
struct SeasonalCovariate {
  int harmonic = 1;  // cos/sin(2 pi k t / period)
  bool sine = false;
  int period = 12;
};

using CovariateSpec =
    std::variant<BinaryCovariate, NormalCovariate, TrendCovariate, SeasonalCovariate>;

std::string covariate_name(const CovariateSpec& spec);

struct SimConfig {
  int n = 0;
  Eigen::VectorXd beta;  // length 1 + covariates.size()
  std::vector<CovariateSpec> covariates;
  LatentSpec latent;
  std::uint64_t seed = 0;
};

struct SimResult {
  CountSeries series;
  Eigen::VectorXd alpha;   // realized latent path (log scale)
  std::vector<int> state;  // realized state indices; empty for AR(1)
};

// Design matrix with intercept first; deterministic given the engine state.
Eigen::MatrixXd make_design(int n, const std::vector<CovariateSpec>& plan,
                            std::mt19937_64& rng);

// Draw the latent path, then Y_t ~ Poisson(mu_t exp(alpha_t)).
// Identical config (including seed) gives identical output.
SimResult simulate(const SimConfig& config);

}  // namespace pdcount
