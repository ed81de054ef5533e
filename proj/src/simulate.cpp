#include "pdcount/simulate.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "pdcount/math.hpp"
#include "pdcount/moments.hpp"

namespace pdcount {

std::string covariate_name(const CovariateSpec& spec) {
  std::ostringstream os;
  if (const auto* b = std::get_if<BinaryCovariate>(&spec)) {
    os << "binary" << (b->p == 0.5 ? "" : "(" + std::to_string(b->p) + ")");
  } else if (std::get_if<NormalCovariate>(&spec)) {
    os << "normal";
  } else if (std::get_if<TrendCovariate>(&spec)) {
    os << "trend";
  } else {
    const auto& s = std::get<SeasonalCovariate>(spec);
    os << (s.sine ? "sin" : "cos") << "(2pi*" << s.harmonic << "t/" << s.period << ")";
  }
  return os.str();
}

Eigen::MatrixXd make_design(int n, const std::vector<CovariateSpec>& plan,
                            std::mt19937_64& rng) {
  Eigen::MatrixXd x(n, 1 + plan.size());
  x.col(0).setOnes();
  for (size_t c = 0; c < plan.size(); ++c) {
    Eigen::Ref<Eigen::VectorXd> col = x.col(static_cast<Eigen::Index>(c) + 1);
    std::visit(
        [&](const auto& spec) {
          using T = std::decay_t<decltype(spec)>;
          if constexpr (std::is_same_v<T, BinaryCovariate>) {
            std::bernoulli_distribution draw(spec.p);
            for (int t = 0; t < n; ++t) col[t] = draw(rng) ? 1.0 : 0.0;
          } else if constexpr (std::is_same_v<T, NormalCovariate>) {
            std::normal_distribution<double> draw(0.0, 1.0);
            for (int t = 0; t < n; ++t) col[t] = draw(rng);
          } else if constexpr (std::is_same_v<T, TrendCovariate>) {
            for (int t = 0; t < n; ++t) col[t] = static_cast<double>(t + 1) / n;
          } else {
            const double w = 2.0 * std::numbers::pi * spec.harmonic / spec.period;
            for (int t = 0; t < n; ++t)
              col[t] = spec.sine ? std::sin(w * (t + 1)) : std::cos(w * (t + 1));
          }
        },
        plan[c]);
  }
  return x;
}

SimResult simulate(const SimConfig& config) {
  if (config.n < 2) throw std::invalid_argument("simulate: need n >= 2");
  if (config.beta.size() != static_cast<Eigen::Index>(config.covariates.size()) + 1)
    throw std::invalid_argument("simulate: beta length must be 1 + #covariates");
  validate(config.latent);

  std::mt19937_64 rng(config.seed);
  const int n = config.n;

  SimResult out;
  out.series.X = make_design(n, config.covariates, rng);
  out.series.labels.push_back("intercept");
  for (const auto& c : config.covariates) out.series.labels.push_back(covariate_name(c));

  const Eigen::VectorXd mu = marginal_mean(config.beta, out.series.X);
  out.alpha.resize(n);

  if (const auto* hmm = std::get_if<HmmLatent>(&config.latent)) {
    const Eigen::VectorXd pi = stationary_distribution(hmm->transition);
    const Eigen::Index k = hmm->states.size();
    out.state.resize(n);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto draw_from = [&](const Eigen::VectorXd& probs) {
      double u = unif(rng), cum = 0.0;
      for (Eigen::Index j = 0; j < k; ++j) {
        cum += probs[j];
        if (u <= cum) return static_cast<int>(j);
      }
      return static_cast<int>(k - 1);
    };
    out.state[0] = draw_from(pi);
    for (int t = 1; t < n; ++t)
      out.state[t] = draw_from(hmm->transition.row(out.state[t - 1]).transpose());
    for (int t = 0; t < n; ++t) out.alpha[t] = hmm->states[out.state[t]];
  } else if (const auto* fmm = std::get_if<FmmLatent>(&config.latent)) {
    const Eigen::Index k = fmm->states.size();
    out.state.resize(n);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int t = 0; t < n; ++t) {
      double u = unif(rng), cum = 0.0;
      int pick = static_cast<int>(k - 1);
      for (Eigen::Index j = 0; j < k; ++j) {
        cum += fmm->weights[j];
        if (u <= cum) {
          pick = static_cast<int>(j);
          break;
        }
      }
      out.state[t] = pick;
      out.alpha[t] = fmm->states[pick];
    }
  } else {
    const auto& ar1 = std::get<Ar1Latent>(config.latent);
    if (ar1.sigma2 <= 0.0) {
      out.alpha.setZero();
    } else {
      const double c = ar1.intercept();
      const double var_stat = ar1.sigma2 / (1.0 - ar1.phi * ar1.phi);
      std::normal_distribution<double> innov(0.0, std::sqrt(ar1.sigma2));
      std::normal_distribution<double> init(-var_stat / 2.0, std::sqrt(var_stat));
      out.alpha[0] = init(rng);
      for (int t = 1; t < n; ++t)
        out.alpha[t] = c + ar1.phi * out.alpha[t - 1] + innov(rng);
    }
  }

  out.series.y.resize(n);
  for (int t = 0; t < n; ++t) {
    const double rate = mu[t] * std::exp(out.alpha[t]);
    std::poisson_distribution<long> draw(rate);
    out.series.y[t] = static_cast<double>(draw(rng));
  }
  return out;
}

}  // namespace pdcount
