#include "pdcount/types.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace pdcount {

namespace {

constexpr double kProbTol = 1e-9;
constexpr double kMeanOneTol = 1e-6;

void check_states(const Eigen::VectorXd& states) {
  if (states.size() < 1) throw std::invalid_argument("latent spec: no states");
  for (Eigen::Index j = 0; j + 1 < states.size(); ++j) {
    if (!(states[j] < states[j + 1]))
      throw std::invalid_argument("latent spec: states must be strictly increasing");
  }
  if (!states.allFinite()) throw std::invalid_argument("latent spec: non-finite state");
}

void check_rows_stochastic(const Eigen::MatrixXd& P) {
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < P.cols(); ++j) {
      const double p = P(i, j);
      if (!(p >= -kProbTol && p <= 1.0 + kProbTol))
        throw std::invalid_argument("latent spec: transition entry outside [0,1]");
      row += p;
    }
    if (std::abs(row - 1.0) > 1e-8)
      throw std::invalid_argument("latent spec: transition row does not sum to 1");
  }
}

void check_mean_one(const Eigen::VectorXd& weights, const Eigen::VectorXd& states) {
  double m = 0.0;
  for (Eigen::Index j = 0; j < states.size(); ++j) m += weights[j] * std::exp(states[j]);
  if (std::abs(m - 1.0) > kMeanOneTol) {
    std::ostringstream os;
    os << "latent spec: E[exp(alpha)] = " << m << ", must be 1";
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

void CountSeries::validate() const {
  const Eigen::Index nn = y.size();
  const Eigen::Index dd = X.cols();
  if (X.rows() != nn) throw std::invalid_argument("count series: y and X length mismatch");
  if (dd < 1 || nn < dd) throw std::invalid_argument("count series: need n >= d >= 1");
  for (Eigen::Index t = 0; t < nn; ++t) {
    const double v = y[t];
    if (!std::isfinite(v) || v < 0.0 || v != std::floor(v)) {
      std::ostringstream os;
      os << "count series: y[" << t << "] = " << v << " is not a non-negative integer";
      throw std::invalid_argument(os.str());
    }
  }
  if (!X.allFinite()) throw std::invalid_argument("count series: non-finite design entry");
  if ((X.col(0).array() != 1.0).any())
    throw std::invalid_argument("count series: first design column must be all ones");
  if (!labels.empty() && static_cast<Eigen::Index>(labels.size()) != dd)
    throw std::invalid_argument("count series: label count does not match design columns");
}

void validate(const LatentSpec& spec) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, HmmLatent>) {
          check_states(s.states);
          if (s.transition.rows() != s.states.size() ||
              s.transition.cols() != s.states.size())
            throw std::invalid_argument("latent spec: transition shape mismatch");
          check_rows_stochastic(s.transition);
          // mean-one is checked against the stationary distribution by callers
          // that have it; here we verify the one-step-reachable invariant only
        } else if constexpr (std::is_same_v<T, FmmLatent>) {
          check_states(s.states);
          if (s.weights.size() != s.states.size())
            throw std::invalid_argument("latent spec: weight count mismatch");
          double total = 0.0;
          for (Eigen::Index j = 0; j < s.weights.size(); ++j) {
            if (!(s.weights[j] >= -kProbTol && s.weights[j] <= 1.0 + kProbTol))
              throw std::invalid_argument("latent spec: weight outside [0,1]");
            total += s.weights[j];
          }
          if (std::abs(total - 1.0) > 1e-8)
            throw std::invalid_argument("latent spec: weights do not sum to 1");
          check_mean_one(s.weights, s.states);
        } else {
          if (!(s.phi > -1.0 && s.phi < 1.0))
            throw std::invalid_argument("latent spec: phi must lie in (-1,1)");
          if (!(s.sigma2 >= 0.0) || !std::isfinite(s.sigma2))
            throw std::invalid_argument("latent spec: sigma2 must be >= 0");
        }
      },
      spec);
}

HmmLatent as_hmm(const FmmLatent& fmm) {
  HmmLatent hmm;
  hmm.states = fmm.states;
  hmm.transition.resize(fmm.states.size(), fmm.states.size());
  for (Eigen::Index i = 0; i < fmm.states.size(); ++i)
    hmm.transition.row(i) = fmm.weights.transpose();
  return hmm;
}

const char* to_string(Level level) {
  switch (level) {
    case Level::Low: return "low";
    case Level::Medium: return "medium";
    default: return "high";
  }
}

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Glm: return "glm";
    case ModelKind::Fmm2: return "fmm2";
    default: return "hmm2";
  }
}

double FactorProfile::sp_mean() const {
  if (sp.empty()) return 0.0;
  return std::accumulate(sp.begin(), sp.end(), 0.0) / static_cast<double>(sp.size());
}

}  // namespace pdcount
