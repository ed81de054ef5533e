#include "pdcount/inference.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "pdcount/estimators.hpp"
#include "pdcount/forward.hpp"
#include "pdcount/moments.hpp"

namespace pdcount {

namespace {

constexpr double kScoreSumTol = 1e-4;

void check_score_sums(const Eigen::MatrixXd& scores) {
  const double worst = scores.colwise().sum().lpNorm<Eigen::Infinity>();
  if (worst > kScoreSumTol) {
    std::ostringstream os;
    os << "sandwich: scores do not sum to zero (sup-norm " << worst
       << "); fit is not at an optimum";
    throw std::runtime_error(os.str());
  }
}

}  // namespace

ConditionalScores glm_scores(const FittedModel& fit, const CountSeries& data) {
  if (fit.model != ModelKind::Glm)
    throw std::invalid_argument("glm_scores: fit is not a GLM");
  const Eigen::VectorXd mu = marginal_mean(fit.beta, data.X);
  ConditionalScores out;
  out.scores = data.X.array().colwise() * (data.y - mu).array();
  return out;
}

Eigen::MatrixXd glm_mean_hessian(const FittedModel& fit, const CountSeries& data) {
  const Eigen::VectorXd mu = marginal_mean(fit.beta, data.X);
  const Eigen::MatrixXd w = data.X.transpose() * mu.asDiagonal() * data.X;
  return -w / static_cast<double>(data.n());
}

ConditionalScores hmm_scores_lystig_hughes(const FittedModel& fit,
                                           const CountSeries& data) {
  if (fit.model == ModelKind::Glm)
    throw std::invalid_argument("hmm_scores_lystig_hughes: GLM fit; use glm_scores");
  const HmmEval eval = working_eval(fit.theta, fit.model, data);
  const HmmEvalDerivs derivs = working_derivs(fit.theta, fit.model, data);
  ConditionalScores out;
  out.scores = forward_scores(data.y, data.X, eval, derivs).scores;
  return out;
}

Eigen::MatrixXd hmm_mean_hessian(const FittedModel& fit, const CountSeries& data) {
  const Eigen::Index p = fit.theta.size();
  Eigen::MatrixXd h(p, p);
  Eigen::VectorXd theta = fit.theta;
  for (Eigen::Index i = 0; i < p; ++i) {
    const double step = 1e-5 * (1.0 + std::abs(fit.theta[i]));
    theta[i] = fit.theta[i] + step;
    const Eigen::VectorXd gp = loglik_gradient(theta, fit.model, data);
    theta[i] = fit.theta[i] - step;
    const Eigen::VectorXd gm = loglik_gradient(theta, fit.model, data);
    theta[i] = fit.theta[i];
    h.col(i) = (gp - gm) / (2.0 * step);
  }
  h = 0.5 * (h + h.transpose()).eval();
  return h / static_cast<double>(data.n());
}

SandwichCovariance sandwich(const ConditionalScores& scores,
                            const Eigen::MatrixXd& h_hat, int ell) {
  const Eigen::Index n = scores.scores.rows();
  const Eigen::Index p = scores.scores.cols();
  if (ell < 0) throw std::invalid_argument("sandwich: ell must be >= 0");
  if (static_cast<double>(ell) >= std::cbrt(static_cast<double>(n))) {
    std::ostringstream os;
    os << "sandwich: ell = " << ell << " violates ell < n^{1/3} = "
       << std::cbrt(static_cast<double>(n));
    throw std::invalid_argument(os.str());
  }
  check_score_sums(scores.scores);

  const Eigen::MatrixXd& s = scores.scores;
  Eigen::MatrixXd i_hat = s.transpose() * s;
  for (int tau = 1; tau <= ell; ++tau) {
    const Eigen::MatrixXd lagged =
        s.bottomRows(n - tau).transpose() * s.topRows(n - tau);
    i_hat += lagged + lagged.transpose();
  }
  i_hat /= static_cast<double>(n);

  // invert H through its eigendecomposition so a singular direction can be
  // reported by eigenvalue
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h_hat);
  const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < p; ++i) {
    if (std::abs(es.eigenvalues()[i]) < 1e-12 * std::max(scale, 1e-300)) {
      std::ostringstream os;
      os << "sandwich: H_hat is singular (eigenvalue " << es.eigenvalues()[i]
         << ")";
      throw std::runtime_error(os.str());
    }
  }
  const Eigen::MatrixXd h_inv = es.eigenvectors() *
                                es.eigenvalues().cwiseInverse().asDiagonal() *
                                es.eigenvectors().transpose();

  SandwichCovariance out;
  out.h_hat = h_hat;
  out.i_hat = i_hat;
  out.ell = ell;
  Eigen::MatrixXd cov = h_inv * i_hat * h_inv / static_cast<double>(n);
  out.cov = 0.5 * (cov + cov.transpose());
  out.se.resize(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const double v = out.cov(i, i);
    if (v < 0.0) {
      std::ostringstream os;
      os << "sandwich: negative variance " << v << " for parameter " << i
         << " (bad optimum)";
      throw std::runtime_error(os.str());
    }
    out.se[i] = std::sqrt(v);
  }
  return out;
}

SandwichCovariance white_se(const FittedModel& fit, const CountSeries& data, int ell) {
  if (fit.model == ModelKind::Glm)
    return sandwich(glm_scores(fit, data), glm_mean_hessian(fit, data), ell);
  return sandwich(hmm_scores_lystig_hughes(fit, data), hmm_mean_hessian(fit, data),
                  ell);
}

DdwMoments ddw_latent_moments(const FittedModel& fit, const CountSeries& data,
                              int max_lag) {
  if (fit.model != ModelKind::Glm)
    throw std::invalid_argument("ddw_latent_moments: fit is not a GLM");
  const Eigen::Index n = data.n();
  if (max_lag < 0 || max_lag >= n)
    throw std::invalid_argument("ddw_latent_moments: bad max_lag");
  const Eigen::VectorXd mu = marginal_mean(fit.beta, data.X);
  const Eigen::VectorXd r = data.y - mu;

  DdwMoments m;
  m.gamma.resize(static_cast<size_t>(max_lag) + 1);
  const double denom0 = mu.array().square().sum();
  m.sigma_alpha_sq = (r.array().square() - mu.array()).sum() / denom0;
  if (m.sigma_alpha_sq < 0.0) {
    m.sigma_alpha_sq = 0.0;
    m.truncated = true;
  }
  m.gamma[0] = m.sigma_alpha_sq;
  for (int tau = 1; tau <= max_lag; ++tau) {
    double num = 0.0, den = 0.0;
    for (Eigen::Index t = 0; t + tau < n; ++t) {
      num += r[t] * r[t + tau];
      den += mu[t] * mu[t + tau];
    }
    m.gamma[tau] = num / den;
  }
  return m;
}

SandwichCovariance ddw_covariance(const FittedModel& fit, const CountSeries& data,
                                  const DdwMoments& moments) {
  const Eigen::Index n = data.n();
  const Eigen::Index d = data.d();
  const int max_lag = static_cast<int>(moments.gamma.size()) - 1;
  const Eigen::VectorXd mu = marginal_mean(fit.beta, data.X);

  const Eigen::MatrixXd w = data.X.transpose() * mu.asDiagonal() * data.X;
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(d, d);
  for (int tau = 0; tau <= max_lag; ++tau) {
    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index t = 0; t + tau < n; ++t)
      block += mu[t] * mu[t + tau] * data.X.row(t).transpose() * data.X.row(t + tau);
    block *= moments.gamma[tau];
    v += (tau == 0) ? block : (block + block.transpose()).eval();
  }

  const Eigen::MatrixXd w_inv = w.ldlt().solve(Eigen::MatrixXd::Identity(d, d));
  SandwichCovariance out;
  out.h_hat = -w / static_cast<double>(n);
  out.i_hat = (w + v) / static_cast<double>(n);
  out.ell = max_lag;
  out.truncated_sigma = moments.truncated;
  Eigen::MatrixXd cov = w_inv + w_inv * v * w_inv;
  out.cov = 0.5 * (cov + cov.transpose());
  out.se.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double var = out.cov(i, i);
    if (var < 0.0) {
      std::ostringstream os;
      os << "ddw_moment_se: negative variance " << var << " for coefficient " << i;
      throw std::runtime_error(os.str());
    }
    out.se[i] = std::sqrt(var);
  }
  return out;
}

SandwichCovariance ddw_moment_se(const FittedModel& fit, const CountSeries& data,
                                 int max_lag) {
  if (max_lag < 0)
    max_lag = static_cast<int>(std::floor(std::cbrt(static_cast<double>(data.n()))));
  return ddw_covariance(fit, data, ddw_latent_moments(fit, data, max_lag));
}

}  // namespace pdcount
