#include "pdcount/glm.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "pdcount/math.hpp"
#include "pdcount/moments.hpp"

namespace pdcount {

namespace {

double deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu) {
  double dev = 0.0;
  for (Eigen::Index t = 0; t < y.size(); ++t) {
    const double yt = y[t];
    dev += 2.0 * ((yt > 0.0 ? yt * std::log(yt / mu[t]) : 0.0) - (yt - mu[t]));
  }
  return dev;
}

}  // namespace

double glm_loglik(const Eigen::VectorXd& beta, const CountSeries& data) {
  const Eigen::VectorXd mu = marginal_mean(beta, data.X);
  double ll = 0.0;
  for (Eigen::Index t = 0; t < data.n(); ++t)
    ll += poisson_log_pmf(data.y[t], mu[t]);
  return ll;
}

FittedModel glm_fit(const CountSeries& data, const GlmOptions& opts) {
  data.validate();
  const Eigen::Index n = data.n(), d = data.d();

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(data.X);
  if (qr.rank() < d)
    throw std::runtime_error("glm_fit: design matrix is rank deficient");
  if ((data.y.array() <= 0.0).all())
    throw std::runtime_error("glm_fit: all counts are zero");

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
  beta[0] = std::log(data.y.mean());
  Eigen::VectorXd mu = marginal_mean(beta, data.X);
  double dev = deviance(data.y, mu);

  FittedModel fit;
  fit.model = ModelKind::Glm;
  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    Eigen::VectorXd score = data.X.transpose() * (data.y - mu);
    fit.gradient_norm = score.lpNorm<Eigen::Infinity>();
    if (fit.gradient_norm < opts.grad_tol) {
      fit.converged = true;
      fit.n_iter = iter - 1;
      break;
    }

    Eigen::VectorXd w = mu.cwiseMax(1e-12);
    Eigen::VectorXd z = (data.X * beta) + (data.y - mu).cwiseQuotient(w);
    Eigen::MatrixXd xtwx = data.X.transpose() * w.asDiagonal() * data.X;
    Eigen::VectorXd delta = xtwx.ldlt().solve(data.X.transpose() * (w.asDiagonal() * z)) - beta;

    // step-halve until the deviance does not increase
    double step = 1.0;
    Eigen::VectorXd beta_new;
    Eigen::VectorXd mu_new;
    double dev_new = dev;
    for (int half = 0; half < 40; ++half) {
      beta_new = beta + step * delta;
      try {
        mu_new = marginal_mean(beta_new, data.X);
      } catch (const std::domain_error&) {
        step *= 0.5;
        continue;
      }
      dev_new = deviance(data.y, mu_new);
      if (dev_new <= dev * (1.0 + 1e-12) || step < 1e-10) break;
      step *= 0.5;
    }
    beta = beta_new;
    mu = mu_new;
    dev = dev_new;
    fit.n_iter = iter;

    if (beta.lpNorm<Eigen::Infinity>() > 1e3) {
      std::ostringstream os;
      os << "glm_fit: coefficients diverging (|beta|_inf = "
         << beta.lpNorm<Eigen::Infinity>() << "), separation-like data";
      throw std::runtime_error(os.str());
    }
  }
  if (!fit.converged) {
    Eigen::VectorXd score = data.X.transpose() * (data.y - mu);
    fit.gradient_norm = score.lpNorm<Eigen::Infinity>();
    fit.converged = fit.gradient_norm < opts.grad_tol;
  }
  if (!fit.converged) {
    std::ostringstream os;
    os << "glm_fit: no convergence after " << opts.max_iter
       << " iterations (score sup-norm " << fit.gradient_norm << ")";
    throw std::runtime_error(os.str());
  }

  fit.beta = beta;
  fit.theta = beta;
  fit.loglik = glm_loglik(beta, data);
  return fit;
}

}  // namespace pdcount
