#include "pdcount/forward.hpp"

#include <cmath>
#include <stdexcept>

#include "pdcount/math.hpp"

namespace pdcount {

namespace {

// log emission densities for step t, max-shifted: returns exp(log b - shift)
void shifted_emissions(double y, double mu, const Eigen::VectorXd& states,
                       Eigen::VectorXd& b, Eigen::VectorXd& lambda) {
  const Eigen::Index k = states.size();
  Eigen::VectorXd logb(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    lambda[j] = mu * std::exp(states[j]);
    logb[j] = poisson_log_pmf(y, lambda[j]);
  }
  const double shift = logb.maxCoeff();
  for (Eigen::Index j = 0; j < k; ++j) b[j] = std::exp(logb[j] - shift);
  b[k] = shift;  // stashed past the end; caller sizes b as k+1
}

}  // namespace

double forward_loglik(const Eigen::VectorXd& y, const HmmEval& model) {
  const Eigen::Index n = y.size();
  const Eigen::Index k = model.states.size();
  if (model.mu.size() != n) throw std::invalid_argument("forward: mu/y length mismatch");

  Eigen::VectorXd b(k + 1), lambda(k), phi(k), a(k);
  double loglik = 0.0;
  for (Eigen::Index t = 0; t < n; ++t) {
    shifted_emissions(y[t], model.mu[t], model.states, b, lambda);
    if (t == 0) {
      a = model.pi.array() * b.head(k).array();
    } else {
      a = (model.P.transpose() * phi).array() * b.head(k).array();
    }
    const double c = a.sum();
    if (!(c > 0.0) || !std::isfinite(c))
      throw std::runtime_error("forward: zero conditional likelihood");
    loglik += std::log(c) + b[k];
    phi = a / c;
  }
  return loglik;
}

ForwardResult forward_scores(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                             const HmmEval& model, const HmmEvalDerivs& derivs) {
  const Eigen::Index n = y.size();
  const Eigen::Index k = model.states.size();
  const Eigen::Index p = derivs.dstates.cols();
  const int bd = derivs.beta_dim;
  if (X.rows() != n) throw std::invalid_argument("forward_scores: X/y length mismatch");

  ForwardResult out;
  out.scores.resize(n, p);

  Eigen::VectorXd b(k + 1), lambda(k), phi(k), a(k);
  // scaled derivative state: D(j, m) = (d A_t(j) / d theta_m) / P(Y_1..Y_t)
  Eigen::MatrixXd D(k, p), newD(k, p);
  // d log b_t(j) / d theta_m, assembled per step
  Eigen::MatrixXd g(k, p);
  Eigen::VectorXd prev_colsum = Eigen::VectorXd::Zero(p);

  for (Eigen::Index t = 0; t < n; ++t) {
    shifted_emissions(y[t], model.mu[t], model.states, b, lambda);

    // d log b_t(j)/d theta_m = (y - lambda_tj) * (X(t,m)[m<bd] + dstates(j,m))
    for (Eigen::Index j = 0; j < k; ++j) {
      const double resid = y[t] - lambda[j];
      for (Eigen::Index m = 0; m < p; ++m) {
        const double dlog = (m < bd ? X(t, m) : 0.0) + derivs.dstates(j, m);
        g(j, m) = resid * dlog;
      }
    }

    double c;
    if (t == 0) {
      a = model.pi.array() * b.head(k).array();
      c = a.sum();
      for (Eigen::Index m = 0; m < p; ++m)
        newD.col(m) = (derivs.dpi.col(m).array() * b.head(k).array() +
                       model.pi.array() * b.head(k).array() * g.col(m).array()) /
                      c;
    } else {
      const Eigen::VectorXd trans = model.P.transpose() * phi;  // K
      a = trans.array() * b.head(k).array();
      c = a.sum();
      const Eigen::MatrixXd PtD = model.P.transpose() * D;  // K x p
      for (Eigen::Index m = 0; m < p; ++m) {
        Eigen::VectorXd col = PtD.col(m);
        if (m >= bd && derivs.dP[m].size() > 0) col += derivs.dP[m].transpose() * phi;
        newD.col(m) =
            (col.array() * b.head(k).array() + a.array() * g.col(m).array()) / c;
      }
    }
    if (!(c > 0.0) || !std::isfinite(c))
      throw std::runtime_error("forward_scores: zero conditional likelihood");

    out.loglik += std::log(c) + b[k];
    const Eigen::VectorXd colsum = newD.colwise().sum();
    out.scores.row(t) = (colsum - prev_colsum).transpose();
    prev_colsum = colsum;
    D = newD;
    phi = a / c;
  }
  return out;
}

}  // namespace pdcount
