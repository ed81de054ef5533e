#include "pdcount/optimize.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace pdcount {

OptimResult maximize_bfgs(const Objective& fn, const Gradient& grad,
                          const Eigen::VectorXd& x0, int max_iter, double grad_tol) {
  const Eigen::Index p = x0.size();
  constexpr double kArmijo = 1e-4;
  constexpr double kShrink = 0.5;
  constexpr int kMaxBacktrack = 60;

  OptimResult res;
  res.x = x0;
  res.value = fn(res.x);
  if (!std::isfinite(res.value))
    throw std::invalid_argument("maximize_bfgs: infeasible starting point");

  Eigen::VectorXd g = grad(res.x);
  Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(p, p);

  for (int iter = 0; iter < max_iter; ++iter) {
    res.gradient_norm = g.lpNorm<Eigen::Infinity>();
    if (res.gradient_norm < grad_tol) {
      res.converged = true;
      res.n_iter = iter;
      return res;
    }

    Eigen::VectorXd dir = Hinv * g;  // ascent direction
    double slope = g.dot(dir);
    if (!(slope > 0.0) || !dir.allFinite()) {
      Hinv.setIdentity();
      dir = g;
      slope = g.squaredNorm();
    }

    double step = 1.0;
    double f_new = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd x_new;
    bool accepted = false;
    for (int bt = 0; bt < kMaxBacktrack; ++bt) {
      x_new = res.x + step * dir;
      f_new = fn(x_new);
      if (std::isfinite(f_new) && f_new >= res.value + kArmijo * step * slope) {
        accepted = true;
        break;
      }
      step *= kShrink;
    }
    if (!accepted) {
      // no admissible step along this direction; report where we stand
      res.n_iter = iter;
      res.converged = res.gradient_norm < grad_tol;
      return res;
    }

    Eigen::VectorXd g_new = grad(x_new);
    const Eigen::VectorXd s = x_new - res.x;
    const Eigen::VectorXd yv = g_new - g;  // gradient change (ascent form)
    const double sy = -s.dot(yv);          // positive near a maximum
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      // standard BFGS inverse update on the negated gradient map
      const Eigen::VectorXd Hy = Hinv * (-yv);
      const double yHy = (-yv).dot(Hy);
      Hinv += ((sy + yHy) / (sy * sy)) * (s * s.transpose()) -
              (Hy * s.transpose() + s * Hy.transpose()) / sy;
    }
    res.x = x_new;
    res.value = f_new;
    g = g_new;
    res.n_iter = iter + 1;
  }
  res.gradient_norm = g.lpNorm<Eigen::Infinity>();
  res.converged = res.gradient_norm < grad_tol;
  return res;
}

Eigen::VectorXd numerical_gradient(const Objective& fn, const Eigen::VectorXd& x,
                                   double rel_step) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = rel_step * (1.0 + std::abs(x[i]));
    xp[i] = x[i] + h;
    const double fp = fn(xp);
    xp[i] = x[i] - h;
    const double fm = fn(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace pdcount
