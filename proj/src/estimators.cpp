#include "pdcount/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "pdcount/glm.hpp"
#include "pdcount/math.hpp"
#include "pdcount/moments.hpp"
#include "pdcount/optimize.hpp"

namespace pdcount {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kBoundaryTol = 1e-6;

struct Hmm2Params {
  double p11, p22, pi1, pi2, s1, s2, u;
};

bool hmm2_params(const Eigen::VectorXd& theta, Eigen::Index d, Hmm2Params& out) {
  out.p11 = logistic(theta[d]);
  out.p22 = logistic(theta[d + 1]);
  out.s1 = theta[d + 2];
  const double q1 = 1.0 - out.p11, q2 = 1.0 - out.p22;
  const double total = q1 + q2;
  if (!(total > 0.0) || !std::isfinite(total)) return false;
  out.pi1 = q2 / total;
  out.pi2 = q1 / total;
  out.u = 1.0 - out.pi1 * std::exp(out.s1);
  if (!(out.u > 0.0) || !(out.pi2 > 0.0)) return false;
  out.s2 = std::log(out.u) - std::log(out.pi2);
  return std::isfinite(out.s2);
}

struct Fmm2Params {
  double p1, p2, s1, s2, u;
};

bool fmm2_params(const Eigen::VectorXd& theta, Eigen::Index d, Fmm2Params& out) {
  out.p1 = logistic(theta[d]);
  out.p2 = 1.0 - out.p1;
  out.s1 = theta[d + 1];
  if (!(out.p1 > 0.0) || !(out.p2 > 0.0)) return false;
  out.u = 1.0 - out.p1 * std::exp(out.s1);
  if (!(out.u > 0.0)) return false;
  out.s2 = std::log(out.u) - std::log(out.p2);
  return std::isfinite(out.s2);
}

}  // namespace

Eigen::Index working_dim(ModelKind kind, Eigen::Index d) {
  switch (kind) {
    case ModelKind::Glm: return d;
    case ModelKind::Fmm2: return d + 2;
    default: return d + 3;
  }
}

bool working_feasible(const Eigen::VectorXd& theta, ModelKind kind, Eigen::Index d) {
  if (theta.size() != working_dim(kind, d)) return false;
  if (!theta.allFinite()) return false;
  if (kind == ModelKind::Glm) return true;
  if (kind == ModelKind::Fmm2) {
    Fmm2Params p;
    return fmm2_params(theta, d, p);
  }
  Hmm2Params p;
  return hmm2_params(theta, d, p);
}

std::pair<Eigen::VectorXd, LatentSpec> constrain(const Eigen::VectorXd& theta,
                                                 ModelKind kind, Eigen::Index d) {
  if (theta.size() != working_dim(kind, d))
    throw std::invalid_argument("constrain: theta length mismatch");
  Eigen::VectorXd beta = theta.head(d);
  if (kind == ModelKind::Fmm2) {
    Fmm2Params p;
    if (!fmm2_params(theta, d, p))
      throw std::domain_error("constrain: infeasible S_1 (p_1 e^{S_1} >= 1)");
    FmmLatent latent;
    latent.states = Eigen::Vector2d(p.s1, p.s2);
    latent.weights = Eigen::Vector2d(p.p1, p.p2);
    return {beta, latent};
  }
  if (kind == ModelKind::Hmm2) {
    Hmm2Params p;
    if (!hmm2_params(theta, d, p))
      throw std::domain_error("constrain: infeasible S_1 (pi_1 e^{S_1} >= 1)");
    HmmLatent latent;
    latent.states = Eigen::Vector2d(p.s1, p.s2);
    latent.transition.resize(2, 2);
    latent.transition << p.p11, 1.0 - p.p11, 1.0 - p.p22, p.p22;
    return {beta, latent};
  }
  throw std::invalid_argument("constrain: GLM has no latent parameters");
}

Eigen::VectorXd unconstrain(const Eigen::VectorXd& beta, const LatentSpec& latent,
                            ModelKind kind) {
  if (kind == ModelKind::Fmm2) {
    const auto& fmm = std::get<FmmLatent>(latent);
    Eigen::VectorXd theta(beta.size() + 2);
    theta << beta, logit(fmm.weights[0]), fmm.states[0];
    return theta;
  }
  if (kind == ModelKind::Hmm2) {
    const auto& hmm = std::get<HmmLatent>(latent);
    Eigen::VectorXd theta(beta.size() + 3);
    theta << beta, logit(hmm.transition(0, 0)), logit(hmm.transition(1, 1)),
        hmm.states[0];
    return theta;
  }
  return beta;
}

LatentSpec canonicalize(const LatentSpec& latent) {
  if (const auto* fmm = std::get_if<FmmLatent>(&latent)) {
    if (fmm->states.size() == 2 && fmm->states[0] > fmm->states[1]) {
      FmmLatent out;
      out.states = Eigen::Vector2d(fmm->states[1], fmm->states[0]);
      out.weights = Eigen::Vector2d(fmm->weights[1], fmm->weights[0]);
      return out;
    }
  } else if (const auto* hmm = std::get_if<HmmLatent>(&latent)) {
    if (hmm->states.size() == 2 && hmm->states[0] > hmm->states[1]) {
      HmmLatent out;
      out.states = Eigen::Vector2d(hmm->states[1], hmm->states[0]);
      out.transition.resize(2, 2);
      out.transition << hmm->transition(1, 1), hmm->transition(1, 0),
          hmm->transition(0, 1), hmm->transition(0, 0);
      return out;
    }
  }
  return latent;
}

HmmEval working_eval(const Eigen::VectorXd& theta, ModelKind kind,
                     const CountSeries& data) {
  const Eigen::Index d = data.d();
  HmmEval eval;
  eval.mu = marginal_mean(theta.head(d), data.X);
  if (kind == ModelKind::Fmm2) {
    Fmm2Params p;
    if (!fmm2_params(theta, d, p)) throw std::domain_error("working_eval: infeasible theta");
    eval.states = Eigen::Vector2d(p.s1, p.s2);
    eval.P.resize(2, 2);
    eval.P << p.p1, p.p2, p.p1, p.p2;
    eval.pi = Eigen::Vector2d(p.p1, p.p2);
  } else if (kind == ModelKind::Hmm2) {
    Hmm2Params p;
    if (!hmm2_params(theta, d, p)) throw std::domain_error("working_eval: infeasible theta");
    eval.states = Eigen::Vector2d(p.s1, p.s2);
    eval.P.resize(2, 2);
    eval.P << p.p11, 1.0 - p.p11, 1.0 - p.p22, p.p22;
    eval.pi = Eigen::Vector2d(p.pi1, p.pi2);
  } else {
    throw std::invalid_argument("working_eval: GLM has no latent states");
  }
  return eval;
}

HmmEvalDerivs working_derivs(const Eigen::VectorXd& theta, ModelKind kind,
                             const CountSeries& data) {
  const Eigen::Index d = data.d();
  const Eigen::Index p = working_dim(kind, d);
  HmmEvalDerivs derivs;
  derivs.beta_dim = static_cast<int>(d);
  derivs.dstates = Eigen::MatrixXd::Zero(2, p);
  derivs.dpi = Eigen::MatrixXd::Zero(2, p);
  derivs.dP.assign(static_cast<size_t>(p), Eigen::MatrixXd());

  if (kind == ModelKind::Fmm2) {
    Fmm2Params w;
    if (!fmm2_params(theta, d, w)) throw std::domain_error("working_derivs: infeasible theta");
    const Eigen::Index ia = d, is = d + 1;
    const double sa = w.p1 * w.p2;  // dp1/da
    const double es1 = std::exp(w.s1);
    const double ds2_ds1 = -w.p1 * es1 / w.u;
    const double ds2_dp1 = -es1 / w.u + 1.0 / w.p2;
    derivs.dstates(0, is) = 1.0;
    derivs.dstates(1, is) = ds2_ds1;
    derivs.dstates(1, ia) = ds2_dp1 * sa;
    derivs.dpi(0, ia) = sa;
    derivs.dpi(1, ia) = -sa;
    Eigen::MatrixXd dP(2, 2);
    dP << sa, -sa, sa, -sa;
    derivs.dP[ia] = dP;
    return derivs;
  }

  Hmm2Params w;
  if (!hmm2_params(theta, d, w)) throw std::domain_error("working_derivs: infeasible theta");
  const Eigen::Index ia = d, ib = d + 1, is = d + 2;
  const double s11 = w.p11 * (1.0 - w.p11);
  const double s22 = w.p22 * (1.0 - w.p22);
  const double q1 = 1.0 - w.p11, q2 = 1.0 - w.p22;
  const double total = q1 + q2;
  const double dpi1_da11 = q2 * s11 / (total * total);
  const double dpi1_da22 = -q1 * s22 / (total * total);
  const double es1 = std::exp(w.s1);
  const double ds2_ds1 = -w.pi1 * es1 / w.u;
  const double ds2_dpi1 = -es1 / w.u + 1.0 / w.pi2;

  derivs.dstates(0, is) = 1.0;
  derivs.dstates(1, is) = ds2_ds1;
  derivs.dstates(1, ia) = ds2_dpi1 * dpi1_da11;
  derivs.dstates(1, ib) = ds2_dpi1 * dpi1_da22;
  derivs.dpi(0, ia) = dpi1_da11;
  derivs.dpi(1, ia) = -dpi1_da11;
  derivs.dpi(0, ib) = dpi1_da22;
  derivs.dpi(1, ib) = -dpi1_da22;
  Eigen::MatrixXd dPa = Eigen::MatrixXd::Zero(2, 2);
  dPa(0, 0) = s11;
  dPa(0, 1) = -s11;
  derivs.dP[ia] = dPa;
  Eigen::MatrixXd dPb = Eigen::MatrixXd::Zero(2, 2);
  dPb(1, 0) = -s22;
  dPb(1, 1) = s22;
  derivs.dP[ib] = dPb;
  return derivs;
}

double fmm_loglik(const Eigen::VectorXd& theta, const CountSeries& data) {
  const Eigen::Index d = data.d();
  Fmm2Params p;
  if (!fmm2_params(theta, d, p)) return -kInf;
  Eigen::VectorXd mu;
  try {
    mu = marginal_mean(theta.head(d), data.X);
  } catch (const std::domain_error&) {
    return -kInf;
  }
  const double logp1 = std::log(p.p1), logp2 = std::log(p.p2);
  double ll = 0.0;
  for (Eigen::Index t = 0; t < data.n(); ++t) {
    const double l1 = logp1 + poisson_log_pmf(data.y[t], mu[t] * std::exp(p.s1));
    const double l2 = logp2 + poisson_log_pmf(data.y[t], mu[t] * std::exp(p.s2));
    const double m = std::max(l1, l2);
    ll += m + std::log(std::exp(l1 - m) + std::exp(l2 - m));
  }
  return ll;
}

double hmm_loglik(const Eigen::VectorXd& theta, const CountSeries& data) {
  const Eigen::Index d = data.d();
  if (!working_feasible(theta, ModelKind::Hmm2, d)) return -kInf;
  try {
    return forward_loglik(data.y, working_eval(theta, ModelKind::Hmm2, data));
  } catch (const std::exception&) {
    return -kInf;
  }
}

Eigen::VectorXd loglik_gradient(const Eigen::VectorXd& theta, ModelKind kind,
                                const CountSeries& data) {
  const HmmEval eval = working_eval(theta, kind, data);
  const HmmEvalDerivs derivs = working_derivs(theta, kind, data);
  const ForwardResult fr = forward_scores(data.y, data.X, eval, derivs);
  return fr.scores.colwise().sum();
}

double poisson_fmm_loglik(const Eigen::VectorXd& beta, const FmmLatent& latent,
                          const CountSeries& data) {
  const Eigen::VectorXd mu = marginal_mean(beta, data.X);
  const Eigen::Index k = latent.states.size();
  double ll = 0.0;
  Eigen::VectorXd terms(k);
  for (Eigen::Index t = 0; t < data.n(); ++t) {
    for (Eigen::Index j = 0; j < k; ++j) {
      terms[j] = (latent.weights[j] > 0.0 ? std::log(latent.weights[j]) : -kInf) +
                 poisson_log_pmf(data.y[t], mu[t] * std::exp(latent.states[j]));
    }
    const double m = terms.maxCoeff();
    ll += m + std::log((terms.array() - m).exp().sum());
  }
  return ll;
}

double poisson_hmm_loglik(const Eigen::VectorXd& beta, const HmmLatent& latent,
                          const CountSeries& data) {
  HmmEval eval;
  eval.mu = marginal_mean(beta, data.X);
  eval.states = latent.states;
  eval.P = latent.transition;
  eval.pi = stationary_distribution(latent.transition);
  return forward_loglik(data.y, eval);
}

namespace {

// Multistart grid per the default starting-value scheme: GLM beta, S_1 in
// {-0.25, -0.75, -1.5} crossed with mixing parameters, plus one
// near-collapse start that pins the nesting inequality against the GLM.
std::vector<Eigen::VectorXd> start_grid(ModelKind kind, const Eigen::VectorXd& beta0,
                                        int starts, std::uint64_t seed) {
  const Eigen::Index d = beta0.size();
  std::vector<Eigen::VectorXd> grid;
  const double s1_values[] = {-0.25, -0.75, -1.5};

  auto push = [&](double a, double b, double s1) {
    Eigen::VectorXd theta(working_dim(kind, d));
    if (kind == ModelKind::Fmm2)
      theta << beta0, a, s1;
    else
      theta << beta0, a, b, s1;
    grid.push_back(std::move(theta));
  };

  if (kind == ModelKind::Fmm2) {
    push(logit(0.5), 0.0, -0.05);  // near the GLM boundary
    for (double s1 : s1_values)
      for (double p1 : {0.3, 0.5, 0.7}) push(logit(p1), 0.0, s1);
  } else {
    push(logit(0.9), logit(0.9), -0.05);
    for (double s1 : s1_values)
      for (double pii : {0.7, 0.9}) push(logit(pii), logit(pii), s1);
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.4);
  int guard = 0;
  while (static_cast<int>(grid.size()) < starts && guard < 10 * starts) {
    ++guard;
    Eigen::VectorXd theta = grid[guard % grid.size()];
    for (Eigen::Index i = d; i < theta.size(); ++i) theta[i] += noise(rng);
    if (working_feasible(theta, kind, d)) grid.push_back(std::move(theta));
  }
  if (static_cast<int>(grid.size()) > starts) grid.resize(starts);
  return grid;
}

FittedModel mixture_fit(const CountSeries& data, ModelKind kind, const FitOptions& opts,
                        const std::vector<Eigen::VectorXd>& extra_starts) {
  data.validate();
  const Eigen::Index d = data.d();
  const FittedModel glm = glm_fit(data);

  std::vector<Eigen::VectorXd> starts =
      start_grid(kind, glm.beta, opts.starts, opts.seed);
  starts.insert(starts.end(), extra_starts.begin(), extra_starts.end());

  Objective fn = [&](const Eigen::VectorXd& th) {
    return kind == ModelKind::Fmm2
               ? fmm_loglik(th, data)
               : hmm_loglik(th, data);
  };
  Gradient gr = [&](const Eigen::VectorXd& th) {
    if (!working_feasible(th, kind, d))
      throw std::domain_error("gradient requested off the feasible set");
    return loglik_gradient(th, kind, data);
  };

  bool have_best = false;
  OptimResult best;
  int failures = 0;
  for (const Eigen::VectorXd& s : starts) {
    if (!working_feasible(s, kind, d)) continue;
    OptimResult run;
    try {
      run = maximize_bfgs(fn, gr, s, opts.max_iter, opts.grad_tol);
      // a stall short of tolerance gets a fresh-Hessian retry
      for (int round = 0; round < 2 && !run.converged; ++round) {
        OptimResult again = maximize_bfgs(fn, gr, run.x, opts.max_iter, opts.grad_tol);
        if (again.value < run.value && !again.converged) break;
        run = again;
      }
    } catch (const std::exception&) {
      ++failures;
      continue;
    }
    if (!run.converged) {
      ++failures;
      continue;
    }
    if (!have_best || run.value > best.value) {
      best = run;
      have_best = true;
    }
  }
  if (!have_best) {
    std::ostringstream os;
    os << to_string(kind) << " fit: no multistart run converged (" << failures
       << " attempts)";
    throw std::runtime_error(os.str());
  }

  auto [beta, latent] = constrain(best.x, kind, d);
  latent = canonicalize(latent);

  FittedModel fit;
  fit.model = kind;
  fit.beta = beta;
  fit.latent = latent;
  fit.loglik = best.value;
  fit.n_iter = best.n_iter;
  fit.converged = best.converged;
  fit.gradient_norm = best.gradient_norm;
  fit.theta = unconstrain(beta, latent, kind);

  // boundary diagnostics
  if (kind == ModelKind::Fmm2) {
    const auto& fmm = std::get<FmmLatent>(latent);
    const double p1 = fmm.weights[0];
    if (std::min(p1, 1.0 - p1) < kBoundaryTol) fit.degenerate = true;
    if (std::abs(fmm.states[1] - fmm.states[0]) < 1e-5) fit.degenerate = true;
  } else {
    const auto& hmm = std::get<HmmLatent>(latent);
    for (int i = 0; i < 2; ++i) {
      const double pii = hmm.transition(i, i);
      if (std::min(pii, 1.0 - pii) < kBoundaryTol) fit.degenerate = true;
    }
    if (std::abs(hmm.states[1] - hmm.states[0]) < 1e-5) fit.degenerate = true;
  }
  return fit;
}

}  // namespace

FittedModel fmm_fit(const CountSeries& data, const FitOptions& opts) {
  return mixture_fit(data, ModelKind::Fmm2, opts, {});
}

FittedModel hmm_fit(const CountSeries& data, const FitOptions& opts) {
  // warm start from a short FMM run; the FMM is the identical-rows HMM, so
  // this pins the likelihood-nesting inequality.
  std::vector<Eigen::VectorXd> extra;
  try {
    FitOptions fopts = opts;
    fopts.starts = std::min(opts.starts, 4);
    const FittedModel fmm = fmm_fit(data, fopts);
    const auto& latent = std::get<FmmLatent>(*fmm.latent);
    Eigen::VectorXd theta(data.d() + 3);
    theta << fmm.beta, logit(latent.weights[0]), logit(latent.weights[1]),
        latent.states[0];
    if (working_feasible(theta, ModelKind::Hmm2, data.d())) extra.push_back(theta);
  } catch (const std::exception&) {
    // fall back to the plain grid
  }
  return mixture_fit(data, ModelKind::Hmm2, opts, extra);
}

}  // namespace pdcount
