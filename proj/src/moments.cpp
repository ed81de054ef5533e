#include "pdcount/moments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "pdcount/math.hpp"

namespace pdcount {

namespace {

constexpr double kMaxExponent = 700.0;  // exp() overflows just above 709
constexpr double kTailTol = 1e-12;

Level nearest_level(double value, double lo, double med, double hi) {
  const std::array<std::pair<double, Level>, 3> anchors{
      {{lo, Level::Low}, {med, Level::Medium}, {hi, Level::High}}};
  Level best = Level::Low;
  double best_dist = std::abs(value - lo);
  for (const auto& [anchor, level] : anchors) {
    const double dist = std::abs(value - anchor);
    if (dist < best_dist) {
      best_dist = dist;
      best = level;
    }
  }
  return best;
}

}  // namespace

Eigen::VectorXd marginal_mean(const Eigen::VectorXd& beta, const Eigen::MatrixXd& X) {
  if (X.cols() != beta.size())
    throw std::invalid_argument("marginal_mean: beta length does not match design");
  Eigen::VectorXd eta = X * beta;
  for (Eigen::Index t = 0; t < eta.size(); ++t) {
    if (!std::isfinite(eta[t]) || eta[t] > kMaxExponent) {
      std::ostringstream os;
      os << "marginal_mean: linear predictor " << eta[t] << " at t=" << t
         << " exceeds the representable exponent";
      throw std::domain_error(os.str());
    }
  }
  return eta.array().exp();
}

double marginal_variance(double mu, double sigma_alpha_sq) {
  return mu + mu * mu * sigma_alpha_sq;
}

double marginal_covariance(double mu_s, double mu_t, double gamma_lag) {
  return mu_s * mu_t * gamma_lag;
}

double marginal_correlation(double mu_s, double mu_t, double gamma_lag,
                            double sigma_alpha_sq) {
  const double vs = marginal_variance(mu_s, sigma_alpha_sq);
  const double vt = marginal_variance(mu_t, sigma_alpha_sq);
  return marginal_covariance(mu_s, mu_t, gamma_lag) / std::sqrt(vs * vt);
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& P) {
  const Eigen::Index k = P.rows();
  if (P.cols() != k || k < 1)
    throw std::invalid_argument("stationary_distribution: square matrix required");
  for (Eigen::Index i = 0; i < k; ++i) {
    if (std::abs(P.row(i).sum() - 1.0) > 1e-8)
      throw std::invalid_argument("stationary_distribution: row does not sum to 1");
  }

  // Ergodic (irreducible + aperiodic) iff 1 is the unique eigenvalue on the
  // unit circle.
  Eigen::EigenSolver<Eigen::MatrixXd> es(P, /*computeEigenvectors=*/false);
  int on_circle = 0;
  for (Eigen::Index i = 0; i < k; ++i)
    if (std::abs(es.eigenvalues()[i]) > 1.0 - 1e-9) ++on_circle;
  if (on_circle != 1)
    throw std::invalid_argument(
        "stationary_distribution: chain is reducible or periodic (no unique "
        "stationary distribution)");

  // Solve pi' (P - I) = 0 with sum(pi) = 1 by replacing one equation.
  Eigen::MatrixXd A = P.transpose() - Eigen::MatrixXd::Identity(k, k);
  A.row(k - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
  b[k - 1] = 1.0;
  Eigen::VectorXd pi = A.fullPivLu().solve(b);
  for (Eigen::Index j = 0; j < k; ++j) {
    if (!(pi[j] > 0.0))
      throw std::invalid_argument("stationary_distribution: non-positive mass");
  }
  return pi;
}

LatentMoments latent_moments(const LatentSpec& spec, int tau_max) {
  if (tau_max < 0) throw std::invalid_argument("latent_moments: tau_max < 0");
  LatentMoments m;
  m.gamma.resize(static_cast<size_t>(tau_max) + 1);

  if (const auto* hmm = std::get_if<HmmLatent>(&spec)) {
    const Eigen::VectorXd pi = stationary_distribution(hmm->transition);
    const Eigen::VectorXd e = hmm->states.array().exp();
    m.sigma_alpha_sq = pi.dot(e.array().square().matrix()) - 1.0;
    m.gamma[0] = m.sigma_alpha_sq;
    Eigen::MatrixXd Ptau = Eigen::MatrixXd::Identity(e.size(), e.size());
    for (int tau = 1; tau <= tau_max; ++tau) {
      Ptau = Ptau * hmm->transition;
      // gamma_tau = sum_ij pi_i (P^tau)_ij e^{S_i + S_j} - 1
      m.gamma[tau] = (pi.array() * e.array() * (Ptau * e).array()).sum() - 1.0;
    }
  } else if (const auto* fmm = std::get_if<FmmLatent>(&spec)) {
    const Eigen::VectorXd e = fmm->states.array().exp();
    m.sigma_alpha_sq = fmm->weights.dot(e.array().square().matrix()) - 1.0;
    m.gamma[0] = m.sigma_alpha_sq;
    for (int tau = 1; tau <= tau_max; ++tau) m.gamma[tau] = 0.0;
  } else {
    const auto& ar1 = std::get<Ar1Latent>(spec);
    const double v = ar1.sigma2 / (1.0 - ar1.phi * ar1.phi);
    m.sigma_alpha_sq = std::expm1(v);
    for (int tau = 0; tau <= tau_max; ++tau)
      m.gamma[tau] = std::expm1(v * std::pow(ar1.phi, tau));
  }

  m.rho.resize(m.gamma.size());
  for (size_t i = 0; i < m.gamma.size(); ++i)
    m.rho[i] = m.sigma_alpha_sq > 0.0 ? m.gamma[i] / m.sigma_alpha_sq : (i == 0 ? 1.0 : 0.0);
  m.rho[0] = 1.0;
  return m;
}

double overdispersion_factor(const Eigen::VectorXd& mu, double sigma_alpha_sq) {
  if (mu.size() == 0) throw std::invalid_argument("overdispersion_factor: empty mean");
  return 1.0 + sigma_alpha_sq * mu.mean();
}

double separation_probability(double mu, double s_lo, double s_hi) {
  if (s_lo > s_hi) throw std::invalid_argument("separation_probability: S_j > S_{j+1}");
  const double lam1 = mu * std::exp(s_lo);
  const double lam2 = mu * std::exp(s_hi);
  double p1 = std::exp(-lam1), p2 = std::exp(-lam2);
  double cum1 = p1, cum2 = p2;
  double overlap = std::min(p1, p2);
  for (long i = 1;; ++i) {
    if (cum1 > 1.0 - kTailTol && cum2 > 1.0 - kTailTol) break;
    p1 *= lam1 / static_cast<double>(i);
    p2 *= lam2 / static_cast<double>(i);
    cum1 += p1;
    cum2 += p2;
    overlap += std::min(p1, p2);
  }
  return 1.0 - overlap;
}

double mean_separation_probability(const Eigen::VectorXd& mu, double s_lo, double s_hi) {
  double total = 0.0;
  for (Eigen::Index t = 0; t < mu.size(); ++t)
    total += separation_probability(mu[t], s_lo, s_hi);
  return total / static_cast<double>(mu.size());
}

Level classify_od(double od) { return nearest_level(od, 1.5, 3.0, 5.0); }
Level classify_ac1(double ac1) { return nearest_level(ac1, 0.15, 0.25, 0.5); }
Level classify_sp(double sp) { return nearest_level(sp, 0.25, 0.45, 0.7); }

FactorProfile factor_profile(const LatentSpec& spec, const Eigen::VectorXd& mu) {
  const LatentMoments m = latent_moments(spec, 1);
  FactorProfile profile;
  profile.od = overdispersion_factor(mu, m.sigma_alpha_sq);
  double ac1 = 0.0;
  if (mu.size() > 1) {
    for (Eigen::Index t = 0; t + 1 < mu.size(); ++t)
      ac1 += marginal_correlation(mu[t], mu[t + 1], m.gamma[1], m.sigma_alpha_sq);
    ac1 /= static_cast<double>(mu.size() - 1);
  }
  profile.ac1 = ac1;

  const Eigen::VectorXd* states = nullptr;
  if (const auto* hmm = std::get_if<HmmLatent>(&spec)) states = &hmm->states;
  if (const auto* fmm = std::get_if<FmmLatent>(&spec)) states = &fmm->states;
  if (states != nullptr) {
    for (Eigen::Index j = 0; j + 1 < states->size(); ++j)
      profile.sp.push_back(
          mean_separation_probability(mu, (*states)[j], (*states)[j + 1]));
  }
  profile.od_level = classify_od(profile.od);
  profile.ac1_level = classify_ac1(profile.ac1);
  profile.sp_level = classify_sp(profile.sp_mean());
  return profile;
}

}  // namespace pdcount
