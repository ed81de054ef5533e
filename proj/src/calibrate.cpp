#include "pdcount/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "pdcount/moments.hpp"

namespace pdcount {

double od_anchor(Level level) {
  switch (level) {
    case Level::Low: return 1.5;
    case Level::Medium: return 3.0;
    default: return 5.0;
  }
}

double ac1_anchor(Level level) {
  switch (level) {
    case Level::Low: return 0.15;
    case Level::Medium: return 0.25;
    default: return 0.5;
  }
}

double sp_anchor(Level level) {
  switch (level) {
    case Level::Low: return 0.25;
    case Level::Medium: return 0.45;
    default: return 0.7;
  }
}

namespace {

double rel_err(double achieved, double target) {
  return std::abs(achieved - target) / std::abs(target);
}

// Bisect f (monotone, either direction) for f = target over [lo, hi].
// Returns the endpoint when the target is outside the attained range.
double bisect_monotone(const std::function<double(double)>& f, double target,
                       double lo, double hi, bool& bracketed, int iters = 200) {
  double flo = f(lo), fhi = f(hi);
  const bool increasing = fhi >= flo;
  bracketed = increasing ? (flo <= target && target <= fhi)
                         : (fhi <= target && target <= flo);
  if (!bracketed) {
    const double dlo = std::abs(flo - target), dhi = std::abs(fhi - target);
    return dlo <= dhi ? lo : hi;
  }
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < target) == increasing)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double factor_value(const FactorProfile& profile, int which) {
  switch (which) {
    case 0: return profile.od;
    case 1: return profile.ac1;
    default: return profile.sp_mean();
  }
}

// which factor anchors a one-knob family: SP first, then AC1, then OD
int priority_factor(const CalibrationTarget& t) {
  if (t.sp) return 2;
  if (t.ac1) return 1;
  if (t.od) return 0;
  throw std::invalid_argument("calibrate: empty target");
}

double priority_anchor(const CalibrationTarget& t, int which) {
  switch (which) {
    case 0: return od_anchor(*t.od);
    case 1: return ac1_anchor(*t.ac1);
    default: return sp_anchor(*t.sp);
  }
}

void check_all(const CalibrationTarget& t, const FactorProfile& achieved,
               bool sp_defined, CalibrationResult& out) {
  std::ostringstream os;
  bool ok = true;
  if (t.od && rel_err(achieved.od, od_anchor(*t.od)) > t.tolerance) {
    ok = false;
    os << "OD " << achieved.od << " misses anchor " << od_anchor(*t.od) << "; ";
  }
  if (t.ac1 && rel_err(achieved.ac1, ac1_anchor(*t.ac1)) > t.tolerance) {
    ok = false;
    os << "AC1 " << achieved.ac1 << " misses anchor " << ac1_anchor(*t.ac1) << "; ";
  }
  if (t.sp && sp_defined &&
      rel_err(achieved.sp_mean(), sp_anchor(*t.sp)) > t.tolerance) {
    ok = false;
    os << "SP " << achieved.sp_mean() << " misses anchor " << sp_anchor(*t.sp)
       << "; ";
  }
  out.feasible = ok;
  if (!ok && out.message.empty()) out.message = os.str();
}

HmmLatent fixed_trans_spec(double p11, double p22, double s1) {
  const double q1 = 1.0 - p11, q2 = 1.0 - p22;
  const double pi1 = q2 / (q1 + q2), pi2 = 1.0 - pi1;
  const double u = 1.0 - pi1 * std::exp(s1);
  if (!(u > 0.0)) throw std::domain_error("calibrate: infeasible S_1");
  HmmLatent spec;
  spec.states = Eigen::Vector2d(s1, std::log(u) - std::log(pi2));
  spec.transition.resize(2, 2);
  spec.transition << p11, 1.0 - p11, 1.0 - p22, p22;
  return spec;
}

CalibrationResult calibrate_fixed_trans(const CalibrationTarget& target,
                                        const Hmm2FixedTransFamily& family,
                                        const Eigen::VectorXd& mu) {
  const int which = priority_factor(target);
  const double anchor = priority_anchor(target, which);
  auto value_at = [&](double s1) {
    return factor_value(
        factor_profile(fixed_trans_spec(family.p11, family.p22, s1), mu), which);
  };
  // all three factors decrease as S_1 rises toward the collapse point 0
  bool bracketed = false;
  const double s1 =
      bisect_monotone(value_at, anchor, -8.0, -1e-6, bracketed);
  CalibrationResult out;
  out.spec = fixed_trans_spec(family.p11, family.p22, s1);
  out.achieved = factor_profile(out.spec, mu);
  if (!bracketed) {
    std::ostringstream os;
    os << "factor " << which << " anchor " << anchor
       << " outside the attainable range of this fixed-transition family";
    out.message = os.str();
  }
  check_all(target, out.achieved, true, out);
  if (!bracketed) out.feasible = false;
  return out;
}

CalibrationResult calibrate_hmm2(const CalibrationTarget& target,
                                 const Eigen::VectorXd& mu) {
  if (!target.od || !target.sp || !target.ac1)
    throw std::invalid_argument(
        "calibrate: the full 2-state family needs OD, AC1 and SP targets");
  CalibrationResult out;
  const double mu_bar = mu.mean();
  const double sig = (od_anchor(*target.od) - 1.0) / mu_bar;  // sigma_alpha^2
  if (!(sig > 0.0)) {
    out.message = "OD anchor at or below 1 leaves no latent variance";
    out.spec = fixed_trans_spec(0.9, 0.9, -1e-6);
    out.achieved = factor_profile(out.spec, mu);
    out.feasible = false;
    return out;
  }

  // Given pi_1, the mean-one and variance constraints pin the two states:
  // e^{S1} = 1 - sqrt(sig pi_2 / pi_1), e^{S2} = (1 - pi_1 e^{S1}) / pi_2.
  auto states_for = [&](double pi1) -> Eigen::Vector2d {
    const double pi2 = 1.0 - pi1;
    const double a = 1.0 - std::sqrt(sig * pi2 / pi1);
    const double b = (1.0 - pi1 * a) / pi2;
    return {a, b};  // exp scale
  };
  auto sp_for = [&](double pi1) {
    const Eigen::Vector2d ab = states_for(pi1);
    if (!(ab[0] > 0.0)) return 1.0;  // collapse of the low state: full separation
    return mean_separation_probability(mu, std::log(ab[0]), std::log(ab[1]));
  };

  // scan pi_1 over its admissible range, then refine around the best bracket
  const double lo = sig / (1.0 + sig) + 1e-9;
  const double hi = 1.0 - 1e-9;
  const double sp_target = sp_anchor(*target.sp);
  const int grid_n = 400;
  double best_pi1 = lo, best_err = std::numeric_limits<double>::infinity();
  double prev_pi1 = 0.0, prev_val = 0.0;
  bool have_root = false;
  double root_lo = 0.0, root_hi = 0.0;
  for (int i = 0; i <= grid_n; ++i) {
    const double pi1 = lo + (hi - lo) * i / grid_n;
    const double val = sp_for(pi1);
    if (std::abs(val - sp_target) < best_err) {
      best_err = std::abs(val - sp_target);
      best_pi1 = pi1;
    }
    if (i > 0 && !have_root &&
        (prev_val - sp_target) * (val - sp_target) <= 0.0) {
      have_root = true;
      root_lo = prev_pi1;
      root_hi = pi1;
    }
    prev_pi1 = pi1;
    prev_val = val;
  }
  double pi1 = best_pi1;
  if (have_root) {
    bool bracketed = false;
    pi1 = bisect_monotone(sp_for, sp_target, root_lo, root_hi, bracketed);
  } else {
    std::ostringstream os;
    os << "SP anchor " << sp_target << " unattainable at OD "
       << od_anchor(*target.od) << " (closest " << sp_for(best_pi1) << ")";
    out.message = os.str();
  }

  const Eigen::Vector2d ab = states_for(pi1);
  const double s1 = std::log(ab[0]), s2 = std::log(ab[1]);

  // AC1 is linear in the chain eigenvalue lambda: gamma_1 = lambda sig.
  double ac1_at_one = 0.0;
  for (Eigen::Index t = 0; t + 1 < mu.size(); ++t)
    ac1_at_one += marginal_correlation(mu[t], mu[t + 1], sig, sig);
  ac1_at_one /= static_cast<double>(mu.size() - 1);
  double lambda = ac1_anchor(*target.ac1) / ac1_at_one;
  if (lambda < 0.0 || lambda > 1.0 - 1e-9) {
    std::ostringstream os;
    os << "AC1 anchor " << ac1_anchor(*target.ac1)
       << " needs chain eigenvalue " << lambda
       << " outside [0,1); max reachable AC1 is " << ac1_at_one;
    if (!out.message.empty()) out.message += "; ";
    out.message += os.str();
    lambda = std::clamp(lambda, 0.0, 1.0 - 1e-9);
  }
  const double pi2 = 1.0 - pi1;
  HmmLatent spec;
  spec.states = Eigen::Vector2d(s1, s2);
  spec.transition.resize(2, 2);
  const double p11 = 1.0 - (1.0 - lambda) * pi2;
  const double p22 = 1.0 - (1.0 - lambda) * pi1;
  spec.transition << p11, 1.0 - p11, 1.0 - p22, p22;

  out.spec = spec;
  out.achieved = factor_profile(out.spec, mu);
  check_all(target, out.achieved, true, out);
  if (!out.message.empty()) out.feasible = false;
  return out;
}

CalibrationResult calibrate_hmm_k(const CalibrationTarget& target,
                                  const HmmKFixedFamily& family,
                                  const Eigen::VectorXd& mu) {
  if (family.k < 2) throw std::invalid_argument("calibrate: need K >= 2");
  auto spec_for = [&](double delta) {
    const int k = family.k;
    double mean_exp = 0.0;
    for (int j = 0; j < k; ++j) mean_exp += std::exp(j * delta) / k;
    const double s0 = -std::log(mean_exp);
    HmmLatent spec;
    spec.states.resize(k);
    for (int j = 0; j < k; ++j) spec.states[j] = s0 + j * delta;
    spec.transition = Eigen::MatrixXd::Constant(k, k, (1.0 - family.stay) / (k - 1));
    spec.transition.diagonal().setConstant(family.stay);
    return spec;
  };
  const int which = priority_factor(target);
  const double anchor = priority_anchor(target, which);
  auto value_at = [&](double delta) {
    return factor_value(factor_profile(spec_for(delta), mu), which);
  };
  bool bracketed = false;
  const double delta = bisect_monotone(value_at, anchor, 1e-6, 6.0, bracketed);
  CalibrationResult out;
  out.spec = spec_for(delta);
  out.achieved = factor_profile(out.spec, mu);
  if (!bracketed)
    out.message = "anchor outside the attainable range of the K-state ladder";
  check_all(target, out.achieved, true, out);
  if (!bracketed) out.feasible = false;
  return out;
}

CalibrationResult calibrate_ar1(const CalibrationTarget& target,
                                const Eigen::VectorXd& mu) {
  if (!target.od || !target.ac1)
    throw std::invalid_argument("calibrate: the AR(1) family needs OD and AC1 targets");
  CalibrationResult out;
  const double sig = (od_anchor(*target.od) - 1.0) / mu.mean();
  const double v = std::log1p(sig);  // stationary variance of alpha

  auto ac1_for = [&](double phi) {
    const double g1 = std::expm1(v * phi);
    double ac1 = 0.0;
    for (Eigen::Index t = 0; t + 1 < mu.size(); ++t)
      ac1 += marginal_correlation(mu[t], mu[t + 1], g1, sig);
    return ac1 / static_cast<double>(mu.size() - 1);
  };
  bool bracketed = false;
  const double phi =
      bisect_monotone(ac1_for, ac1_anchor(*target.ac1), 0.0, 1.0 - 1e-9, bracketed);
  Ar1Latent spec;
  spec.phi = phi;
  spec.sigma2 = v * (1.0 - phi * phi);
  out.spec = spec;
  out.achieved = factor_profile(out.spec, mu);
  if (!bracketed) {
    std::ostringstream os;
    os << "AC1 anchor " << ac1_anchor(*target.ac1) << " unattainable at OD "
       << od_anchor(*target.od) << " (max " << ac1_for(1.0 - 1e-9) << ")";
    out.message = os.str();
  }
  // SP is 0 by definition for a continuous latent; the target's sp entry is
  // not part of the feasibility check
  check_all(target, out.achieved, /*sp_defined=*/false, out);
  if (!bracketed) out.feasible = false;
  return out;
}

}  // namespace

CalibrationResult calibrate(const CalibrationTarget& target,
                            const LatentFamily& family, const Eigen::VectorXd& mu) {
  if (mu.size() == 0 || (mu.array() <= 0.0).any())
    throw std::invalid_argument("calibrate: mean curve must be positive");
  return std::visit(
      [&](const auto& fam) -> CalibrationResult {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, Hmm2Family>)
          return calibrate_hmm2(target, mu);
        else if constexpr (std::is_same_v<T, Hmm2FixedTransFamily>)
          return calibrate_fixed_trans(target, fam, mu);
        else if constexpr (std::is_same_v<T, HmmKFixedFamily>)
          return calibrate_hmm_k(target, fam, mu);
        else
          return calibrate_ar1(target, mu);
      },
      family);
}

}  // namespace pdcount
