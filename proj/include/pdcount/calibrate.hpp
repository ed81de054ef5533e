#pragma once

#include <optional>
#include <string>
#include <variant>

#include "pdcount/types.hpp"

namespace pdcount {

// Factor levels map to the study anchors OD 1.5/3/5, AC1 0.15/0.25/0.5,
// SP 0.25/0.45/0.7.
double od_anchor(Level level);
double ac1_anchor(Level level);
double sp_anchor(Level level);

struct CalibrationTarget {
  std::optional<Level> od;
  std::optional<Level> ac1;
  std::optional<Level> sp;
  double tolerance = 0.05;  // relative, per factor
};

// Latent families the calibrator can search.

// Full 2-state HMM: S_1, the stationary weight and the chain eigenvalue are
// all free; matches OD, AC1 and SP anchors when jointly feasible.
struct Hmm2Family {};

// 2-state HMM with the transition matrix pinned; a one-dimensional
// root-find in S_1 anchored on the highest-priority requested factor
// (SP, then AC1, then OD).
struct Hmm2FixedTransFamily {
  double p11 = 0.9;
  double p22 = 0.9;
};

// K-state chain with p_ii = stay and uniform off-diagonal mass; states
// equally spaced on the log scale under the mean-one constraint, spacing
// anchored on the priority factor.
struct HmmKFixedFamily {
  int k = 3;
  double stay = 0.9;
};

// AR(1) Gaussian latent: matches OD and AC1; SP is 0 by definition.
struct Ar1Family {};

using LatentFamily =
    std::variant<Hmm2Family, Hmm2FixedTransFamily, HmmKFixedFamily, Ar1Family>;

struct CalibrationResult {
  LatentSpec spec;
  FactorProfile achieved;
  bool feasible = false;
  std::string message;  // why the target is out of reach, when it is
};

// Calibrate against the mean curve mu implied by the covariate plan.
// When the target is infeasible the closest achievable spec is returned
// with feasible = false; nothing is silently approximated.
CalibrationResult calibrate(const CalibrationTarget& target,
                            const LatentFamily& family, const Eigen::VectorXd& mu);

}  // namespace pdcount
