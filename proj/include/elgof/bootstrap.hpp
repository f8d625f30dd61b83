#pragma once

#include "elgof/marked_process.hpp"
#include "elgof/model_null.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace elgof {

/// Bounded, mean 0, variance 1 multiplier laws.
///
/// rademacher: +-1 with probability 1/2 each.
/// mammen: (1 - sqrt5)/2 with probability (sqrt5 + 1)/(2 sqrt5), otherwise
/// (1 + sqrt5)/2.
enum class MultiplierLaw { rademacher, mammen };

std::string to_string(MultiplierLaw law);
MultiplierLaw parse_multiplier_law(const std::string& text);

inline constexpr int kDeskReplicates = 500;
inline constexpr int kFullReplicates = 5000;

struct MultiplierConfig {
  int replicates = kDeskReplicates;
  MultiplierLaw law = MultiplierLaw::rademacher;
  std::uint64_t seed = 0;
  unsigned threads = 1;  // 0: all hardware threads
};

/// V_1..V_n for replicate b. Depends only on (seed, law, n, b).
Vector draw_multipliers(const MultiplierConfig& cfg, Index n, int replicate);

/// Multipliers for replicates [0, B) as an n x B matrix.
Matrix multiplier_matrix(const MultiplierConfig& cfg, Index n);

struct ElReplicates {
  std::vector<double> S;  // sup_u R*(u)^2 / T(u)
  std::vector<double> T;  // integral of R*(u)^2 / T(u) against the grid weights
  Index skipped_grid_points = 0;  // T(u) = 0
};

/// Multiplier bootstrap of the EL statistics on the frozen scores Q_i(u).
/// Throws Error{nothing_to_calibrate} if every grid point has T(u) = 0.
ElReplicates multiplier_replicates(const MarkedProcessEval& mpe, const MultiplierConfig& cfg);

/// Same, with caller-supplied multipliers (n x B), one column per replicate.
ElReplicates multiplier_replicates(const MarkedProcessEval& mpe, const Matrix& multipliers,
                                   unsigned threads = 1);

struct IrfReplicates {
  std::vector<double> ks;
  std::vector<double> cvm;
  int failed = 0;
};

/// Maximum fraction of refits allowed to fail.
inline constexpr double kMaxWildFailureFraction = 0.01;

/// Residual wild bootstrap for the parametric IRF tests: Y*_i = gamma(X_i,
/// theta_hat) + e_i V_i, refit, recompute R*_n and its KS / CvM functionals.
IrfReplicates wild_bootstrap_parametric(const Dataset& data, const ParametricFit& fit,
                                        const RegressionModel& model, const IndexSetRule& rule,
                                        const MultiplierConfig& cfg);

IrfReplicates wild_bootstrap_parametric(const Dataset& data, const ParametricFit& fit,
                                        const RegressionModel& model, const IndexSetRule& rule,
                                        const Matrix& multipliers, unsigned threads = 1);

}  // namespace elgof
