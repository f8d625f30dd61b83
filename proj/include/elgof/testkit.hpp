#pragma once

#include "elgof/el_core.hpp"
#include "elgof/marked_process.hpp"

#include <span>
#include <string>

namespace elgof {

inline constexpr double kDefaultCap = 1e6;

/// Empirical likelihood statistics over the grid.
struct ElStatistics {
  Vector ell_curve;  // ell(u), +infinity where the hull condition fails
  double S_n = 0.0;  // sup_u ell(u)
  double T_n = 0.0;  // integral of ell against the empirical measure
  Index degenerate_count = 0;           // grid points with ell = +infinity
  Index degenerate_variance_count = 0;  // grid points with T(u) = 0
  bool capped = false;  // some +infinity entered T_n as `cap`
};

/// ell(u) for every grid column. Infinite ell values make S_n infinite and
/// contribute `cap` to T_n.
ElStatistics el_statistics(const MarkedProcessEval& mpe, double cap = kDefaultCap,
                           double tol = kDefaultElTolerance);

/// Kolmogorov-Smirnov and Cramer-von Mises functionals of R_n.
struct IrfStatistics {
  double ks = 0.0;
  double cvm = 0.0;
};

IrfStatistics irf_statistics(const MarkedProcessEval& mpe);

/// KS = max |R(u)|, CvM = sum_u weight(u) R(u)^2.
IrfStatistics irf_from_process(const Vector& process, const Vector& grid_weight);

struct Decision {
  double observed = 0.0;
  double p_value = 1.0;
  bool reject = false;
  double level = 0.05;
  std::size_t replicates = 0;
};

/// Bootstrap p-value (1 + #{rep >= observed}) / (B + 1); reject iff p <= level.
Decision decide(double observed, std::span<const double> replicates, double level);

/// Names used in reports and on the command line.
enum class TestKind { el_ks, el_cvm, irf_ks, irf_cvm };

std::string to_string(TestKind kind);
/// Accepts "el-ks", "EL-KS", "el_ks" and so on. Throws Error{invalid_argument}.
TestKind parse_test_kind(const std::string& text);

}  // namespace elgof
