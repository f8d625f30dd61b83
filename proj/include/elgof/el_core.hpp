#pragma once

#include <limits>
#include <span>
#include <vector>

namespace elgof {

inline constexpr double kDefaultElTolerance = 1e-10;
inline constexpr int kDefaultElMaxIterations = 200;

/// Outcome of the scalar empirical likelihood problem for one mark vector.
///
/// When `degenerate` is set the constraint set is empty (zero is not inside
/// the convex hull of the marks), `log_ratio` holds +infinity and `lambda` /
/// `weights` are left empty.
struct ElEvaluation {
  double log_ratio = 0.0;
  double lambda = 0.0;
  std::vector<double> weights;
  bool degenerate = false;

  static ElEvaluation infinite() {
    ElEvaluation e;
    e.log_ratio = std::numeric_limits<double>::infinity();
    e.degenerate = true;
    return e;
  }
};

/// True when the marks contain a strictly positive and a strictly negative
/// value. Zeros are ignored.
bool hull_contains_zero(std::span<const double> marks);

/// Root of sum_i A_i / (1 + lambda A_i) = 0 on the admissible interval
/// (-1/max A, -1/min A).
///
/// The marks are rescaled by max|A_i| before iterating, so `tol` bounds the
/// constraint residual relative to that scale. Safeguarded Newton with a
/// bisection fallback. Throws Error{hull_violation} or
/// Error{non_convergence}.
double solve_lambda(std::span<const double> marks,
                    double tol = kDefaultElTolerance,
                    int max_iterations = kDefaultElMaxIterations);

/// -2 log of the empirical likelihood ratio for the moment constraint
/// sum w_i A_i = 0, together with the optimal weights.
ElEvaluation el_log_ratio(std::span<const double> marks,
                          double tol = kDefaultElTolerance,
                          int max_iterations = kDefaultElMaxIterations);

/// Same value as el_log_ratio(...).log_ratio without materialising weights.
double el_log_ratio_value(std::span<const double> marks,
                          double tol = kDefaultElTolerance,
                          int max_iterations = kDefaultElMaxIterations);

}  // namespace elgof
