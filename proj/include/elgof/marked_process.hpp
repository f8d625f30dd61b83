#pragma once

#include "elgof/dataset.hpp"
#include "elgof/model_null.hpp"

#include <vector>

namespace elgof {

/// How the half-line J_x is oriented for each coordinate.
///
/// `pivoted`: J_x = {t >= x} when x <= a and {t <= x} when x > a, so every set
/// accumulates towards the pivot a. `left_to_right`: J_x = {t <= x}, the
/// classical cumulative process.
enum class Orientation { pivoted, left_to_right };

struct IndexSetRule {
  std::vector<double> pivots;  // one per coordinate, ignored for left_to_right
  Orientation orientation = Orientation::pivoted;

  static IndexSetRule at(std::vector<double> pivots);
  /// Coordinate-wise sample medians of `points`.
  static IndexSetRule medians(const Matrix& points);
  static IndexSetRule left_to_right(Index dims);

  Index dims() const { return static_cast<Index>(pivots.size()); }

  bool member(double t, double x, Index coord) const {
    if (orientation == Orientation::left_to_right) return t <= x;
    return x <= pivots[static_cast<std::size_t>(coord)] ? t >= x : t <= x;
  }

  /// t in J_x = prod_j J_{x_j}
  template <typename RowT, typename RowX>
  bool contains(const RowT& t, const RowX& x) const {
    for (Index c = 0; c < t.size(); ++c) {
      if (!member(t(c), x(c), c)) return false;
    }
    return true;
  }
};

/// Distinct grid points with their mass under the empirical measure.
struct Grid {
  Matrix points;  // G x q, rows sorted lexicographically
  Vector weight;  // multiplicity / n
};

Grid unique_grid(const Matrix& points);

/// n x G matrix of I(points_i in J_{grid_g}).
Matrix indicator_matrix(const Matrix& points, const Matrix& grid, const IndexSetRule& rule);

/// Mark arrays A_i(u), bootstrap scores Q_i(u) and variances T(u) on a grid.
struct MarkedProcessEval {
  Matrix grid;         // G x q
  Vector grid_weight;  // G, empirical measure
  Matrix marks;        // n x G
  Vector variance;     // G, n^-1 sum_i A_i(u)^2
  Matrix qscores;      // n x G
  std::vector<bool> excluded;  // one flag per original observation

  Index n() const { return marks.rows(); }
  Index grid_size() const { return marks.cols(); }

  /// R_n(u) = n^-1/2 sum_i A_i(u)
  Vector process() const;
  /// Grid points with T(u) = 0, which carry no information.
  Index degenerate_variance_count() const;
  Index excluded_count() const;
};

/// Generic constructor: computes the variances from the marks. `grid` may be
/// empty when only the statistics are needed.
MarkedProcessEval make_marked_process(Matrix marks, Matrix qscores, Vector grid_weight,
                                      Matrix grid = Matrix());

/// d = 1, grid = observed X.
MarkedProcessEval build_parametric(const ParametricFit& fit, const Dataset& data,
                                   const IndexSetRule& rule);

/// Grid = fitted index values beta_hat^T X_i.
MarkedProcessEval build_glm(const GlmFit& fit, const Dataset& data, const IndexSetRule& rule);

/// Grid = observed X vectors (W and Z coordinates), one pivot per column.
MarkedProcessEval build_variable_selection(const KernelFit& kfit, const Dataset& data,
                                           const IndexSetRule& rule);

MarkedProcessEval build_partial_linear(const PartialLinearFit& pfit, const Dataset& data,
                                       const IndexSetRule& rule);

/// Fraction of excluded observations above which the smoothed families
/// refuse to build.
inline constexpr double kMaxExcludedFraction = 0.2;

}  // namespace elgof
