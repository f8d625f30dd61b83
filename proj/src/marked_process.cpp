#include "elgof/marked_process.hpp"

#include "elgof/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace elgof {
namespace {

double median(Vector v) {
  std::sort(v.begin(), v.end());
  const Index n = v.size();
  return n % 2 == 1 ? v(n / 2) : 0.5 * (v(n / 2 - 1) + v(n / 2));
}

void check_rule(const Matrix& points, const IndexSetRule& rule) {
  if (rule.dims() != points.cols()) {
    throw Error(ErrorCode::invalid_argument,
                "index-set rule has " + std::to_string(rule.dims()) +
                    " coordinates, data has " + std::to_string(points.cols()));
  }
  if (rule.orientation == Orientation::left_to_right) return;
  for (Index c = 0; c < points.cols(); ++c) {
    const double a = rule.pivots[static_cast<std::size_t>(c)];
    const Index below = (points.col(c).array() <= a).count();
    const Index above = points.rows() - below;
    if (below < 2 || above < 2) {
      throw Error(ErrorCode::side_count,
                  "pivot " + std::to_string(a) + " on coordinate " + std::to_string(c) +
                      " leaves fewer than 2 observations on one side");
    }
  }
}

Matrix take_rows(const Matrix& m, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Index>(k)) = m.row(rows[k]);
  return out;
}

std::vector<Index> kept_rows(const std::vector<bool>& excluded) {
  std::vector<Index> rows;
  for (std::size_t i = 0; i < excluded.size(); ++i) {
    if (!excluded[i]) rows.push_back(static_cast<Index>(i));
  }
  return rows;
}

void check_exclusions(const KernelFit& kfit) {
  const auto n = static_cast<double>(kfit.density.size());
  if (static_cast<double>(kfit.excluded_count) > kMaxExcludedFraction * n) {
    throw Error(ErrorCode::too_many_excluded,
                std::to_string(kfit.excluded_count) + " of " +
                    std::to_string(kfit.density.size()) +
                    " observations fall below the density floor");
  }
}

}  // namespace

IndexSetRule IndexSetRule::at(std::vector<double> pivots) {
  return IndexSetRule{std::move(pivots), Orientation::pivoted};
}

IndexSetRule IndexSetRule::medians(const Matrix& points) {
  std::vector<double> pivots;
  for (Index c = 0; c < points.cols(); ++c) pivots.push_back(median(points.col(c)));
  return at(std::move(pivots));
}

IndexSetRule IndexSetRule::left_to_right(Index dims) {
  return IndexSetRule{std::vector<double>(static_cast<std::size_t>(dims),
                                          -std::numeric_limits<double>::infinity()),
                      Orientation::left_to_right};
}

Grid unique_grid(const Matrix& points) {
  const Index n = points.rows();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  auto less = [&](Index a, Index b) {
    for (Index c = 0; c < points.cols(); ++c) {
      if (points(a, c) != points(b, c)) return points(a, c) < points(b, c);
    }
    return false;
  };
  std::stable_sort(order.begin(), order.end(), less);

  std::vector<Index> firsts;
  std::vector<double> counts;
  for (Index k : order) {
    if (!firsts.empty() && !less(firsts.back(), k) && !less(k, firsts.back())) {
      counts.back() += 1.0;
    } else {
      firsts.push_back(k);
      counts.push_back(1.0);
    }
  }
  Grid grid;
  grid.points = take_rows(points, firsts);
  grid.weight = Eigen::Map<Vector>(counts.data(), static_cast<Index>(counts.size())) /
                static_cast<double>(n);
  return grid;
}

Matrix indicator_matrix(const Matrix& points, const Matrix& grid, const IndexSetRule& rule) {
  Matrix ind(points.rows(), grid.rows());
  for (Index g = 0; g < grid.rows(); ++g) {
    for (Index i = 0; i < points.rows(); ++i) {
      ind(i, g) = rule.contains(points.row(i), grid.row(g)) ? 1.0 : 0.0;
    }
  }
  return ind;
}

Vector MarkedProcessEval::process() const {
  return marks.colwise().sum().transpose() / std::sqrt(static_cast<double>(n()));
}

Index MarkedProcessEval::degenerate_variance_count() const {
  return (variance.array() <= 0.0).count();
}

Index MarkedProcessEval::excluded_count() const {
  return std::count(excluded.begin(), excluded.end(), true);
}

MarkedProcessEval make_marked_process(Matrix marks, Matrix qscores, Vector grid_weight,
                                      Matrix grid) {
  if (marks.rows() < 1 || marks.cols() < 1) {
    throw Error(ErrorCode::invalid_argument, "empty marks matrix");
  }
  if (qscores.rows() != marks.rows() || qscores.cols() != marks.cols() ||
      grid_weight.size() != marks.cols()) {
    throw Error(ErrorCode::invalid_argument, "marked process dimensions disagree");
  }
  if (!marks.allFinite() || !qscores.allFinite()) {
    throw Error(ErrorCode::invalid_argument, "non-finite marks or scores");
  }
  MarkedProcessEval mpe;
  mpe.variance = marks.colwise().squaredNorm().transpose() / static_cast<double>(marks.rows());
  mpe.excluded.assign(static_cast<std::size_t>(marks.rows()), false);
  mpe.marks = std::move(marks);
  mpe.qscores = std::move(qscores);
  mpe.grid_weight = std::move(grid_weight);
  mpe.grid = std::move(grid);
  return mpe;
}

MarkedProcessEval build_parametric(const ParametricFit& fit, const Dataset& data,
                                   const IndexSetRule& rule) {
  if (data.d() != 1) {
    throw Error(ErrorCode::invalid_argument, "parametric family expects one covariate");
  }
  const Matrix& x = data.x();
  check_rule(x, rule);
  const Grid grid = unique_grid(x);
  const Matrix ind = indicator_matrix(x, grid.points, rule);
  const auto n = static_cast<double>(data.n());

  Matrix marks = fit.residuals.asDiagonal() * ind;
  // G_hat(x) = n^-1 sum_j I(X_j in J_x) d gamma(X_j)/d theta, one row per grid point
  const Matrix g_hat = ind.transpose() * fit.gradient / n;
  Matrix qscores = marks - fit.influence * g_hat.transpose();
  return make_marked_process(std::move(marks), std::move(qscores), grid.weight, grid.points);
}

MarkedProcessEval build_glm(const GlmFit& fit, const Dataset& data, const IndexSetRule& rule) {
  if (fit.index.size() != data.n()) {
    throw Error(ErrorCode::invalid_argument, "GLM fit does not match the dataset");
  }
  const Matrix points = fit.index;
  check_rule(points, rule);
  const Grid grid = unique_grid(points);
  const Matrix ind = indicator_matrix(points, grid.points, rule);
  const auto n = static_cast<double>(data.n());

  Matrix marks = fit.residuals.asDiagonal() * ind;
  const Matrix g_hat = ind.transpose() * fit.mean_gradient / n;
  Matrix qscores = marks - fit.influence * g_hat.transpose();
  return make_marked_process(std::move(marks), std::move(qscores), grid.weight, grid.points);
}

MarkedProcessEval build_variable_selection(const KernelFit& kfit, const Dataset& data,
                                           const IndexSetRule& rule) {
  check_exclusions(kfit);
  const Matrix& x = data.x();
  check_rule(x, rule);
  const std::vector<Index> rows = kept_rows(kfit.below_floor);
  const Matrix kept_x = take_rows(x, rows);
  const Grid grid = unique_grid(kept_x);

  // All observations enter the kernel averages; only kept ones carry marks.
  const Matrix ind_all = indicator_matrix(x, grid.points, rule);
  Matrix r_hat = kfit.smoother * ind_all;

  const auto m = static_cast<Index>(rows.size());
  Matrix marks(m, grid.points.rows());
  Matrix qscores(m, grid.points.rows());
  for (Index k = 0; k < m; ++k) {
    const Index i = rows[static_cast<std::size_t>(k)];
    const double f = kfit.density(i);
    const double scaled_residual = f * (data.y()(i) - kfit.regression(i, 0));
    marks.row(k) = scaled_residual * ind_all.row(i);
    qscores.row(k) = scaled_residual * (ind_all.row(i) - r_hat.row(i) / f);
  }
  MarkedProcessEval mpe =
      make_marked_process(std::move(marks), std::move(qscores), grid.weight, grid.points);
  mpe.excluded = kfit.below_floor;
  return mpe;
}

MarkedProcessEval build_partial_linear(const PartialLinearFit& pfit, const Dataset& data,
                                       const IndexSetRule& rule) {
  const KernelFit& kfit = pfit.kernel;
  check_exclusions(kfit);
  const Matrix& x = data.x();
  check_rule(x, rule);
  const ColumnSplit& split = *data.split();

  const std::vector<Index> rows = kept_rows(kfit.below_floor);
  const Matrix kept_x = take_rows(x, rows);
  const Grid grid = unique_grid(kept_x);
  const Index n_grid = grid.points.rows();

  // Separate W and Z indicator blocks: I(X in J_x) = I(W in J_w) I(Z in J_z).
  Matrix ind_w = Matrix::Ones(data.n(), n_grid);
  Matrix ind_z = Matrix::Ones(data.n(), n_grid);
  for (Index g = 0; g < n_grid; ++g) {
    for (Index i = 0; i < data.n(); ++i) {
      for (Index c : split.w) {
        if (!rule.member(x(i, c), grid.points(g, c), c)) {
          ind_w(i, g) = 0.0;
          break;
        }
      }
      for (Index c : split.z) {
        if (!rule.member(x(i, c), grid.points(g, c), c)) {
          ind_z(i, g) = 0.0;
          break;
        }
      }
    }
  }
  const Matrix ind = ind_w.cwiseProduct(ind_z);
  // q_hat(z | W_i): kernel average of I(Z_j in J_z), before dividing by f_hat
  const Matrix q_num = kfit.smoother * ind_z;

  const auto m = static_cast<Index>(rows.size());
  const Index dz = pfit.z_centered.cols();

  // c(x) = n^-1 sum_j w(W_j) I(X_j in J_x) [Z_j - m_Z(W_j)], over kept rows
  Matrix c_hat = Matrix::Zero(n_grid, dz);
  for (Index i : rows) {
    c_hat.noalias() += pfit.weight(i) * ind.row(i).transpose() * pfit.z_centered.row(i);
  }
  c_hat /= static_cast<double>(m);
  const Matrix s_inv_c = pfit.S_hat.llt().solve(c_hat.transpose());  // dz x G

  Matrix marks(m, n_grid);
  Matrix qscores(m, n_grid);
  for (Index k = 0; k < m; ++k) {
    const Index i = rows[static_cast<std::size_t>(k)];
    const double w = pfit.weight(i);
    const double scaled_residual = w * pfit.adjusted_residuals(i);
    marks.row(k) = scaled_residual * ind.row(i);
    const Eigen::RowVectorXd smoothing =
        ind_w.row(i).cwiseProduct(q_num.row(i)) / kfit.density(i);
    const Eigen::RowVectorXd estimation = w * pfit.z_centered.row(i) * s_inv_c;
    qscores.row(k) = scaled_residual * (ind.row(i) - smoothing - estimation);
  }
  MarkedProcessEval mpe =
      make_marked_process(std::move(marks), std::move(qscores), grid.weight, grid.points);
  mpe.excluded = kfit.below_floor;
  return mpe;
}

}  // namespace elgof
