#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace elgof {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Partition of the covariate columns into the smoothed block W and the
/// tested block Z.
struct ColumnSplit {
  std::vector<Index> w;
  std::vector<Index> z;
};

/// Paired observations (X_i, Y_i), X an n x d matrix.
class Dataset {
 public:
  Dataset(Matrix x, Vector y, std::optional<ColumnSplit> split = std::nullopt);

  Index n() const { return y_.size(); }
  Index d() const { return x_.cols(); }

  const Matrix& x() const { return x_; }
  const Vector& y() const { return y_; }
  const std::optional<ColumnSplit>& split() const { return split_; }

  /// Column 0 of X; only meaningful for univariate families.
  Eigen::Ref<const Vector> x1() const { return x_.col(0); }

  /// Copies of the W and Z blocks. Both throw if no split was given.
  Matrix w() const;
  Matrix z() const;

  /// Same covariates, new responses.
  Dataset with_response(Vector y) const;

 private:
  Matrix x_;
  Vector y_;
  std::optional<ColumnSplit> split_;
};

}  // namespace elgof
