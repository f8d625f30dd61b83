#include "elgof/error.hpp"
#include "elgof/model_null.hpp"

#include <Eigen/Eigenvalues>

namespace elgof {

WeightFunction density_weight() {
  return [](const Vector&, double density) { return density; };
}

PartialLinearFit fit_partial_linear(const Dataset& data, std::optional<Vector> bandwidth,
                                    const WeightFunction& weight,
                                    const UnivariateKernel& kernel) {
  const Matrix w = data.w();
  const Matrix z = data.z();
  const Index n = data.n();
  const Index dz = z.cols();

  Matrix targets(n, 1 + dz);
  targets.col(0) = data.y();
  targets.rightCols(dz) = z;

  PartialLinearFit fit;
  const Vector h = bandwidth ? *bandwidth : default_bandwidth(w);
  fit.kernel = nadaraya_watson(w, targets, h, kernel);

  fit.weight.resize(n);
  for (Index i = 0; i < n; ++i) {
    fit.weight(i) = weight(w.row(i).transpose(), fit.kernel.density(i));
  }
  if (!fit.weight.allFinite()) {
    throw Error(ErrorCode::invalid_argument, "weight function returned a non-finite value");
  }

  fit.z_centered = z - fit.kernel.regression.rightCols(dz);
  const Vector y_centered = data.y() - fit.kernel.regression.col(0);

  // Observations under the density floor do not enter theta_hat.
  fit.S_hat = Matrix::Zero(dz, dz);
  Vector cross = Vector::Zero(dz);
  Index used = 0;
  for (Index i = 0; i < n; ++i) {
    if (fit.kernel.below_floor[static_cast<std::size_t>(i)]) continue;
    const double w2 = fit.weight(i) * fit.weight(i);
    fit.S_hat.noalias() += w2 * fit.z_centered.row(i).transpose() * fit.z_centered.row(i);
    cross += w2 * y_centered(i) * fit.z_centered.row(i).transpose();
    ++used;
  }
  fit.S_hat /= static_cast<double>(used);
  cross /= static_cast<double>(used);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(fit.S_hat);
  const double top = eig.eigenvalues().maxCoeff();
  const double bottom = eig.eigenvalues().minCoeff();
  if (!(top > 0.0) || bottom <= 1e-10 * top) {
    throw Error(ErrorCode::singular,
                "S_hat is singular; Z is (nearly) a function of W");
  }
  fit.theta_hat = fit.S_hat.llt().solve(cross);
  fit.adjusted_residuals = y_centered - fit.z_centered * fit.theta_hat;
  return fit;
}

}  // namespace elgof
