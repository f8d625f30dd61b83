#include "elgof/error.hpp"
#include "elgof/model_null.hpp"

#include <cmath>
#include <numbers>

namespace elgof {

double epanechnikov(double u) { return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0; }

double gaussian_kernel(double u) {
  return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
}

Vector default_bandwidth(const Matrix& w) {
  const Index n = w.rows();
  if (n < 2) throw Error(ErrorCode::invalid_argument, "bandwidth needs at least 2 points");
  Vector h(w.cols());
  const double rate = std::pow(static_cast<double>(n), -1.0 / 3.0);
  for (Index c = 0; c < w.cols(); ++c) {
    const double mean = w.col(c).mean();
    const double sd =
        std::sqrt((w.col(c).array() - mean).square().sum() / static_cast<double>(n - 1));
    if (!(sd > 0.0)) {
      throw Error(ErrorCode::singular, "W column has zero sample variance");
    }
    h(c) = sd * rate;
  }
  return h;
}

KernelFit nadaraya_watson(const Matrix& w, const Matrix& targets, const Vector& bandwidth,
                          const UnivariateKernel& kernel, double floor_ratio) {
  const Index n = w.rows();
  if (targets.rows() != n) {
    throw Error(ErrorCode::invalid_argument, "targets and W have different row counts");
  }
  if (bandwidth.size() != w.cols() || !(bandwidth.array() > 0.0).all()) {
    throw Error(ErrorCode::invalid_argument,
                "bandwidth must be positive, one value per W column");
  }

  KernelFit fit;
  fit.bandwidth = bandwidth;
  const double norm = static_cast<double>(n) * bandwidth.prod();
  fit.smoother.resize(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      double k = 1.0;
      for (Index c = 0; c < w.cols() && k != 0.0; ++c) {
        k *= kernel((w(j, c) - w(i, c)) / bandwidth(c));
      }
      fit.smoother(i, j) = k / norm;
    }
  }

  fit.density = fit.smoother.rowwise().sum();
  fit.regression = fit.smoother * targets;
  const double top = fit.density.maxCoeff();
  fit.below_floor.assign(static_cast<std::size_t>(n), false);
  for (Index i = 0; i < n; ++i) {
    if (fit.density(i) > 0.0) {
      fit.regression.row(i) /= fit.density(i);
    } else {
      fit.regression.row(i).setZero();
    }
    if (!(fit.density(i) >= floor_ratio * top)) {
      fit.below_floor[static_cast<std::size_t>(i)] = true;
      ++fit.excluded_count;
    }
  }
  return fit;
}

KernelFit fit_variable_selection(const Dataset& data, std::optional<Vector> bandwidth,
                                 const UnivariateKernel& kernel) {
  const Matrix w = data.w();
  const Vector h = bandwidth ? *bandwidth : default_bandwidth(w);
  return nadaraya_watson(w, data.y(), h, kernel);
}

}  // namespace elgof
