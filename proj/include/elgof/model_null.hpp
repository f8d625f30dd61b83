#pragma once

#include "elgof/dataset.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace elgof {

// ---------------------------------------------------------------------------
// Parametric regression gamma(x, theta) for univariate x.
// ---------------------------------------------------------------------------

class RegressionModel {
 public:
  virtual ~RegressionModel() = default;

  virtual Index num_params() const = 0;
  virtual double value(double x, const Vector& theta) const = 0;
  virtual Vector gradient(double x, const Vector& theta) const = 0;
  /// Linear in theta: the gradient does not depend on theta and least
  /// squares has a closed form.
  virtual bool linear_in_theta() const { return false; }
  /// Straight lines use the moment-based influence of ls_influence_linear;
  /// everything else the sandwich form.
  virtual bool moment_influence() const { return false; }
  virtual std::string name() const = 0;
};

using ModelPtr = std::shared_ptr<const RegressionModel>;

/// gamma(x, theta) = theta x.
ModelPtr linear_through_origin();
/// gamma(x, theta) = theta_0 + theta_1 x.
ModelPtr linear_with_intercept();
/// gamma(x, theta) = sum_{k=0}^{degree} theta_k x^k.
ModelPtr polynomial(int degree);
/// Arbitrary smooth model from callables.
ModelPtr custom_model(std::string name, Index num_params,
                      std::function<double(double, const Vector&)> value,
                      std::function<Vector(double, const Vector&)> gradient);

struct ParametricFit {
  Vector theta_hat;
  Vector fitted;
  Vector residuals;
  Matrix gradient;   // n x p, d gamma / d theta at (X_i, theta_hat)
  Matrix influence;  // n x p, h_hat(X_i, Y_i, theta_hat)
  int iterations = 0;
};

/// Least squares fit. Linear-in-theta models use the normal equations;
/// otherwise Gauss-Newton with step halving from `theta_init`. Throws
/// Error{singular} or Error{non_convergence}.
ParametricFit fit_least_squares(const Dataset& data, const RegressionModel& model,
                                std::optional<Vector> theta_init = std::nullopt);

/// Plug-in influence of the least squares slope (and intercept when
/// theta_hat has two entries) built from sample moments. With one entry the
/// model is through the origin and the uncentred moment analog is used.
Matrix ls_influence_linear(const Dataset& data, const Vector& theta_hat);

/// Sandwich influence (n^-1 sum g g^T)^-1 g_i e_i for a general smooth fit.
Matrix ls_influence_sandwich(const Matrix& gradient, const Vector& residuals);

// ---------------------------------------------------------------------------
// Binomial response with logistic link.
// ---------------------------------------------------------------------------

double logistic(double t);

struct GlmFit {
  Vector alpha_hat;  // intercept, empty when the model has none
  Vector beta_hat;
  Vector index;        // beta_hat^T X_i
  Vector fitted_mean;  // trials * p_hat_i
  Vector residuals;
  Matrix mean_gradient;  // n x (a+d), d gamma / d(alpha, beta)
  Matrix influence;      // n x (a+d), k_hat(X_i, Y_i)
  int trials = 1;
  int iterations = 0;
};

/// Newton-Raphson maximum likelihood for Y_i ~ Binomial(trials,
/// logistic(alpha + beta^T X_i)). Throws Error{singular} on rank deficiency
/// and Error{separation} when the iterates diverge.
GlmFit fit_binomial_logistic(const Dataset& data, int trials, bool intercept = false);

// ---------------------------------------------------------------------------
// Kernel smoothing on the W block.
// ---------------------------------------------------------------------------

using UnivariateKernel = std::function<double(double)>;

/// 0.75 (1 - u^2) on [-1, 1].
double epanechnikov(double u);
double gaussian_kernel(double u);

inline constexpr double kDefaultDensityFloor = 1e-3;

struct KernelFit {
  Vector bandwidth;      // one per W coordinate
  Vector density;        // f_hat_W(W_i)
  Matrix regression;     // n x k, smoothed targets at W_i
  Matrix smoother;       // n x n, K((W_i - W_j)/h) / (n prod h)
  std::vector<bool> below_floor;
  Index excluded_count = 0;
};

/// sd_j * n^(-1/3) for each column of `w`.
Vector default_bandwidth(const Matrix& w);

/// Nadaraya-Watson regression of each target column on `w`, evaluated at the
/// sample points. Points whose density falls below floor_ratio times the
/// largest density are flagged; their regression value is still computed
/// when the density is positive and set to zero otherwise.
KernelFit nadaraya_watson(const Matrix& w, const Matrix& targets, const Vector& bandwidth,
                          const UnivariateKernel& kernel = epanechnikov,
                          double floor_ratio = kDefaultDensityFloor);

/// Kernel fit of Y on W for the variable-selection null.
KernelFit fit_variable_selection(const Dataset& data,
                                 std::optional<Vector> bandwidth = std::nullopt,
                                 const UnivariateKernel& kernel = epanechnikov);

// ---------------------------------------------------------------------------
// Partial linear model Y = theta^T Z + g(W) + e.
// ---------------------------------------------------------------------------

/// Weight w(W_i); receives the W row and the estimated density there.
using WeightFunction = std::function<double(const Vector& w_row, double density)>;

/// w(W) = f_hat_W(W).
WeightFunction density_weight();

struct PartialLinearFit {
  Vector theta_hat;
  Matrix S_hat;
  KernelFit kernel;  // regression column 0 is m_hat, columns 1.. are m_hat_Z
  Vector weight;     // w(W_i)
  Vector adjusted_residuals;
  Matrix z_centered;  // Z_i - m_hat_Z(W_i)
};

/// Throws Error{singular} when S_hat is not positive definite.
PartialLinearFit fit_partial_linear(const Dataset& data,
                                    std::optional<Vector> bandwidth = std::nullopt,
                                    const WeightFunction& weight = density_weight(),
                                    const UnivariateKernel& kernel = epanechnikov);

}  // namespace elgof
