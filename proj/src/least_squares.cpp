#include "elgof/error.hpp"
#include "elgof/model_null.hpp"

#include <cmath>
#include <string>

namespace elgof {
namespace {

class LinearThroughOrigin final : public RegressionModel {
 public:
  Index num_params() const override { return 1; }
  double value(double x, const Vector& theta) const override { return theta(0) * x; }
  Vector gradient(double x, const Vector&) const override { return Vector::Constant(1, x); }
  bool linear_in_theta() const override { return true; }
  bool moment_influence() const override { return true; }
  std::string name() const override { return "linear-origin"; }
};

class LinearWithIntercept final : public RegressionModel {
 public:
  Index num_params() const override { return 2; }
  double value(double x, const Vector& theta) const override {
    return theta(0) + theta(1) * x;
  }
  Vector gradient(double x, const Vector&) const override {
    Vector g(2);
    g << 1.0, x;
    return g;
  }
  bool linear_in_theta() const override { return true; }
  bool moment_influence() const override { return true; }
  std::string name() const override { return "linear"; }
};

class Polynomial final : public RegressionModel {
 public:
  explicit Polynomial(int degree) : degree_(degree) {}
  Index num_params() const override { return degree_ + 1; }
  double value(double x, const Vector& theta) const override {
    double acc = 0.0;
    for (Index k = degree_; k >= 0; --k) acc = acc * x + theta(k);
    return acc;
  }
  Vector gradient(double x, const Vector&) const override {
    Vector g(degree_ + 1);
    double power = 1.0;
    for (Index k = 0; k <= degree_; ++k) {
      g(k) = power;
      power *= x;
    }
    return g;
  }
  bool linear_in_theta() const override { return true; }
  std::string name() const override { return "poly:" + std::to_string(degree_); }

 private:
  int degree_;
};

class CustomModel final : public RegressionModel {
 public:
  CustomModel(std::string name, Index p, std::function<double(double, const Vector&)> value,
              std::function<Vector(double, const Vector&)> gradient)
      : name_(std::move(name)), p_(p), value_(std::move(value)), gradient_(std::move(gradient)) {}
  Index num_params() const override { return p_; }
  double value(double x, const Vector& theta) const override { return value_(x, theta); }
  Vector gradient(double x, const Vector& theta) const override { return gradient_(x, theta); }
  std::string name() const override { return name_; }

 private:
  std::string name_;
  Index p_;
  std::function<double(double, const Vector&)> value_;
  std::function<Vector(double, const Vector&)> gradient_;
};

Matrix model_gradient(const RegressionModel& model, const Vector& x, const Vector& theta) {
  Matrix g(x.size(), model.num_params());
  for (Index i = 0; i < x.size(); ++i) g.row(i) = model.gradient(x(i), theta).transpose();
  return g;
}

Vector model_values(const RegressionModel& model, const Vector& x, const Vector& theta) {
  Vector v(x.size());
  for (Index i = 0; i < x.size(); ++i) v(i) = model.value(x(i), theta);
  return v;
}

double sum_of_squares(const RegressionModel& model, const Vector& x, const Vector& y,
                      const Vector& theta) {
  return (y - model_values(model, x, theta)).squaredNorm();
}

Vector gauss_newton(const RegressionModel& model, const Vector& x, const Vector& y,
                    Vector theta, int& iterations) {
  constexpr int kMaxIterations = 200;
  double sse = sum_of_squares(model, x, y, theta);
  for (iterations = 1; iterations <= kMaxIterations; ++iterations) {
    const Matrix jac = model_gradient(model, x, theta);
    const Vector r = y - model_values(model, x, theta);
    Eigen::ColPivHouseholderQR<Matrix> qr(jac);
    if (qr.rank() < jac.cols()) {
      throw Error(ErrorCode::singular, "Gauss-Newton Jacobian is rank deficient");
    }
    const Vector step = qr.solve(r);

    double t = 1.0;
    Vector candidate = theta + step;
    double candidate_sse = sum_of_squares(model, x, y, candidate);
    while (!(candidate_sse <= sse) && t > 1e-12) {
      t *= 0.5;
      candidate = theta + t * step;
      candidate_sse = sum_of_squares(model, x, y, candidate);
    }
    const double change = (t * step).norm();
    if (!(candidate_sse <= sse)) {
      // No descent along the Gauss-Newton direction: stationary to rounding.
      if (step.norm() <= 1e-8 * (1.0 + theta.norm())) return theta;
      throw Error(ErrorCode::non_convergence, "Gauss-Newton step halving failed");
    }
    theta = candidate;
    const double decrease = sse - candidate_sse;
    sse = candidate_sse;
    if (change <= 1e-10 * (1.0 + theta.norm()) || decrease <= 1e-15 * (1.0 + sse)) {
      return theta;
    }
  }
  throw Error(ErrorCode::non_convergence, "Gauss-Newton did not converge");
}

}  // namespace

ModelPtr linear_through_origin() { return std::make_shared<LinearThroughOrigin>(); }
ModelPtr linear_with_intercept() { return std::make_shared<LinearWithIntercept>(); }

ModelPtr polynomial(int degree) {
  if (degree < 0) throw Error(ErrorCode::invalid_argument, "negative polynomial degree");
  return std::make_shared<Polynomial>(degree);
}

ModelPtr custom_model(std::string name, Index num_params,
                      std::function<double(double, const Vector&)> value,
                      std::function<Vector(double, const Vector&)> gradient) {
  return std::make_shared<CustomModel>(std::move(name), num_params, std::move(value),
                                       std::move(gradient));
}

Matrix ls_influence_sandwich(const Matrix& gradient, const Vector& residuals) {
  const auto n = static_cast<double>(gradient.rows());
  const Matrix moment = gradient.transpose() * gradient / n;
  Eigen::ColPivHouseholderQR<Matrix> qr(moment);
  if (qr.rank() < moment.cols()) {
    throw Error(ErrorCode::singular, "gradient Gram matrix is singular");
  }
  const Matrix inv = qr.inverse();
  return residuals.asDiagonal() * gradient * inv;
}

Matrix ls_influence_linear(const Dataset& data, const Vector& theta_hat) {
  const Vector x = data.x1();
  const Vector& y = data.y();
  const auto n = static_cast<double>(data.n());

  if (theta_hat.size() == 1) {
    const double m2 = x.squaredNorm() / n;
    if (m2 == 0.0) throw Error(ErrorCode::singular, "covariate is identically zero");
    const double mxy = x.dot(y) / n;
    Matrix h(data.n(), 1);
    h.col(0) = (x.cwiseProduct(y) / m2 - (mxy / (m2 * m2)) * x.cwiseAbs2()).eval();
    return h;
  }
  if (theta_hat.size() == 2) {
    const double mu_x = x.mean();
    const double mu_y = y.mean();
    const Vector cx = x.array() - mu_x;
    const Vector cy = y.array() - mu_y;
    const double var_x = cx.squaredNorm() / n;
    if (var_x == 0.0) throw Error(ErrorCode::singular, "zero sample variance of X");
    const double cov_xy = cx.dot(cy) / n;
    Matrix h(data.n(), 2);
    h.col(1) = cx.cwiseProduct(cy) / var_x - (cov_xy / (var_x * var_x)) * cx.cwiseAbs2();
    h.col(0) = cy - (cov_xy / var_x) * cx - mu_x * h.col(1);
    return h;
  }
  throw Error(ErrorCode::invalid_argument,
              "moment influence is defined for a slope with optional intercept only");
}

ParametricFit fit_least_squares(const Dataset& data, const RegressionModel& model,
                                std::optional<Vector> theta_init) {
  const Vector x = data.x1();
  const Vector& y = data.y();
  const Index p = model.num_params();
  ParametricFit fit;

  if (model.linear_in_theta()) {
    const Matrix design = model_gradient(model, x, Vector::Zero(p));
    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    if (qr.rank() < p) throw Error(ErrorCode::singular, "design matrix is rank deficient");
    if (p == 1) {
      // Keep the textbook ratio for the one-parameter case.
      fit.theta_hat = Vector::Constant(1, design.col(0).dot(y) / design.col(0).squaredNorm());
    } else {
      fit.theta_hat = qr.solve(y);
    }
  } else {
    Vector start = theta_init.value_or(Vector::Zero(p));
    if (start.size() != p) {
      throw Error(ErrorCode::invalid_argument, "theta_init has the wrong length");
    }
    fit.theta_hat = gauss_newton(model, x, y, std::move(start), fit.iterations);
  }

  fit.fitted = model_values(model, x, fit.theta_hat);
  fit.residuals = y - fit.fitted;
  fit.gradient = model_gradient(model, x, fit.theta_hat);
  fit.influence = model.moment_influence() ? ls_influence_linear(data, fit.theta_hat)
                                           : ls_influence_sandwich(fit.gradient, fit.residuals);
  return fit;
}

}  // namespace elgof
