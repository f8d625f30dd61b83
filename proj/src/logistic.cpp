#include "elgof/error.hpp"
#include "elgof/model_null.hpp"

#include <cmath>

namespace elgof {
namespace {

constexpr int kMaxNewtonIterations = 100;
constexpr double kDivergenceNorm = 1e3;

double log_likelihood(const Vector& eta, const Vector& y, int trials) {
  double ll = 0.0;
  for (Index i = 0; i < eta.size(); ++i) {
    // log(1 + e^eta) without overflow
    const double softplus = eta(i) > 0 ? eta(i) + std::log1p(std::exp(-eta(i)))
                                       : std::log1p(std::exp(eta(i)));
    ll += y(i) * eta(i) - trials * softplus;
  }
  return ll;
}

}  // namespace

double logistic(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

GlmFit fit_binomial_logistic(const Dataset& data, int trials, bool intercept) {
  if (trials < 1) throw Error(ErrorCode::invalid_argument, "trials must be positive");
  const Vector& y = data.y();
  for (Index i = 0; i < y.size(); ++i) {
    if (y(i) < 0 || y(i) > trials || y(i) != std::floor(y(i))) {
      throw Error(ErrorCode::invalid_argument,
                  "binomial responses must be integers in [0, trials]");
    }
  }

  const Index n = data.n();
  const Index a = intercept ? 1 : 0;
  const Index p = a + data.d();
  Matrix design(n, p);
  if (intercept) design.col(0).setOnes();
  design.rightCols(data.d()) = data.x();

  if (Eigen::ColPivHouseholderQR<Matrix>(design).rank() < p) {
    throw Error(ErrorCode::singular, "logistic design matrix is rank deficient");
  }

  Vector theta = Vector::Zero(p);
  Vector eta = design * theta;
  double ll = log_likelihood(eta, y, trials);
  Vector prob(n);
  GlmFit fit;
  fit.trials = trials;

  bool converged = false;
  for (int it = 1; it <= kMaxNewtonIterations; ++it) {
    for (Index i = 0; i < n; ++i) prob(i) = logistic(eta(i));
    const Vector resid = y - trials * prob;
    const Vector score = design.transpose() * resid;
    const Vector curvature = trials * prob.array() * (1.0 - prob.array());
    const Matrix info = design.transpose() * curvature.asDiagonal() * design;
    Eigen::LDLT<Matrix> ldlt(info);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      throw Error(ErrorCode::separation, "information matrix lost definiteness");
    }
    const Vector step = ldlt.solve(score);

    double t = 1.0;
    Vector candidate = theta + step;
    Vector candidate_eta = design * candidate;
    double candidate_ll = log_likelihood(candidate_eta, y, trials);
    while (candidate_ll < ll && t > 1e-10) {
      t *= 0.5;
      candidate = theta + t * step;
      candidate_eta = design * candidate;
      candidate_ll = log_likelihood(candidate_eta, y, trials);
    }
    theta = candidate;
    eta = candidate_eta;
    ll = candidate_ll;
    fit.iterations = it;

    if (!theta.allFinite() || theta.norm() > kDivergenceNorm) {
      throw Error(ErrorCode::separation,
                  "logistic coefficients diverge; the data appear separated");
    }
    if ((t * step).norm() <= 1e-10 * (1.0 + theta.norm())) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw Error(ErrorCode::separation, "logistic Newton-Raphson did not converge");
  }

  for (Index i = 0; i < n; ++i) prob(i) = logistic(eta(i));
  if ((prob.array() <= 0.0).any() || (prob.array() >= 1.0).any()) {
    throw Error(ErrorCode::separation, "fitted probabilities reached 0 or 1");
  }

  fit.alpha_hat = theta.head(a);
  fit.beta_hat = theta.tail(data.d());
  fit.index = data.x() * fit.beta_hat;
  fit.fitted_mean = trials * prob;
  fit.residuals = y - fit.fitted_mean;

  const Vector curvature = trials * prob.array() * (1.0 - prob.array());
  fit.mean_gradient = curvature.asDiagonal() * design;
  const Matrix info_per_obs =
      design.transpose() * curvature.asDiagonal() * design / static_cast<double>(n);
  const Matrix info_inv = info_per_obs.ldlt().solve(Matrix::Identity(p, p));
  fit.influence = fit.residuals.asDiagonal() * design * info_inv;
  return fit;
}

}  // namespace elgof
