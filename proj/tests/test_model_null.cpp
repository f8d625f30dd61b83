#include "elgof/error.hpp"
#include "elgof/model_null.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace elgof;
using Catch::Approx;

namespace {

Dataset univariate(std::vector<double> xs, std::vector<double> ys) {
  Matrix x(static_cast<Index>(xs.size()), 1);
  Vector y(static_cast<Index>(ys.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    x(static_cast<Index>(i), 0) = xs[i];
    y(static_cast<Index>(i)) = ys[i];
  }
  return Dataset(std::move(x), std::move(y));
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::invalid_argument;
}

// Plain Newton-Raphson for the slope-only binomial logit written with
// std::vector and Gaussian elimination.
std::vector<double> logit_mle_reference(const std::vector<std::vector<double>>& x,
                                        const std::vector<double>& y, int m) {
  const std::size_t n = x.size(), p = x[0].size();
  std::vector<double> beta(p, 0.0);
  for (int it = 0; it < 100; ++it) {
    std::vector<double> score(p, 0.0);
    std::vector<std::vector<double>> info(p, std::vector<double>(p + 1, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      double eta = 0.0;
      for (std::size_t j = 0; j < p; ++j) eta += beta[j] * x[i][j];
      const double pr = 1.0 / (1.0 + std::exp(-eta));
      for (std::size_t j = 0; j < p; ++j) {
        score[j] += (y[i] - m * pr) * x[i][j];
        for (std::size_t k = 0; k < p; ++k) info[j][k] += m * pr * (1 - pr) * x[i][j] * x[i][k];
      }
    }
    for (std::size_t j = 0; j < p; ++j) info[j][p] = score[j];
    for (std::size_t c = 0; c < p; ++c) {
      for (std::size_t r = c + 1; r < p; ++r) {
        const double f = info[r][c] / info[c][c];
        for (std::size_t k = c; k <= p; ++k) info[r][k] -= f * info[c][k];
      }
    }
    std::vector<double> step(p);
    for (std::size_t c = p; c-- > 0;) {
      double s = info[c][p];
      for (std::size_t k = c + 1; k < p; ++k) s -= info[c][k] * step[k];
      step[c] = s / info[c][c];
    }
    double size = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      beta[j] += step[j];
      size += std::abs(step[j]);
    }
    if (size < 1e-14) break;
  }
  return beta;
}

}  // namespace

TEST_CASE("least squares through the origin, hand examples") {
  auto exact = fit_least_squares(univariate({0, 1, 2}, {0, 1, 2}), *linear_through_origin());
  CHECK(exact.theta_hat(0) == Approx(1.0));
  CHECK(exact.residuals.cwiseAbs().maxCoeff() < 1e-14);

  CHECK(fit_least_squares(univariate({1, 2, 3}, {2, 4, 6}), *linear_through_origin())
            .theta_hat(0) == Approx(2.0));

  const auto fit = fit_least_squares(univariate({0, 1, 2}, {1, 1, 3}), *linear_through_origin());
  CHECK(fit.theta_hat(0) == Approx(1.4).epsilon(1e-14));
  CHECK(fit.residuals(0) == Approx(1.0).epsilon(1e-14));
  CHECK(fit.residuals(1) == Approx(-0.4).epsilon(1e-14));
  CHECK(fit.residuals(2) == Approx(0.2).epsilon(1e-14));

  // Slope-only influence by direct evaluation: x y / m2 - m_xy x^2 / m2^2.
  const double m2 = 5.0 / 3.0, mxy = 7.0 / 3.0;
  const double xs[] = {0, 1, 2}, ys[] = {1, 1, 3};
  double mean = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double expected = xs[i] * ys[i] / m2 - mxy * xs[i] * xs[i] / (m2 * m2);
    CHECK(fit.influence(i, 0) == Approx(expected).margin(1e-14));
    mean += fit.influence(i, 0) / 3.0;
  }
  CHECK(std::abs(mean) < 1e-14);
}

TEST_CASE("moment influence of the straight line") {
  // Y = theta X exactly with centred X: both influence components vanish.
  const auto data = univariate({-2, -1, 0, 1, 2}, {-3, -1.5, 0, 1.5, 3});
  const auto fit = fit_least_squares(data, *linear_with_intercept());
  CHECK(fit.influence.cwiseAbs().maxCoeff() < 1e-12);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  std::vector<double> xs(60), ys(60);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xs[i] = normal(rng);
    ys[i] = 1.0 + 2.0 * xs[i] + normal(rng);
  }
  const auto noisy = fit_least_squares(univariate(xs, ys), *linear_with_intercept());
  CHECK(noisy.influence.colwise().mean().norm() < 1e-12);
  // Displayed slope influence with centred moments.
  const Dataset d = univariate(xs, ys);
  const double mx = d.x1().mean(), my = d.y().mean();
  const double vx = (d.x1().array() - mx).square().mean();
  const double cxy = ((d.x1().array() - mx) * (d.y().array() - my)).mean();
  for (Index i = 0; i < d.n(); ++i) {
    const double cx = d.x1()(i) - mx, cy = d.y()(i) - my;
    const double h1 = cx * cy / vx - cxy * cx * cx / (vx * vx);
    CHECK(noisy.influence(i, 1) == Approx(h1).margin(1e-12));
  }
}

TEST_CASE("normal equations hold for linear-in-theta models") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unif(-1, 2);
  std::vector<double> xs(80), ys(80);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xs[i] = unif(rng);
    ys[i] = std::sin(3 * xs[i]) + 0.1 * unif(rng);
  }
  const auto data = univariate(xs, ys);
  for (const ModelPtr& model : {linear_through_origin(), linear_with_intercept(), polynomial(3)}) {
    const auto fit = fit_least_squares(data, *model);
    const Vector normal_eq = fit.gradient.transpose() * fit.residuals;
    const double scale = fit.gradient.cwiseAbs().maxCoeff() * fit.residuals.cwiseAbs().sum();
    CHECK(normal_eq.cwiseAbs().maxCoeff() <= 1e-8 * scale);
    CHECK(fit.influence.colwise().mean().norm() <= 1e-8 * scale);
  }
}

TEST_CASE("Gauss-Newton on a nonlinear model") {
  auto model = custom_model(
      "exp", 2, [](double x, const Vector& t) { return t(0) * std::exp(t(1) * x); },
      [](double x, const Vector& t) {
        Vector g(2);
        g << std::exp(t(1) * x), t(0) * x * std::exp(t(1) * x);
        return g;
      });
  std::mt19937_64 rng(23);
  std::normal_distribution<double> normal;
  std::vector<double> xs(200), ys(200);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xs[i] = static_cast<double>(i) / 100.0;
    ys[i] = 1.5 * std::exp(0.7 * xs[i]) + 0.05 * normal(rng);
  }
  Vector init(2);
  init << 1.0, 0.0;
  const auto fit = fit_least_squares(univariate(xs, ys), *model, init);
  CHECK(fit.theta_hat(0) == Approx(1.5).margin(0.05));
  CHECK(fit.theta_hat(1) == Approx(0.7).margin(0.05));
  const Vector normal_eq = fit.gradient.transpose() * fit.residuals;
  CHECK(normal_eq.norm() < 1e-8);
  CHECK(fit.influence.colwise().mean().norm() < 1e-8);

  // The same polynomial through both code paths.
  auto quad = custom_model(
      "quad", 3, [](double x, const Vector& t) { return t(0) + t(1) * x + t(2) * x * x; },
      [](double x, const Vector&) {
        Vector g(3);
        g << 1.0, x, x * x;
        return g;
      });
  const auto data = univariate(xs, ys);
  const auto a = fit_least_squares(data, *quad, Vector::Zero(3));
  const auto b = fit_least_squares(data, *polynomial(2));
  CHECK((a.theta_hat - b.theta_hat).norm() < 1e-8);
}

TEST_CASE("degenerate least squares designs") {
  CHECK(code_of([] { fit_least_squares(univariate({0, 0, 0}, {1, 2, 3}), *linear_through_origin()); }) ==
        ErrorCode::singular);
  CHECK(code_of([] { fit_least_squares(univariate({1, 1, 1}, {1, 2, 3}), *linear_with_intercept()); }) ==
        ErrorCode::singular);
}

TEST_CASE("binomial logit: symmetric designs give beta = 0") {
  const auto data = univariate({-1, -1, 1, 1}, {5, 5, 5, 5});
  const auto fit = fit_binomial_logistic(data, 10);
  CHECK(std::abs(fit.beta_hat(0)) < 1e-12);
  CHECK(fit.alpha_hat.size() == 0);

  const auto even = univariate({-2, -0.5, 0.5, 2}, {2, 2, 2, 2});
  CHECK(std::abs(fit_binomial_logistic(even, 4).beta_hat(0)) < 1e-12);
}

TEST_CASE("binomial logit matches an independent Newton implementation") {
  std::vector<std::vector<double>> xs{{0.3, -1.0}, {1.2, 0.4}, {-0.7, 0.9}, {0.1, 0.2}, {-1.5, -0.3}};
  std::vector<double> ys{3, 5, 2, 3, 1};
  Matrix x(5, 2);
  Vector y(5);
  for (Index i = 0; i < 5; ++i) {
    x(i, 0) = xs[static_cast<std::size_t>(i)][0];
    x(i, 1) = xs[static_cast<std::size_t>(i)][1];
    y(i) = ys[static_cast<std::size_t>(i)];
  }
  const auto fit = fit_binomial_logistic(Dataset(x, y), 6);
  const auto ref = logit_mle_reference(xs, ys, 6);
  CHECK(fit.beta_hat(0) == Approx(ref[0]).margin(1e-8));
  CHECK(fit.beta_hat(1) == Approx(ref[1]).margin(1e-8));
  for (Index i = 0; i < 5; ++i) {
    CHECK(fit.index(i) == Approx(fit.beta_hat.dot(x.row(i))).margin(1e-12));
    CHECK(fit.fitted_mean(i) == Approx(6.0 * logistic(fit.index(i))).margin(1e-12));
  }
}

TEST_CASE("binomial logit: score equations and influence mean") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> unif(-1, 1);
  const Index n = 400;
  Matrix x(n, 3);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    x(i, 0) = unif(rng);
    x(i, 1) = unif(rng);
    x(i, 2) = 1.0 + unif(rng);
    const double p = logistic(x(i, 0) + 2 * x(i, 1) + 0.5 * x(i, 2));
    y(i) = std::binomial_distribution<int>(15, p)(rng);
  }
  for (bool intercept : {false, true}) {
    const auto fit = fit_binomial_logistic(Dataset(x, y), 15, intercept);
    Matrix design(n, (intercept ? 1 : 0) + 3);
    if (intercept) design.col(0).setOnes();
    design.rightCols(3) = x;
    const Vector score = design.transpose() * fit.residuals / static_cast<double>(n);
    CHECK(score.norm() < 1e-8);
    CHECK(fit.influence.colwise().mean().norm() <= 1e-6);
    if (!intercept) {
      CHECK(fit.beta_hat(0) == Approx(1.0).margin(0.2));
      CHECK(fit.beta_hat(1) == Approx(2.0).margin(0.2));
      CHECK(fit.beta_hat(2) == Approx(0.5).margin(0.2));
    } else {
      CHECK(fit.alpha_hat.size() == 1);
    }
  }
}

TEST_CASE("binomial logit errors") {
  // Perfect separation: every success sits at x > 0.
  CHECK(code_of([] { fit_binomial_logistic(univariate({-2, -1, 1, 2}, {0, 0, 1, 1}), 1, true); }) ==
        ErrorCode::separation);
  CHECK(code_of([] { fit_binomial_logistic(univariate({1, 2}, {0, 3}), 2); }) ==
        ErrorCode::invalid_argument);
  CHECK(code_of([] { fit_binomial_logistic(univariate({0, 0, 0}, {0, 1, 0}), 1); }) ==
        ErrorCode::singular);
}

TEST_CASE("Nadaraya-Watson hand example and constant reproduction") {
  Matrix w(2, 1);
  w << 0.0, 1.0;
  Matrix targets(2, 1);
  targets << 0.0, 2.0;
  Vector h(1);
  h << 0.5;
  const auto fit = nadaraya_watson(w, targets, h);
  CHECK(fit.density(0) == Approx(0.75));
  CHECK(fit.regression(0, 0) == Approx(0.0).margin(1e-15));
  CHECK(fit.regression(1, 0) == Approx(2.0));

  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  Matrix ww(50, 2);
  for (Index i = 0; i < ww.size(); ++i) ww.data()[i] = normal(rng);
  const Matrix constant = Matrix::Constant(50, 1, 3.25);
  const auto c = nadaraya_watson(ww, constant, default_bandwidth(ww));
  for (Index i = 0; i < 50; ++i) {
    if (c.density(i) > 0) CHECK(c.regression(i, 0) == Approx(3.25).epsilon(1e-13));
  }
}

TEST_CASE("Nadaraya-Watson is invariant to permuting observations") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> normal;
  const Index n = 40;
  Matrix w(n, 1), t(n, 2);
  for (Index i = 0; i < n; ++i) {
    w(i, 0) = normal(rng);
    t(i, 0) = std::sin(w(i, 0)) + 0.1 * normal(rng);
    t(i, 1) = normal(rng);
  }
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix wp(n, 1), tp(n, 2);
  for (Index i = 0; i < n; ++i) {
    wp.row(i) = w.row(perm[static_cast<std::size_t>(i)]);
    tp.row(i) = t.row(perm[static_cast<std::size_t>(i)]);
  }
  const Vector h = default_bandwidth(w);
  const auto a = nadaraya_watson(w, t, h);
  const auto b = nadaraya_watson(wp, tp, h);
  for (Index i = 0; i < n; ++i) {
    const Index j = perm[static_cast<std::size_t>(i)];
    CHECK(b.density(i) == Approx(a.density(j)).epsilon(1e-12));
    CHECK((b.regression.row(i) - a.regression.row(j)).norm() < 1e-12);
  }
}

TEST_CASE("default bandwidth and density floor") {
  Matrix w(8, 1);
  w << 0, 1, 2, 3, 4, 5, 6, 7;
  const Vector h = default_bandwidth(w);
  const double sd = std::sqrt(6.0);  // sample sd of 0..7 with n - 1 = 7
  CHECK(h(0) == Approx(sd * std::pow(8.0, -1.0 / 3.0)).epsilon(1e-12));

  Matrix far(6, 1);
  far << 0.0, 0.01, 0.02, 0.03, 0.04, 100.0;
  Vector narrow(1);
  narrow << 0.05;
  // A point's own kernel weight keeps its density ratio at 1/n or more, so
  // the ratio here is raised to make the isolated point fall below it.
  const auto fit = nadaraya_watson(far, Matrix::Ones(6, 1), narrow, epanechnikov, 0.5);
  CHECK(fit.below_floor[5]);
  CHECK(fit.excluded_count == 1);
  CHECK_FALSE(fit.below_floor[0]);
}

namespace {

Dataset partial_linear_sample(std::mt19937_64& rng, Index n, double theta, bool g_zero) {
  std::uniform_real_distribution<double> unif(0, 1);
  std::normal_distribution<double> normal;
  Matrix x(n, 2);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    x(i, 0) = unif(rng);              // W
    x(i, 1) = 4.0 * normal(rng);      // Z, well spread
    const double g = g_zero ? 0.0 : std::cos(3.0 * x(i, 0));
    y(i) = theta * x(i, 1) + g + 0.5 * normal(rng);
  }
  return Dataset(x, y, ColumnSplit{{0}, {1}});
}

}  // namespace

TEST_CASE("partial linear slope is unbiased in Monte Carlo") {
  std::mt19937_64 rng(77);
  const double theta = 1.3;
  std::vector<double> est;
  for (int rep = 0; rep < 200; ++rep) {
    est.push_back(fit_partial_linear(partial_linear_sample(rng, 150, theta, true)).theta_hat(0));
  }
  const double mean = std::accumulate(est.begin(), est.end(), 0.0) / 200.0;
  double var = 0.0;
  for (double e : est) var += (e - mean) * (e - mean) / 199.0;
  const double se = std::sqrt(var / 200.0);
  CHECK(std::abs(mean - theta) < 3.0 * se);
}

TEST_CASE("partial linear: weight scale, degenerate Z and centred responses") {
  std::mt19937_64 rng(78);
  const Dataset data = partial_linear_sample(rng, 120, 0.8, false);
  const auto base = fit_partial_linear(data);
  const WeightFunction scaled = [](const Vector&, double density) { return 7.5 * density; };
  const auto other = fit_partial_linear(data, std::nullopt, scaled);
  CHECK(other.theta_hat(0) == Approx(base.theta_hat(0)).epsilon(1e-12));
  CHECK(base.theta_hat(0) == Approx(0.8).margin(0.1));

  Matrix x = data.x();
  x.col(1).setZero();
  CHECK(code_of([&] { fit_partial_linear(Dataset(x, data.y(), ColumnSplit{{0}, {1}})); }) ==
        ErrorCode::singular);

  // Y is a function of W that the smoother reproduces: nothing is left for Z.
  const Dataset flat(data.x(), Vector::Constant(data.n(), 2.0), ColumnSplit{{0}, {1}});
  const auto zero = fit_partial_linear(flat);
  CHECK(std::abs(zero.theta_hat(0)) < 1e-12);
  CHECK(zero.adjusted_residuals.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("variable selection fit smooths Y on W") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unif(0, 1);
  const Index n = 300;
  Matrix x(n, 2);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    x(i, 0) = unif(rng);
    x(i, 1) = unif(rng);
    y(i) = x(i, 0) * x(i, 0);
  }
  const auto fit = fit_variable_selection(Dataset(x, y, ColumnSplit{{0}, {1}}));
  Index checked = 0;
  for (Index i = 0; i < n; ++i) {
    if (x(i, 0) > 0.2 && x(i, 0) < 0.8) {
      CHECK(fit.regression(i, 0) == Approx(y(i)).margin(0.02));
      ++checked;
    }
  }
  CHECK(checked > 100);
  CHECK(fit.bandwidth.size() == 1);
}
