#include "elgof/el_core.hpp"

#include "elgof/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace elgof {
namespace {

void check_marks(std::span<const double> marks) {
  if (marks.empty()) {
    throw Error(ErrorCode::invalid_argument, "empty mark vector");
  }
  for (double a : marks) {
    if (!std::isfinite(a)) {
      throw Error(ErrorCode::invalid_argument, "non-finite mark value");
    }
  }
}

struct NormalizedRoot {
  double lambda;  // multiplier for the marks divided by `scale`
  double scale;
};

// Works on a_i = A_i / max|A|, so the admissible interval always contains
// [-1, 1] and the residual tolerance is scale free.
NormalizedRoot solve_normalized(std::span<const double> marks, double tol,
                                int max_iterations) {
  double scale = 0.0;
  double amax = -std::numeric_limits<double>::infinity();
  double amin = std::numeric_limits<double>::infinity();
  for (double a : marks) {
    scale = std::max(scale, std::abs(a));
    amax = std::max(amax, a);
    amin = std::min(amin, a);
  }
  if (!(amax > 0.0 && amin < 0.0)) {
    throw Error(ErrorCode::hull_violation,
                "zero is not inside the convex hull of the marks");
  }

  double lo = -scale / amax;
  double hi = -scale / amin;
  double lambda = 0.0;
  double previous_residual = std::numeric_limits<double>::infinity();

  for (int it = 0; it < max_iterations; ++it) {
    double f = 0.0;
    double df = 0.0;
    for (double raw : marks) {
      const double a = raw / scale;
      const double denom = 1.0 + lambda * a;
      const double q = a / denom;
      f += q;
      df -= q * q;
    }
    if (std::abs(f) <= tol) return {lambda, scale};

    if (f > 0.0) {
      lo = lambda;
    } else {
      hi = lambda;
    }

    // A Newton step that failed to halve the residual is followed by
    // bisection.
    const bool bisect = std::abs(f) > 0.5 * previous_residual;
    previous_residual = std::abs(f);
    double next = 0.5 * (lo + hi);
    if (!bisect && df < 0.0) {
      const double newton = lambda - f / df;
      if (newton > lo && newton < hi) next = newton;
    }

    if (next == lambda || next <= lo || next >= hi) {
      // The bracket has shrunk to adjacent doubles: the root is resolved to
      // machine precision even though the residual sum cannot reach `tol`.
      return {lambda, scale};
    }
    lambda = next;
  }
  throw Error(ErrorCode::non_convergence,
              "Lagrange multiplier iteration did not converge in " +
                  std::to_string(max_iterations) + " iterations");
}

bool all_zero(std::span<const double> marks) {
  return std::all_of(marks.begin(), marks.end(),
                     [](double a) { return a == 0.0; });
}

double log_ratio_from_root(std::span<const double> marks,
                           const NormalizedRoot& root) {
  double sum = 0.0;
  for (double raw : marks) sum += std::log1p(root.lambda * (raw / root.scale));
  return std::max(0.0, 2.0 * sum);
}

}  // namespace

bool hull_contains_zero(std::span<const double> marks) {
  bool pos = false;
  bool neg = false;
  for (double a : marks) {
    pos = pos || a > 0.0;
    neg = neg || a < 0.0;
  }
  return pos && neg;
}

double solve_lambda(std::span<const double> marks, double tol,
                    int max_iterations) {
  check_marks(marks);
  if (!(tol > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "tolerance must be positive");
  }
  const NormalizedRoot root = solve_normalized(marks, tol, max_iterations);
  return root.lambda / root.scale;
}

ElEvaluation el_log_ratio(std::span<const double> marks, double tol,
                          int max_iterations) {
  check_marks(marks);
  const auto n = static_cast<double>(marks.size());
  ElEvaluation out;
  if (all_zero(marks)) {
    out.weights.assign(marks.size(), 1.0 / n);
    return out;
  }
  if (!hull_contains_zero(marks)) return ElEvaluation::infinite();

  const NormalizedRoot root = solve_normalized(marks, tol, max_iterations);
  out.lambda = root.lambda / root.scale;
  out.weights.reserve(marks.size());
  for (double raw : marks) {
    out.weights.push_back(1.0 / (n * (1.0 + root.lambda * (raw / root.scale))));
  }
  out.log_ratio = log_ratio_from_root(marks, root);
  return out;
}

double el_log_ratio_value(std::span<const double> marks, double tol,
                          int max_iterations) {
  check_marks(marks);
  if (all_zero(marks)) return 0.0;
  if (!hull_contains_zero(marks)) {
    return std::numeric_limits<double>::infinity();
  }
  return log_ratio_from_root(marks, solve_normalized(marks, tol, max_iterations));
}

}  // namespace elgof
