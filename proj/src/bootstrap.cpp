#include "elgof/bootstrap.hpp"

#include "elgof/error.hpp"
#include "elgof/parallel.hpp"
#include "elgof/rng.hpp"
#include "elgof/testkit.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <optional>

namespace elgof {
namespace {

// Replicates are processed in blocks of fixed width so that the floating
// point work for replicate b never depends on the thread count.
constexpr Index kChunk = 64;

using ChunkSource = std::function<Matrix(Index first, Index count)>;

template <typename Consume>
void for_each_chunk(Index replicates, unsigned threads, const ChunkSource& source,
                    Consume&& consume) {
  const auto chunks = static_cast<std::size_t>((replicates + kChunk - 1) / kChunk);
  parallel_for(chunks, threads, [&](std::size_t c) {
    const Index first = static_cast<Index>(c) * kChunk;
    const Index count = std::min(kChunk, replicates - first);
    consume(first, source(first, count));
  });
}

ChunkSource seeded_source(const MultiplierConfig& cfg, Index n) {
  return [cfg, n](Index first, Index count) {
    Matrix v(n, count);
    for (Index k = 0; k < count; ++k) {
      v.col(k) = draw_multipliers(cfg, n, static_cast<int>(first + k));
    }
    return v;
  };
}

ChunkSource matrix_source(const Matrix& multipliers) {
  return [&multipliers](Index first, Index count) {
    return Matrix(multipliers.middleCols(first, count));
  };
}

ElReplicates el_replicates(const MarkedProcessEval& mpe, Index replicates, unsigned threads,
                           const ChunkSource& source) {
  std::vector<Index> live;
  for (Index g = 0; g < mpe.grid_size(); ++g) {
    if (mpe.variance(g) > 0.0) live.push_back(g);
  }
  if (live.empty()) {
    throw Error(ErrorCode::nothing_to_calibrate,
                "every grid point has zero variance; nothing to calibrate");
  }
  const auto m = static_cast<Index>(live.size());
  Matrix scores(mpe.n(), m);
  Vector inv_var(m);
  Vector weight(m);
  for (Index k = 0; k < m; ++k) {
    const Index g = live[static_cast<std::size_t>(k)];
    scores.col(k) = mpe.qscores.col(g);
    inv_var(k) = 1.0 / mpe.variance(g);
    weight(k) = mpe.grid_weight(g);
  }
  const double root_n = std::sqrt(static_cast<double>(mpe.n()));

  ElReplicates out;
  out.S.resize(static_cast<std::size_t>(replicates));
  out.T.resize(static_cast<std::size_t>(replicates));
  out.skipped_grid_points = mpe.grid_size() - m;
  for_each_chunk(replicates, threads, source, [&](Index first, const Matrix& v) {
    const Matrix r = scores.transpose() * v / root_n;  // m x count
    for (Index k = 0; k < v.cols(); ++k) {
      const Vector z = r.col(k).cwiseAbs2().cwiseProduct(inv_var);
      out.S[static_cast<std::size_t>(first + k)] = z.maxCoeff();
      out.T[static_cast<std::size_t>(first + k)] = weight.dot(z);
    }
  });
  return out;
}

IrfReplicates wild_replicates(const Dataset& data, const ParametricFit& fit,
                              const RegressionModel& model, const IndexSetRule& rule,
                              Index replicates, unsigned threads, const ChunkSource& source) {
  const Index n = data.n();
  const Grid grid = unique_grid(data.x());
  const Matrix ind = indicator_matrix(data.x(), grid.points, rule);
  const double root_n = std::sqrt(static_cast<double>(n));

  std::vector<std::optional<IrfStatistics>> slots(static_cast<std::size_t>(replicates));
  for_each_chunk(replicates, threads, source, [&](Index first, const Matrix& v) {
    Matrix resid(n, v.cols());
    std::vector<bool> ok(static_cast<std::size_t>(v.cols()), true);
    for (Index k = 0; k < v.cols(); ++k) {
      const Vector y_star = fit.fitted + fit.residuals.cwiseProduct(v.col(k));
      try {
        const ParametricFit refit =
            fit_least_squares(data.with_response(y_star), model, fit.theta_hat);
        resid.col(k) = refit.residuals;
      } catch (const Error&) {
        ok[static_cast<std::size_t>(k)] = false;
        resid.col(k).setZero();
      }
    }
    const Matrix r = ind.transpose() * resid / root_n;
    for (Index k = 0; k < v.cols(); ++k) {
      if (ok[static_cast<std::size_t>(k)]) {
        slots[static_cast<std::size_t>(first + k)] = irf_from_process(r.col(k), grid.weight);
      }
    }
  });

  IrfReplicates out;
  for (const auto& s : slots) {
    if (!s) {
      ++out.failed;
      continue;
    }
    out.ks.push_back(s->ks);
    out.cvm.push_back(s->cvm);
  }
  if (out.failed > kMaxWildFailureFraction * static_cast<double>(replicates)) {
    throw Error(ErrorCode::replicate_failures,
                std::to_string(out.failed) + " of " + std::to_string(replicates) +
                    " wild bootstrap refits failed");
  }
  return out;
}

void check_replicates(int b) {
  if (b < 1) throw Error(ErrorCode::invalid_argument, "need at least one bootstrap replicate");
}

}  // namespace

std::string to_string(MultiplierLaw law) {
  return law == MultiplierLaw::rademacher ? "rademacher" : "mammen";
}

MultiplierLaw parse_multiplier_law(const std::string& text) {
  std::string key;
  for (char c : text) key += static_cast<char>(std::tolower(c));
  if (key == "rademacher") return MultiplierLaw::rademacher;
  if (key == "mammen" || key == "mammen_two_point" || key == "mammen-two-point") {
    return MultiplierLaw::mammen;
  }
  throw Error(ErrorCode::invalid_argument, "unknown multiplier law '" + text + "'");
}

Vector draw_multipliers(const MultiplierConfig& cfg, Index n, int replicate) {
  Engine engine(substream_seed(cfg.seed, {kStreamMultipliers, static_cast<std::uint64_t>(replicate)}));
  Vector v(n);
  if (cfg.law == MultiplierLaw::rademacher) {
    std::uint64_t bits = 0;
    for (Index i = 0; i < n; ++i) {
      if (i % 64 == 0) bits = engine();
      v(i) = (bits & 1U) ? 1.0 : -1.0;
      bits >>= 1;
    }
  } else {
    const double root5 = std::sqrt(5.0);
    const double low = 0.5 * (1.0 - root5);
    const double high = 0.5 * (1.0 + root5);
    const double p_low = (root5 + 1.0) / (2.0 * root5);
    for (Index i = 0; i < n; ++i) v(i) = uniform01(engine) < p_low ? low : high;
  }
  return v;
}

Matrix multiplier_matrix(const MultiplierConfig& cfg, Index n) {
  check_replicates(cfg.replicates);
  Matrix v(n, cfg.replicates);
  for (int b = 0; b < cfg.replicates; ++b) v.col(b) = draw_multipliers(cfg, n, b);
  return v;
}

ElReplicates multiplier_replicates(const MarkedProcessEval& mpe, const MultiplierConfig& cfg) {
  check_replicates(cfg.replicates);
  return el_replicates(mpe, cfg.replicates, cfg.threads, seeded_source(cfg, mpe.n()));
}

ElReplicates multiplier_replicates(const MarkedProcessEval& mpe, const Matrix& multipliers,
                                   unsigned threads) {
  if (multipliers.rows() != mpe.n() || multipliers.cols() < 1) {
    throw Error(ErrorCode::invalid_argument, "multiplier matrix must be n x B with B >= 1");
  }
  return el_replicates(mpe, multipliers.cols(), threads, matrix_source(multipliers));
}

IrfReplicates wild_bootstrap_parametric(const Dataset& data, const ParametricFit& fit,
                                        const RegressionModel& model, const IndexSetRule& rule,
                                        const MultiplierConfig& cfg) {
  check_replicates(cfg.replicates);
  return wild_replicates(data, fit, model, rule, cfg.replicates, cfg.threads,
                         seeded_source(cfg, data.n()));
}

IrfReplicates wild_bootstrap_parametric(const Dataset& data, const ParametricFit& fit,
                                        const RegressionModel& model, const IndexSetRule& rule,
                                        const Matrix& multipliers, unsigned threads) {
  if (multipliers.rows() != data.n() || multipliers.cols() < 1) {
    throw Error(ErrorCode::invalid_argument, "multiplier matrix must be n x B with B >= 1");
  }
  return wild_replicates(data, fit, model, rule, multipliers.cols(), threads,
                         matrix_source(multipliers));
}

}  // namespace elgof
