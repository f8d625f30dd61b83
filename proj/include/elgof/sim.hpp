#pragma once

#include "elgof/bootstrap.hpp"
#include "elgof/dataset.hpp"
#include "elgof/marked_process.hpp"
#include "elgof/testkit.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace elgof {

/// Y = X + d(X) + sigma(X) eps with X ~ U[0, 1], tested against m(x) = theta x.
struct ParametricScenario {
  int n = 100;
  int d_code = 0;      // 0..4
  int sigma_code = 1;  // 1..3
  double level = 0.05;
};

enum class GlmModel { null_model, probit, quadratic };

std::string to_string(GlmModel model);
GlmModel parse_glm_model(const std::string& text);

/// Y ~ Binomial(trials, p(X)) with X uniform on [-1,1] x [-1,1] x [0,2],
/// tested against p(x) = logistic(beta^T x).
struct GlmScenario {
  int n = 100;
  GlmModel model = GlmModel::null_model;
  int trials = 15;
  std::array<double, 3> beta0{1.0, 2.0, 0.5};
  double level = 0.05;
};

using Scenario = std::variant<ParametricScenario, GlmScenario>;

/// Throws Error{invalid_argument} on bad codes or sizes.
void validate(const Scenario& scenario);
std::string describe(const Scenario& scenario);

double deviation(int d_code, double x);
double noise_sd(int sigma_code, double x);
double success_probability(const GlmScenario& sc, const Eigen::Vector3d& x);

Dataset generate_parametric(const ParametricScenario& sc, std::uint64_t seed);
Dataset generate_glm(const GlmScenario& sc, std::uint64_t seed);

/// Pivot of the GLM index sets: median of the fitted index, or a fixed value.
enum class GlmPivot { index_median, absolute };

enum class Scale { desk, paper };
Scale parse_scale(const std::string& text);

struct StudyConfig {
  int reps = 1000;
  int bootstrap = kDeskReplicates;
  std::vector<TestKind> tests{TestKind::el_ks, TestKind::el_cvm};
  std::uint64_t seed = 20080101;
  MultiplierLaw law = MultiplierLaw::rademacher;
  unsigned threads = 0;
  double parametric_pivot = 0.5;
  GlmPivot glm_pivot = GlmPivot::index_median;
  double glm_absolute_pivot = 0.5;
  /// Process used by the IRF baseline; the cumulative process by default.
  Orientation irf_orientation = Orientation::left_to_right;

  /// desk: 1000 Monte Carlo samples, 500 bootstrap draws.
  /// paper: 10000 samples, 5000 draws.
  static StudyConfig for_scale(Scale scale);
};

struct StudyCell {
  Scenario scenario;
  TestKind test = TestKind::el_cvm;
  int rejections = 0;
  int completed = 0;
  int failed = 0;

  double rate() const { return completed ? static_cast<double>(rejections) / completed : 0.0; }
  /// sqrt(p (1 - p) / reps)
  double mc_se() const;
};

struct StudyResult {
  std::vector<StudyCell> cells;

  const StudyCell& find(std::size_t scenario_index, TestKind test) const;
  std::vector<TestKind> tests;
  std::size_t scenarios = 0;
};

/// Reject flags of every requested test on one simulated sample.
struct ReplicateOutcome {
  std::vector<bool> reject;  // parallel to StudyConfig::tests
};

/// One Monte Carlo replicate of one scenario, for data drawn from `data_seed`
/// and multipliers from `boot_seed`.
ReplicateOutcome run_replicate(const Scenario& scenario, const StudyConfig& cfg,
                               std::uint64_t data_seed, std::uint64_t boot_seed);

/// Abort threshold on failed Monte Carlo replicates per scenario.
inline constexpr double kMaxStudyFailureFraction = 0.02;

StudyResult run_study(const std::vector<Scenario>& scenarios, const StudyConfig& cfg);

/// Reference designs: 1-3 parametric, one per sigma code; 4 the GLM models.
std::vector<Scenario> table_scenarios(int table);

/// Aligned text, one block per family, cells as "pct (se)".
void write_table(std::ostream& out, const StudyResult& result);
/// One JSON object per line and cell.
void write_records(std::ostream& out, const StudyResult& result);

}  // namespace elgof
