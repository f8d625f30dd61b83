#pragma once

#include "elgof/bootstrap.hpp"
#include "elgof/error.hpp"
#include "elgof/sim.hpp"
#include "elgof/testkit.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace elgof::cli {

enum class OutputFormat { text, jsonl };
OutputFormat parse_format(const std::string& text);

/// Exit status for each failure class.
int exit_code(ErrorCode code);
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;

struct RunConfig {
  std::string input;
  std::string family = "parametric";  // parametric | glm | variable_selection | partial_linear
  std::string response;
  std::vector<std::string> covariates;  // parametric and glm
  std::vector<std::string> w_cols;      // variable_selection and partial_linear
  std::vector<std::string> z_cols;
  std::string model = "linear-origin";  // linear-origin | linear | poly:<k>
  std::vector<TestKind> tests{TestKind::el_ks, TestKind::el_cvm};
  double level = 0.05;
  int bootstrap = kDeskReplicates;
  std::uint64_t seed = 1;
  MultiplierLaw law = MultiplierLaw::rademacher;
  std::optional<std::vector<double>> bandwidth;  // one value, or one per W column
  std::optional<std::vector<double>> pivot;      // default: coordinate medians
  Orientation irf_process = Orientation::left_to_right;
  int trials = 1;
  bool intercept = false;
  double cap = kDefaultCap;
  unsigned threads = 0;
  OutputFormat format = OutputFormat::text;
};

/// Fits the null, computes the requested statistics and bootstrap p-values
/// and writes the report to `out`. Returns 0 whenever the analysis completes,
/// whatever the decision; errors go to `err` with a nonzero status.
int run_test_command(const RunConfig& cfg, std::ostream& out, std::ostream& err);

struct SimCommandConfig {
  std::vector<std::string> scenarios;  // "parametric:n=100,d=0,sigma=1", "glm:model=null,n=500"
  std::vector<int> tables;             // 1..4
  std::string config_file;             // key = value lines, overridden by the fields below
  std::optional<Scale> scale;
  std::optional<int> reps;
  std::optional<int> bootstrap;
  std::optional<std::vector<TestKind>> tests;
  std::optional<std::uint64_t> seed;
  std::optional<MultiplierLaw> law;
  std::optional<unsigned> threads;
  std::optional<GlmPivot> glm_pivot;
  std::optional<Orientation> irf_process;
  std::optional<OutputFormat> format;
};

/// Parses "parametric:n=100,d=1,sigma=2" or "glm:model=quadratic,n=500".
Scenario parse_scenario(const std::string& spec);
std::vector<TestKind> parse_tests(const std::string& list);
Orientation parse_irf_process(const std::string& text);
GlmPivot parse_glm_pivot(const std::string& text);

int run_sim_command(const SimCommandConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace elgof::cli
