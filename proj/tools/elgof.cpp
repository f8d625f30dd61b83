// elgof: goodness-of-fit tests for regression nulls, and the Monte Carlo
// harness that measures their level and power.

#include "elgof/cli.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>

namespace {

using namespace elgof;
using namespace elgof::cli;

// Wraps a string parser so CLI11 reports its failures as usage errors.
template <typename T, typename Parse>
std::function<bool(const std::vector<std::string>&)> assign(T& target, Parse parse) {
  return [&target, parse](const std::vector<std::string>& values) {
    try {
      target = parse(values.back());
    } catch (const Error& e) {
      throw CLI::ValidationError(e.what());
    }
    return true;
  };
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  for (char c : text) {
    if (c == ',') {
      if (!item.empty()) out.push_back(item);
      item.clear();
    } else if (c != ' ') {
      item += c;
    }
  }
  if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Empirical likelihood goodness-of-fit tests for regression models"};
  app.require_subcommand(1);

  RunConfig run;
  std::string output;
  std::string covariates, w_cols, z_cols;
  std::vector<double> bandwidth, pivot;

  auto* test = app.add_subcommand("test", "Test a regression null on a delimited data file");
  test->add_option("--input", run.input, "Comma- or tab-delimited file with a header row")
      ->required();
  test->add_option("--family", run.family,
                   "parametric | glm | variable_selection | partial_linear")
      ->capture_default_str();
  test->add_option("--response", run.response, "Response column")->required();
  test->add_option("--covariates", covariates, "Covariate columns, comma separated");
  test->add_option("--w-cols", w_cols, "Smoothed (W) columns, comma separated");
  test->add_option("--z-cols", z_cols, "Tested (Z) columns, comma separated");
  test->add_option("--model", run.model, "linear-origin | linear | poly:<k>")
      ->capture_default_str();
  test->add_option_function<std::string>(
      "--tests", [&](const std::string& v) { run.tests = parse_tests(v); },
      "Comma list of EL-KS, EL-CVM, IRF-KS, IRF-CVM (default EL-KS,EL-CVM)");
  test->add_option("--level", run.level, "Nominal level")->capture_default_str();
  test->add_option("--bootstrap", run.bootstrap, "Bootstrap replicates")->capture_default_str();
  test->add_option("--seed", run.seed, "Bootstrap seed")->capture_default_str();
  test->add_option("--multiplier", assign(run.law, parse_multiplier_law), "rademacher | mammen")
      ->expected(1);
  test->add_option("--bandwidth", bandwidth, "One bandwidth, or one per W column")
      ->delimiter(',');
  test->add_option("--pivot", pivot, "Pivot per coordinate (default: medians)")->delimiter(',');
  test->add_option("--irf-process", assign(run.irf_process, parse_irf_process),
                   "Process behind the IRF tests: cumulative | pivoted")
      ->expected(1);
  test->add_option("--trials", run.trials, "Binomial trials per observation (glm)")
      ->capture_default_str();
  test->add_flag("--intercept", run.intercept, "Add an intercept to the logistic index (glm)");
  test->add_option("--cap", run.cap, "Value of an infinite ell inside T_n")->capture_default_str();
  test->add_option("--threads", run.threads, "Worker threads, 0 for all cores")
      ->capture_default_str();
  test->add_option("--format", assign(run.format, parse_format), "text | jsonl")->expected(1);
  test->add_option("--output", output, "Write the report here instead of stdout");

  SimCommandConfig sim;
  std::string sim_output;
  auto* simc = app.add_subcommand("sim", "Monte Carlo level and power study");
  simc->add_option("--scenario", sim.scenarios,
                   "parametric:n=100,d=1,sigma=2 or glm:model=quadratic,n=500 (repeatable)");
  simc->add_option("--table", sim.tables, "Reference design 1-4: parametric by sigma code, or GLM (repeatable)")
      ->check(CLI::Range(1, 4));
  simc->add_option("--config", sim.config_file, "key = value file; flags take precedence");
  simc->add_option_function<std::string>(
      "--scale", [&](const std::string& v) { sim.scale = parse_scale(v); }, "desk | paper");
  simc->add_option_function<int>(
      "--reps", [&](int v) { sim.reps = v; }, "Monte Carlo samples per scenario");
  simc->add_option_function<int>(
      "--bootstrap", [&](int v) { sim.bootstrap = v; }, "Bootstrap replicates per sample");
  simc->add_option_function<std::string>(
      "--tests", [&](const std::string& v) { sim.tests = parse_tests(v); }, "Tests to run");
  simc->add_option_function<std::uint64_t>(
      "--seed", [&](std::uint64_t v) { sim.seed = v; }, "Master seed");
  simc->add_option_function<std::string>(
      "--multiplier", [&](const std::string& v) { sim.law = parse_multiplier_law(v); },
      "rademacher | mammen");
  simc->add_option_function<unsigned>(
      "--threads", [&](unsigned v) { sim.threads = v; }, "Worker threads, 0 for all cores");
  simc->add_option_function<std::string>(
      "--glm-pivot", [&](const std::string& v) { sim.glm_pivot = parse_glm_pivot(v); },
      "median | absolute");
  simc->add_option_function<std::string>(
      "--irf-process", [&](const std::string& v) { sim.irf_process = parse_irf_process(v); },
      "cumulative | pivoted");
  simc->add_option_function<std::string>(
      "--format", [&](const std::string& v) { sim.format = parse_format(v); }, "text | jsonl");
  simc->add_option("--output", sim_output, "Write the tables here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.code());
  }

  const std::string& path = *test ? output : sim_output;
  std::ofstream file;
  if (!path.empty()) {
    file.open(path);
    if (!file) {
      std::cerr << "error: cannot write '" << path << "'\n";
      return exit_code(ErrorCode::file_not_found);
    }
  }
  std::ostream& out = path.empty() ? std::cout : file;

  if (*test) {
    run.covariates = split_commas(covariates);
    run.w_cols = split_commas(w_cols);
    run.z_cols = split_commas(z_cols);
    if (!bandwidth.empty()) run.bandwidth = bandwidth;
    if (!pivot.empty()) run.pivot = pivot;
    return run_test_command(run, out, std::cerr);
  }
  return run_sim_command(sim, out, std::cerr);
}
