#include "elgof/cli.hpp"

#include "elgof/csv.hpp"
#include "elgof/marked_process.hpp"
#include "elgof/model_null.hpp"

#include "json.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace elgof::cli {
namespace {

using Json = nlohmann::ordered_json;

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& text, char delim = ',') {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(text);
  while (std::getline(is, item, delim)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// JSON has no infinity; the report spells it out.
Json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

Json numbers(const Vector& v) {
  Json arr = Json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(number(v(i)));
  return arr;
}

Json numbers(const std::vector<double>& v) {
  Json arr = Json::array();
  for (double x : v) arr.push_back(number(x));
  return arr;
}

enum class Family { parametric, glm, variable_selection, partial_linear };

Family parse_family(const std::string& text) {
  const std::string key = lower(text);
  if (key == "parametric") return Family::parametric;
  if (key == "glm") return Family::glm;
  if (key == "variable_selection" || key == "variable-selection") return Family::variable_selection;
  if (key == "partial_linear" || key == "partial-linear") return Family::partial_linear;
  throw Error(ErrorCode::unknown_family, "unknown family '" + text +
                                             "' (expected parametric, glm, "
                                             "variable_selection or partial_linear)");
}

ModelPtr parse_model(const std::string& text) {
  const std::string key = lower(text);
  if (key == "linear-origin") return linear_through_origin();
  if (key == "linear") return linear_with_intercept();
  if (key.rfind("poly:", 0) == 0) {
    try {
      return polynomial(std::stoi(key.substr(5)));
    } catch (const std::logic_error&) {
    }
  }
  throw Error(ErrorCode::invalid_argument,
              "unknown model '" + text + "' (expected linear-origin, linear or poly:<k>)");
}

Matrix gather(const Table& table, const std::vector<std::string>& names) {
  Matrix x(table.values.rows(), static_cast<Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    x.col(static_cast<Index>(j)) = table.values.col(table.column(names[j]));
  }
  return x;
}

Vector expand_bandwidth(const std::optional<std::vector<double>>& given, const Matrix& w) {
  if (!given) return default_bandwidth(w);
  if (given->size() == 1) return Vector::Constant(w.cols(), given->front());
  if (static_cast<Index>(given->size()) == w.cols()) {
    return Eigen::Map<const Vector>(given->data(), w.cols());
  }
  throw Error(ErrorCode::invalid_argument, "--bandwidth needs one value or one per W column");
}

IndexSetRule pivot_rule(const std::optional<std::vector<double>>& given, const Matrix& points) {
  if (!given) return IndexSetRule::medians(points);
  if (static_cast<Index>(given->size()) != points.cols()) {
    throw Error(ErrorCode::invalid_argument, "--pivot needs one value per coordinate (" +
                                                 std::to_string(points.cols()) + ")");
  }
  return IndexSetRule::at(*given);
}

Json join(const std::vector<std::string>& v) {
  Json arr = Json::array();
  for (const auto& s : v) arr.push_back(s);
  return arr;
}

void write_report(std::ostream& out, const std::vector<Json>& records, OutputFormat format) {
  if (format == OutputFormat::jsonl) {
    for (const Json& r : records) out << r.dump() << "\n";
    return;
  }
  for (const Json& r : records) {
    out << "[" << r.at("record").get<std::string>() << "]\n";
    for (const auto& [key, value] : r.items()) {
      if (key == "record") continue;
      out << "  " << key << " = " << (value.is_string() ? value.get<std::string>() : value.dump())
          << "\n";
    }
  }
}

struct FamilyRun {
  Dataset data;
  MarkedProcessEval mpe;
  Json fit;
  Json effective;  // derived settings echoed in the config record
  // Parametric only: what the wild bootstrap needs.
  std::optional<ParametricFit> parametric_fit;
  ModelPtr model;
  std::optional<MarkedProcessEval> irf_mpe;
  std::optional<IndexSetRule> irf_rule;
};

FamilyRun run_family(Family family, const RunConfig& cfg, const Table& table) {
  const Vector y = table.values.col(table.column(cfg.response));
  switch (family) {
    case Family::parametric: {
      if (cfg.covariates.size() != 1) {
        throw Error(ErrorCode::invalid_argument, "parametric family needs exactly one covariate");
      }
      Dataset data(gather(table, cfg.covariates), y);
      ModelPtr model = parse_model(cfg.model);
      ParametricFit fit = fit_least_squares(data, *model);
      const IndexSetRule rule = pivot_rule(cfg.pivot, data.x());
      MarkedProcessEval mpe = build_parametric(fit, data, rule);
      const IndexSetRule irf_rule =
          cfg.irf_process == Orientation::left_to_right ? IndexSetRule::left_to_right(1) : rule;
      MarkedProcessEval irf_mpe = build_parametric(fit, data, irf_rule);
      Json fit_json{{"record", "fit"},
                    {"model", model->name()},
                    {"theta_hat", numbers(fit.theta_hat)},
                    {"residual_ss", number(fit.residuals.squaredNorm())}};
      Json eff{{"pivot", numbers(rule.pivots)}};
      return FamilyRun{std::move(data), std::move(mpe), std::move(fit_json), std::move(eff),
                       std::move(fit), std::move(model), std::move(irf_mpe), irf_rule};
    }
    case Family::glm: {
      if (cfg.covariates.empty()) {
        throw Error(ErrorCode::invalid_argument, "glm family needs at least one covariate");
      }
      Dataset data(gather(table, cfg.covariates), y);
      const GlmFit fit = fit_binomial_logistic(data, cfg.trials, cfg.intercept);
      const IndexSetRule rule = pivot_rule(cfg.pivot, fit.index);
      MarkedProcessEval mpe = build_glm(fit, data, rule);
      Json fit_json{{"record", "fit"},
                    {"model", "binomial-logistic"},
                    {"alpha_hat", numbers(fit.alpha_hat)},
                    {"beta_hat", numbers(fit.beta_hat)},
                    {"iterations", fit.iterations}};
      Json eff{{"pivot", numbers(rule.pivots)}};
      return FamilyRun{std::move(data), std::move(mpe), std::move(fit_json), std::move(eff),
                       std::nullopt, nullptr, std::nullopt, std::nullopt};
    }
    case Family::variable_selection:
    case Family::partial_linear: {
      if (cfg.w_cols.empty() || cfg.z_cols.empty()) {
        throw Error(ErrorCode::invalid_argument, "--w-cols and --z-cols are both required");
      }
      std::vector<std::string> names = cfg.w_cols;
      names.insert(names.end(), cfg.z_cols.begin(), cfg.z_cols.end());
      ColumnSplit split;
      for (std::size_t j = 0; j < names.size(); ++j) {
        (j < cfg.w_cols.size() ? split.w : split.z).push_back(static_cast<Index>(j));
      }
      Dataset data(gather(table, names), y, split);
      const Vector h = expand_bandwidth(cfg.bandwidth, data.w());
      const IndexSetRule rule = pivot_rule(cfg.pivot, data.x());
      Json fit_json{{"record", "fit"}};
      MarkedProcessEval mpe;
      if (family == Family::variable_selection) {
        const KernelFit kfit = fit_variable_selection(data, h);
        mpe = build_variable_selection(kfit, data, rule);
        fit_json["model"] = "nadaraya-watson";
      } else {
        const PartialLinearFit pfit = fit_partial_linear(data, h);
        mpe = build_partial_linear(pfit, data, rule);
        fit_json["model"] = "partial-linear";
        fit_json["theta_hat"] = numbers(pfit.theta_hat);
      }
      fit_json["kernel"] = "epanechnikov";
      Json eff{{"bandwidth", numbers(h)}, {"pivot", numbers(rule.pivots)}};
      return FamilyRun{std::move(data), std::move(mpe), std::move(fit_json), std::move(eff),
                       std::nullopt, nullptr, std::nullopt, std::nullopt};
    }
  }
  throw Error(ErrorCode::unknown_family, "unknown family");
}

Decision uncalibrated(double observed, double level) {
  Decision d;
  d.observed = observed;
  d.level = level;
  return d;
}

std::string tests_string(const std::vector<TestKind>& tests) {
  std::string s;
  for (TestKind t : tests) s += (s.empty() ? "" : ",") + to_string(t);
  return s;
}

}  // namespace

OutputFormat parse_format(const std::string& text) {
  const std::string key = lower(text);
  if (key == "text") return OutputFormat::text;
  if (key == "jsonl" || key == "json" || key == "records") return OutputFormat::jsonl;
  throw Error(ErrorCode::invalid_argument, "unknown format '" + text + "'");
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return kExitUsage;
    case ErrorCode::file_not_found: return 3;
    case ErrorCode::bad_input: return 4;
    case ErrorCode::unknown_family: return 5;
    case ErrorCode::singular:
    case ErrorCode::separation:
    case ErrorCode::non_convergence:
    case ErrorCode::hull_violation: return 6;
    case ErrorCode::side_count:
    case ErrorCode::too_many_excluded: return 7;
    case ErrorCode::nothing_to_calibrate:
    case ErrorCode::replicate_failures: return 8;
  }
  return 1;
}

std::vector<TestKind> parse_tests(const std::string& list) {
  std::vector<TestKind> tests;
  for (const auto& item : split_list(list)) {
    const TestKind t = parse_test_kind(item);
    if (std::find(tests.begin(), tests.end(), t) == tests.end()) tests.push_back(t);
  }
  if (tests.empty()) throw Error(ErrorCode::invalid_argument, "empty test list");
  return tests;
}

Orientation parse_irf_process(const std::string& text) {
  const std::string key = lower(text);
  if (key == "cumulative" || key == "left-to-right") return Orientation::left_to_right;
  if (key == "pivoted") return Orientation::pivoted;
  throw Error(ErrorCode::invalid_argument, "unknown IRF process '" + text + "'");
}

GlmPivot parse_glm_pivot(const std::string& text) {
  const std::string key = lower(text);
  if (key == "median") return GlmPivot::index_median;
  if (key == "absolute") return GlmPivot::absolute;
  throw Error(ErrorCode::invalid_argument, "unknown GLM pivot rule '" + text + "'");
}

int run_test_command(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    if (!(cfg.level > 0.0 && cfg.level < 1.0)) {
      throw Error(ErrorCode::invalid_argument, "--level must lie in (0, 1)");
    }
    if (cfg.bootstrap < 1) throw Error(ErrorCode::invalid_argument, "--bootstrap must be >= 1");
    if (cfg.tests.empty()) throw Error(ErrorCode::invalid_argument, "no tests requested");
    const Family family = parse_family(cfg.family);
    if (cfg.response.empty()) throw Error(ErrorCode::invalid_argument, "--response is required");
    const Table table = read_delimited(cfg.input);

    FamilyRun run = run_family(family, cfg, table);

    MultiplierConfig boot;
    boot.replicates = cfg.bootstrap;
    boot.law = cfg.law;
    boot.seed = cfg.seed;
    boot.threads = cfg.threads;

    const bool want_el = std::any_of(cfg.tests.begin(), cfg.tests.end(), [](TestKind t) {
      return t == TestKind::el_ks || t == TestKind::el_cvm;
    });
    const bool want_irf = std::any_of(cfg.tests.begin(), cfg.tests.end(), [](TestKind t) {
      return t == TestKind::irf_ks || t == TestKind::irf_cvm;
    });

    const ElStatistics el = el_statistics(run.mpe, cfg.cap);
    std::optional<ElReplicates> el_boot;
    // A perfect fit leaves every T(u) = 0: the statistics are 0 and there is
    // nothing to calibrate, so the EL p-values are reported as 1.
    const bool calibratable = run.mpe.degenerate_variance_count() < run.mpe.grid_size();
    if (want_el && calibratable) el_boot = multiplier_replicates(run.mpe, boot);

    const IrfStatistics irf = irf_statistics(run.irf_mpe ? *run.irf_mpe : run.mpe);
    std::optional<IrfReplicates> irf_boot;
    if (want_irf && run.parametric_fit) {
      irf_boot = wild_bootstrap_parametric(run.data, *run.parametric_fit, *run.model,
                                           *run.irf_rule, boot);
    }

    std::vector<Json> records;
    Json config{{"record", "config"},
                {"input", cfg.input},
                {"family", lower(cfg.family)},
                {"response", cfg.response}};
    if (family == Family::parametric || family == Family::glm) {
      config["covariates"] = join(cfg.covariates);
    } else {
      config["w_cols"] = join(cfg.w_cols);
      config["z_cols"] = join(cfg.z_cols);
    }
    if (family == Family::parametric) {
      config["model"] = lower(cfg.model);
      config["irf_process"] =
          cfg.irf_process == Orientation::left_to_right ? "cumulative" : "pivoted";
    }
    if (family == Family::glm) {
      config["trials"] = cfg.trials;
      config["intercept"] = cfg.intercept;
    }
    config["n"] = run.data.n();
    config["tests"] = tests_string(cfg.tests);
    config["level"] = cfg.level;
    config["bootstrap"] = cfg.bootstrap;
    config["seed"] = cfg.seed;
    config["multiplier"] = to_string(cfg.law);
    config["cap"] = cfg.cap;
    for (const auto& [key, value] : run.effective.items()) config[key] = value;
    records.push_back(std::move(config));
    records.push_back(std::move(run.fit));

    Json diag{{"record", "diagnostics"},
              {"grid_size", run.mpe.grid_size()},
              {"effective_n", run.mpe.n()},
              {"excluded_observations", run.mpe.excluded_count()},
              {"degenerate_el_points", el.degenerate_count},
              {"degenerate_variance_points", el.degenerate_variance_count},
              {"T_n_capped", el.capped},
              {"all_variance_degenerate", !calibratable}};
    if (irf_boot) diag["wild_bootstrap_failures"] = irf_boot->failed;
    records.push_back(std::move(diag));

    for (TestKind t : cfg.tests) {
      Json rec{{"record", "test"}, {"test", to_string(t)}};
      std::optional<Decision> d;
      switch (t) {
        case TestKind::el_ks:
          d = el_boot ? decide(el.S_n, el_boot->S, cfg.level) : uncalibrated(el.S_n, cfg.level);
          break;
        case TestKind::el_cvm:
          d = el_boot ? decide(el.T_n, el_boot->T, cfg.level) : uncalibrated(el.T_n, cfg.level);
          break;
        case TestKind::irf_ks:
          if (irf_boot) d = decide(irf.ks, irf_boot->ks, cfg.level);
          rec["statistic"] = number(irf.ks);
          break;
        case TestKind::irf_cvm:
          if (irf_boot) d = decide(irf.cvm, irf_boot->cvm, cfg.level);
          rec["statistic"] = number(irf.cvm);
          break;
      }
      if (d) {
        rec["statistic"] = number(d->observed);
        rec["p_value"] = number(d->p_value);
        rec["reject"] = d->reject;
        rec["replicates"] = d->replicates;
      } else {
        rec["p_value"] = nullptr;
        rec["note"] = "bootstrap calibration of IRF tests is available for the parametric family";
      }
      records.push_back(std::move(rec));
    }
    write_report(out, records, cfg.format);
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.code());
  }
}

Scenario parse_scenario(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string family = lower(trim(spec.substr(0, colon)));
  std::map<std::string, std::string> kv;
  if (colon != std::string::npos) {
    for (const auto& item : split_list(spec.substr(colon + 1))) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) {
        throw Error(ErrorCode::invalid_argument, "bad scenario field '" + item + "'");
      }
      kv[lower(trim(item.substr(0, eq)))] = trim(item.substr(eq + 1));
    }
  }
  auto take_int = [&](const std::string& key, int fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(it->second, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used != it->second.size()) {
      throw Error(ErrorCode::invalid_argument, "scenario field " + key + " is not an integer");
    }
    kv.erase(it);
    return v;
  };
  auto take_double = [&](const std::string& key, double fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    double v = 0.0;
    try {
      v = std::stod(it->second);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::invalid_argument, "scenario field " + key + " is not a number");
    }
    kv.erase(it);
    return v;
  };

  Scenario out;
  if (family == "parametric" || family == "p") {
    ParametricScenario p;
    p.n = take_int("n", p.n);
    p.d_code = take_int("d", p.d_code);
    p.sigma_code = take_int("sigma", p.sigma_code);
    p.level = take_double("level", p.level);
    out = p;
  } else if (family == "glm") {
    GlmScenario g;
    if (auto it = kv.find("model"); it != kv.end()) {
      g.model = parse_glm_model(it->second);
      kv.erase(it);
    }
    g.n = take_int("n", g.n);
    g.trials = take_int("trials", g.trials);
    g.level = take_double("level", g.level);
    out = g;
  } else {
    throw Error(ErrorCode::unknown_family, "unknown scenario family '" + family + "'");
  }
  if (!kv.empty()) {
    throw Error(ErrorCode::invalid_argument, "unknown scenario field '" + kv.begin()->first + "'");
  }
  validate(out);
  return out;
}

int run_sim_command(const SimCommandConfig& cfg_in, std::ostream& out, std::ostream& err) {
  try {
    SimCommandConfig cfg = cfg_in;
    // Values from the file fill whatever the flags left unset.
    if (!cfg.config_file.empty()) {
      std::ifstream in(cfg.config_file);
      if (!in) {
        throw Error(ErrorCode::file_not_found, "cannot open config file '" + cfg.config_file + "'");
      }
      std::string line;
      std::vector<std::string> file_scenarios;
      std::vector<int> file_tables;
      while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
          throw Error(ErrorCode::invalid_argument, "config line without '=': " + line);
        }
        const std::string key = lower(trim(line.substr(0, eq)));
        const std::string value = trim(line.substr(eq + 1));
        try {
          if (key == "scenario") {
            file_scenarios.push_back(value);
          } else if (key == "table") {
            file_tables.push_back(std::stoi(value));
          } else if (key == "scale") {
            if (!cfg.scale) cfg.scale = parse_scale(value);
          } else if (key == "reps") {
            if (!cfg.reps) cfg.reps = std::stoi(value);
          } else if (key == "bootstrap") {
            if (!cfg.bootstrap) cfg.bootstrap = std::stoi(value);
          } else if (key == "tests") {
            if (!cfg.tests) cfg.tests = parse_tests(value);
          } else if (key == "seed") {
            if (!cfg.seed) cfg.seed = std::stoull(value);
          } else if (key == "multiplier") {
            if (!cfg.law) cfg.law = parse_multiplier_law(value);
          } else if (key == "threads") {
            if (!cfg.threads) cfg.threads = static_cast<unsigned>(std::stoul(value));
          } else if (key == "glm_pivot") {
            if (!cfg.glm_pivot) cfg.glm_pivot = parse_glm_pivot(value);
          } else if (key == "irf_process") {
            if (!cfg.irf_process) cfg.irf_process = parse_irf_process(value);
          } else if (key == "format") {
            if (!cfg.format) cfg.format = parse_format(value);
          } else {
            throw Error(ErrorCode::invalid_argument, "unknown config key '" + key + "'");
          }
        } catch (const std::logic_error&) {
          throw Error(ErrorCode::invalid_argument, "bad value for config key '" + key + "'");
        }
      }
      if (cfg.scenarios.empty() && cfg.tables.empty()) {
        cfg.scenarios = file_scenarios;
        cfg.tables = file_tables;
      }
    }

    std::vector<Scenario> scenarios;
    for (int t : cfg.tables) {
      const auto table = table_scenarios(t);
      scenarios.insert(scenarios.end(), table.begin(), table.end());
    }
    for (const auto& s : cfg.scenarios) scenarios.push_back(parse_scenario(s));
    if (scenarios.empty()) {
      throw Error(ErrorCode::invalid_argument, "no scenarios given (use --scenario or --table)");
    }

    StudyConfig study = StudyConfig::for_scale(cfg.scale.value_or(Scale::desk));
    if (cfg.reps) study.reps = *cfg.reps;
    if (cfg.bootstrap) study.bootstrap = *cfg.bootstrap;
    if (cfg.tests) {
      study.tests = *cfg.tests;
    } else {
      const bool any_glm = std::any_of(scenarios.begin(), scenarios.end(), [](const Scenario& s) {
        return std::holds_alternative<GlmScenario>(s);
      });
      study.tests = any_glm ? std::vector<TestKind>{TestKind::el_ks, TestKind::el_cvm}
                            : std::vector<TestKind>{TestKind::irf_ks, TestKind::irf_cvm,
                                                    TestKind::el_ks, TestKind::el_cvm};
    }
    if (cfg.seed) study.seed = *cfg.seed;
    if (cfg.law) study.law = *cfg.law;
    if (cfg.threads) study.threads = *cfg.threads;
    if (cfg.glm_pivot) study.glm_pivot = *cfg.glm_pivot;
    if (cfg.irf_process) study.irf_orientation = *cfg.irf_process;

    const StudyResult result = run_study(scenarios, study);
    if (cfg.format.value_or(OutputFormat::text) == OutputFormat::jsonl) {
      Json header{{"record", "study_config"},
                  {"reps", study.reps},
                  {"bootstrap", study.bootstrap},
                  {"seed", study.seed},
                  {"multiplier", to_string(study.law)},
                  {"tests", tests_string(study.tests)},
                  {"parametric_pivot", study.parametric_pivot},
                  {"glm_pivot", study.glm_pivot == GlmPivot::index_median ? "median" : "absolute"},
                  {"irf_process", study.irf_orientation == Orientation::left_to_right
                                      ? "cumulative"
                                      : "pivoted"}};
      out << header.dump() << "\n";
      write_records(out, result);
    } else {
      out << "Monte Carlo study: " << study.reps << " samples per scenario, " << study.bootstrap
          << " bootstrap draws, seed " << study.seed << ", " << to_string(study.law)
          << " multipliers\n\n";
      write_table(out, result);
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.code());
  }
}

}  // namespace elgof::cli
