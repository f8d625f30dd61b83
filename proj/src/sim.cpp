#include "elgof/sim.hpp"

#include "elgof/error.hpp"
#include "elgof/model_null.hpp"
#include "elgof/parallel.hpp"
#include "elgof/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

namespace elgof {
namespace {

bool is_el(TestKind t) { return t == TestKind::el_ks || t == TestKind::el_cvm; }

std::string lower(const std::string& s) {
  std::string out;
  for (char c : s) out += static_cast<char>(std::tolower(c));
  return out;
}

// Seeds depend on the scenario's content, not its position in the list.
std::array<std::uint64_t, 4> scenario_key(const Scenario& sc) {
  if (const auto* p = std::get_if<ParametricScenario>(&sc)) {
    return {1, static_cast<std::uint64_t>(p->n), static_cast<std::uint64_t>(p->d_code),
            static_cast<std::uint64_t>(p->sigma_code)};
  }
  const auto& g = std::get<GlmScenario>(sc);
  return {2, static_cast<std::uint64_t>(g.n), static_cast<std::uint64_t>(g.model),
          static_cast<std::uint64_t>(g.trials)};
}

double level_of(const Scenario& sc) {
  return std::visit([](const auto& s) { return s.level; }, sc);
}

std::string pct(double rate) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << 100.0 * rate;
  return os.str();
}

}  // namespace

std::string to_string(GlmModel model) {
  switch (model) {
    case GlmModel::null_model: return "null";
    case GlmModel::probit: return "probit";
    case GlmModel::quadratic: return "quadratic";
  }
  return "?";
}

GlmModel parse_glm_model(const std::string& text) {
  const std::string key = lower(text);
  if (key == "null") return GlmModel::null_model;
  if (key == "probit") return GlmModel::probit;
  if (key == "quadratic") return GlmModel::quadratic;
  throw Error(ErrorCode::invalid_argument, "unknown GLM model '" + text + "'");
}

Scale parse_scale(const std::string& text) {
  const std::string key = lower(text);
  if (key == "desk") return Scale::desk;
  if (key == "paper") return Scale::paper;
  throw Error(ErrorCode::invalid_argument, "unknown scale '" + text + "'");
}

StudyConfig StudyConfig::for_scale(Scale scale) {
  StudyConfig cfg;
  if (scale == Scale::paper) {
    cfg.reps = 10000;
    cfg.bootstrap = kFullReplicates;
  }
  return cfg;
}

void validate(const Scenario& scenario) {
  if (const auto* p = std::get_if<ParametricScenario>(&scenario)) {
    if (p->d_code < 0 || p->d_code > 4) {
      throw Error(ErrorCode::invalid_argument, "d code must be in 0..4");
    }
    if (p->sigma_code < 1 || p->sigma_code > 3) {
      throw Error(ErrorCode::invalid_argument, "sigma code must be in 1..3");
    }
  } else {
    const auto& g = std::get<GlmScenario>(scenario);
    if (g.trials < 1) throw Error(ErrorCode::invalid_argument, "trials must be positive");
  }
  const int n = std::visit([](const auto& s) { return s.n; }, scenario);
  if (n < 5) throw Error(ErrorCode::invalid_argument, "scenario sample size must be >= 5");
  const double level = level_of(scenario);
  if (!(level > 0.0 && level < 1.0)) {
    throw Error(ErrorCode::invalid_argument, "level must lie in (0, 1)");
  }
}

std::string describe(const Scenario& scenario) {
  std::ostringstream os;
  if (const auto* p = std::get_if<ParametricScenario>(&scenario)) {
    os << "parametric sigma=" << p->sigma_code << " d=" << p->d_code << " n=" << p->n;
  } else {
    const auto& g = std::get<GlmScenario>(scenario);
    os << "glm model=" << to_string(g.model) << " n=" << g.n;
  }
  return os.str();
}

double deviation(int d_code, double x) {
  switch (d_code) {
    case 0: return 0.0;
    case 1: return x * x;
    case 2: return 0.3 * x * std::exp(x);
    case 3: return 0.3 * std::sin(4.0 * std::numbers::pi * x);
    case 4: return x <= 0.5 ? 0.4 * x : -0.4 * (1.0 - x);
  }
  throw Error(ErrorCode::invalid_argument, "d code must be in 0..4");
}

double noise_sd(int sigma_code, double x) {
  switch (sigma_code) {
    case 1: return 0.25;
    case 2: return 0.5 * x;
    case 3: return 0.125 * (2.0 - x);
  }
  throw Error(ErrorCode::invalid_argument, "sigma code must be in 1..3");
}

double success_probability(const GlmScenario& sc, const Eigen::Vector3d& x) {
  const Eigen::Vector3d beta(sc.beta0[0], sc.beta0[1], sc.beta0[2]);
  switch (sc.model) {
    case GlmModel::null_model: return logistic(beta.dot(x));
    case GlmModel::probit: return 0.5 * std::erfc(-beta.dot(x) / std::numbers::sqrt2);
    case GlmModel::quadratic: {
      const double shifted = x(1) + 1.0;
      return logistic(x(0) + 2.0 * x(1) + 0.25 * shifted * shifted);
    }
  }
  return 0.5;
}

Dataset generate_parametric(const ParametricScenario& sc, std::uint64_t seed) {
  validate(sc);
  Engine engine(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(sc.n, 1);
  Vector y(sc.n);
  for (int i = 0; i < sc.n; ++i) {
    const double xi = uniform01(engine);
    x(i, 0) = xi;
    y(i) = xi + deviation(sc.d_code, xi) + noise_sd(sc.sigma_code, xi) * normal(engine);
  }
  return Dataset(std::move(x), std::move(y));
}

Dataset generate_glm(const GlmScenario& sc, std::uint64_t seed) {
  validate(sc);
  Engine engine(seed);
  Matrix x(sc.n, 3);
  Vector y(sc.n);
  for (int i = 0; i < sc.n; ++i) {
    const Eigen::Vector3d xi(2.0 * uniform01(engine) - 1.0, 2.0 * uniform01(engine) - 1.0,
                             2.0 * uniform01(engine));
    x.row(i) = xi.transpose();
    std::binomial_distribution<int> binom(sc.trials, success_probability(sc, xi));
    y(i) = binom(engine);
  }
  return Dataset(std::move(x), std::move(y));
}

double StudyCell::mc_se() const {
  if (completed == 0) return 0.0;
  const double p = rate();
  return std::sqrt(p * (1.0 - p) / completed);
}

const StudyCell& StudyResult::find(std::size_t scenario_index, TestKind test) const {
  for (std::size_t t = 0; t < tests.size(); ++t) {
    if (tests[t] == test) return cells.at(scenario_index * tests.size() + t);
  }
  throw Error(ErrorCode::invalid_argument, "test " + to_string(test) + " not in study");
}

ReplicateOutcome run_replicate(const Scenario& scenario, const StudyConfig& cfg,
                               std::uint64_t data_seed, std::uint64_t boot_seed) {
  MultiplierConfig boot;
  boot.replicates = cfg.bootstrap;
  boot.law = cfg.law;
  boot.seed = boot_seed;
  boot.threads = 1;
  const double level = level_of(scenario);

  ReplicateOutcome out;
  out.reject.assign(cfg.tests.size(), false);
  const bool want_el = std::any_of(cfg.tests.begin(), cfg.tests.end(), is_el);
  const bool want_irf = !std::all_of(cfg.tests.begin(), cfg.tests.end(), is_el);

  std::optional<ElStatistics> el;
  std::optional<ElReplicates> el_boot;
  std::optional<IrfStatistics> irf;
  std::optional<IrfReplicates> irf_boot;

  if (const auto* p = std::get_if<ParametricScenario>(&scenario)) {
    const Dataset data = generate_parametric(*p, data_seed);
    const ModelPtr model = linear_through_origin();
    const ParametricFit fit = fit_least_squares(data, *model);
    if (want_el) {
      const MarkedProcessEval mpe =
          build_parametric(fit, data, IndexSetRule::at({cfg.parametric_pivot}));
      el = el_statistics(mpe);
      el_boot = multiplier_replicates(mpe, boot);
    }
    if (want_irf) {
      const IndexSetRule rule = cfg.irf_orientation == Orientation::left_to_right
                                    ? IndexSetRule::left_to_right(1)
                                    : IndexSetRule::at({cfg.parametric_pivot});
      irf = irf_statistics(build_parametric(fit, data, rule));
      irf_boot = wild_bootstrap_parametric(data, fit, *model, rule, boot);
    }
  } else {
    const auto& g = std::get<GlmScenario>(scenario);
    if (want_irf) {
      throw Error(ErrorCode::invalid_argument,
                  "IRF tests are calibrated for the parametric family only");
    }
    const Dataset data = generate_glm(g, data_seed);
    const GlmFit fit = fit_binomial_logistic(data, g.trials, false);
    const IndexSetRule rule = cfg.glm_pivot == GlmPivot::index_median
                                  ? IndexSetRule::medians(fit.index)
                                  : IndexSetRule::at({cfg.glm_absolute_pivot});
    const MarkedProcessEval mpe = build_glm(fit, data, rule);
    el = el_statistics(mpe);
    el_boot = multiplier_replicates(mpe, boot);
  }

  for (std::size_t t = 0; t < cfg.tests.size(); ++t) {
    switch (cfg.tests[t]) {
      case TestKind::el_ks:
        out.reject[t] = decide(el->S_n, el_boot->S, level).reject;
        break;
      case TestKind::el_cvm:
        out.reject[t] = decide(el->T_n, el_boot->T, level).reject;
        break;
      case TestKind::irf_ks:
        out.reject[t] = decide(irf->ks, irf_boot->ks, level).reject;
        break;
      case TestKind::irf_cvm:
        out.reject[t] = decide(irf->cvm, irf_boot->cvm, level).reject;
        break;
    }
  }
  return out;
}

StudyResult run_study(const std::vector<Scenario>& scenarios, const StudyConfig& cfg) {
  if (cfg.reps < 1) throw Error(ErrorCode::invalid_argument, "reps must be >= 1");
  if (cfg.bootstrap < 1) throw Error(ErrorCode::invalid_argument, "bootstrap must be >= 1");
  if (cfg.tests.empty()) throw Error(ErrorCode::invalid_argument, "no tests requested");
  for (const Scenario& sc : scenarios) {
    validate(sc);
    const bool irf = !std::all_of(cfg.tests.begin(), cfg.tests.end(), is_el);
    if (irf && std::holds_alternative<GlmScenario>(sc)) {
      throw Error(ErrorCode::invalid_argument,
                  "IRF tests are calibrated for the parametric family only");
    }
  }

  StudyResult result;
  result.tests = cfg.tests;
  result.scenarios = scenarios.size();
  const auto reps = static_cast<std::size_t>(cfg.reps);

  for (const Scenario& sc : scenarios) {
    const auto key = scenario_key(sc);
    std::vector<std::optional<ReplicateOutcome>> outcomes(reps);
    parallel_for(reps, cfg.threads, [&](std::size_t r) {
      const std::uint64_t data_seed =
          substream_seed(cfg.seed, {kStreamData, key[0], key[1], key[2], key[3], r});
      const std::uint64_t boot_seed =
          substream_seed(cfg.seed, {kStreamMultipliers, key[0], key[1], key[2], key[3], r});
      try {
        outcomes[r] = run_replicate(sc, cfg, data_seed, boot_seed);
      } catch (const Error&) {
        outcomes[r].reset();
      }
    });

    std::vector<StudyCell> cells(cfg.tests.size());
    for (std::size_t t = 0; t < cfg.tests.size(); ++t) {
      cells[t].scenario = sc;
      cells[t].test = cfg.tests[t];
    }
    for (const auto& o : outcomes) {
      for (std::size_t t = 0; t < cfg.tests.size(); ++t) {
        if (!o) {
          ++cells[t].failed;
          continue;
        }
        ++cells[t].completed;
        cells[t].rejections += o->reject[t] ? 1 : 0;
      }
    }
    if (cells.front().failed > kMaxStudyFailureFraction * static_cast<double>(cfg.reps)) {
      throw Error(ErrorCode::replicate_failures,
                  describe(sc) + ": " + std::to_string(cells.front().failed) + " of " +
                      std::to_string(cfg.reps) + " Monte Carlo samples failed");
    }
    result.cells.insert(result.cells.end(), cells.begin(), cells.end());
  }
  return result;
}

std::vector<Scenario> table_scenarios(int table) {
  std::vector<Scenario> out;
  if (table >= 1 && table <= 3) {
    for (int d = 0; d <= 4; ++d) {
      for (int n : {50, 100}) out.emplace_back(ParametricScenario{n, d, table, 0.05});
    }
    return out;
  }
  if (table == 4) {
    for (GlmModel m : {GlmModel::null_model, GlmModel::probit, GlmModel::quadratic}) {
      for (int n : {50, 100, 500}) {
        GlmScenario g;
        g.n = n;
        g.model = m;
        out.emplace_back(g);
      }
    }
    return out;
  }
  throw Error(ErrorCode::invalid_argument, "table must be 1, 2, 3 or 4");
}

void write_table(std::ostream& out, const StudyResult& result) {
  const std::size_t nt = result.tests.size();
  for (int family = 0; family < 2; ++family) {
    std::vector<std::size_t> rows;
    for (std::size_t s = 0; s < result.scenarios; ++s) {
      if (static_cast<int>(result.cells[s * nt].scenario.index()) == family) rows.push_back(s);
    }
    if (rows.empty()) continue;

    std::ostringstream header;
    if (family == 0) {
      header << std::setw(6) << "sigma" << std::setw(4) << "d" << std::setw(7) << "n";
    } else {
      header << std::setw(10) << "model" << std::setw(7) << "n";
    }
    for (TestKind t : result.tests) header << std::setw(18) << to_string(t);
    out << (family == 0 ? "Parametric null m(x) = theta x" : "Binomial logistic null")
        << " -- % rejections (Monte Carlo s.e.)\n"
        << header.str() << "\n";

    for (std::size_t s : rows) {
      const Scenario& sc = result.cells[s * nt].scenario;
      if (family == 0) {
        const auto& p = std::get<ParametricScenario>(sc);
        out << std::setw(6) << p.sigma_code << std::setw(4) << p.d_code << std::setw(7) << p.n;
      } else {
        const auto& g = std::get<GlmScenario>(sc);
        out << std::setw(10) << to_string(g.model) << std::setw(7) << g.n;
      }
      for (std::size_t t = 0; t < nt; ++t) {
        const StudyCell& c = result.cells[s * nt + t];
        out << std::setw(18) << (pct(c.rate()) + " (" + pct(c.mc_se()) + ")");
      }
      out << "\n";
    }
    out << "\n";
  }
}

void write_records(std::ostream& out, const StudyResult& result) {
  for (const StudyCell& c : result.cells) {
    nlohmann::ordered_json rec;
    rec["record"] = "study_cell";
    if (const auto* p = std::get_if<ParametricScenario>(&c.scenario)) {
      rec["family"] = "parametric";
      rec["sigma_code"] = p->sigma_code;
      rec["d_code"] = p->d_code;
      rec["n"] = p->n;
      rec["level"] = p->level;
    } else {
      const auto& g = std::get<GlmScenario>(c.scenario);
      rec["family"] = "glm";
      rec["model"] = to_string(g.model);
      rec["n"] = g.n;
      rec["trials"] = g.trials;
      rec["level"] = g.level;
    }
    rec["test"] = to_string(c.test);
    rec["rejection_pct"] = 100.0 * c.rate();
    rec["mc_se_pct"] = 100.0 * c.mc_se();
    rec["completed"] = c.completed;
    rec["failed"] = c.failed;
    out << rec.dump() << "\n";
  }
}

}  // namespace elgof
