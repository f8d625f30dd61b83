#include "elgof/cli.hpp"
#include "elgof/csv.hpp"
#include "elgof/error.hpp"
#include "elgof/sim.hpp"

#include "json.hpp"

#include <catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <sys/wait.h>

using namespace elgof;
using namespace elgof::cli;
using Catch::Approx;
using Json = nlohmann::json;

namespace {

namespace fs = std::filesystem;

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "elgof_cli_tests";
  fs::create_directories(dir);
  return dir;
}

std::string write_file(const std::string& name, const std::string& text) {
  const fs::path path = scratch_dir() / name;
  std::ofstream(path) << text;
  return path.string();
}

std::string write_dataset(const std::string& name, const Dataset& data,
                          const std::vector<std::string>& x_names, const std::string& y_name) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& h : x_names) os << h << ",";
  os << y_name << "\n";
  for (Index i = 0; i < data.n(); ++i) {
    for (Index j = 0; j < data.d(); ++j) os << data.x()(i, j) << ",";
    os << data.y()(i) << "\n";
  }
  return write_file(name, os.str());
}

struct Outcome {
  int status;
  std::string out, err;
};

Outcome run(const RunConfig& cfg) {
  std::ostringstream out, err;
  const int status = run_test_command(cfg, out, err);
  return {status, out.str(), err.str()};
}

std::vector<Json> records(const std::string& text) {
  std::vector<Json> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) out.push_back(Json::parse(line));
  return out;
}

const Json& record(const std::vector<Json>& recs, const std::string& kind,
                   const std::string& test = "") {
  for (const Json& r : recs) {
    if (r.at("record") == kind && (test.empty() || r.value("test", "") == test)) return r;
  }
  FAIL("record " << kind << " " << test << " missing");
  return recs.front();
}

RunConfig parametric(const std::string& input) {
  RunConfig cfg;
  cfg.input = input;
  cfg.response = "y";
  cfg.covariates = {"x"};
  cfg.format = OutputFormat::jsonl;
  return cfg;
}

int tool(const std::string& args) {
  const std::string cmd = std::string(ELGOF_TOOL) + " " + args + " >/dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

}  // namespace

TEST_CASE("perfect fit reports zero statistics and p = 1") {
  // Four rows: the smallest sample with two points on each side of a pivot.
  const auto path = write_file("perfect.csv", "x,y\n1,2\n2,4\n3,6\n4,8\n");
  auto cfg = parametric(path);
  cfg.tests = {TestKind::el_ks, TestKind::el_cvm, TestKind::irf_ks, TestKind::irf_cvm};
  const auto res = run(cfg);
  REQUIRE(res.status == 0);
  const auto recs = records(res.out);
  for (const char* t : {"EL-KS", "EL-CVM", "IRF-KS", "IRF-CVM"}) {
    const Json& r = record(recs, "test", t);
    CHECK(r.at("statistic").get<double>() == Approx(0.0).margin(1e-12));
    CHECK(r.at("p_value").get<double>() == 1.0);
    CHECK(r.at("reject") == false);
  }
  CHECK(record(recs, "fit").at("theta_hat")[0].get<double>() == Approx(2.0));
  CHECK(record(recs, "diagnostics").at("degenerate_variance_points") == 4);

  // Three rows cannot put two observations on each side of any pivot.
  const auto three = write_file("three.csv", "x,y\n0,0\n1,1\n2,2\n");
  CHECK(run(parametric(three)).status == exit_code(ErrorCode::side_count));
}

TEST_CASE("report contents, configuration echo and determinism") {
  ParametricScenario sc;
  const auto path = write_dataset("null.csv", generate_parametric(sc, 8), {"x"}, "y");
  auto cfg = parametric(path);
  cfg.tests = {TestKind::el_ks, TestKind::el_cvm, TestKind::irf_ks, TestKind::irf_cvm};
  cfg.bootstrap = 199;
  cfg.seed = 77;
  const auto a = run(cfg);
  const auto b = run(cfg);
  REQUIRE(a.status == 0);
  CHECK(a.out == b.out);
  cfg.threads = 3;
  CHECK(run(cfg).out == a.out);

  const auto recs = records(a.out);
  const Json& conf = record(recs, "config");
  CHECK(conf.at("seed") == 77);
  CHECK(conf.at("bootstrap") == 199);
  CHECK(conf.at("multiplier") == "rademacher");
  CHECK(conf.at("pivot").size() == 1);
  CHECK(conf.at("n") == 100);
  const Json& diag = record(recs, "diagnostics");
  for (const char* key : {"grid_size", "excluded_observations", "degenerate_el_points",
                          "degenerate_variance_points", "T_n_capped"}) {
    CHECK(diag.contains(key));
  }
  for (const char* t : {"EL-KS", "EL-CVM", "IRF-KS", "IRF-CVM"}) {
    const Json& r = record(recs, "test", t);
    const double p = r.at("p_value").get<double>();
    CHECK(p > 0.0);
    CHECK(p <= 1.0);
    CHECK(r.at("replicates") == 199);
  }

  // Numbers survive a print/parse round trip at 15 significant digits.
  const Table table = read_delimited(path);
  const Dataset data(table.values.leftCols(1), table.values.col(1));
  const auto fit = fit_least_squares(data, *linear_through_origin());
  const double pivot = conf.at("pivot")[0].get<double>();
  const auto st = el_statistics(build_parametric(fit, data, IndexSetRule::at({pivot})));
  const double s_n = record(recs, "test", "EL-KS").at("statistic").get<double>();
  const double t_n = record(recs, "test", "EL-CVM").at("statistic").get<double>();
  CHECK(std::abs(s_n - st.S_n) <= 1e-15 * std::abs(st.S_n));
  CHECK(std::abs(t_n - st.T_n) <= 1e-15 * std::abs(st.T_n));
  CHECK(record(recs, "fit").at("theta_hat")[0].get<double>() == fit.theta_hat(0));

  // Reproduce the run from its own echo.
  RunConfig again = parametric(conf.at("input").get<std::string>());
  again.tests = parse_tests(conf.at("tests").get<std::string>());
  again.bootstrap = conf.at("bootstrap").get<int>();
  again.seed = conf.at("seed").get<std::uint64_t>();
  again.pivot = conf.at("pivot").get<std::vector<double>>();
  CHECK(run(again).out == a.out);

  cfg.format = OutputFormat::text;
  const auto text = run(cfg);
  CHECK(text.out.find("[test]") != std::string::npos);
  CHECK(text.out.find("p_value") != std::string::npos);
}

TEST_CASE("quadratic deviation is detected by EL-CVM for most seeds") {
  ParametricScenario sc;
  sc.d_code = 1;
  int detected = 0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    const auto path = write_dataset("alt.csv", generate_parametric(sc, 500 + s), {"x"}, "y");
    auto cfg = parametric(path);
    cfg.tests = {TestKind::el_cvm};
    cfg.seed = static_cast<std::uint64_t>(s);
    const auto res = run(cfg);
    REQUIRE(res.status == 0);
    detected += record(records(res.out), "test", "EL-CVM").at("p_value").get<double>() < 0.05;
  }
  CHECK(detected >= 16);
}

TEST_CASE("other families run end to end") {
  GlmScenario g;
  g.n = 150;
  const auto glm_path = write_dataset("glm.csv", generate_glm(g, 4), {"x1", "x2", "x3"}, "y");
  RunConfig cfg;
  cfg.input = glm_path;
  cfg.family = "glm";
  cfg.response = "y";
  cfg.covariates = {"x1", "x2", "x3"};
  cfg.trials = 15;
  cfg.bootstrap = 99;
  cfg.format = OutputFormat::jsonl;
  auto res = run(cfg);
  REQUIRE(res.status == 0);
  auto recs = records(res.out);
  CHECK(record(recs, "fit").at("beta_hat").size() == 3);
  // IRF statistics are reported without a calibrated p-value here.
  cfg.tests = {TestKind::irf_ks};
  res = run(cfg);
  REQUIRE(res.status == 0);
  CHECK(record(records(res.out), "test", "IRF-KS").at("p_value").is_null());

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> unif(0, 1);
  std::normal_distribution<double> normal;
  std::ostringstream os;
  os.precision(17);
  os << "w\tz\ty\n";
  for (int i = 0; i < 120; ++i) {
    const double w = unif(rng), z = normal(rng);
    os << w << "\t" << z << "\t" << std::sin(3 * w) + 0.5 * z + 0.2 * normal(rng) << "\n";
  }
  const auto wz = write_file("wz.tsv", os.str());
  for (const char* family : {"variable_selection", "partial_linear"}) {
    RunConfig c;
    c.input = wz;
    c.family = family;
    c.response = "y";
    c.w_cols = {"w"};
    c.z_cols = {"z"};
    c.bootstrap = 99;
    c.format = OutputFormat::jsonl;
    const auto r = run(c);
    INFO(family << ": " << r.err);
    REQUIRE(r.status == 0);
    const auto rr = records(r.out);
    CHECK(record(rr, "config").at("bandwidth").size() == 1);
    CHECK(record(rr, "config").at("pivot").size() == 2);
    CHECK(record(rr, "diagnostics").contains("excluded_observations"));
  }
  RunConfig pl;
  pl.input = wz;
  pl.family = "partial_linear";
  pl.response = "y";
  pl.w_cols = {"w"};
  pl.z_cols = {"z"};
  pl.bandwidth = std::vector<double>{0.3};
  pl.format = OutputFormat::jsonl;
  const auto r = run(pl);
  REQUIRE(r.status == 0);
  const auto rr = records(r.out);
  CHECK(record(rr, "config").at("bandwidth")[0] == 0.3);
  CHECK(record(rr, "fit").at("theta_hat")[0].get<double>() == Approx(0.5).margin(0.15));
}

TEST_CASE("input and fitting errors have distinct codes and messages") {
  auto cfg = parametric((scratch_dir() / "does_not_exist.csv").string());
  const auto missing = run(cfg);
  const auto bad = run(parametric(write_file("bad.csv", "x,y\n1,2\n2,abc\n3,4\n4,5\n")));
  const auto na = run(parametric(write_file("na.csv", "x,y\n1,2\n2,\n3,4\n4,5\n")));
  auto unknown_cfg = parametric(write_file("ok.csv", "x,y\n1,2\n2,3\n3,5\n4,4\n5,6\n"));
  unknown_cfg.family = "spline";
  const auto unknown = run(unknown_cfg);
  const auto singular = run(parametric(write_file("zero.csv", "x,y\n0,2\n0,3\n0,5\n0,4\n")));
  auto column_cfg = parametric(write_file("ok2.csv", "x,y\n1,2\n2,3\n3,5\n4,4\n"));
  column_cfg.covariates = {"nope"};
  const auto column = run(column_cfg);

  const std::vector<Outcome> all{missing, bad, unknown, singular};
  for (std::size_t i = 0; i < all.size(); ++i) {
    CHECK(all[i].status != 0);
    CHECK(all[i].out.empty());
    CHECK_FALSE(all[i].err.empty());
    for (std::size_t j = i + 1; j < all.size(); ++j) {
      CHECK(all[i].status != all[j].status);
      CHECK(all[i].err != all[j].err);
    }
  }
  CHECK(missing.status == exit_code(ErrorCode::file_not_found));
  CHECK(bad.status == exit_code(ErrorCode::bad_input));
  CHECK(na.status == exit_code(ErrorCode::bad_input));
  CHECK(unknown.status == exit_code(ErrorCode::unknown_family));
  CHECK(singular.status == exit_code(ErrorCode::singular));
  CHECK(column.status == exit_code(ErrorCode::bad_input));

  cfg = parametric(write_file("ok3.csv", "x,y\n1,2\n2,3\n3,5\n4,4\n"));
  cfg.level = 1.0;
  CHECK(run(cfg).status == kExitUsage);
  cfg.level = 0.05;
  cfg.bootstrap = 0;
  CHECK(run(cfg).status == kExitUsage);
}

TEST_CASE("delimited text parsing") {
  const Table comma = parse_delimited("a,b\n1,2.5\n-3e2,4\n");
  CHECK(comma.delimiter == ',');
  CHECK(comma.values(1, 0) == -300.0);
  CHECK(comma.column("b") == 1);
  const Table tab = parse_delimited("a\tb\n1\t2\n");
  CHECK(tab.delimiter == '\t');
  CHECK(tab.values(0, 1) == 2.0);
  CHECK_THROWS_AS(parse_delimited("a,b\n1\n"), Error);
  CHECK_THROWS_AS(parse_delimited("a,b\n1,NA\n"), Error);
  CHECK_THROWS_AS(comma.column("c"), Error);
  const Table crlf = parse_delimited("a,b\r\n1,2\r\n");
  CHECK(crlf.values(0, 1) == 2.0);
}

TEST_CASE("scenario and list parsing") {
  const auto p = std::get<ParametricScenario>(parse_scenario("parametric:n=50,d=3,sigma=2"));
  CHECK(p.n == 50);
  CHECK(p.d_code == 3);
  CHECK(p.sigma_code == 2);
  const auto g = std::get<GlmScenario>(parse_scenario("glm:model=probit,n=500"));
  CHECK(g.model == GlmModel::probit);
  CHECK(g.n == 500);
  CHECK_THROWS_AS(parse_scenario("parametric:d=9"), Error);
  CHECK_THROWS_AS(parse_scenario("parametric:q=1"), Error);
  CHECK_THROWS_AS(parse_scenario("parametric:n=ten"), Error);
  CHECK_THROWS_AS(parse_scenario("spline:n=10"), Error);
  CHECK(parse_tests("el-ks, irf_cvm,EL-KS").size() == 2);
  CHECK_THROWS_AS(parse_tests(""), Error);
  CHECK(parse_irf_process("pivoted") == Orientation::pivoted);
  CHECK(parse_glm_pivot("absolute") == GlmPivot::absolute);
  CHECK(parse_format("jsonl") == OutputFormat::jsonl);
}

TEST_CASE("sim command: config file, overrides and errors") {
  const auto conf = write_file("study.conf",
                               "# small study\n"
                               "scenario = parametric:n=40,d=1,sigma=1\n"
                               "reps = 6\n"
                               "bootstrap = 39\n"
                               "tests = el-cvm\n"
                               "seed = 5\n");
  SimCommandConfig cfg;
  cfg.config_file = conf;
  cfg.format = OutputFormat::jsonl;
  std::ostringstream out, err;
  REQUIRE(run_sim_command(cfg, out, err) == 0);
  auto recs = records(out.str());
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].at("record") == "study_config");
  CHECK(recs[0].at("reps") == 6);
  CHECK(recs[1].at("completed") == 6);
  CHECK(recs[1].at("test") == "EL-CVM");

  cfg.reps = 4;
  std::ostringstream out2;
  REQUIRE(run_sim_command(cfg, out2, err) == 0);
  CHECK(records(out2.str())[1].at("completed") == 4);

  SimCommandConfig none;
  std::ostringstream o3, e3;
  CHECK(run_sim_command(none, o3, e3) == kExitUsage);
  SimCommandConfig bad;
  bad.scenarios = {"parametric:d=7"};
  CHECK(run_sim_command(bad, o3, e3) == kExitUsage);
  SimCommandConfig lost;
  lost.config_file = (scratch_dir() / "missing.conf").string();
  CHECK(run_sim_command(lost, o3, e3) == exit_code(ErrorCode::file_not_found));
  const auto wrong = write_file("wrong.conf", "colour = blue\n");
  SimCommandConfig w;
  w.config_file = wrong;
  CHECK(run_sim_command(w, o3, e3) == kExitUsage);
}

TEST_CASE("command-line binary") {
  const std::string data = write_file("tool.csv", "x,y\n0.1,0.3\n0.4,0.2\n0.5,0.9\n0.8,0.7\n0.9,1.1\n");
  CHECK(tool("--help") == 0);
  CHECK(tool("test --input " + data + " --response y --covariates x --bootstrap 49") == 0);
  CHECK(tool("test --input " + data +
             " --response y --covariates x --tests el-ks,irf-cvm --multiplier mammen "
             "--format jsonl --pivot 0.45 --bootstrap 49") == 0);
  CHECK(tool("test --input " + data + " --response y --covariates x --multiplier gauss") == 2);
  CHECK(tool("test --response y") == 2);
  CHECK(tool("test --input /nonexistent.csv --response y --covariates x") ==
        exit_code(ErrorCode::file_not_found));
  CHECK(tool("test --input " + data + " --response y --covariates x --family tree") ==
        exit_code(ErrorCode::unknown_family));
  CHECK(tool("sim --scenario parametric:n=30,d=0,sigma=1 --reps 3 --bootstrap 19") == 0);
  CHECK(tool("sim --table 9") == 2);
  CHECK(tool("frobnicate") == 2);

  const auto out_path = (scratch_dir() / "report.jsonl").string();
  REQUIRE(tool("test --input " + data + " --response y --covariates x --format jsonl "
               "--bootstrap 49 --output " + out_path) == 0);
  std::ifstream in(out_path);
  std::string first;
  std::getline(in, first);
  CHECK(Json::parse(first).at("record") == "config");
}
