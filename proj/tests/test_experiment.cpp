#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"
#include "semtrack/csv.hpp"
#include "semtrack/errors.hpp"
#include "semtrack/experiment.hpp"

using namespace semtrack;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("semtrack_exp_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string(SEMTRACK_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

ExperimentConfig small_config(const fs::path& out) {
  ExperimentConfig cfg;
  cfg.generator.horizon = 40;
  cfg.output_dir = out;
  return cfg;
}

}  // namespace

TEST_SUITE("experiment") {
  TEST_CASE("config JSON round-trip and validation") {
    ExperimentConfig cfg;
    cfg.generator.nodes = 6;
    cfg.generator.seed = 99;
    cfg.regimes = {Regime::Smooth, Regime::Abrupt};
    cfg.auto_alpha = false;
    cfg.algo.alpha = 0.0125;
    cfg.stride_eig = 2;
    const std::string text = config_to_json_string(cfg);
    const ExperimentConfig back = config_from_json_string(text);
    CHECK(config_to_json_string(back) == text);
    CHECK(back.generator.nodes == 6);
    CHECK(back.generator.seed == 99);
    CHECK(back.regimes.size() == 2);
    CHECK_FALSE(back.auto_alpha);
    CHECK(back.algo.alpha == 0.0125);

    CHECK_THROWS_AS(config_from_json_string("{not json"), ConfigError);
    CHECK_THROWS_AS(config_from_json_string(R"({"algo": {"alpha": "fast"}})"), ConfigError);
    ExperimentConfig bad;
    bad.stride_eig = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = {};
    bad.data_in = DataInput{"y", "x.csv", std::nullopt};
    CHECK_THROWS_AS(bad.validate(), ConfigError);  // auto alpha needs the generator
  }

  TEST_CASE("artifact set and report layout") {
    const fs::path out = scratch("layout");
    ExperimentConfig cfg = small_config(out);
    cfg.emit_svg = true;
    std::ostringstream log;
    REQUIRE(run_experiment(cfg, log) == kExitOk);
    for (const char* f : {"ground_truth.csv", "estimates.csv", "comparators.csv", "traces.csv", "report.json",
                          "metadata.json", "checkpoint.json", "mse.svg", "regret.svg", "observations/X.csv",
                          "observations/Y_000040.csv"})
      CHECK_MESSAGE(fs::exists(out / f), f);
    CHECK_FALSE(fs::exists(out.parent_path() / ("." + out.filename().string() + ".partial")));

    const json report = json::parse(slurp(out / "report.json"));
    for (const char* k : {"constants", "D_h", "per_node", "totals", "assumptions_ok"}) CHECK_MESSAGE(report.contains(k), k);
    CHECK(report["per_node"].size() == 10);

    const json meta = json::parse(slurp(out / "metadata.json"));
    CHECK(meta["seed"] == 1);
    CHECK(meta["prng"]["algorithm"] == "mt19937_64+splitmix64-substreams+box-muller");
    CHECK(meta["artifacts"].contains("estimates.csv"));

    CHECK(slurp(out / "traces.csv").rfind("t,regret_cumulative,bound_cumulative,mse\n", 0) == 0);
    CHECK(slurp(out / "comparators.csv").rfind("t,i,coordinate,value,converged,iterations\n", 0) == 0);
  }

  TEST_CASE("two regimes give two labelled MSE series") {
    const fs::path out = scratch("both");
    ExperimentConfig cfg = small_config(out);
    cfg.regimes = {Regime::Smooth, Regime::Abrupt};
    cfg.emit_svg = true;
    std::ostringstream log;
    REQUIRE(run_experiment(cfg, log) == kExitOk);
    CHECK(fs::exists(out / "smooth" / "report.json"));
    CHECK(fs::exists(out / "abrupt" / "report.json"));
    const std::string svg = slurp(out / "mse.svg");
    CHECK(svg.find("data-label=\"smooth\"") != std::string::npos);
    CHECK(svg.find("data-label=\"abrupt\"") != std::string::npos);
  }

  TEST_CASE("regret stays below the bound on a valid run") {
    ExperimentConfig cfg;
    cfg.generator.contagions = 12;
    cfg.generator.horizon = 60;
    const RunResult r = execute(cfg, Regime::Smooth, 3);
    REQUIRE(r.report.bound_post_burn.has_value());
    const auto& b = *r.report.bound_post_burn;
    for (std::size_t i = 0; i < r.report.nodes.size(); ++i)
      CHECK(r.report.nodes[i].regret_post_burn <= b.per_node[i] * (1.0 + 1e-6));
  }

  TEST_CASE("repeat writes a seed-averaged summary") {
    const fs::path out = scratch("repeat");
    ExperimentConfig cfg = small_config(out);
    cfg.generator.horizon = 15;
    cfg.repeat = 3;
    std::ostringstream log;
    REQUIRE(run_experiment(cfg, log) == kExitOk);
    const std::string s = slurp(out / "summary.csv");
    CHECK(s.rfind("t,mse_mean,regret_mean\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == 16);
  }

  TEST_CASE("refuses to replace a directory it did not create") {
    const fs::path out = scratch("foreign");
    fs::create_directories(out);
    std::ofstream(out / "precious.txt") << "keep";
    ExperimentConfig cfg = small_config(out);
    cfg.generator.horizon = 5;
    std::ostringstream log;
    CHECK(run_experiment(cfg, log) == kExitIoError);
    CHECK(fs::exists(out / "precious.txt"));
  }

  TEST_CASE("exploding step size exits 3 without partial output") {
    const fs::path out = scratch("nonfinite");
    ExperimentConfig cfg = small_config(out);
    cfg.auto_alpha = false;
    cfg.algo.alpha = 1e8;
    std::ostringstream log;
    CHECK(run_experiment(cfg, log) == kExitNonFinite);
    CHECK_FALSE(fs::exists(out));
    CHECK_FALSE(fs::exists(out.parent_path() / ("." + out.filename().string() + ".partial")));
  }

  TEST_CASE("command line exit codes") {
    const fs::path out = scratch("cli");
    CHECK(cli("run --t 10 --out " + out.string()) == 0);
    CHECK(fs::exists(out / "report.json"));
    CHECK(cli("run --t 10 --out " + out.string()) == 0);  // replaces its own output
    CHECK(cli("run --gamma 1.5 --out " + out.string()) == 2);
    CHECK(cli("run --alpha fast --out " + out.string()) == 2);
    CHECK(cli("run --regime wavy --out " + out.string()) == 2);
    CHECK(cli("run --no-such-flag") == 2);
    CHECK(cli("run --data-y " + out.string() + "/observations --data-x " + out.string() +
              "/observations/X.csv --out " + out.string() + "_x") == 2);  // auto alpha with data input
    CHECK(cli("run --t 40 --alpha 1e12 --out " + out.string() + "_nf") == 3);
    CHECK(cli("run --data-y /nonexistent --data-x /nonexistent/X.csv --alpha 0.01 --out " + out.string() + "_io") == 4);
    CHECK(cli("generate --t 8 --out " + out.string() + "_gen") == 0);
    CHECK(fs::exists(out.string() + "_gen/observations/Y_000008.csv"));

    const fs::path cfg = fs::temp_directory_path() / "semtrack_exp_cfg.json";
    std::ofstream(cfg) << R"({"generator": {"horizon": 12, "nodes": 5}, "algo": {"lambda": 2.0}})";
    CHECK(cli("run --config " + cfg.string() + " --out " + out.string() + "_cfg") == 0);
    const json meta = json::parse(slurp(out.string() + "_cfg/metadata.json"));
    CHECK(meta["config"]["generator"]["nodes"] == 5);
    CHECK(meta["config"]["algo"]["lambda"] == 2.0);
  }

  TEST_CASE("identical runs are byte-identical and ingest reproduces estimates") {
    const fs::path a = scratch("det_a"), b = scratch("det_b"), c = scratch("det_c");
    std::ostringstream log;
    REQUIRE(run_experiment(small_config(a), log) == kExitOk);
    REQUIRE(run_experiment(small_config(b), log) == kExitOk);
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
      if (!entry.is_regular_file()) continue;
      const fs::path rel = fs::relative(entry.path(), a);
      CHECK_MESSAGE(slurp(entry.path()) == slurp(b / rel), rel.string());
    }
    const json meta = json::parse(slurp(a / "metadata.json"));
    ExperimentConfig replay = small_config(c);
    replay.auto_alpha = false;
    replay.algo.alpha = meta["alpha"]["smooth"].get<double>();
    replay.data_in = DataInput{a / "observations", a / "observations" / "X.csv", a / "ground_truth.csv"};
    REQUIRE(run_experiment(replay, log) == kExitOk);
    for (const char* f : {"estimates.csv", "comparators.csv", "traces.csv"})
      CHECK_MESSAGE(slurp(a / f) == slurp(c / f), f);
  }
}
