#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "starklab/cli_io.hpp"
#include "starklab/errors.hpp"

using namespace starklab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("starklab_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

ConfigError config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e;
  }
  FAIL("no ConfigError for:\n" << text);
  return ConfigError("", 0, "");
}

const char* kSolve = R"(subcommand: solve
energies: [0, 1.5]
potential:
  type: power_decay
  amplitude: 1
  exponent: 0.3
solve:
  xi_max: 60
)";

}  // namespace

TEST_CASE("minimal configs parse") {
  const auto cfg = parse_config("subcommand: solve\n");
  CHECK(cfg.subcommand == Subcommand::solve);
  CHECK(std::holds_alternative<ZeroPotential>(cfg.potential));
  CHECK(cfg.task_count() == 1);
  const auto s = parse_config(kSolve);
  CHECK(std::get<PowerDecay>(s.potential).exponent == 0.3);
  CHECK(s.energies.size() == 2);
  CHECK(s.solve.xi_max == 60.0);
}

TEST_CASE("config errors name the field") {
  const auto e = config_error("subcommand: solve\npotential:\n  type: power_decay\n  exponent: -1\n");
  CHECK(e.field() == "potential.exponent");
  CHECK(e.line() == 4);
  const auto typo = config_error("subcommand: solve\nsolve:\n  xi_mxa: 10\n");
  CHECK(typo.field() == "solve.xi_mxa");
  CHECK(std::string(typo.what()).find("unknown key") != std::string::npos);
  CHECK(config_error("subcommand: integrate\n").field() == "subcommand");
  CHECK(config_error("subcommand: wkb-compare\n").field() == "potential");
  CHECK(config_error("subcommand: ensemble\npotential: {type: zero}\n").field() == "potential.type");
  CHECK(config_error("subcommand: solve\nenergies: [1, x]\n").field() == "energies");
  CHECK(config_error("subcommand: ensemble\npotential: {type: random_bump}\nensemble: {realizations: 7}\n")
            .field()
            .rfind("ensemble", 0) == 0);
  CHECK(config_error("subcommand: solve\nsolve: {xi_min: 0.5}\n").field() == "solve.xi_min");
}

TEST_CASE("task counts and energy ranges") {
  const auto cfg = parse_config(R"(subcommand: ensemble
seed: 11
potential: {type: random_bump}
energy_range: {start: -1, stop: 1, count: 5}
ensemble: {realizations: 200}
)");
  CHECK(cfg.task_count() == 1000);
  REQUIRE(cfg.energies.size() == 5);
  CHECK(cfg.energies[0] == -1.0);
  CHECK(cfg.energies[2] == doctest::Approx(0.0).scale(1.0));
  CHECK(cfg.energies[4] == 1.0);
  CHECK(cfg.ensemble.master_seed == 11);
  const auto over = parse_config_text("subcommand: ensemble\nseed: 11\npotential: {type: random_bump}\n", ".", 5);
  CHECK(over.seed == 5);
  CHECK(over.ensemble.master_seed == 5);
}

TEST_CASE("solve run writes outputs and a consistent manifest") {
  auto cfg = parse_config(kSolve);
  cfg.output = scratch("solve");
  const auto m = execute(cfg);
  CHECK(m.ok());
  CHECK(m.tasks.size() == 2);
  const auto mj = read_json(cfg.output / "manifest.json");
  CHECK(mj["ok"] == true);
  std::set<std::string> listed;
  for (const auto& f : mj["files"]) {
    const auto p = cfg.output / f["path"].get<std::string>();
    REQUIRE(fs::exists(p));
    CHECK(fs::file_size(p) == f["bytes"].get<std::uintmax_t>());
    CHECK(sha256_file(p) == f["sha256"].get<std::string>());
    listed.insert(f["path"].get<std::string>());
  }
  CHECK(listed.count("trajectory_E0.csv"));
  CHECK(listed.count("summary.json"));
  for (const auto& e : fs::directory_iterator(cfg.output)) {
    const auto name = e.path().filename().string();
    if (name != "manifest.json") CHECK_MESSAGE(listed.count(name), "orphan " << name);
  }
  const auto header = slurp(cfg.output / "trajectory_E0.csv").substr(0, 40);
  CHECK(header.rfind("xi,", 0) == 0);
}

TEST_CASE("sha256 of a known string") {
  const auto p = scratch("sha.txt");
  std::ofstream(p) << "abc";
  CHECK(sha256_file(p) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  fs::remove(p);
}

TEST_CASE("repeat runs are byte identical and independent of jobs") {
  auto cfg = parse_config(R"(subcommand: ensemble
seed: 3
potential: {type: random_bump}
energies: [0, 0.5]
ensemble: {realizations: 4, n_min: 5, n_max: 14, bootstrap: 50}
)");
  cfg.output = scratch("ens_a");
  cfg.jobs = cfg.ensemble.jobs = 1;
  const auto a = execute(cfg);
  CHECK(a.ok());
  const auto first = slurp(cfg.output / "summary.json");
  const auto inc = slurp(cfg.output / "increments_E0.csv");
  execute(cfg);  // rerun into the same directory
  CHECK(slurp(cfg.output / "summary.json") == first);
  auto cfg2 = cfg;
  cfg2.output = scratch("ens_b");
  cfg2.jobs = cfg2.ensemble.jobs = 4;
  const auto b = execute(cfg2);
  CHECK(slurp(cfg2.output / "summary.json") == first);
  CHECK(slurp(cfg2.output / "increments_E0.csv") == inc);
  REQUIRE(a.files.size() == b.files.size());
  for (std::size_t i = 0; i < a.files.size(); ++i) CHECK(a.files[i].sha256 == b.files[i].sha256);

  const auto s = json::parse(first);
  REQUIRE(s["energies"].size() == 2);
  for (const auto& r : s["energies"]) {
    CHECK(r.contains("lambda_hat"));
    CHECK(r.contains("stderr"));
    CHECK(r.contains("lambda_theory"));
  }
}

TEST_CASE("output directory with foreign files is refused") {
  auto cfg = parse_config("subcommand: solve\nsolve: {xi_max: 5}\n");
  cfg.output = scratch("foreign");
  fs::create_directories(cfg.output);
  std::ofstream(cfg.output / "notes.txt") << "keep";
  CHECK_THROWS(execute(cfg));
  CHECK(fs::exists(cfg.output / "notes.txt"));
}

TEST_CASE("failed tasks are recorded") {
  auto cfg = parse_config(R"(subcommand: solve
energies: [0]
potential: {type: power_decay, amplitude: 50, exponent: 0.3}
integration: {rtol: 1.0e-13, atol: 1.0e-15, min_step: 0.15, max_step: 0.2}
)");
  cfg.output = scratch("fail");
  const auto m = execute(cfg);
  CHECK_FALSE(m.ok());
  REQUIRE(m.tasks.size() == 1);
  CHECK(m.tasks[0].message.find("step size") != std::string::npos);
  CHECK(read_json(cfg.output / "manifest.json")["ok"] == false);
}

TEST_CASE("wkb and smoothness runs") {
  auto cfg = parse_config(R"(subcommand: wkb-compare
energies: [1]
potential: {type: power_decay, amplitude: 1, exponent: 0.3}
wkb: {fit_window: [100, 200], test_window: [300, 400]}
)");
  cfg.output = scratch("wkb");
  CHECK(execute(cfg).ok());
  const auto s = read_json(cfg.output / "summary.json");
  CHECK(s["results"][0]["residual"].get<double>() < 0.05);

  auto sm = parse_config(R"(subcommand: diagnose-smoothness
potential: {type: power_decay}
smoothness: {alpha: 0.5, x_max: 5, eps_points: 20}
)");
  sm.output = scratch("smooth");
  CHECK(execute(sm).ok());
  CHECK(fs::exists(sm.output / "holder.csv"));
}
