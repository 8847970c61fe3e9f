#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "starklab/integrator.hpp"
#include "starklab/potentials.hpp"
#include "starklab/randomized.hpp"

namespace starklab {

inline constexpr const char* kVersion = "0.3.0";

enum class Subcommand { solve, wkb_compare, ensemble, diagnose_smoothness };

std::string to_string(Subcommand s);
/// Throws std::invalid_argument for unknown names.
Subcommand parse_subcommand(const std::string& name);

struct SolveOptions {
  std::string form = "prufer";  // prufer | direct
  double xi_min = 1.0;
  double xi_max = 1000.0;
  double beta = 0.0;
  /// Direct form: x range and initial (u, u').
  double x_min = 1.0;
  double x_max = 100.0;
  double u0 = 0.0;
  double du0 = 1.0;
  bool binary = false;
  /// Growth fit over the captured trajectory (needs enough range).
  bool growth = false;
};

struct WkbOptions {
  std::pair<double, double> fit_window{1e3, 2e3};
  std::pair<double, double> test_window{1e4, 2e4};
  double beta = 0.0;
  std::string split = "auto";  // auto | analytic | mollified
};

struct EnsembleOptions {
  std::string mode = "chain";  // chain | block
  long block = 20;             // block mode only
  double kappa = kDerivedKappa;
};

struct RunConfig {
  Subcommand subcommand = Subcommand::solve;
  PotentialSpec potential = ZeroPotential{};
  std::vector<double> energies{0.0};
  IntegrationConfig integration;
  EnsembleConfig ensemble;
  EnsembleOptions ensemble_options;
  SolveOptions solve;
  WkbOptions wkb;
  SmoothnessOptions smoothness;
  std::filesystem::path output = "starklab_out";
  std::uint64_t seed = 0;
  int jobs = 0;
  std::string text;  // verbatim config

  long task_count() const;
};

/// Strict YAML parse: unknown keys, missing required keys and invalid values
/// raise ConfigError carrying the field path and line.
RunConfig parse_config(const std::string& text);
/// Relative table paths resolve against `base`. A seed override replaces the
/// config's master seed before seed-dependent defaults are filled in.
RunConfig parse_config_text(const std::string& text, const std::filesystem::path& base,
                            std::optional<std::uint64_t> seed_override = std::nullopt);
RunConfig parse_config_file(const std::filesystem::path& path,
                            std::optional<std::uint64_t> seed_override = std::nullopt);

struct TaskStatus {
  std::string name;
  bool ok = true;
  std::string message;
};

struct FileRecord {
  std::string path;  // relative to the output directory
  std::uintmax_t bytes = 0;
  std::string sha256;
};

struct RunManifest {
  std::string config;
  std::string version = kVersion;
  std::string started;
  std::string finished;
  std::uint64_t seed = 0;
  int jobs = 0;
  std::vector<TaskStatus> tasks;
  std::vector<FileRecord> files;

  bool ok() const;
};

/// Runs the subcommand, writes its outputs and manifest.json into
/// cfg.output. The directory must be empty, absent, or hold a previous
/// manifest (whose files are removed first).
RunManifest execute(const RunConfig& cfg);

std::string sha256_file(const std::filesystem::path& path);

}  // namespace starklab
