#include <cstdlib>
#include <iostream>
#include <utility>

#include "CLI11.hpp"
#include "starklab/cli_io.hpp"
#include "starklab/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Stark operator numerics: Pruefer/WKB solvers and random-bump ensembles"};
  app.set_version_flag("--version", std::string(starklab::kVersion));
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  int jobs = 0;
  const std::pair<const char*, const char*> subs[] = {
      {"solve", "Integrate one solution per energy (Pruefer or direct form)"},
      {"wkb-compare", "Two-window residual of the numerical solution against WKB"},
      {"ensemble", "Random-bump Monte Carlo: block increments or chain slopes"},
      {"diagnose-smoothness", "Hoelder, Zygmund and Dini diagnostics of q"},
  };
  for (const auto& [name, help] : subs) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "YAML configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "Output directory (overrides STARKLAB_OUT and the config)");
    sub->add_option("--seed", seed, "Master seed (overrides the config)");
    sub->add_option("--jobs", jobs, "Worker threads, 0 = all cores");
  }
  CLI11_PARSE(app, argc, argv);
  const CLI::App* sub = app.get_subcommands().front();

  try {
    auto cfg = starklab::parse_config_file(
        config, sub->count("--seed") ? std::optional<std::uint64_t>(seed) : std::nullopt);
    if (starklab::to_string(cfg.subcommand) != sub->get_name()) {
      std::cerr << "config subcommand '" << starklab::to_string(cfg.subcommand) << "' does not match '"
                << sub->get_name() << "'\n";
      return 2;
    }
    if (sub->count("--jobs")) {
      cfg.jobs = jobs;
      cfg.ensemble.jobs = jobs;
      cfg.smoothness.jobs = jobs;
    }
    if (const char* env = std::getenv("STARKLAB_OUT"); env && *env) cfg.output = env;
    if (sub->count("--out")) cfg.output = out;

    const auto man = starklab::execute(cfg);
    for (const auto& t : man.tasks)
      if (!t.ok) std::cerr << "task failed: " << t.name << ": " << t.message << "\n";
    std::cout << cfg.output.string() << "/manifest.json\n";
    return man.ok() ? 0 : 1;
  } catch (const starklab::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
