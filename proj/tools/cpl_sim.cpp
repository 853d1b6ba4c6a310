// Command-line driver: run, sweep and validate scenario files.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "cpl/cli/results.hpp"
#include "cpl/cli/runner.hpp"
#include "cpl/cli/scenario.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::string out;
  std::string mode;
  std::size_t threads = 0;
};

std::uint64_t resolve_seed(const Options& opt, const cpl::cli::ScenarioConfig& cfg) {
  if (opt.seed) return *opt.seed;
  if (const char* env = std::getenv("CPL_SEED")) {
    char* end = nullptr;
    const auto v = std::strtoull(env, &end, 10);
    if (*env == '\0' || *end != '\0') throw cpl::cli::ConfigError("CPL_SEED must be an unsigned integer");
    return v;
  }
  return cfg.seed.value_or(0);
}

cpl::cli::ScenarioConfig load(const Options& opt) {
  auto cfg = cpl::cli::load_scenario(opt.config);
  if (opt.trials) cfg.trials = *opt.trials;
  if (!opt.mode.empty()) cfg.mode = *cpl::cli::parse_mode(opt.mode);
  return cfg;
}

int execute(const Options& opt, bool sweep) {
  cpl::cli::ScenarioConfig cfg;
  std::uint64_t seed = 0;
  try {
    cfg = load(opt);
    if (sweep && cfg.sweep_axis == cpl::cli::SweepAxis::None)
      throw cpl::cli::ConfigError("sweep needs sweep.axis and sweep.values in the scenario");
    if (!sweep) {
      cfg.sweep_axis = cpl::cli::SweepAxis::None;
      cfg.sweep_values.clear();
    }
    seed = resolve_seed(opt, cfg);
    cpl::cli::validate(cfg);
  } catch (const std::exception& e) {
    std::cerr << "invalid scenario: " << e.what() << "\n";
    return kExitValidation;
  }
  try {
    const auto rows = cpl::cli::run_all(cfg, seed, opt.threads);
    if (!opt.out.empty()) cpl::cli::emit_csv(rows, opt.out);
    std::cout << "seed " << seed << ", " << rows.size() << " runs\n\n" << cpl::cli::emit_summary(rows);
    if (sweep) {
      const auto axis = cpl::cli::to_string(cfg.sweep_axis);
      std::cout << "\n" << cpl::cli::emit_ratio_table(cpl::cli::sweep_ratios(rows, axis), axis);
    }
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}

int validate_only(const Options& opt) {
  try {
    const auto cfg = load(opt);
    cpl::cli::validate(cfg);
    std::cout << opt.config << ": ok (" << cpl::cli::run_points(cfg).size() << " run points, " << cfg.trials
              << " trials each)\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "invalid scenario: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collaborative PAC learning simulator"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", opt.config, "scenario file (YAML)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", opt.seed, "master seed; defaults to $CPL_SEED, then the scenario's seed");
    sub->add_option("--trials", opt.trials, "trials per run point")->check(CLI::PositiveNumber);
    sub->add_option("--out", opt.out, "CSV output path");
    sub->add_option("--mode", opt.mode, "constant preset")->check(CLI::IsMember({"paper-faithful", "desk"}));
    sub->add_option("--threads", opt.threads, "worker threads (0: all cores)");
  };
  auto* run = app.add_subcommand("run", "one batch of seeded runs at the scenario's base point");
  auto* sweep = app.add_subcommand("sweep", "runs every value of the scenario's sweep axis");
  auto* check = app.add_subcommand("validate", "checks a scenario without running it");
  add_common(run);
  add_common(sweep);
  add_common(check);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitValidation;
  }
  if (*run) return execute(opt, false);
  if (*sweep) return execute(opt, true);
  return validate_only(opt);
}
