// Command-line front end: jpose <experiment> --config FILE [--seed S] [--out DIR] [--jobs K]
//
// Exit status: 0 success, 2 usage or configuration error, 1 runtime failure.

#include <cstdint>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "experiments/config.hpp"
#include "experiments/experiments.hpp"
#include "jpose/errors.hpp"

namespace {

constexpr int kUsageError = 2;
constexpr int kRuntimeError = 1;

}  // namespace

int main(int argc, char** argv) {
  using namespace jpose::cli;

  CLI::App app{"Uncertain-pose experiments"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> jobs;

  for (Experiment e : {Experiment::kComposeSweep, Experiment::kRelposeAlphaSweep, Experiment::kSlamRelpose,
                       Experiment::kConvertDemo, Experiment::kSolveGraph}) {
    CLI::App* sub = app.add_subcommand(experiment_name(e));
    sub->add_option("--config", config_path, "JSON config file (built-in defaults when omitted)");
    sub->add_option("--seed", seed, "random seed (overrides the config)");
    sub->add_option("--out", out, "output directory (overrides the config)");
    sub->add_option("--jobs", jobs, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  const Experiment experiment = *parse_experiment(app.get_subcommands().front()->get_name());
  try {
    Config cfg = config_path.empty() ? parse_config(experiment, "{}", ".") : load_config(experiment, config_path);
    if (seed) cfg.run.seed = *seed;
    if (out) cfg.run.output_dir = *out;
    if (jobs) cfg.run.jobs = *jobs;
    run_and_write(cfg);
  } catch (const ConfigError& e) {
    fmt::print(stderr, "jpose: configuration error: {}\n", e.what());
    return kUsageError;
  } catch (const jpose::InvalidSpec& e) {
    fmt::print(stderr, "jpose: configuration error: {}\n", e.what());
    return kUsageError;
  } catch (const std::exception& e) {
    fmt::print(stderr, "jpose: error: {}\n", e.what());
    return kRuntimeError;
  }
  return 0;
}
