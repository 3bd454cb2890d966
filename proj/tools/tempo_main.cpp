#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tempo/config.hpp"
#include "tempo/error.hpp"
#include "tempo/experiment.hpp"

namespace {

// exit codes: 0 success, 1 usage, 2 config, 3 runtime
constexpr int kUsageExit = 1;
constexpr int kConfigExit = 2;
constexpr int kRuntimeExit = 3;

tempo::cfg::ExperimentConfig load_config(const std::string& config_path, const std::string& out_dir,
                                         int workers) {
  tempo::cfg::ExperimentConfig config =
      config_path.empty() ? tempo::cfg::ExperimentConfig{}
                          : tempo::cfg::parse_config_file(config_path);
  // precedence: flags > environment > config file
  if (const char* env_out = std::getenv("TEMPO_OUT_DIR"); env_out && *env_out)
    config.out_dir = env_out;
  if (const char* env_workers = std::getenv("TEMPO_WORKERS"); env_workers && *env_workers)
    config.workers = std::max(1, std::atoi(env_workers));
  if (!out_dir.empty()) config.out_dir = out_dir;
  if (workers > 0) config.workers = workers;
  config.validate();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tempo: meta-learning of temporally-aware RL objectives on grid-worlds"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::string config_path, checkpoint_path, out_dir;
  int workers = 0;
  app.add_option("--config", config_path, "experiment config file (key = value lines)");
  app.add_option("--checkpoint", checkpoint_path, "objective checkpoint file");
  app.add_option("--out", out_dir, "output directory override");
  app.add_option("--workers", workers, "worker thread override");

  auto* meta_train = app.add_subcommand("meta-train", "evolve objective parameters");
  auto* meta_test = app.add_subcommand("meta-test", "train lifetimes across horizons and seeds");
  auto* analyze = app.add_subcommand("analyze", "export drift derivative grids and heatmaps");
  auto* dump = app.add_subcommand("dump-config", "print the normalized config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "tempo: error: usage: " << e.what() << "\n";
    return kUsageExit;
  }

  try {
    const tempo::cfg::ExperimentConfig config = load_config(config_path, out_dir, workers);
    if (meta_train->parsed()) {
      tempo::exp::run_meta_train(config, std::cout);
    } else if (meta_test->parsed()) {
      if (checkpoint_path.empty() &&
          config.objective != tempo::objective::ObjectiveKind::PpoRef)
        throw tempo::UsageError("meta-test requires --checkpoint for learned objectives");
      tempo::exp::run_meta_test(config, checkpoint_path, std::cout);
    } else if (analyze->parsed()) {
      if (checkpoint_path.empty() &&
          config.objective != tempo::objective::ObjectiveKind::PpoRef)
        throw tempo::UsageError("analyze requires --checkpoint for learned objectives");
      tempo::exp::run_analyze(config, checkpoint_path, std::cout);
    } else if (dump->parsed()) {
      std::cout << tempo::cfg::dump_config(config);
    }
  } catch (const tempo::UsageError& e) {
    std::cerr << "tempo: error: usage: " << e.what() << "\n";
    return kUsageExit;
  } catch (const tempo::ConfigError& e) {
    std::cerr << "tempo: error: config: " << e.what() << "\n";
    return kConfigExit;
  } catch (const std::exception& e) {
    std::cerr << "tempo: error: runtime: " << e.what() << "\n";
    return kRuntimeExit;
  }
  return 0;
}
