#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "tempo/checkpoint.hpp"
#include "tempo/config.hpp"
#include "tempo/es.hpp"
#include "tempo/gridworld.hpp"

namespace tempo::exp {

// Stable hex id derived from the normalized config, ignoring out_dir/workers.
std::string experiment_id(const cfg::ExperimentConfig& config);

// The manifest is itself a valid config file; re-running it reproduces every
// CSV and checkpoint byte-for-byte.
void write_manifest(const cfg::ExperimentConfig& config, const std::filesystem::path& out_dir);

env::GridWorldSpec resolve_env_spec(const cfg::ExperimentConfig& config, std::uint64_t task_seed);

// Fitness of one candidate parameter vector on one sampled task: train a full
// lifetime, return the normalized final return (floored on divergence).
es::FitnessFn make_fitness(const cfg::ExperimentConfig& config);

void run_meta_train(const cfg::ExperimentConfig& config, std::ostream& log);
void run_meta_test(const cfg::ExperimentConfig& config, const std::string& checkpoint_path,
                   std::ostream& log);
void run_analyze(const cfg::ExperimentConfig& config, const std::string& checkpoint_path,
                 std::ostream& log);

}  // namespace tempo::exp
