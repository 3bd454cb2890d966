#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tempo/es.hpp"
#include "tempo/inner_loop.hpp"
#include "tempo/objective.hpp"

namespace tempo::cfg {

struct ExperimentConfig {
  objective::ObjectiveKind objective = objective::ObjectiveKind::TaLpo;
  std::string env = "dense";  // griddist | dense | sparse | fixed:<spec-file>
  std::vector<std::uint64_t> seeds = {1};
  std::vector<long long> horizons = {20000};
  std::string out_dir = "runs/default";
  int workers = 1;
  int checkpoint_every = 0;  // generations between checkpoints; 0 = final only
  bool share_init_seed = true;

  es::EsConfig es;
  train::TrainConfig train;
  objective::LpgConfig lpg;
  int drift_hidden = 128;
  double clip_eps = 0.2;

  void validate() const;
};

// Defaults depend on the objective family (drift-style vs lpg-style).
ExperimentConfig defaults_for(objective::ObjectiveKind kind);

// `key = value` lines, '#' comments, hard error on unknown keys; unset keys
// fall back to the objective's defaults.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// Normalized form: every key explicit, fixed order, shortest-round-trip
// number formatting. parse(dump(c)) == c and dump(parse(dump(c))) is
// byte-identical to dump(c).
std::string dump_config(const ExperimentConfig& config);

std::string format_number(double v);
std::string format_bool(bool v);

}  // namespace tempo::cfg
