#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tempo/rng.hpp"

namespace tempo::env {

inline constexpr int kNumActions = 5;  // up, down, left, right, stay

struct GridObject {
  int cell = 0;
  double reward = 0.0;
  bool terminal = false;
  double respawn_prob = 0.0;  // per-step respawn chance once collected (non-terminal only)
};

struct GridWorldSpec {
  int width = 0;
  int height = 0;
  std::vector<GridObject> objects;
  int episode_limit = 0;
  double discount = 0.99;
  std::vector<double> start_distribution;  // over cells, sums to 1

  int num_cells() const { return width * height; }
  int observation_dim() const { return num_cells() + static_cast<int>(objects.size()); }
  void validate() const;

  // key-value text block used by reproducibility manifests
  std::string to_text() const;
  static GridWorldSpec from_text(const std::string& text);
};

// One recorded environment interaction. The cell indices describe the tabular
// state; obs/next_obs carry the function-approximation view (one-hot cell plus
// object presence flags) captured at collection time.
struct Transition {
  int state = 0;
  int action = 0;
  double reward = 0.0;
  bool done = false;
  int next_state = 0;
  double action_prob = 1.0;    // pi_old(a|s), always positive
  double lifetime_frac = 0.0;  // n/N stamped at collection
  std::vector<double> obs, next_obs;
};

// Full Markov state: agent cell, object presence mask, steps into the episode.
struct GridState {
  int cell = 0;
  std::uint32_t present = 0;
  int step = 0;
};

struct StepResult {
  GridState next;
  double reward = 0.0;
  bool done = false;
};

GridState reset_state(const GridWorldSpec& spec, Rng& rng);

// One transition: absent non-terminal objects respawn first, then the agent
// moves (walls block), then any object on the reached cell is collected.
StepResult env_step(const GridWorldSpec& spec, const GridState& state, int action, Rng& rng);

// one-hot cell index followed by object presence flags
void encode_observation(const GridWorldSpec& spec, const GridState& state, std::span<double> out);

struct GridDistConfig {
  int min_width = 5, max_width = 9;
  int min_height = 5, max_height = 9;
  int min_objects = 1, max_objects = 4;
  double min_reward = -1.0, max_reward = 1.0;
  double min_respawn = 0.05, max_respawn = 0.3;
  double terminal_prob = 0.5;
  int min_episode_limit = 16, max_episode_limit = 64;
  double discount = 0.99;
  void validate() const;
};

GridWorldSpec sample_gridworld(const GridDistConfig& cfg, std::uint64_t seed);

// Named held-out tasks plus the small fixed benchmark used by exact oracles.
GridWorldSpec dense_spec();
GridWorldSpec sparse_spec();
GridWorldSpec benchmark_3x3_spec();

inline constexpr std::size_t kDefaultOracleStateCap = 2'000'000;

// Optimal expected discounted return from the start distribution, computed by
// value iteration over the (cell, presence mask, episode step) state space.
// Returns are discounted from the first step: a reward collected on step k
// (1-based) contributes gamma^k.
double optimal_return_oracle(const GridWorldSpec& spec,
                             std::size_t state_cap = kDefaultOracleStateCap);

double normalize_return(double raw, double oracle_value);
double normalize_return(double raw, const GridWorldSpec& spec);

// Convenience wrapper owning episode state and rng-driven resets.
class GridWorld {
 public:
  GridWorld(const GridWorldSpec& spec, Rng rng);
  const GridWorldSpec& spec() const { return spec_; }
  const GridState& state() const { return state_; }
  void reset();
  // steps the environment; automatically resets when the episode ends
  StepResult step(int action);

 private:
  GridWorldSpec spec_;
  Rng rng_;
  GridState state_;
};

}  // namespace tempo::env
