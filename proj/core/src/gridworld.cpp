#include "tempo/gridworld.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <utility>

#include "tempo/error.hpp"
#include "tempo/vec.hpp"

namespace tempo::env {

namespace {

constexpr int kMaxOracleObjects = 20;  // presence mask fits easily in 32 bits

int move_cell(const GridWorldSpec& spec, int cell, int action) {
  int x = cell % spec.width;
  int y = cell / spec.width;
  switch (action) {
    case 0: y -= 1; break;  // up
    case 1: y += 1; break;  // down
    case 2: x -= 1; break;  // left
    case 3: x += 1; break;  // right
    case 4: break;          // stay
    default: throw UsageError("env_step: invalid action index");
  }
  if (x < 0 || x >= spec.width || y < 0 || y >= spec.height) return cell;  // wall
  return y * spec.width + x;
}

std::string format_real(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

}  // namespace

void GridWorldSpec::validate() const {
  if (width <= 0 || height <= 0) throw ConfigError("GridWorldSpec: non-positive grid size");
  if (episode_limit <= 0) throw ConfigError("GridWorldSpec: episode_limit must be positive");
  if (!(discount > 0.0 && discount < 1.0)) throw ConfigError("GridWorldSpec: discount must be in (0,1)");
  if (objects.size() > kMaxOracleObjects) throw ConfigError("GridWorldSpec: too many objects");
  std::vector<bool> used(num_cells(), false);
  for (const auto& o : objects) {
    if (o.cell < 0 || o.cell >= num_cells()) throw ConfigError("GridWorldSpec: object cell out of bounds");
    if (used[o.cell]) throw ConfigError("GridWorldSpec: duplicate object cell");
    used[o.cell] = true;
    if (o.respawn_prob < 0.0 || o.respawn_prob > 1.0)
      throw ConfigError("GridWorldSpec: respawn_prob outside [0,1]");
    if (!std::isfinite(o.reward)) throw ConfigError("GridWorldSpec: non-finite reward");
  }
  if (start_distribution.size() != static_cast<std::size_t>(num_cells()))
    throw ConfigError("GridWorldSpec: start distribution length mismatch");
  double sum = 0.0;
  for (double p : start_distribution) {
    if (p < 0.0) throw ConfigError("GridWorldSpec: negative start probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("GridWorldSpec: start distribution must sum to 1");
}

std::string GridWorldSpec::to_text() const {
  std::ostringstream os;
  os << "width " << width << "\n";
  os << "height " << height << "\n";
  os << "episode_limit " << episode_limit << "\n";
  os << "discount " << format_real(discount) << "\n";
  os << "objects " << objects.size() << "\n";
  for (const auto& o : objects) {
    os << "object " << o.cell << " " << format_real(o.reward) << " " << (o.terminal ? 1 : 0) << " "
       << format_real(o.respawn_prob) << "\n";
  }
  os << "start";
  for (double p : start_distribution) os << " " << format_real(p);
  os << "\n";
  return os.str();
}

GridWorldSpec GridWorldSpec::from_text(const std::string& text) {
  GridWorldSpec spec;
  std::istringstream is(text);
  std::string key;
  std::size_t declared_objects = 0;
  while (is >> key) {
    if (key == "width") is >> spec.width;
    else if (key == "height") is >> spec.height;
    else if (key == "episode_limit") is >> spec.episode_limit;
    else if (key == "discount") is >> spec.discount;
    else if (key == "objects") is >> declared_objects;
    else if (key == "object") {
      GridObject o;
      int term = 0;
      is >> o.cell >> o.reward >> term >> o.respawn_prob;
      o.terminal = term != 0;
      spec.objects.push_back(o);
    } else if (key == "start") {
      spec.start_distribution.assign(static_cast<std::size_t>(spec.width) * spec.height, 0.0);
      for (auto& p : spec.start_distribution) is >> p;
    } else {
      throw ConfigError("GridWorldSpec::from_text: unknown key '" + key + "'");
    }
    if (is.fail()) throw ConfigError("GridWorldSpec::from_text: malformed value after '" + key + "'");
  }
  if (spec.objects.size() != declared_objects)
    throw ConfigError("GridWorldSpec::from_text: object count mismatch");
  spec.validate();
  return spec;
}

GridState reset_state(const GridWorldSpec& spec, Rng& rng) {
  GridState s;
  s.present = (1u << spec.objects.size()) - 1u;
  s.step = 0;
  const double u = rng.uniform();
  double acc = 0.0;
  s.cell = spec.num_cells() - 1;
  for (int c = 0; c < spec.num_cells(); ++c) {
    acc += spec.start_distribution[c];
    if (u < acc) {
      s.cell = c;
      break;
    }
  }
  return s;
}

StepResult env_step(const GridWorldSpec& spec, const GridState& state, int action, Rng& rng) {
  if (state.cell < 0 || state.cell >= spec.num_cells()) throw UsageError("env_step: invalid state cell");
  if (action < 0 || action >= kNumActions) throw UsageError("env_step: invalid action index");

  StepResult r;
  std::uint32_t present = state.present;
  // respawn phase: one draw per absent non-terminal object, in index order
  for (std::size_t j = 0; j < spec.objects.size(); ++j) {
    const std::uint32_t bit = 1u << j;
    if ((present & bit) == 0 && !spec.objects[j].terminal) {
      if (rng.bernoulli(spec.objects[j].respawn_prob)) present |= bit;
    }
  }
  const int next_cell = move_cell(spec, state.cell, action);
  double reward = 0.0;
  bool done = false;
  for (std::size_t j = 0; j < spec.objects.size(); ++j) {
    const std::uint32_t bit = 1u << j;
    if (spec.objects[j].cell == next_cell && (present & bit)) {
      reward = spec.objects[j].reward;
      if (spec.objects[j].terminal) {
        done = true;
      } else {
        present &= ~bit;
      }
      break;
    }
  }
  const int next_step = state.step + 1;
  if (next_step >= spec.episode_limit) done = true;
  r.next = GridState{next_cell, present, next_step};
  r.reward = reward;
  r.done = done;
  return r;
}

void encode_observation(const GridWorldSpec& spec, const GridState& state, std::span<double> out) {
  if (out.size() != static_cast<std::size_t>(spec.observation_dim()))
    throw UsageError("encode_observation: output size mismatch");
  fill(out, 0.0);
  out[state.cell] = 1.0;
  for (std::size_t j = 0; j < spec.objects.size(); ++j)
    out[spec.num_cells() + j] = (state.present >> j) & 1u ? 1.0 : 0.0;
}

void GridDistConfig::validate() const {
  if (min_width > max_width || min_height > max_height || min_objects > max_objects ||
      min_episode_limit > max_episode_limit || min_reward > max_reward || min_respawn > max_respawn)
    throw ConfigError("GridDistConfig: empty range");
  if (min_width <= 0 || min_height <= 0 || min_objects < 0 || min_episode_limit <= 0)
    throw ConfigError("GridDistConfig: non-positive bound");
  if (max_objects > 0 && max_reward <= 0.0)
    throw ConfigError("GridDistConfig: max_reward must be positive when objects are sampled");
  if (terminal_prob < 0.0 || terminal_prob > 1.0 || min_respawn < 0.0 || max_respawn > 1.0)
    throw ConfigError("GridDistConfig: probability bound outside [0,1]");
}

GridWorldSpec sample_gridworld(const GridDistConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(derive_seed(seed, 0x6772696477ULL));
  GridWorldSpec spec;
  spec.width = static_cast<int>(rng.uniform_int(cfg.min_width, cfg.max_width));
  spec.height = static_cast<int>(rng.uniform_int(cfg.min_height, cfg.max_height));
  spec.episode_limit = static_cast<int>(rng.uniform_int(cfg.min_episode_limit, cfg.max_episode_limit));
  spec.discount = cfg.discount;
  const int n_obj = static_cast<int>(rng.uniform_int(cfg.min_objects, cfg.max_objects));
  std::vector<int> cells(spec.num_cells());
  std::iota(cells.begin(), cells.end(), 0);
  for (int i = spec.num_cells() - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform_int(0, i));
    std::swap(cells[i], cells[j]);
  }
  for (int k = 0; k < n_obj; ++k) {
    GridObject o;
    o.cell = cells[k];
    if (k == 0) {
      // the distribution always contains at least one positive reward
      o.reward = rng.uniform(0.1, cfg.max_reward);
    } else {
      o.reward = rng.uniform(cfg.min_reward, cfg.max_reward);
    }
    o.terminal = rng.bernoulli(cfg.terminal_prob);
    o.respawn_prob = o.terminal ? 0.0 : rng.uniform(cfg.min_respawn, cfg.max_respawn);
    spec.objects.push_back(o);
  }
  spec.start_distribution.assign(spec.num_cells(), 0.0);
  const int free_cells = spec.num_cells() - n_obj;
  for (int c = 0; c < spec.num_cells(); ++c) {
    bool occupied = false;
    for (const auto& o : spec.objects) occupied |= (o.cell == c);
    if (!occupied) spec.start_distribution[c] = 1.0 / free_cells;
  }
  // exact renormalization so the sum-to-one invariant holds to 1e-9
  double sum = 0.0;
  for (double p : spec.start_distribution) sum += p;
  for (double& p : spec.start_distribution) p /= sum;
  spec.validate();
  return spec;
}

GridWorldSpec dense_spec() {
  GridWorldSpec spec;
  spec.width = 7;
  spec.height = 7;
  spec.episode_limit = 40;
  spec.discount = 0.99;
  spec.objects = {
      {8, 0.3, false, 0.35},    // (1,1)
      {12, 0.25, false, 0.35},  // (5,1)
      {36, 0.25, false, 0.35},  // (1,5)
      {40, 0.3, false, 0.35},   // (5,5)
  };
  spec.start_distribution.assign(spec.num_cells(), 0.0);
  spec.start_distribution[24] = 1.0;  // center
  return spec;
}

GridWorldSpec sparse_spec() {
  GridWorldSpec spec;
  spec.width = 9;
  spec.height = 9;
  spec.episode_limit = 48;
  spec.discount = 0.99;
  spec.objects = {{80, 1.0, true, 0.0}};  // far corner
  spec.start_distribution.assign(spec.num_cells(), 0.0);
  spec.start_distribution[0] = 1.0;
  return spec;
}

GridWorldSpec benchmark_3x3_spec() {
  GridWorldSpec spec;
  spec.width = 3;
  spec.height = 3;
  spec.episode_limit = 6;
  spec.discount = 0.99;
  spec.objects = {{8, 1.0, true, 0.0}};
  spec.start_distribution.assign(9, 0.0);
  spec.start_distribution[0] = 1.0;
  return spec;
}

double optimal_return_oracle(const GridWorldSpec& spec, std::size_t state_cap) {
  spec.validate();
  const int cells = spec.num_cells();
  const int n_obj = static_cast<int>(spec.objects.size());
  const std::uint32_t masks = 1u << n_obj;
  const std::size_t layer = static_cast<std::size_t>(cells) * masks;
  const std::size_t total = layer * static_cast<std::size_t>(spec.episode_limit);
  if (total > state_cap)
    throw InfeasibleError("optimal_return_oracle: augmented state space exceeds cap (" +
                          std::to_string(total) + " > " + std::to_string(state_cap) + ")");

  // respawn outcomes per source mask: list of (mask after respawn, probability)
  std::vector<std::vector<std::pair<std::uint32_t, double>>> respawn(masks);
  for (std::uint32_t m = 0; m < masks; ++m) {
    std::vector<int> absent;
    for (int j = 0; j < n_obj; ++j)
      if (((m >> j) & 1u) == 0 && !spec.objects[j].terminal) absent.push_back(j);
    const std::size_t outcomes = std::size_t{1} << absent.size();
    for (std::size_t s = 0; s < outcomes; ++s) {
      std::uint32_t m2 = m;
      double p = 1.0;
      for (std::size_t a = 0; a < absent.size(); ++a) {
        const int j = absent[a];
        if ((s >> a) & 1u) {
          m2 |= 1u << j;
          p *= spec.objects[j].respawn_prob;
        } else {
          p *= 1.0 - spec.objects[j].respawn_prob;
        }
      }
      if (p > 0.0) respawn[m].emplace_back(m2, p);
    }
  }

  std::vector<int> object_at(cells, -1);
  for (int j = 0; j < n_obj; ++j) object_at[spec.objects[j].cell] = j;

  // backward induction over episode steps; the layered graph makes a single
  // sweep exact (residual 0 < 1e-8)
  std::vector<double> v_next(layer, 0.0), v_cur(layer, 0.0);
  for (int t = spec.episode_limit - 1; t >= 0; --t) {
    for (int c = 0; c < cells; ++c) {
      for (std::uint32_t m = 0; m < masks; ++m) {
        double best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < kNumActions; ++a) {
          const int c2 = move_cell(spec, c, a);
          double q = 0.0;
          for (const auto& [m2, p] : respawn[m]) {
            double reward = 0.0;
            std::uint32_t m3 = m2;
            bool done = (t + 1 >= spec.episode_limit);
            const int j = object_at[c2];
            if (j >= 0 && ((m2 >> j) & 1u)) {
              reward = spec.objects[j].reward;
              if (spec.objects[j].terminal) {
                done = true;
              } else {
                m3 &= ~(1u << j);
              }
            }
            double cont = 0.0;
            if (!done) cont = v_next[static_cast<std::size_t>(c2) * masks + m3];
            q += p * (reward + spec.discount * cont);
          }
          best = std::max(best, q);
        }
        v_cur[static_cast<std::size_t>(c) * masks + m] = best;
      }
    }
    v_cur.swap(v_next);
  }
  const std::uint32_t full = masks - 1;
  double value = 0.0;
  for (int c = 0; c < cells; ++c)
    value += spec.start_distribution[c] * v_next[static_cast<std::size_t>(c) * masks + full];
  // returns are discounted from the first step
  return spec.discount * value;
}

double normalize_return(double raw, double oracle_value) {
  if (std::abs(oracle_value) < 1e-12)
    throw NumericError("normalize_return: oracle value is zero");
  return raw / oracle_value;
}

double normalize_return(double raw, const GridWorldSpec& spec) {
  return normalize_return(raw, optimal_return_oracle(spec));
}

GridWorld::GridWorld(const GridWorldSpec& spec, Rng rng) : spec_(spec), rng_(rng) {
  spec_.validate();
  state_ = reset_state(spec_, rng_);
}

void GridWorld::reset() { state_ = reset_state(spec_, rng_); }

StepResult GridWorld::step(int action) {
  StepResult r = env_step(spec_, state_, action, rng_);
  state_ = r.next;
  if (r.done) state_ = reset_state(spec_, rng_);
  return r;
}

}  // namespace tempo::env
