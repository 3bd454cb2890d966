#pragma once

// Test-side oracles, written independently of the library implementations
// they check.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "tempo/agent.hpp"
#include "tempo/gridworld.hpp"
#include "tempo/inner_loop.hpp"
#include "tempo/rng.hpp"

namespace testsup {

inline bool close(double a, double b, double rtol, double atol = 1e-9) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return std::abs(a - b) <= rtol * scale + atol;
}

bool all_close(std::span<const double> a, std::span<const double> b, double rtol,
               double atol = 1e-9);

// worst-offender report for gradient comparisons
struct CompareReport {
  bool ok = true;
  double worst_abs = 0.0;
  double worst_allowed = 0.0;
  std::size_t worst_index = 0;
};
CompareReport compare_vectors(std::span<const double> a, std::span<const double> b, double rtol,
                              double atol = 1e-9);

// Optimal return of a deterministic grid-world (point-mass start, terminal
// objects only) by enumerating every open-loop action sequence up to the
// episode limit. Rewards discounted from the first step (gamma^k on step k).
double brute_force_optimal_return(const tempo::env::GridWorldSpec& spec);

// stationary stochastic policy over (cell, presence-mask) pairs
using PolicyTable = std::vector<std::array<double, 5>>;

PolicyTable uniform_policy(const tempo::env::GridWorldSpec& spec);
PolicyTable random_policy(const tempo::env::GridWorldSpec& spec, tempo::Rng& rng);

// Exact expected discounted episode return of the policy from the start
// distribution (backward induction over the step-layered chain).
double exact_policy_value(const tempo::env::GridWorldSpec& spec, const PolicyTable& policy);

// Exact expected per-step reward over the first `steps` steps of the
// auto-resetting chain under the policy.
double exact_mean_reward(const tempo::env::GridWorldSpec& spec, const PolicyTable& policy,
                         long long steps);

// Independently written clipped-surrogate PPO step: same data, same minibatch
// plan, gradient derived from min(p*A, clamp(p)*A) instead of a drift term.
void clip_ppo_reference_step(tempo::agent::Agent& agent, const tempo::train::RolloutBatch& batch,
                             double clip_eps, const tempo::train::TrainConfig& config,
                             const tempo::LifetimeClock& clock,
                             tempo::train::AscentOptimizer& opt, tempo::Rng& shuffle_rng);

}  // namespace testsup
