#pragma once

#include <optional>
#include <span>
#include <vector>

#include "tempo/agent.hpp"
#include "tempo/analysis.hpp"
#include "tempo/clock.hpp"
#include "tempo/gridworld.hpp"
#include "tempo/objective.hpp"
#include "tempo/rng.hpp"

namespace tempo::train {

enum class OptimizerKind { Sgd, Adam };
enum class LrSchedule { Constant, LinearDecay };

struct TrainConfig {
  long long horizon = 20000;  // N
  int rollout_length = 64;
  int num_parallel_envs = 8;
  double learning_rate = 2.5e-3;
  OptimizerKind optimizer = OptimizerKind::Adam;
  LrSchedule lr_schedule = LrSchedule::Constant;
  double discount = 0.99;
  double gae_lambda = 0.95;
  int ppo_epochs = 4;
  int ppo_minibatches = 8;
  double entropy_coef = 0.003;
  double value_coef = 0.5;
  double max_grad_norm = 8.0;
  int agent_hidden = 32;
  int eval_episodes = 32;
  int trace_eval_every = 0;    // in agent updates; 0 means final evaluation only
  int trace_eval_episodes = 8;
  double fitness_floor = -1.0;
  std::size_t oracle_state_cap = env::kDefaultOracleStateCap;

  void validate() const;
};

double apply_lr_schedule(const TrainConfig& config, const LifetimeClock& clock);

// Gradient-ascent optimizer over a flat parameter vector.
class AscentOptimizer {
 public:
  AscentOptimizer(OptimizerKind kind, std::size_t dim);
  void step(std::span<double> params, std::span<const double> grad, double lr);

 private:
  OptimizerKind kind_;
  std::vector<double> m_, v_;
  long long t_ = 0;
};

// clips in place; returns the pre-clip norm
double clip_grad_norm(std::span<double> grad, double max_norm);

// Synchronous rollout across parallel environment streams, stream-major:
// transition (e, t) sits at index e * length + t.
struct RolloutBatch {
  int length = 0;
  int num_envs = 0;
  std::vector<env::Transition> transitions;
  double mean_entropy = 0.0;  // policy entropy averaged over collection states

  std::span<const env::Transition> stream(int e) const {
    return {transitions.data() + static_cast<std::size_t>(e) * length,
            static_cast<std::size_t>(length)};
  }
};

// Collects up to `length` synchronous steps, truncated so the clock never
// passes the horizon; episodes reset automatically inside the streams.
RolloutBatch collect_rollout(std::vector<env::GridWorld>& envs, const agent::Agent& agent,
                             LifetimeClock& clock, int length, Rng& action_rng);

// lambda-weighted temporal-difference advantages over one stream; values has
// one entry per transition plus the bootstrap value of the final next state.
std::vector<double> gae_advantages(std::span<const env::Transition> stream,
                                   std::span<const double> values, double discount,
                                   double lambda);

// deterministic epoch/minibatch index plan shared with test oracles
std::vector<std::vector<std::vector<int>>> minibatch_plan(int batch_size, int epochs,
                                                          int minibatches, Rng& rng);

struct StepMetrics {
  double entropy = 0.0;
  double update_norm = 0.0;
};

StepMetrics ppo_train_step(agent::Agent& agent, const RolloutBatch& batch,
                           const objective::DriftObjective& drift, const TrainConfig& config,
                           const LifetimeClock& clock, AscentOptimizer& opt, Rng& shuffle_rng);

StepMetrics lpg_train_step(agent::Agent& agent, const RolloutBatch& batch,
                           const objective::LpgObjective& lpg, const TrainConfig& config,
                           const LifetimeClock& clock, AscentOptimizer& opt);

// Mean discounted episodic return of the stochastic policy; rewards are
// discounted from the first step (a reward on step k contributes gamma^k).
double evaluate_policy(const env::GridWorldSpec& spec, const agent::Agent& agent, int episodes,
                       Rng& rng);

struct LifetimeResult {
  double fitness = 0.0;       // normalized when the oracle is available, else raw
  double raw_return = 0.0;
  double normalized_return = 0.0;
  bool normalized = false;
  bool diverged = false;
  double oracle_value = 0.0;
  analysis::MetricTrace trace;
};

// Trains one agent for a full lifetime under the given objective.
// Deterministic function of (objective, spec, config, seed).
LifetimeResult train_lifetime(const objective::InnerObjective& objective,
                              const env::GridWorldSpec& spec, const TrainConfig& config,
                              std::uint64_t seed, bool record_trace = false,
                              std::optional<double> oracle_value = std::nullopt);

}  // namespace tempo::train
