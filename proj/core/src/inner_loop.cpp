#include "tempo/inner_loop.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tempo/error.hpp"
#include "tempo/vec.hpp"

namespace tempo::train {

void TrainConfig::validate() const {
  if (horizon <= 0) throw ConfigError("TrainConfig: horizon must be positive");
  if (rollout_length <= 0 || num_parallel_envs <= 0)
    throw ConfigError("TrainConfig: rollout dimensions must be positive");
  if (!(learning_rate >= 0.0)) throw ConfigError("TrainConfig: negative learning rate");
  if (!(discount > 0.0 && discount < 1.0)) throw ConfigError("TrainConfig: discount outside (0,1)");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ConfigError("TrainConfig: gae_lambda outside [0,1]");
  if (ppo_epochs <= 0 || ppo_minibatches <= 0) throw ConfigError("TrainConfig: ppo counts must be positive");
  if (!(max_grad_norm > 0.0)) throw ConfigError("TrainConfig: max_grad_norm must be positive");
  if (agent_hidden <= 0) throw ConfigError("TrainConfig: agent_hidden must be positive");
  if (eval_episodes <= 0) throw ConfigError("TrainConfig: eval_episodes must be positive");
}

double apply_lr_schedule(const TrainConfig& config, const LifetimeClock& clock) {
  switch (config.lr_schedule) {
    case LrSchedule::Constant: return config.learning_rate;
    case LrSchedule::LinearDecay: return config.learning_rate * (1.0 - clock.frac());
  }
  return config.learning_rate;
}

AscentOptimizer::AscentOptimizer(OptimizerKind kind, std::size_t dim) : kind_(kind) {
  m_.assign(dim, 0.0);
  if (kind_ == OptimizerKind::Adam) v_.assign(dim, 0.0);
}

void AscentOptimizer::step(std::span<double> params, std::span<const double> grad, double lr) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw UsageError("AscentOptimizer: dimension mismatch");
  ++t_;
  if (kind_ == OptimizerKind::Sgd) {
    constexpr double kMomentum = 0.9;
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = kMomentum * m_[i] + grad[i];
      params[i] += lr * m_[i];
    }
    return;
  }
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grad[i];
    v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grad[i] * grad[i];
    params[i] += lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + kEps);
  }
}

double clip_grad_norm(std::span<double> grad, double max_norm) {
  const double norm = l2_norm(grad);
  if (norm > max_norm && norm > 0.0) scale(grad, max_norm / norm);
  return norm;
}

RolloutBatch collect_rollout(std::vector<env::GridWorld>& envs, const agent::Agent& agent,
                             LifetimeClock& clock, int length, Rng& action_rng) {
  RolloutBatch batch;
  batch.num_envs = static_cast<int>(envs.size());
  if (envs.empty()) throw UsageError("collect_rollout: no environments");
  const long long remaining = clock.horizon - clock.n;
  if (remaining <= 0 || length <= 0) return batch;
  const long long per_step = batch.num_envs;
  const long long wanted = std::min<long long>(length, (remaining + per_step - 1) / per_step);
  batch.length = static_cast<int>(wanted);
  batch.transitions.resize(static_cast<std::size_t>(batch.length) * batch.num_envs);

  const auto& spec = envs.front().spec();
  const int obs_dim = spec.observation_dim();
  std::vector<double> probs(env::kNumActions);
  double entropy_sum = 0.0;

  for (int t = 0; t < batch.length; ++t) {
    const double frac =
        static_cast<double>(clock.n + static_cast<long long>(t) * per_step) / clock.horizon;
    for (int e = 0; e < batch.num_envs; ++e) {
      env::Transition& tr = batch.transitions[static_cast<std::size_t>(e) * batch.length + t];
      const env::GridState before = envs[e].state();
      tr.state = before.cell;
      tr.obs.resize(obs_dim);
      env::encode_observation(spec, before, tr.obs);
      entropy_sum += agent.action_probs(tr.obs, probs);
      tr.action = agent::sample_from_probs(probs, action_rng);
      tr.action_prob = std::max(probs[tr.action], 1e-300);
      const env::StepResult r = envs[e].step(tr.action);
      tr.reward = r.reward;
      tr.done = r.done;
      tr.next_state = r.next.cell;
      tr.next_obs.resize(obs_dim);
      env::encode_observation(spec, r.next, tr.next_obs);
      tr.lifetime_frac = frac;
    }
  }
  batch.mean_entropy = entropy_sum / (static_cast<double>(batch.length) * batch.num_envs);
  clock.n = std::min(clock.horizon, clock.n + static_cast<long long>(batch.length) * per_step);
  return batch;
}

std::vector<double> gae_advantages(std::span<const env::Transition> stream,
                                   std::span<const double> values, double discount,
                                   double lambda) {
  if (values.size() != stream.size() + 1)
    throw UsageError("gae_advantages: need one value per transition plus a bootstrap");
  std::vector<double> adv(stream.size(), 0.0);
  double running = 0.0;
  for (int t = static_cast<int>(stream.size()) - 1; t >= 0; --t) {
    const double not_done = stream[t].done ? 0.0 : 1.0;
    const double delta =
        stream[t].reward + discount * not_done * values[t + 1] - values[t];
    running = delta + discount * lambda * not_done * running;
    adv[t] = running;
  }
  return adv;
}

std::vector<std::vector<std::vector<int>>> minibatch_plan(int batch_size, int epochs,
                                                          int minibatches, Rng& rng) {
  std::vector<std::vector<std::vector<int>>> plan(epochs);
  std::vector<int> indices(batch_size);
  const int mb_count = std::max(1, std::min(minibatches, batch_size));
  for (int ep = 0; ep < epochs; ++ep) {
    std::iota(indices.begin(), indices.end(), 0);
    for (int i = batch_size - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.uniform_int(0, i));
      std::swap(indices[i], indices[j]);
    }
    plan[ep].resize(mb_count);
    for (int i = 0; i < batch_size; ++i) plan[ep][i % mb_count].push_back(indices[i]);
  }
  return plan;
}

StepMetrics ppo_train_step(agent::Agent& agent, const RolloutBatch& batch,
                           const objective::DriftObjective& drift, const TrainConfig& config,
                           const LifetimeClock& clock, AscentOptimizer& opt, Rng& shuffle_rng) {
  StepMetrics metrics;
  metrics.entropy = batch.mean_entropy;
  if (batch.transitions.empty()) return metrics;

  const nn::MlpSpec pol_spec = agent.spec().policy_spec();
  const nn::MlpSpec cr_spec = agent.spec().critic_spec();
  const std::size_t np = pol_spec.param_count();
  const int batch_size = static_cast<int>(batch.transitions.size());

  // advantages and value targets from the collection-time critic
  std::vector<double> advantages(batch_size), returns(batch_size);
  std::vector<double> values(batch.length + 1);
  for (int e = 0; e < batch.num_envs; ++e) {
    const auto stream = batch.stream(e);
    for (int t = 0; t < batch.length; ++t) values[t] = agent.value(stream[t].obs);
    values[batch.length] = agent.value(stream[batch.length - 1].next_obs);
    const auto adv = gae_advantages(stream, values, config.discount, config.gae_lambda);
    for (int t = 0; t < batch.length; ++t) {
      const std::size_t idx = static_cast<std::size_t>(e) * batch.length + t;
      advantages[idx] = adv[t];
      returns[idx] = adv[t] + values[t];
    }
  }

  const auto plan = minibatch_plan(batch_size, config.ppo_epochs, config.ppo_minibatches, shuffle_rng);
  const double lr = apply_lr_schedule(config, clock);
  const std::vector<double> theta_before = agent.params();

  std::vector<double> grad(agent.spec().param_count());
  std::span<double> pol_grad(grad.data(), np);
  std::span<double> cr_grad(grad.data() + np, grad.size() - np);
  std::vector<double> probs(env::kNumActions), cot(env::kNumActions);
  nn::MlpCache pol_cache, cr_cache;
  objective::DriftEvalCache drift_cache;

  for (const auto& epoch : plan) {
    for (const auto& mb : epoch) {
      std::fill(grad.begin(), grad.end(), 0.0);
      for (const int idx : mb) {
        const env::Transition& tr = batch.transitions[idx];
        // policy: (A - dD/dp) * grad p + entropy bonus
        nn::mlp_forward_cached(pol_spec, agent.policy_params(), tr.obs, pol_cache);
        std::copy(pol_cache.output().begin(), pol_cache.output().end(), probs.begin());
        const double entropy = agent::softmax_in_place(probs);
        const double ratio = probs[tr.action] / tr.action_prob;
        if (!std::isfinite(ratio)) throw NumericError("ppo_train_step: non-finite ratio");
        const double coef =
            (advantages[idx] - drift.dp(ratio, advantages[idx], tr.lifetime_frac, drift_cache)) *
            ratio;
        for (int a = 0; a < env::kNumActions; ++a) {
          const double e_a = a == tr.action ? 1.0 : 0.0;
          const double d_entropy =
              probs[a] > 0.0 ? -probs[a] * (std::log(probs[a]) + entropy) : 0.0;
          cot[a] = coef * (e_a - probs[a]) + config.entropy_coef * d_entropy;
        }
        nn::mlp_backward_cached(pol_spec, agent.policy_params(), pol_cache, cot, pol_grad, {});

        // value regression toward the GAE returns
        nn::mlp_forward_cached(cr_spec, agent.critic_params(), tr.obs, cr_cache);
        const double v = cr_cache.output()[0];
        const double vcot[1] = {-2.0 * config.value_coef * (v - returns[idx])};
        nn::mlp_backward_cached(cr_spec, agent.critic_params(), cr_cache, vcot, cr_grad, {});
      }
      const double inv = 1.0 / static_cast<double>(mb.size());
      for (double& g : grad) g *= inv;
      clip_grad_norm(grad, config.max_grad_norm);
      opt.step(agent.params(), grad, lr);
    }
  }
  if (!all_finite(agent.params())) throw NumericError("ppo_train_step: parameters diverged");

  std::vector<double> delta(agent.params().size());
  for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = agent.params()[i] - theta_before[i];
  metrics.update_norm = l2_norm(delta);
  return metrics;
}

StepMetrics lpg_train_step(agent::Agent& agent, const RolloutBatch& batch,
                           const objective::LpgObjective& lpg, const TrainConfig& config,
                           const LifetimeClock& clock, AscentOptimizer& opt) {
  StepMetrics metrics;
  metrics.entropy = batch.mean_entropy;
  if (batch.transitions.empty()) return metrics;

  std::vector<objective::LpgTargets> targets;
  targets.reserve(batch.transitions.size());
  for (int e = 0; e < batch.num_envs; ++e) {
    const auto stream = batch.stream(e);
    const auto inputs =
        objective::build_lpg_inputs(stream, agent, lpg.config, config.discount, clock.horizon);
    auto stream_targets = objective::lpg_targets(lpg.config, lpg.phi, inputs);
    targets.insert(targets.end(), std::make_move_iterator(stream_targets.begin()),
                   std::make_move_iterator(stream_targets.end()));
  }

  std::vector<double> grad = objective::lpg_update(agent, batch.transitions, targets, lpg.config);
  clip_grad_norm(grad, config.max_grad_norm);
  const std::vector<double> theta_before = agent.params();
  opt.step(agent.params(), grad, apply_lr_schedule(config, clock));
  if (!all_finite(agent.params())) throw NumericError("lpg_train_step: parameters diverged");

  std::vector<double> delta(agent.params().size());
  for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = agent.params()[i] - theta_before[i];
  metrics.update_norm = l2_norm(delta);
  return metrics;
}

double evaluate_policy(const env::GridWorldSpec& spec, const agent::Agent& agent, int episodes,
                       Rng& rng) {
  env::GridWorld world(spec, rng.split(0x657661ULL));
  Rng action_rng = rng.split(0x616374ULL);
  std::vector<double> probs(env::kNumActions);
  std::vector<double> obs(spec.observation_dim());
  double total = 0.0;
  for (int ep = 0; ep < episodes; ++ep) {
    double ret = 0.0;
    double discount_pow = spec.discount;  // rewards discounted from the first step
    bool done = false;
    while (!done) {
      env::encode_observation(spec, world.state(), obs);
      agent.action_probs(obs, probs);
      const int action = agent::sample_from_probs(probs, action_rng);
      const env::StepResult r = world.step(action);  // auto-resets on done
      ret += discount_pow * r.reward;
      discount_pow *= spec.discount;
      done = r.done;
    }
    total += ret;
  }
  return total / episodes;
}

LifetimeResult train_lifetime(const objective::InnerObjective& objective,
                              const env::GridWorldSpec& spec, const TrainConfig& config,
                              std::uint64_t seed, bool record_trace,
                              std::optional<double> oracle_value) {
  config.validate();
  spec.validate();

  LifetimeResult result;
  if (!oracle_value.has_value()) {
    try {
      oracle_value = env::optimal_return_oracle(spec, config.oracle_state_cap);
    } catch (const InfeasibleError&) {
      oracle_value = std::nullopt;  // fall back to raw returns
    }
  }
  result.oracle_value = oracle_value.value_or(0.0);

  const bool drift_style = objective::is_drift_style(objective);
  agent::AgentSpec aspec;
  aspec.obs_dim = spec.observation_dim();
  aspec.num_actions = env::kNumActions;
  aspec.hidden = config.agent_hidden;
  if (drift_style) {
    aspec.critic = agent::CriticKind::ScalarValue;
  } else {
    aspec.critic = agent::CriticKind::BootstrapVector;
    aspec.bootstrap_dim = std::get<objective::LpgObjective>(objective).config.bootstrap_dim;
  }

  Rng init_rng(derive_seed(seed, 1));
  Rng action_rng(derive_seed(seed, 2));
  Rng shuffle_rng(derive_seed(seed, 3));
  Rng eval_rng(derive_seed(seed, 4));

  agent::Agent agent(aspec, init_rng);
  AscentOptimizer opt(config.optimizer == OptimizerKind::Adam ? OptimizerKind::Adam
                                                              : OptimizerKind::Sgd,
                      agent.params().size());

  std::vector<env::GridWorld> envs;
  envs.reserve(config.num_parallel_envs);
  for (int e = 0; e < config.num_parallel_envs; ++e)
    envs.emplace_back(spec, Rng(derive_seed(seed, 100 + static_cast<std::uint64_t>(e))));

  LifetimeClock clock{0, config.horizon};
  result.trace.seed = seed;
  result.trace.horizon = config.horizon;

  const objective::DriftObjective drift =
      drift_style ? objective::make_drift_objective(objective) : objective::DriftObjective::ppo_clip(0.2);
  const objective::LpgObjective* lpg =
      drift_style ? nullptr : &std::get<objective::LpgObjective>(objective);

  double last_eval = 0.0;
  long long update_index = 0;
  while (clock.n < clock.horizon && !result.diverged) {
    RolloutBatch batch = collect_rollout(envs, agent, clock, config.rollout_length, action_rng);
    if (batch.transitions.empty()) break;
    StepMetrics metrics;
    try {
      metrics = drift_style
                    ? ppo_train_step(agent, batch, drift, config, clock, opt, shuffle_rng)
                    : lpg_train_step(agent, batch, *lpg, config, clock, opt);
    } catch (const NumericError&) {
      result.diverged = true;
    }
    ++update_index;
    if (record_trace && !result.diverged) {
      if (config.trace_eval_every > 0 && update_index % config.trace_eval_every == 0) {
        const double raw = evaluate_policy(spec, agent, config.trace_eval_episodes, eval_rng);
        last_eval = oracle_value ? raw / *oracle_value : raw;
      }
      result.trace.append(clock.n, metrics.entropy, metrics.update_norm, last_eval);
    }
  }

  if (result.diverged) {
    result.fitness = config.fitness_floor;
    return result;
  }

  result.raw_return = evaluate_policy(spec, agent, config.eval_episodes, eval_rng);
  if (oracle_value) {
    result.normalized = true;
    result.normalized_return = result.raw_return / *oracle_value;
    result.fitness = std::max(config.fitness_floor, result.normalized_return);
  } else {
    result.fitness = std::max(config.fitness_floor, result.raw_return);
  }
  if (record_trace && !result.trace.rows.empty()) {
    auto& last = result.trace.rows.back();
    last.return_norm = analysis::quantize9(result.normalized ? result.normalized_return
                                                             : result.raw_return);
  }
  return result;
}

}  // namespace tempo::train
