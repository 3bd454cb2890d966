#include "tempo/lpg.hpp"

#include <algorithm>
#include <cmath>

#include "tempo/error.hpp"

namespace tempo::objective {

namespace {

inline double logit(double y) { return std::log(y / (1.0 - y)); }

inline double clamp_unit(double y) {
  return std::clamp(y, agent::kBootstrapClamp, 1.0 - agent::kBootstrapClamp);
}

}  // namespace

std::vector<std::vector<double>> build_lpg_inputs(std::span<const env::Transition> stream,
                                                  const agent::Agent& agent,
                                                  const LpgConfig& config, double discount,
                                                  long long horizon) {
  if (stream.empty()) throw UsageError("build_lpg_inputs: empty rollout stream");
  const int m = config.bootstrap_dim;
  std::vector<std::vector<double>> inputs;
  inputs.reserve(stream.size());
  std::vector<double> y(m), y_next(m);
  for (const auto& tr : stream) {
    if (!(tr.action_prob > 0.0)) throw NumericError("build_lpg_inputs: zero action probability");
    std::vector<double> x;
    x.reserve(config.input_width());
    x.push_back(tr.reward);
    x.push_back(tr.done ? 1.0 : 0.0);
    x.push_back(discount);
    x.push_back(tr.action_prob);
    agent.bootstrap(tr.obs, y);
    x.insert(x.end(), y.begin(), y.end());
    agent.bootstrap(tr.next_obs, y_next);
    x.insert(x.end(), y_next.begin(), y_next.end());
    if (config.temporal) {
      x.push_back(tr.lifetime_frac);
      x.push_back(std::log(static_cast<double>(horizon)));
    }
    inputs.push_back(std::move(x));
  }
  return inputs;
}

std::vector<LpgTargets> lpg_targets(const LpgConfig& config, std::span<const double> phi,
                                    const std::vector<std::vector<double>>& inputs) {
  const nn::LstmSpec spec = config.lstm_spec();
  const auto outputs = nn::lstm_scan_reversed(spec, phi, inputs);
  std::vector<LpgTargets> targets(outputs.size());
  for (std::size_t t = 0; t < outputs.size(); ++t) {
    targets[t].y_hat.resize(config.bootstrap_dim);
    for (int i = 0; i < config.bootstrap_dim; ++i)
      targets[t].y_hat[i] = clamp_unit(1.0 / (1.0 + std::exp(-outputs[t][i])));
    targets[t].pi_hat = outputs[t][config.bootstrap_dim];
  }
  return targets;
}

double bernoulli_kl(std::span<const double> y, std::span<const double> y_hat) {
  double kl = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double p = y[i], q = y_hat[i];
    kl += p * std::log(p / q) + (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
  }
  return kl;
}

double lpg_surrogate_loss(const agent::Agent& agent, std::span<const env::Transition> stream,
                          std::span<const LpgTargets> targets, const LpgConfig& config) {
  if (stream.size() != targets.size()) throw UsageError("lpg_surrogate_loss: target misalignment");
  const int m = config.bootstrap_dim;
  const int num_actions = agent.spec().num_actions;
  std::vector<double> probs(num_actions), y(m);
  double total = 0.0;
  for (std::size_t t = 0; t < stream.size(); ++t) {
    const auto& tr = stream[t];
    const auto& tg = targets[t];
    const double pol_entropy = agent.action_probs(tr.obs, probs);
    const double logp = std::log(std::max(probs[tr.action], 1e-300));
    agent.bootstrap(tr.obs, y);
    double y_entropy = 0.0;
    for (int i = 0; i < m; ++i)
      y_entropy += -y[i] * std::log(y[i]) - (1.0 - y[i]) * std::log(1.0 - y[i]);
    double yhat_sq = 0.0;
    for (double q : tg.y_hat) yhat_sq += q * q;
    total += logp * tg.pi_hat - config.alpha_y * bernoulli_kl(y, tg.y_hat) +
             config.beta0 * pol_entropy + config.beta1 * y_entropy -
             config.beta2 * tg.pi_hat * tg.pi_hat - config.beta3 * yhat_sq;
  }
  return total / static_cast<double>(stream.size());
}

std::vector<double> lpg_update(const agent::Agent& agent, std::span<const env::Transition> stream,
                               std::span<const LpgTargets> targets, const LpgConfig& config) {
  if (stream.size() != targets.size()) throw UsageError("lpg_update: target misalignment");
  if (agent.spec().critic != agent::CriticKind::BootstrapVector ||
      agent.spec().bootstrap_dim != config.bootstrap_dim)
    throw ConfigError("lpg_update: agent critic does not match the LPG bootstrap dimension");

  const nn::MlpSpec pol_spec = agent.spec().policy_spec();
  const nn::MlpSpec cr_spec = agent.spec().critic_spec();
  const std::size_t np = pol_spec.param_count();
  std::vector<double> grad(agent.spec().param_count(), 0.0);
  std::span<double> pol_grad(grad.data(), np);
  std::span<double> cr_grad(grad.data() + np, grad.size() - np);

  const int num_actions = agent.spec().num_actions;
  const int m = config.bootstrap_dim;
  std::vector<double> probs(num_actions), cot(num_actions), raw(m), y(m), ccot(m);
  nn::MlpCache pol_cache, cr_cache;

  for (std::size_t t = 0; t < stream.size(); ++t) {
    const auto& tr = stream[t];
    const auto& tg = targets[t];

    nn::mlp_forward_cached(pol_spec, agent.policy_params(), tr.obs, pol_cache);
    std::copy(pol_cache.output().begin(), pol_cache.output().end(), probs.begin());
    const double entropy = agent::softmax_in_place(probs);
    for (int a = 0; a < num_actions; ++a) {
      const double e_a = a == tr.action ? 1.0 : 0.0;
      const double d_logpi = e_a - probs[a];
      const double d_entropy = probs[a] > 0.0 ? -probs[a] * (std::log(probs[a]) + entropy) : 0.0;
      cot[a] = tg.pi_hat * d_logpi + config.beta0 * d_entropy;
    }
    nn::mlp_backward_cached(pol_spec, agent.policy_params(), pol_cache, cot, pol_grad, {});

    nn::mlp_forward_cached(cr_spec, agent.critic_params(), tr.obs, cr_cache);
    std::copy(cr_cache.output().begin(), cr_cache.output().end(), raw.begin());
    for (int i = 0; i < m; ++i) {
      const double s = 1.0 / (1.0 + std::exp(-raw[i]));
      y[i] = clamp_unit(s);
      const bool clamped = s != y[i];
      const double dy_dc = clamped ? 0.0 : s * (1.0 - s);
      const double d_kl = logit(y[i]) - logit(tg.y_hat[i]);
      const double d_ent = -logit(y[i]);
      ccot[i] = (-config.alpha_y * d_kl + config.beta1 * d_ent) * dy_dc;
    }
    nn::mlp_backward_cached(cr_spec, agent.critic_params(), cr_cache, ccot, cr_grad, {});
  }
  const double inv = 1.0 / static_cast<double>(stream.size());
  for (double& g : grad) g *= inv;
  return grad;
}

}  // namespace tempo::objective
