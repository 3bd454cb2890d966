#include "tempo/agent.hpp"

#include <algorithm>
#include <cmath>

#include "tempo/error.hpp"

namespace tempo::agent {

nn::MlpSpec AgentSpec::policy_spec() const {
  return nn::MlpSpec{{obs_dim, hidden, num_actions}, nn::Activation::Tanh, true};
}

nn::MlpSpec AgentSpec::critic_spec() const {
  const int out = critic == CriticKind::ScalarValue ? 1 : bootstrap_dim;
  return nn::MlpSpec{{obs_dim, hidden, out}, nn::Activation::Tanh, true};
}

std::size_t AgentSpec::param_count() const {
  return policy_spec().param_count() + critic_spec().param_count();
}

Agent::Agent(const AgentSpec& spec, Rng& init_rng) : spec_(spec) {
  if (spec.obs_dim <= 0 || spec.num_actions <= 0 || spec.hidden <= 0)
    throw ConfigError("AgentSpec: non-positive dimension");
  auto pp = nn::init_mlp_params(spec.policy_spec(), init_rng);
  auto cp = nn::init_mlp_params(spec.critic_spec(), init_rng);
  params_ = std::move(pp);
  params_.insert(params_.end(), cp.begin(), cp.end());
}

std::span<const double> Agent::policy_params() const {
  return {params_.data(), spec_.policy_param_count()};
}

std::span<const double> Agent::critic_params() const {
  const std::size_t np = spec_.policy_param_count();
  return {params_.data() + np, params_.size() - np};
}

void Agent::policy_logits(std::span<const double> obs, std::span<double> out) const {
  nn::mlp_forward_cached(spec_.policy_spec(), policy_params(), obs, policy_cache_);
  std::copy(policy_cache_.output().begin(), policy_cache_.output().end(), out.begin());
}

double Agent::action_probs(std::span<const double> obs, std::span<double> probs) const {
  policy_logits(obs, probs);
  return softmax_in_place(probs);
}

double Agent::value(std::span<const double> obs) const {
  nn::mlp_forward_cached(spec_.critic_spec(), critic_params(), obs, critic_cache_);
  return critic_cache_.output()[0];
}

void Agent::bootstrap(std::span<const double> obs, std::span<double> out) const {
  nn::mlp_forward_cached(spec_.critic_spec(), critic_params(), obs, critic_cache_);
  auto raw = critic_cache_.output();
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double y = 1.0 / (1.0 + std::exp(-raw[i]));
    out[i] = std::clamp(y, kBootstrapClamp, 1.0 - kBootstrapClamp);
  }
}

double softmax_in_place(std::span<double> logits) {
  double mx = logits[0];
  for (double z : logits) mx = std::max(mx, z);
  double sum = 0.0;
  for (double& z : logits) {
    z = std::exp(z - mx);
    sum += z;
  }
  double entropy = 0.0;
  for (double& z : logits) {
    z /= sum;
    if (z > 0.0) entropy -= z * std::log(z);
  }
  return entropy;
}

int sample_from_probs(std::span<const double> probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t a = 0; a + 1 < probs.size(); ++a) {
    acc += probs[a];
    if (u < acc) return static_cast<int>(a);
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace tempo::agent
