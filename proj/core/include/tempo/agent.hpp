#pragma once

#include <span>
#include <vector>

#include "tempo/nn.hpp"
#include "tempo/rng.hpp"

namespace tempo::agent {

enum class CriticKind {
  ScalarValue,      // linear scalar head, used by drift-style training
  BootstrapVector,  // sigmoid vector head y(s) in (0,1)^m
};

inline constexpr double kBootstrapClamp = 1e-6;

struct AgentSpec {
  int obs_dim = 0;
  int num_actions = 0;
  int hidden = 32;
  CriticKind critic = CriticKind::ScalarValue;
  int bootstrap_dim = 1;  // m, for the bootstrap critic

  nn::MlpSpec policy_spec() const;
  nn::MlpSpec critic_spec() const;
  std::size_t param_count() const;
  std::size_t policy_param_count() const { return policy_spec().param_count(); }
};

// Joint actor-critic parameters live in one flat vector: policy block first,
// critic block after it, so learned updates can treat theta as a unit.
class Agent {
 public:
  Agent(const AgentSpec& spec, Rng& init_rng);

  const AgentSpec& spec() const { return spec_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  std::span<const double> policy_params() const;
  std::span<const double> critic_params() const;

  void policy_logits(std::span<const double> obs, std::span<double> out) const;
  // softmax probabilities; returns the entropy of the distribution
  double action_probs(std::span<const double> obs, std::span<double> probs) const;
  double value(std::span<const double> obs) const;                       // scalar critic
  void bootstrap(std::span<const double> obs, std::span<double> out) const;  // clamped sigmoid vector

 private:
  AgentSpec spec_;
  std::vector<double> params_;
  mutable nn::MlpCache policy_cache_, critic_cache_;
};

double softmax_in_place(std::span<double> logits);  // returns entropy
int sample_from_probs(std::span<const double> probs, Rng& rng);

}  // namespace tempo::agent
