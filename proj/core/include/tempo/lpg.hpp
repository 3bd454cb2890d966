#pragma once

#include <span>
#include <vector>

#include "tempo/agent.hpp"
#include "tempo/gridworld.hpp"
#include "tempo/nn.hpp"

namespace tempo::objective {

struct LpgConfig {
  int bootstrap_dim = 16;  // m
  int lstm_hidden = 32;
  bool temporal = false;
  double alpha_y = 0.5;    // weight of the bootstrap KL term
  double beta0 = 0.05;     // policy entropy
  double beta1 = 0.001;    // bootstrap entropy
  double beta2 = 0.005;    // L2 on pi-hat (constant w.r.t. theta)
  double beta3 = 0.001;    // L2 on y-hat (constant w.r.t. theta)

  // [r, d, gamma, pi(a|s), y(s), y(s')] plus [n/N, log N] in temporal mode
  int input_width() const { return 4 + 2 * bootstrap_dim + (temporal ? 2 : 0); }
  nn::LstmSpec lstm_spec() const { return {input_width(), lstm_hidden, bootstrap_dim + 1}; }
};

std::vector<std::vector<double>> build_lpg_inputs(std::span<const env::Transition> stream,
                                                  const agent::Agent& agent,
                                                  const LpgConfig& config, double discount,
                                                  long long horizon);

struct LpgTargets {
  std::vector<double> y_hat;  // sigmoid readout, in (0,1)^m
  double pi_hat = 0.0;        // linear readout
};

// Reversed LSTM scan over the input sequence; target t depends only on
// inputs t..T.
std::vector<LpgTargets> lpg_targets(const LpgConfig& config, std::span<const double> phi,
                                    const std::vector<std::vector<double>>& inputs);

// Scalar surrogate whose theta-gradient is the update direction; targets are
// constants. Exposed so tests can difference it directly.
double lpg_surrogate_loss(const agent::Agent& agent, std::span<const env::Transition> stream,
                          std::span<const LpgTargets> targets, const LpgConfig& config);

// Ascent direction: mean_t [ grad log pi * pi_hat - alpha_y grad KL(y || y_hat) ]
// plus the entropy regularizers weighted by beta0/beta1.
std::vector<double> lpg_update(const agent::Agent& agent, std::span<const env::Transition> stream,
                               std::span<const LpgTargets> targets, const LpgConfig& config);

// KL between Bernoulli vectors, summed over coordinates.
double bernoulli_kl(std::span<const double> y, std::span<const double> y_hat);

}  // namespace tempo::objective
