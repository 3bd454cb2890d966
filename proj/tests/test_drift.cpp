#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "support/oracles.hpp"
#include "tempo/drift.hpp"
#include "tempo/error.hpp"
#include "tempo/nn.hpp"

using namespace tempo;
using namespace tempo::objective;
using testsup::all_close;
using testsup::close;

TEST_CASE("drift_features at the identity ratio are exactly zero") {
  const auto f = drift_features(1.0, 3.7, 0.8);
  for (double v : f.base) CHECK(v == 0.0);
  for (double v : f.temporal) CHECK(v == 0.0);
}

TEST_CASE("drift_features temporal block vanishes at n = 0") {
  const auto f = drift_features(1.7, -0.4, 0.0);
  for (double v : f.temporal) CHECK(v == 0.0);
  const auto base_only = drift_features(1.7, -0.4);
  for (int i = 0; i < kBaseFeatures; ++i) CHECK(f.base[i] == base_only.base[i]);
}

TEST_CASE("drift_features direct arithmetic at p=2, A=0.5, n/N=0.5") {
  const auto f = drift_features(2.0, 0.5, 0.5);
  const double lg = std::log(2.0);
  const double want[8] = {-1.0, 1.0, -0.5, 0.5, lg, lg * lg, 0.5 * lg, 0.5 * lg * lg};
  for (int i = 0; i < 8; ++i) {
    CHECK(close(f.base[i], want[i], 1e-15));
    CHECK(close(f.temporal[i], 0.5 * want[i], 1e-15));
  }
}

TEST_CASE("drift_features rejects non-positive ratios and clamps extremes") {
  CHECK_THROWS_AS(drift_features(0.0, 1.0), NumericError);
  CHECK_THROWS_AS(drift_features(-2.0, 1.0), NumericError);
  CHECK(drift_features(1e9, 1.0).ratio == kRatioMax);
  CHECK(drift_features(1e-9, 1.0).ratio == kRatioMin);
}

TEST_CASE("drift_value is zero at identity for random weight draws") {
  Rng rng(31);
  for (int rep = 0; rep < 1000; ++rep) {
    const auto net = DriftNet::random(true, rng, 16);
    const double a = rng.uniform(-2.0, 2.0);
    const double frac = rng.uniform();
    CHECK(drift_value(net, drift_features(1.0, a, frac)) == 0.0);
  }
}

TEST_CASE("drift_value with zero params is zero everywhere") {
  const auto net = DriftNet::zeros(false);
  Rng rng(5);
  for (int rep = 0; rep < 100; ++rep) {
    const auto f = drift_features(rng.uniform(0.5, 1.5), rng.uniform(-1.0, 1.0));
    CHECK(drift_value(net, f) == 0.0);
  }
}

TEST_CASE("drift_value matches an independent forward recomputation") {
  Rng rng(71);
  const auto net = DriftNet::random(true, rng, 128);
  const auto f = drift_features(1.3, -0.7, 0.25);
  std::vector<double> x(16);
  f.write(x);

  const int hidden = 128;
  double out = 0.0;
  for (int h = 0; h < hidden; ++h) {
    double z = 0.0;
    for (int c = 0; c < 16; ++c) z += net.params[h * 16 + c] * x[c];
    out += net.params[hidden * 16 + h] * std::tanh(z);
  }
  CHECK(close(drift_value(net, f), out, 1e-12));
}

TEST_CASE("drift_value rejects width mismatch") {
  const auto net = DriftNet::zeros(true);
  const auto f = drift_features(1.2, 0.3);  // 8-wide features, 16-wide net
  CHECK_THROWS_AS(drift_value(net, f), ConfigError);
}

TEST_CASE("drift_dp zero params") {
  const auto net = DriftNet::zeros(true);
  CHECK(drift_dp(net, 0.7, -0.3, 0.6) == 0.0);
  CHECK(drift_dp(net, 1.4, 0.3, 0.0) == 0.0);
}

TEST_CASE("drift_dp linear readout analytic case") {
  // single linear layer (8 -> 1), weight only on feature (1-p): D = w (1-p)
  DriftNet net;
  net.spec = nn::MlpSpec{{8, 1}, nn::Activation::Tanh, false};
  net.params.assign(8, 0.0);
  net.params[0] = 2.5;
  CHECK(close(drift_dp(net, 1.2, 0.4, 0.0), -2.5, 1e-12));

  // temporal variant with weight only on the scaled (1-p): D = w (n/N)(1-p)
  DriftNet tnet;
  tnet.spec = nn::MlpSpec{{16, 1}, nn::Activation::Tanh, false};
  tnet.params.assign(16, 0.0);
  tnet.params[8] = 2.5;
  const double frac = 0.3;
  CHECK(close(drift_dp(tnet, 1.2, 0.4, frac), -2.5 * frac, 1e-12));
}

TEST_CASE("drift_dp matches central finite differences over a (p, A, n/N) grid") {
  Rng rng(1001);
  const auto net = DriftNet::random(true, rng, 32);
  int points = 0;
  for (int ip = 0; ip < 5; ++ip) {
    for (int ia = 0; ia < 5; ++ia) {
      for (double frac : {0.0, 0.5, 1.0, rng.uniform()}) {
        const double p = 0.55 + 0.2 * ip;
        const double a = -1.0 + 0.5 * ia;
        const double analytic = drift_dp(net, p, a, frac);
        const double step = 1e-6;
        const double fd = (drift_value(net, drift_features(p + step, a, frac)) -
                           drift_value(net, drift_features(p - step, a, frac))) /
                          (2.0 * step);
        CHECK(close(analytic, fd, 1e-5, 1e-9));
        ++points;
      }
    }
  }
  CHECK(points == 100);
}

TEST_CASE("ppo_reference_drift closed form") {
  CHECK(ppo_reference_drift(1.0, 5.0, 0.2) == 0.0);
  CHECK(ppo_reference_drift(1.1, 5.0, 0.2) == 0.0);   // inside the clip region
  CHECK(ppo_reference_drift(0.85, -2.0, 0.2) == 0.0);
  CHECK(close(ppo_reference_drift(1.5, 1.0, 0.2), 0.3, 1e-12));
  // induced objective reproduces the clipped surrogate at the same point
  const double p = 1.5, a = 1.0, eps = 0.2;
  const double objective_value = p * a - ppo_reference_drift(p, a, eps);
  const double clipped = std::min(p * a, std::clamp(p, 1.0 - eps, 1.0 + eps) * a);
  CHECK(close(objective_value, clipped, 1e-12));
  CHECK(close(clipped, 1.2, 1e-12));
}

TEST_CASE("ppo_reference_drift_dp piecewise derivative") {
  CHECK(ppo_reference_drift_dp(1.1, 1.0, 0.2) == 0.0);
  CHECK(ppo_reference_drift_dp(1.5, 1.0, 0.2) == 1.0);
  CHECK(ppo_reference_drift_dp(0.5, -1.0, 0.2) == -1.0);
  CHECK(ppo_reference_drift_dp(1.5, -1.0, 0.2) == 0.0);  // drift inactive
}

TEST_CASE("strip_temporal reduction is exact at n = 0") {
  Rng rng(2024);
  for (int rep = 0; rep < 1000; ++rep) {
    const auto net = DriftNet::random(true, rng, 8);
    const auto reduced = strip_temporal(net);
    const double p = rng.uniform(0.5, 1.5);
    const double a = rng.uniform(-1.0, 1.0);
    const double full = drift_value(net, drift_features(p, a, 0.0));
    const double base = drift_value(reduced, drift_features(p, a));
    CHECK(full == base);
  }
}

TEST_CASE("the no-bias tanh drift net is an even function of its parameters") {
  // negating every layer flips the hidden signs twice, so D(-phi) == D(phi);
  // antithetic ES pairs around phi = 0 therefore tie exactly, which is why
  // meta-training must not start from all-zero drift parameters
  Rng rng(888);
  for (int rep = 0; rep < 50; ++rep) {
    auto net = DriftNet::random(true, rng, 16);
    auto negated = net;
    for (double& w : negated.params) w = -w;
    const double p = rng.uniform(0.5, 1.5);
    const double a = rng.uniform(-1.0, 1.0);
    const double frac = rng.uniform();
    const auto f = drift_features(p, a, frac);
    CHECK(drift_value(net, f) == drift_value(negated, f));
    CHECK(drift_dp(net, p, a, frac) == drift_dp(negated, p, a, frac));
  }
}

TEST_CASE("lpo_policy_objective_grad with zero drift equals the importance-weighted gradient") {
  Rng rng(404);
  const nn::MlpSpec policy_spec{{3, 4, 2}, nn::Activation::Tanh, true};
  const auto params = nn::init_mlp_params(policy_spec, rng);
  std::vector<PolicyBatchItem> batch(6);
  for (auto& item : batch) {
    item.obs = {rng.normal(), rng.normal(), rng.normal()};
    item.action = static_cast<int>(rng.uniform_int(0, 1));
    item.advantage = rng.normal();
    item.old_prob = rng.uniform(0.2, 0.9);
    item.lifetime_frac = rng.uniform();
  }
  const auto zero_drift = DriftObjective::learned(DriftNet::zeros(true));
  const auto grad = lpo_policy_objective_grad(zero_drift, batch, policy_spec, params);

  // independent: mean_t A_t * grad p_t, via finite differences of the batch objective
  const auto fd = nn::finite_diff_grad(
      [&](std::span<const double> theta) {
        double total = 0.0;
        for (const auto& item : batch) {
          const auto logits = nn::mlp_forward(policy_spec, theta, item.obs);
          const double mx = std::max(logits[0], logits[1]);
          const double z = std::exp(logits[0] - mx) + std::exp(logits[1] - mx);
          const double prob = std::exp(logits[item.action] - mx) / z;
          total += (prob / item.old_prob) * item.advantage;
        }
        return total / batch.size();
      },
      params, 1e-6);
  CHECK(all_close(grad, fd, 1e-5, 1e-8));
}

TEST_CASE("lpo gradient at theta_new = theta_old with the PPO drift is the vanilla gradient") {
  Rng rng(505);
  const nn::MlpSpec policy_spec{{2, 3, 3}, nn::Activation::Tanh, true};
  const auto params = nn::init_mlp_params(policy_spec, rng);
  std::vector<PolicyBatchItem> batch(5);
  std::vector<double> probs(3);
  for (auto& item : batch) {
    item.obs = {rng.normal(), rng.normal()};
    item.action = static_cast<int>(rng.uniform_int(0, 2));
    item.advantage = rng.normal();
    item.lifetime_frac = 0.5;
    const auto logits = nn::mlp_forward(policy_spec, params, item.obs);
    std::copy(logits.begin(), logits.end(), probs.begin());
    agent::softmax_in_place(probs);
    item.old_prob = probs[item.action];  // p = 1 exactly
  }
  const auto ppo = DriftObjective::ppo_clip(0.2);
  const auto grad = lpo_policy_objective_grad(ppo, batch, policy_spec, params);

  // vanilla policy gradient: mean_t A_t grad log pi
  std::vector<double> want(policy_spec.param_count(), 0.0);
  std::vector<double> cot(3);
  for (const auto& item : batch) {
    const auto logits = nn::mlp_forward(policy_spec, params, item.obs);
    std::copy(logits.begin(), logits.end(), probs.begin());
    agent::softmax_in_place(probs);
    for (int a = 0; a < 3; ++a)
      cot[a] = item.advantage * ((a == item.action ? 1.0 : 0.0) - probs[a]);
    const auto g = nn::mlp_grad(policy_spec, params, item.obs, cot);
    axpy(1.0 / batch.size(), g.wrt_params, want);
  }
  CHECK(all_close(grad, want, 1e-10, 1e-12));
}

TEST_CASE("lpo_policy_objective_grad matches finite differences on a softmax bandit") {
  // two-action bandit: logits are the two parameters themselves
  const nn::MlpSpec policy_spec{{1, 2}, nn::Activation::Tanh, false};
  Rng rng(606);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> theta{rng.normal(), rng.normal()};
    const auto net = DriftNet::random(true, rng, 8);
    const auto drift = DriftObjective::learned(net);
    std::vector<PolicyBatchItem> batch(4);
    for (auto& item : batch) {
      item.obs = {1.0};
      item.action = static_cast<int>(rng.uniform_int(0, 1));
      item.advantage = rng.normal();
      item.old_prob = rng.uniform(0.3, 0.7);
      item.lifetime_frac = rng.uniform();
    }
    const auto grad = lpo_policy_objective_grad(drift, batch, policy_spec, theta);
    const auto fd = nn::finite_diff_grad(
        [&](std::span<const double> th) {
          double total = 0.0;
          for (const auto& item : batch) {
            const auto logits = nn::mlp_forward(policy_spec, th, item.obs);
            const double mx = std::max(logits[0], logits[1]);
            const double z = std::exp(logits[0] - mx) + std::exp(logits[1] - mx);
            const double prob = std::exp(logits[item.action] - mx) / z;
            const double p = prob / item.old_prob;
            total += p * item.advantage -
                     drift.value(p, item.advantage, item.lifetime_frac);
          }
          return total / batch.size();
        },
        theta, 1e-6);
    CHECK(all_close(grad, fd, 1e-6, 1e-9));
  }
}

TEST_CASE("drift condition audit reports identity-gradient magnitude") {
  const auto ppo = DriftObjective::ppo_clip(0.2);
  const double fracs[3] = {0.0, 0.5, 1.0};
  const auto audit = audit_drift_conditions(ppo, 0.5, 1.5, -1.0, 1.0, 16, fracs);
  CHECK(audit.negative_fraction == 0.0);  // the PPO drift is non-negative
  CHECK(audit.min_value >= 0.0);
  CHECK(audit.max_abs_dp_at_identity == 0.0);
  CHECK(audit.samples == 3 * 16 * 16);

  Rng rng(313);
  const auto net = DriftObjective::learned(DriftNet::random(true, rng, 16));
  const auto learned = audit_drift_conditions(net, 0.5, 1.5, -1.0, 1.0, 16, fracs);
  CHECK(learned.samples == 3 * 16 * 16);
  CHECK(learned.negative_fraction >= 0.0);
  CHECK(learned.negative_fraction <= 1.0);
}
