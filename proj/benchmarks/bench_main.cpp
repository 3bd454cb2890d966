#include <benchmark/benchmark.h>

#include "tempo/analysis.hpp"
#include "tempo/drift.hpp"
#include "tempo/es.hpp"
#include "tempo/gridworld.hpp"
#include "tempo/inner_loop.hpp"
#include "tempo/nn.hpp"

using namespace tempo;

namespace {

void BM_MlpForward(benchmark::State& state) {
  const nn::MlpSpec spec{{53, 32, 5}, nn::Activation::Tanh, true};
  Rng rng(1);
  const auto params = nn::init_mlp_params(spec, rng);
  std::vector<double> input(53, 0.0);
  input[7] = 1.0;
  nn::MlpCache cache;
  for (auto _ : state) {
    nn::mlp_forward_cached(spec, params, input, cache);
    benchmark::DoNotOptimize(cache.output()[0]);
  }
}
BENCHMARK(BM_MlpForward);

void BM_MlpBackward(benchmark::State& state) {
  const nn::MlpSpec spec{{53, 32, 5}, nn::Activation::Tanh, true};
  Rng rng(1);
  const auto params = nn::init_mlp_params(spec, rng);
  std::vector<double> input(53, 0.0), grad(spec.param_count(), 0.0);
  const std::vector<double> cot{1.0, -0.5, 0.25, 0.0, 0.1};
  input[7] = 1.0;
  nn::MlpCache cache;
  for (auto _ : state) {
    nn::mlp_forward_cached(spec, params, input, cache);
    nn::mlp_backward_cached(spec, params, cache, cot, grad, {});
    benchmark::DoNotOptimize(grad[0]);
  }
}
BENCHMARK(BM_MlpBackward);

void BM_DriftDp(benchmark::State& state) {
  Rng rng(2);
  const auto net = objective::DriftNet::random(true, rng);
  objective::DriftEvalCache cache;
  double p = 0.8;
  for (auto _ : state) {
    benchmark::DoNotOptimize(objective::drift_dp(net, p, 0.5, 0.25, cache));
    p = p < 1.4 ? p + 0.01 : 0.8;
  }
}
BENCHMARK(BM_DriftDp);

void BM_LstmScan(benchmark::State& state) {
  objective::LpgConfig cfg;
  cfg.temporal = true;
  const auto spec = cfg.lstm_spec();
  Rng rng(3);
  const auto params = nn::init_lstm_params(spec, rng);
  std::vector<std::vector<double>> inputs(20, std::vector<double>(spec.input_width));
  for (auto& x : inputs)
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
  for (auto _ : state) {
    const auto outs = nn::lstm_scan_reversed(spec, params, inputs);
    benchmark::DoNotOptimize(outs[0][0]);
  }
}
BENCHMARK(BM_LstmScan);

void BM_EnvStep(benchmark::State& state) {
  const auto spec = env::dense_spec();
  Rng rng(4);
  env::GridWorld world(spec, Rng(5));
  for (auto _ : state) {
    const auto r = world.step(static_cast<int>(rng.uniform_int(0, 4)));
    benchmark::DoNotOptimize(r.reward);
  }
}
BENCHMARK(BM_EnvStep);

void BM_OptimalReturnOracle(benchmark::State& state) {
  const auto spec = env::dense_spec();
  for (auto _ : state) benchmark::DoNotOptimize(env::optimal_return_oracle(spec));
}
BENCHMARK(BM_OptimalReturnOracle);

void BM_GaeAdvantages(benchmark::State& state) {
  Rng rng(6);
  std::vector<env::Transition> stream(64);
  std::vector<double> values(65);
  for (auto& tr : stream) {
    tr.reward = rng.normal();
    tr.done = rng.uniform() < 0.05;
  }
  for (double& v : values) v = rng.normal();
  for (auto _ : state) {
    const auto adv = train::gae_advantages(stream, values, 0.99, 0.95);
    benchmark::DoNotOptimize(adv[0]);
  }
}
BENCHMARK(BM_GaeAdvantages);

void BM_EsGradient(benchmark::State& state) {
  Rng rng(7);
  std::vector<double> phi(2176, 0.0);
  auto pairs = es::sample_population(phi, 0.04, 16, rng);
  for (auto& p : pairs) {
    p.shaped_plus = 1.0;
    p.shaped_minus = -1.0;
  }
  for (auto _ : state) {
    const auto g = es::es_gradient(pairs, 0.04);
    benchmark::DoNotOptimize(g[0]);
  }
}
BENCHMARK(BM_EsGradient);

void BM_TrainLifetimeShort(benchmark::State& state) {
  const auto spec = env::dense_spec();
  train::TrainConfig cfg;
  cfg.horizon = 2048;
  cfg.rollout_length = 32;
  cfg.num_parallel_envs = 4;
  cfg.agent_hidden = 16;
  cfg.eval_episodes = 4;
  const objective::InnerObjective obj = objective::PpoRefObjective{0.2};
  std::uint64_t seed = 0;
  for (auto _ : state) {
    const auto result = train::train_lifetime(obj, spec, cfg, ++seed);
    benchmark::DoNotOptimize(result.fitness);
  }
}
BENCHMARK(BM_TrainLifetimeShort)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
