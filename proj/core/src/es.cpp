#include "tempo/es.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "tempo/error.hpp"
#include "tempo/vec.hpp"

namespace tempo::es {

void EsConfig::validate() const {
  if (population_size <= 0 || population_size % 2 != 0)
    throw ConfigError("EsConfig: population_size must be a positive even count");
  if (!(sigma_init > 0.0)) throw ConfigError("EsConfig: sigma_init must be positive");
  if (sigma_limit > sigma_init) throw ConfigError("EsConfig: sigma_limit exceeds sigma_init");
  if (lr_limit > learning_rate) throw ConfigError("EsConfig: lr_limit exceeds learning_rate");
  if (!(sigma_decay > 0.0 && sigma_decay <= 1.0) || !(lr_decay > 0.0 && lr_decay <= 1.0))
    throw ConfigError("EsConfig: decays must lie in (0,1]");
  if (generations < 0) throw ConfigError("EsConfig: negative generation count");
  if (workers <= 0) throw ConfigError("EsConfig: workers must be positive");
}

std::vector<FitnessPair> sample_population(const std::vector<double>& phi, double sigma,
                                           int population_size, Rng& rng) {
  if (population_size <= 0 || population_size % 2 != 0)
    throw ConfigError("sample_population: population size must be a positive even count");
  (void)sigma;
  std::vector<FitnessPair> pairs(population_size / 2);
  for (auto& pair : pairs) {
    pair.noise.resize(phi.size());
    for (double& x : pair.noise) x = rng.normal();
    pair.task_seed = rng.next_u64();
  }
  return pairs;
}

void evaluate_pair(const std::vector<double>& phi, FitnessPair& pair, double sigma,
                   const FitnessFn& fitness, double floor) {
  std::vector<double> candidate(phi.size());
  const auto eval = [&](double sign) {
    for (std::size_t i = 0; i < phi.size(); ++i) candidate[i] = phi[i] + sign * sigma * pair.noise[i];
    try {
      const double f = fitness(candidate, pair.task_seed);
      return std::isfinite(f) ? f : floor;
    } catch (...) {
      return floor;
    }
  };
  pair.fitness_plus = eval(+1.0);
  pair.fitness_minus = eval(-1.0);
}

void rank_transform(std::vector<FitnessPair>& pairs, RankMode mode) {
  switch (mode) {
    case RankMode::Raw:
      for (auto& p : pairs) {
        p.shaped_plus = p.fitness_plus;
        p.shaped_minus = p.fitness_minus;
      }
      return;
    case RankMode::PairwiseWinner:
      for (auto& p : pairs) {
        if (p.fitness_plus > p.fitness_minus) {
          p.shaped_plus = 1.0;
          p.shaped_minus = -1.0;
        } else if (p.fitness_plus < p.fitness_minus) {
          p.shaped_plus = -1.0;
          p.shaped_minus = 1.0;
        } else {
          p.shaped_plus = 0.0;
          p.shaped_minus = 0.0;
        }
      }
      return;
    case RankMode::Centered: {
      // population-wide centered ranks in [-0.5, 0.5]
      const std::size_t count = 2 * pairs.size();
      std::vector<std::pair<double, std::size_t>> order(count);
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        order[2 * i] = {pairs[i].fitness_plus, 2 * i};
        order[2 * i + 1] = {pairs[i].fitness_minus, 2 * i + 1};
      }
      std::stable_sort(order.begin(), order.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      for (std::size_t rank = 0; rank < count; ++rank) {
        const double shaped =
            count > 1 ? static_cast<double>(rank) / static_cast<double>(count - 1) - 0.5 : 0.0;
        const std::size_t member = order[rank].second;
        if (member % 2 == 0)
          pairs[member / 2].shaped_plus = shaped;
        else
          pairs[member / 2].shaped_minus = shaped;
      }
      return;
    }
  }
}

std::vector<double> es_gradient(const std::vector<FitnessPair>& pairs, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("es_gradient: sigma must be positive");
  if (pairs.empty()) return {};
  std::vector<double> grad(pairs.front().noise.size(), 0.0);
  for (const auto& p : pairs) {
    const double w = (p.shaped_plus - p.shaped_minus) / (2.0 * sigma);
    axpy(w, p.noise, grad);
  }
  scale(grad, 1.0 / static_cast<double>(pairs.size()));
  return grad;
}

namespace {

void evaluate_all(const std::vector<double>& phi, std::vector<FitnessPair>& pairs, double sigma,
                  const FitnessFn& fitness, double floor, int workers) {
  if (workers <= 1 || pairs.size() <= 1) {
    for (auto& pair : pairs) evaluate_pair(phi, pair, sigma, fitness, floor);
    return;
  }
  std::atomic<std::size_t> next{0};
  const int nthreads = std::min<int>(workers, static_cast<int>(pairs.size()));
  std::vector<std::thread> threads;
  threads.reserve(nthreads);
  for (int w = 0; w < nthreads; ++w) {
    threads.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= pairs.size()) break;
        evaluate_pair(phi, pairs[i], sigma, fitness, floor);
      }
    });
  }
  for (auto& t : threads) t.join();
}

}  // namespace

MetaTrainResult meta_train(std::vector<double> phi0, const EsConfig& config,
                           const FitnessFn& fitness, Rng& rng,
                           const GenerationCallback& on_generation) {
  config.validate();
  MetaTrainResult result;
  result.phi = std::move(phi0);
  result.log.reserve(config.generations);

  // adam state for the outer ascent
  std::vector<double> m(result.phi.size(), 0.0), v(result.phi.size(), 0.0);
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;

  double sigma = config.sigma_init;
  double lr = config.learning_rate;
  const RankMode mode = config.centered_ranking ? RankMode::Centered : RankMode::PairwiseWinner;

  for (int gen = 1; gen <= config.generations; ++gen) {
    auto pairs = sample_population(result.phi, sigma, config.population_size, rng);
    evaluate_all(result.phi, pairs, sigma, fitness, config.fitness_floor, config.workers);
    rank_transform(pairs, mode);
    const auto grad = es_gradient(pairs, sigma);

    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(gen));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(gen));
    for (std::size_t i = 0; i < result.phi.size(); ++i) {
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * grad[i];
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * grad[i] * grad[i];
      result.phi[i] += lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + kEps);
    }

    GenerationStats stats;
    stats.generation = gen;
    stats.sigma = sigma;
    stats.lr = lr;
    double sum = 0.0, best = -std::numeric_limits<double>::infinity();
    for (const auto& p : pairs) {
      sum += p.fitness_plus + p.fitness_minus;
      best = std::max({best, p.fitness_plus, p.fitness_minus});
    }
    stats.mean_fitness = sum / static_cast<double>(config.population_size);
    stats.best_fitness = best;
    result.log.push_back(stats);
    if (on_generation) on_generation(stats, result.phi);

    sigma = std::max(sigma * config.sigma_decay, config.sigma_limit);
    lr = std::max(lr * config.lr_decay, config.lr_limit);
  }
  return result;
}

}  // namespace tempo::es
