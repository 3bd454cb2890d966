#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tempo/rng.hpp"

namespace tempo::es {

enum class RankMode { PairwiseWinner, Centered, Raw };

struct EsConfig {
  int population_size = 64;  // even; population_size/2 antithetic pairs
  double sigma_init = 0.04;
  double sigma_decay = 0.999;
  double sigma_limit = 0.01;
  double learning_rate = 1e-4;
  double lr_decay = 0.999;
  double lr_limit = 1e-5;
  int generations = 128;
  bool centered_ranking = false;  // false -> pairwise winner/loser shaping
  int workers = 1;
  double fitness_floor = -1.0;

  void validate() const;
};

// Antithetic candidate pair: both members share one task draw.
struct FitnessPair {
  std::vector<double> noise;  // epsilon
  std::uint64_t task_seed = 0;
  double fitness_plus = 0.0;
  double fitness_minus = 0.0;
  double shaped_plus = 0.0;
  double shaped_minus = 0.0;
};

// Pure fitness of one candidate on one task; must be deterministic in
// (params, task_seed).
using FitnessFn = std::function<double(const std::vector<double>& params, std::uint64_t task_seed)>;

std::vector<FitnessPair> sample_population(const std::vector<double>& phi, double sigma,
                                           int population_size, Rng& rng);

// Evaluates phi +/- sigma*eps on the pair's task. Evaluation failures record
// the floor fitness instead of aborting the generation.
void evaluate_pair(const std::vector<double>& phi, FitnessPair& pair, double sigma,
                   const FitnessFn& fitness, double floor);

void rank_transform(std::vector<FitnessPair>& pairs, RankMode mode);

// mean over pairs of eps * (shaped_plus - shaped_minus) / (2 sigma), summed in
// pair-index order; an ascent direction on fitness.
std::vector<double> es_gradient(const std::vector<FitnessPair>& pairs, double sigma);

struct GenerationStats {
  int generation = 0;
  double mean_fitness = 0.0;  // raw, over all population members
  double best_fitness = 0.0;  // raw, best member this generation
  double sigma = 0.0;
  double lr = 0.0;
};

struct MetaTrainResult {
  std::vector<double> phi;
  std::vector<GenerationStats> log;
};

using GenerationCallback =
    std::function<void(const GenerationStats& stats, const std::vector<double>& phi)>;

// Adam ascent on the shaped ES gradient with multiplicative sigma/lr decay
// (floored at their limits). Pair evaluations run on `workers` threads; the
// reduction order is fixed, so results do not depend on the worker count.
MetaTrainResult meta_train(std::vector<double> phi0, const EsConfig& config,
                           const FitnessFn& fitness, Rng& rng,
                           const GenerationCallback& on_generation = {});

}  // namespace tempo::es
