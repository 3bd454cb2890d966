#include "tempo/experiment.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "tempo/analysis.hpp"
#include "tempo/error.hpp"
#include "tempo/inner_loop.hpp"

namespace tempo::exp {

namespace {

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << content;
  if (!os) throw IoError("write failed: " + path.string());
}

std::string checkpoint_name(std::uint64_t seed, int generation, bool final) {
  char buf[80];
  if (final)
    std::snprintf(buf, sizeof(buf), "checkpoint_seed%llu_final.txt",
                  static_cast<unsigned long long>(seed));
  else
    std::snprintf(buf, sizeof(buf), "checkpoint_seed%llu_gen%04d.txt",
                  static_cast<unsigned long long>(seed), generation);
  return buf;
}

}  // namespace

std::string experiment_id(const cfg::ExperimentConfig& config) {
  std::istringstream is(cfg::dump_config(config));
  std::ostringstream content;
  std::string line;
  while (std::getline(is, line)) {
    if (line.rfind("out_dir", 0) == 0 || line.rfind("workers", 0) == 0) continue;
    content << line << "\n";
  }
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(content.str())));
  return buf;
}

void write_manifest(const cfg::ExperimentConfig& config, const std::filesystem::path& out_dir) {
  std::ostringstream os;
  os << "# tempo experiment manifest (re-runnable config)\n";
  os << "# experiment_id " << experiment_id(config) << "\n";
  os << cfg::dump_config(config);
  write_text_file(out_dir / "manifest.txt", os.str());
}

env::GridWorldSpec resolve_env_spec(const cfg::ExperimentConfig& config, std::uint64_t task_seed) {
  if (config.env == "dense") return env::dense_spec();
  if (config.env == "sparse") return env::sparse_spec();
  if (config.env == "griddist") return env::sample_gridworld(env::GridDistConfig{}, task_seed);
  if (config.env.rfind("fixed:", 0) == 0) {
    const std::string path = config.env.substr(6);
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open env spec file: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return env::GridWorldSpec::from_text(ss.str());
  }
  throw ConfigError("unknown env tag '" + config.env + "'");
}

es::FitnessFn make_fitness(const cfg::ExperimentConfig& config) {
  return [config](const std::vector<double>& params, std::uint64_t task_seed) {
    const env::GridWorldSpec spec = resolve_env_spec(config, task_seed);
    train::TrainConfig tcfg = config.train;
    tcfg.horizon = config.horizons[derive_seed(task_seed, 0x686f72ULL) % config.horizons.size()];
    std::uint64_t lifetime_seed = derive_seed(task_seed, 0x6c696665ULL);
    if (!config.share_init_seed) {
      // mix the candidate parameters in, so the pair members use distinct
      // agent initializations
      std::string bytes(reinterpret_cast<const char*>(params.data()),
                        params.size() * sizeof(double));
      lifetime_seed = derive_seed(lifetime_seed, fnv1a64(bytes));
    }
    const objective::InnerObjective obj = objective::make_objective(
        config.objective, params, config.lpg, config.drift_hidden, config.clip_eps);
    return train::train_lifetime(obj, spec, tcfg, lifetime_seed).fitness;
  };
}

void run_meta_train(const cfg::ExperimentConfig& config, std::ostream& log) {
  config.validate();
  const std::filesystem::path out_dir(config.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + out_dir.string());
  write_manifest(config, out_dir);
  const std::string expid = experiment_id(config);

  std::ofstream gen_csv(out_dir / "generations.csv", std::ios::binary);
  if (!gen_csv) throw IoError("cannot open generations.csv for writing");
  gen_csv << "experiment_id,seed,generation,mean_fitness,best_fitness,sigma,lr\n";

  const es::FitnessFn fitness = make_fitness(config);
  es::EsConfig es_cfg = config.es;
  es_cfg.workers = config.workers;

  for (const std::uint64_t seed : config.seeds) {
    Rng meta_rng(derive_seed(seed, 0x6d657461ULL));
    std::vector<double> phi0;
    const std::size_t dim =
        objective::phi_dimension(config.objective, config.lpg, config.drift_hidden);
    if (config.objective == objective::ObjectiveKind::Lpg ||
        config.objective == objective::ObjectiveKind::TaLpg) {
      objective::LpgConfig lc = config.lpg;
      lc.temporal = config.objective == objective::ObjectiveKind::TaLpg;
      Rng init_rng(derive_seed(seed, 0x696e6974ULL));
      phi0 = nn::init_lstm_params(lc.lstm_spec(), init_rng);
    } else {
      // Small random start at the perturbation scale. The no-bias tanh drift
      // net is an even function of its parameters (negating every layer
      // leaves it unchanged), so antithetic pairs around phi = 0 tie exactly
      // and the shaped gradient vanishes there; phi = 0 must be avoided.
      Rng init_rng(derive_seed(seed, 0x696e6974ULL));
      phi0.resize(dim);
      for (double& v : phi0) v = config.es.sigma_init * init_rng.normal();
    }

    log << "meta-train objective=" << objective::objective_tag(config.objective)
        << " seed=" << seed << " phi_dim=" << dim << "\n";

    const auto on_generation = [&](const es::GenerationStats& stats,
                                   const std::vector<double>& phi) {
      gen_csv << expid << ',' << seed << ',' << stats.generation << ','
              << fmt9(stats.mean_fitness) << ',' << fmt9(stats.best_fitness) << ','
              << fmt9(stats.sigma) << ',' << fmt9(stats.lr) << '\n';
      gen_csv.flush();
      log << "  gen " << stats.generation << " mean " << fmt9(stats.mean_fitness) << " best "
          << fmt9(stats.best_fitness) << "\n";
      if (config.checkpoint_every > 0 && stats.generation % config.checkpoint_every == 0) {
        const auto obj = objective::make_objective(config.objective, phi, config.lpg,
                                                   config.drift_hidden, config.clip_eps);
        ckpt::save_checkpoint((out_dir / checkpoint_name(seed, stats.generation, false)).string(),
                              ckpt::checkpoint_from_objective(obj));
      }
    };

    const auto result = es::meta_train(phi0, es_cfg, fitness, meta_rng, on_generation);
    const auto obj = objective::make_objective(config.objective, result.phi, config.lpg,
                                               config.drift_hidden, config.clip_eps);
    ckpt::save_checkpoint((out_dir / checkpoint_name(seed, 0, true)).string(),
                          ckpt::checkpoint_from_objective(obj));
  }
}

void run_meta_test(const cfg::ExperimentConfig& config, const std::string& checkpoint_path,
                   std::ostream& log) {
  config.validate();
  objective::InnerObjective obj =
      checkpoint_path.empty() && config.objective == objective::ObjectiveKind::PpoRef
          ? objective::InnerObjective(objective::PpoRefObjective{config.clip_eps})
          : ckpt::objective_from_checkpoint(ckpt::load_checkpoint(checkpoint_path), config.lpg);

  const std::filesystem::path out_dir(config.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + out_dir.string());
  write_manifest(config, out_dir);
  const std::string expid = experiment_id(config);

  std::ofstream summary(out_dir / "summary.csv", std::ios::binary);
  if (!summary) throw IoError("cannot open summary.csv for writing");
  summary << "experiment_id,seed,N,final_return_normalized,raw_return,oracle_value,diverged\n";

  for (const long long horizon : config.horizons) {
    for (const std::uint64_t seed : config.seeds) {
      const env::GridWorldSpec spec = resolve_env_spec(config, derive_seed(seed, 0x656e76ULL));
      train::TrainConfig tcfg = config.train;
      tcfg.horizon = horizon;
      if (tcfg.trace_eval_every == 0) {
        const long long batch = static_cast<long long>(tcfg.rollout_length) * tcfg.num_parallel_envs;
        const long long updates = (horizon + batch - 1) / batch;
        tcfg.trace_eval_every = static_cast<int>(std::max<long long>(1, updates / 16));
      }
      auto result = train::train_lifetime(obj, spec, tcfg, derive_seed(seed, 0x74657374ULL),
                                          /*record_trace=*/true);
      result.trace.experiment_id = expid;
      result.trace.seed = seed;

      char name[64];
      std::snprintf(name, sizeof(name), "trace_N%lld_seed%llu.csv", horizon,
                    static_cast<unsigned long long>(seed));
      std::ofstream trace_csv(out_dir / name, std::ios::binary);
      if (!trace_csv) throw IoError("cannot open trace file for writing");
      const analysis::MetricTrace traces[1] = {result.trace};
      analysis::write_trace_csv(trace_csv, traces);

      summary << expid << ',' << seed << ',' << horizon << ','
              << fmt9(result.normalized ? result.normalized_return : result.raw_return) << ','
              << fmt9(result.raw_return) << ',' << fmt9(result.oracle_value) << ','
              << (result.diverged ? 1 : 0) << '\n';
      log << "meta-test N=" << horizon << " seed=" << seed << " return "
          << fmt9(result.normalized ? result.normalized_return : result.raw_return) << "\n";
    }
  }
}

void run_analyze(const cfg::ExperimentConfig& config, const std::string& checkpoint_path,
                 std::ostream& log) {
  config.validate();
  objective::InnerObjective obj =
      checkpoint_path.empty() && config.objective == objective::ObjectiveKind::PpoRef
          ? objective::InnerObjective(objective::PpoRefObjective{config.clip_eps})
          : ckpt::objective_from_checkpoint(ckpt::load_checkpoint(checkpoint_path), config.lpg);
  if (!objective::is_drift_style(obj))
    throw ConfigError("analyze requires a drift-style objective (lpo, ta-lpo, ppo-ref)");

  const objective::DriftObjective drift = objective::make_drift_objective(obj);
  std::vector<analysis::DerivativeGrid> grids;
  for (const double frac : {0.0, 0.5, 1.0})
    grids.push_back(analysis::objective_derivative_grid(drift, frac));

  const std::filesystem::path out_dir(config.out_dir);
  analysis::export_artifacts(grids, {}, out_dir);
  write_manifest(config, out_dir);
  log << "analyze: wrote " << grids.size() << " derivative grids to " << out_dir.string() << "\n";
}

}  // namespace tempo::exp
