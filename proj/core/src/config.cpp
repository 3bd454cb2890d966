#include "tempo/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "tempo/error.hpp"

namespace tempo::cfg {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("line " + std::to_string(line) + ": " + msg);
}

double parse_real(const std::string& v, int line, const std::string& key) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size() || v.empty() || !std::isfinite(x))
    fail(line, "invalid real for '" + key + "': " + v);
  return x;
}

long long parse_int(const std::string& v, int line, const std::string& key) {
  long long x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size())
    fail(line, "invalid integer for '" + key + "': " + v);
  return x;
}

bool parse_bool(const std::string& v, int line, const std::string& key) {
  if (v == "true") return true;
  if (v == "false") return false;
  fail(line, "invalid boolean for '" + key + "' (want true/false): " + v);
}

template <typename T, typename F>
std::vector<T> parse_list(const std::string& v, int line, const std::string& key, F item) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part = trim(part);
    if (part.empty()) fail(line, "empty element in list for '" + key + "'");
    out.push_back(item(part));
  }
  if (out.empty()) fail(line, "empty list for '" + key + "'");
  return out;
}

void check_range(bool ok, int line, const std::string& key, const std::string& what) {
  if (!ok) fail(line, "value for '" + key + "' out of range: " + what);
}

}  // namespace

std::string format_number(double v) {
  char buf[40];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

std::string format_bool(bool v) { return v ? "true" : "false"; }

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ConfigError("config: seeds list is empty");
  if (horizons.empty()) throw ConfigError("config: horizons list is empty");
  for (long long h : horizons)
    if (h <= 0) throw ConfigError("config: horizons must be positive");
  if (workers <= 0) throw ConfigError("config: workers must be positive");
  if (checkpoint_every < 0) throw ConfigError("config: checkpoint_every must be >= 0");
  if (drift_hidden <= 0) throw ConfigError("config: drift_hidden must be positive");
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw ConfigError("config: clip_eps outside (0,1)");
  if (lpg.bootstrap_dim <= 0 || lpg.lstm_hidden <= 0)
    throw ConfigError("config: lpg dimensions must be positive");
  if (env != "griddist" && env != "dense" && env != "sparse" && env.rfind("fixed:", 0) != 0)
    throw ConfigError("config: unknown env tag '" + env + "'");
  es.validate();
  train.validate();
}

ExperimentConfig defaults_for(objective::ObjectiveKind kind) {
  ExperimentConfig c;
  c.objective = kind;
  // outer-loop defaults shared by every objective
  c.es.learning_rate = 1e-4;
  c.es.lr_decay = 0.999;
  c.es.lr_limit = 1e-5;
  c.es.population_size = 64;
  c.es.generations = 128;
  c.es.centered_ranking = false;
  c.train.discount = 0.99;

  const bool lpg_family = kind == objective::ObjectiveKind::Lpg ||
                          kind == objective::ObjectiveKind::TaLpg;
  if (lpg_family) {
    c.env = "griddist";
    c.es.sigma_init = 0.003;
    c.es.sigma_decay = 1.0;
    c.es.sigma_limit = 0.001;
    c.train.rollout_length = 20;
    c.train.optimizer = train::OptimizerKind::Sgd;
    c.train.learning_rate = 0.01;
    c.train.entropy_coef = 0.0;  // beta0 plays this role inside the update
    c.train.max_grad_norm = 0.5;
  } else {
    c.env = "dense";
    c.es.sigma_init = 0.04;
    c.es.sigma_decay = 0.999;
    c.es.sigma_limit = 0.01;
    c.train.rollout_length = 64;
    c.train.optimizer = train::OptimizerKind::Adam;
    c.train.learning_rate = 2.5e-3;
    c.train.entropy_coef = 0.003;
    c.train.max_grad_norm = kind == objective::ObjectiveKind::PpoRef ? 0.5 : 8.0;
  }
  c.lpg.temporal = kind == objective::ObjectiveKind::TaLpg;
  return c;
}

namespace {

using Setter = std::function<void(ExperimentConfig&, const std::string&, int)>;

const std::map<std::string, Setter>& key_table() {
  static const std::map<std::string, Setter> table = {
      {"objective", [](ExperimentConfig& c, const std::string& v, int) {
         c.objective = objective::parse_objective_tag(v);
       }},
      {"env", [](ExperimentConfig& c, const std::string& v, int line) {
         if (v != "griddist" && v != "dense" && v != "sparse" && v.rfind("fixed:", 0) != 0)
           fail(line, "unknown env tag '" + v + "'");
         c.env = v;
       }},
      {"seeds", [](ExperimentConfig& c, const std::string& v, int line) {
         c.seeds = parse_list<std::uint64_t>(v, line, "seeds", [&](const std::string& s) {
           return static_cast<std::uint64_t>(parse_int(s, line, "seeds"));
         });
       }},
      {"horizons", [](ExperimentConfig& c, const std::string& v, int line) {
         c.horizons = parse_list<long long>(v, line, "horizons", [&](const std::string& s) {
           const long long h = parse_int(s, line, "horizons");
           check_range(h > 0, line, "horizons", s);
           return h;
         });
       }},
      {"out_dir", [](ExperimentConfig& c, const std::string& v, int) { c.out_dir = v; }},
      {"workers", [](ExperimentConfig& c, const std::string& v, int line) {
         c.workers = static_cast<int>(parse_int(v, line, "workers"));
         check_range(c.workers > 0, line, "workers", v);
       }},
      {"checkpoint_every", [](ExperimentConfig& c, const std::string& v, int line) {
         c.checkpoint_every = static_cast<int>(parse_int(v, line, "checkpoint_every"));
         check_range(c.checkpoint_every >= 0, line, "checkpoint_every", v);
       }},
      {"share_init_seed", [](ExperimentConfig& c, const std::string& v, int line) {
         c.share_init_seed = parse_bool(v, line, "share_init_seed");
       }},
      {"population_size", [](ExperimentConfig& c, const std::string& v, int line) {
         c.es.population_size = static_cast<int>(parse_int(v, line, "population_size"));
         check_range(c.es.population_size > 0 && c.es.population_size % 2 == 0, line,
                     "population_size", v + " (must be a positive even count)");
       }},
      {"generations", [](ExperimentConfig& c, const std::string& v, int line) {
         c.es.generations = static_cast<int>(parse_int(v, line, "generations"));
         check_range(c.es.generations >= 0, line, "generations", v);
       }},
      {"sigma_init", [](ExperimentConfig& c, const std::string& v, int line) {
         c.es.sigma_init = parse_real(v, line, "sigma_init");
         check_range(c.es.sigma_init > 0.0, line, "sigma_init", v);
       }},
      {"sigma_decay", [](ExperimentConfig& c, const std::string& v, int line) {
         c.es.sigma_decay = parse_real(v, line, "sigma_decay");
         check_range(c.es.sigma_decay > 0.0 && c.es.sigma_decay <= 1.0, line, "sigma_decay", v);
       }},
      {"sigma_limit", [](ExperimentConfig& c, const std::string& v, int line) {
         c.es.sigma_limit = parse_real(v, line, "sigma_limit");
         check_range(c.es.sigma_limit >= 0.0, line, "sigma_limit", v);
       }},
      {"outer_lr", [](ExperimentConfig& c, const std::string& v, int line) {
         c.es.learning_rate = parse_real(v, line, "outer_lr");
         check_range(c.es.learning_rate > 0.0, line, "outer_lr", v);
       }},
      {"lr_decay", [](ExperimentConfig& c, const std::string& v, int line) {
         c.es.lr_decay = parse_real(v, line, "lr_decay");
         check_range(c.es.lr_decay > 0.0 && c.es.lr_decay <= 1.0, line, "lr_decay", v);
       }},
      {"lr_limit", [](ExperimentConfig& c, const std::string& v, int line) {
         c.es.lr_limit = parse_real(v, line, "lr_limit");
         check_range(c.es.lr_limit >= 0.0, line, "lr_limit", v);
       }},
      {"centered_ranking", [](ExperimentConfig& c, const std::string& v, int line) {
         c.es.centered_ranking = parse_bool(v, line, "centered_ranking");
       }},
      {"rollout_length", [](ExperimentConfig& c, const std::string& v, int line) {
         c.train.rollout_length = static_cast<int>(parse_int(v, line, "rollout_length"));
         check_range(c.train.rollout_length > 0, line, "rollout_length", v);
       }},
      {"num_parallel_envs", [](ExperimentConfig& c, const std::string& v, int line) {
         c.train.num_parallel_envs = static_cast<int>(parse_int(v, line, "num_parallel_envs"));
         check_range(c.train.num_parallel_envs > 0, line, "num_parallel_envs", v);
       }},
      {"learning_rate", [](ExperimentConfig& c, const std::string& v, int line) {
         c.train.learning_rate = parse_real(v, line, "learning_rate");
         check_range(c.train.learning_rate >= 0.0, line, "learning_rate", v);
       }},
      {"optimizer", [](ExperimentConfig& c, const std::string& v, int line) {
         if (v == "sgd") c.train.optimizer = train::OptimizerKind::Sgd;
         else if (v == "adam") c.train.optimizer = train::OptimizerKind::Adam;
         else fail(line, "invalid optimizer '" + v + "' (want sgd|adam)");
       }},
      {"lr_schedule", [](ExperimentConfig& c, const std::string& v, int line) {
         if (v == "constant") c.train.lr_schedule = train::LrSchedule::Constant;
         else if (v == "linear-decay") c.train.lr_schedule = train::LrSchedule::LinearDecay;
         else fail(line, "invalid lr_schedule '" + v + "' (want constant|linear-decay)");
       }},
      {"gamma", [](ExperimentConfig& c, const std::string& v, int line) {
         c.train.discount = parse_real(v, line, "gamma");
         check_range(c.train.discount > 0.0 && c.train.discount < 1.0, line, "gamma", v);
       }},
      {"gae_lambda", [](ExperimentConfig& c, const std::string& v, int line) {
         c.train.gae_lambda = parse_real(v, line, "gae_lambda");
         check_range(c.train.gae_lambda >= 0.0 && c.train.gae_lambda <= 1.0, line, "gae_lambda", v);
       }},
      {"ppo_epochs", [](ExperimentConfig& c, const std::string& v, int line) {
         c.train.ppo_epochs = static_cast<int>(parse_int(v, line, "ppo_epochs"));
         check_range(c.train.ppo_epochs > 0, line, "ppo_epochs", v);
       }},
      {"ppo_minibatches", [](ExperimentConfig& c, const std::string& v, int line) {
         c.train.ppo_minibatches = static_cast<int>(parse_int(v, line, "ppo_minibatches"));
         check_range(c.train.ppo_minibatches > 0, line, "ppo_minibatches", v);
       }},
      {"entropy_coef", [](ExperimentConfig& c, const std::string& v, int line) {
         c.train.entropy_coef = parse_real(v, line, "entropy_coef");
       }},
      {"value_coef", [](ExperimentConfig& c, const std::string& v, int line) {
         c.train.value_coef = parse_real(v, line, "value_coef");
         check_range(c.train.value_coef >= 0.0, line, "value_coef", v);
       }},
      {"max_grad_norm", [](ExperimentConfig& c, const std::string& v, int line) {
         c.train.max_grad_norm = parse_real(v, line, "max_grad_norm");
         check_range(c.train.max_grad_norm > 0.0, line, "max_grad_norm", v);
       }},
      {"agent_hidden", [](ExperimentConfig& c, const std::string& v, int line) {
         c.train.agent_hidden = static_cast<int>(parse_int(v, line, "agent_hidden"));
         check_range(c.train.agent_hidden > 0, line, "agent_hidden", v);
       }},
      {"eval_episodes", [](ExperimentConfig& c, const std::string& v, int line) {
         c.train.eval_episodes = static_cast<int>(parse_int(v, line, "eval_episodes"));
         check_range(c.train.eval_episodes > 0, line, "eval_episodes", v);
       }},
      {"trace_eval_every", [](ExperimentConfig& c, const std::string& v, int line) {
         c.train.trace_eval_every = static_cast<int>(parse_int(v, line, "trace_eval_every"));
         check_range(c.train.trace_eval_every >= 0, line, "trace_eval_every", v);
       }},
      {"trace_eval_episodes", [](ExperimentConfig& c, const std::string& v, int line) {
         c.train.trace_eval_episodes = static_cast<int>(parse_int(v, line, "trace_eval_episodes"));
         check_range(c.train.trace_eval_episodes > 0, line, "trace_eval_episodes", v);
       }},
      {"fitness_floor", [](ExperimentConfig& c, const std::string& v, int line) {
         c.train.fitness_floor = parse_real(v, line, "fitness_floor");
         c.es.fitness_floor = c.train.fitness_floor;
       }},
      {"bootstrap_dim", [](ExperimentConfig& c, const std::string& v, int line) {
         c.lpg.bootstrap_dim = static_cast<int>(parse_int(v, line, "bootstrap_dim"));
         check_range(c.lpg.bootstrap_dim > 0, line, "bootstrap_dim", v);
       }},
      {"lstm_hidden", [](ExperimentConfig& c, const std::string& v, int line) {
         c.lpg.lstm_hidden = static_cast<int>(parse_int(v, line, "lstm_hidden"));
         check_range(c.lpg.lstm_hidden > 0, line, "lstm_hidden", v);
       }},
      {"alpha_y", [](ExperimentConfig& c, const std::string& v, int line) {
         c.lpg.alpha_y = parse_real(v, line, "alpha_y");
         check_range(c.lpg.alpha_y >= 0.0, line, "alpha_y", v);
       }},
      {"beta0", [](ExperimentConfig& c, const std::string& v, int line) {
         c.lpg.beta0 = parse_real(v, line, "beta0");
         check_range(c.lpg.beta0 >= 0.0, line, "beta0", v);
       }},
      {"beta1", [](ExperimentConfig& c, const std::string& v, int line) {
         c.lpg.beta1 = parse_real(v, line, "beta1");
         check_range(c.lpg.beta1 >= 0.0, line, "beta1", v);
       }},
      {"beta2", [](ExperimentConfig& c, const std::string& v, int line) {
         c.lpg.beta2 = parse_real(v, line, "beta2");
         check_range(c.lpg.beta2 >= 0.0, line, "beta2", v);
       }},
      {"beta3", [](ExperimentConfig& c, const std::string& v, int line) {
         c.lpg.beta3 = parse_real(v, line, "beta3");
         check_range(c.lpg.beta3 >= 0.0, line, "beta3", v);
       }},
      {"drift_hidden", [](ExperimentConfig& c, const std::string& v, int line) {
         c.drift_hidden = static_cast<int>(parse_int(v, line, "drift_hidden"));
         check_range(c.drift_hidden > 0, line, "drift_hidden", v);
       }},
      {"clip_eps", [](ExperimentConfig& c, const std::string& v, int line) {
         c.clip_eps = parse_real(v, line, "clip_eps");
         check_range(c.clip_eps > 0.0 && c.clip_eps < 1.0, line, "clip_eps", v);
       }},
  };
  return table;
}

struct KvLine {
  std::string key, value;
  int line = 0;
};

std::vector<KvLine> tokenize(const std::string& text) {
  std::vector<KvLine> out;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(lineno, "expected 'key = value': " + line);
    KvLine kv;
    kv.key = trim(line.substr(0, eq));
    kv.value = trim(line.substr(eq + 1));
    kv.line = lineno;
    if (kv.key.empty()) fail(lineno, "empty key");
    out.push_back(std::move(kv));
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  const auto kvs = tokenize(text);
  // resolve objective first so family defaults apply before overrides
  objective::ObjectiveKind kind = objective::ObjectiveKind::TaLpo;
  for (const auto& kv : kvs) {
    if (kv.key == "objective") {
      try {
        kind = objective::parse_objective_tag(kv.value);
      } catch (const ConfigError& e) {
        fail(kv.line, e.what());
      }
    }
  }
  ExperimentConfig config = defaults_for(kind);
  const auto& table = key_table();
  for (const auto& kv : kvs) {
    const auto it = table.find(kv.key);
    if (it == table.end()) fail(kv.line, "unknown key '" + kv.key + "'");
    it->second(config, kv.value, kv.line);
  }
  config.validate();
  return config;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str());
}

std::string dump_config(const ExperimentConfig& config) {
  std::ostringstream os;
  os << "objective = " << objective::objective_tag(config.objective) << "\n";
  os << "env = " << config.env << "\n";
  os << "seeds = ";
  for (std::size_t i = 0; i < config.seeds.size(); ++i)
    os << (i ? "," : "") << config.seeds[i];
  os << "\n";
  os << "horizons = ";
  for (std::size_t i = 0; i < config.horizons.size(); ++i)
    os << (i ? "," : "") << config.horizons[i];
  os << "\n";
  os << "out_dir = " << config.out_dir << "\n";
  os << "workers = " << config.workers << "\n";
  os << "checkpoint_every = " << config.checkpoint_every << "\n";
  os << "share_init_seed = " << format_bool(config.share_init_seed) << "\n";
  os << "population_size = " << config.es.population_size << "\n";
  os << "generations = " << config.es.generations << "\n";
  os << "sigma_init = " << format_number(config.es.sigma_init) << "\n";
  os << "sigma_decay = " << format_number(config.es.sigma_decay) << "\n";
  os << "sigma_limit = " << format_number(config.es.sigma_limit) << "\n";
  os << "outer_lr = " << format_number(config.es.learning_rate) << "\n";
  os << "lr_decay = " << format_number(config.es.lr_decay) << "\n";
  os << "lr_limit = " << format_number(config.es.lr_limit) << "\n";
  os << "centered_ranking = " << format_bool(config.es.centered_ranking) << "\n";
  os << "rollout_length = " << config.train.rollout_length << "\n";
  os << "num_parallel_envs = " << config.train.num_parallel_envs << "\n";
  os << "learning_rate = " << format_number(config.train.learning_rate) << "\n";
  os << "optimizer = " << (config.train.optimizer == train::OptimizerKind::Adam ? "adam" : "sgd")
     << "\n";
  os << "lr_schedule = "
     << (config.train.lr_schedule == train::LrSchedule::Constant ? "constant" : "linear-decay")
     << "\n";
  os << "gamma = " << format_number(config.train.discount) << "\n";
  os << "gae_lambda = " << format_number(config.train.gae_lambda) << "\n";
  os << "ppo_epochs = " << config.train.ppo_epochs << "\n";
  os << "ppo_minibatches = " << config.train.ppo_minibatches << "\n";
  os << "entropy_coef = " << format_number(config.train.entropy_coef) << "\n";
  os << "value_coef = " << format_number(config.train.value_coef) << "\n";
  os << "max_grad_norm = " << format_number(config.train.max_grad_norm) << "\n";
  os << "agent_hidden = " << config.train.agent_hidden << "\n";
  os << "eval_episodes = " << config.train.eval_episodes << "\n";
  os << "trace_eval_every = " << config.train.trace_eval_every << "\n";
  os << "trace_eval_episodes = " << config.train.trace_eval_episodes << "\n";
  os << "fitness_floor = " << format_number(config.train.fitness_floor) << "\n";
  os << "bootstrap_dim = " << config.lpg.bootstrap_dim << "\n";
  os << "lstm_hidden = " << config.lpg.lstm_hidden << "\n";
  os << "alpha_y = " << format_number(config.lpg.alpha_y) << "\n";
  os << "beta0 = " << format_number(config.lpg.beta0) << "\n";
  os << "beta1 = " << format_number(config.lpg.beta1) << "\n";
  os << "beta2 = " << format_number(config.lpg.beta2) << "\n";
  os << "beta3 = " << format_number(config.lpg.beta3) << "\n";
  os << "drift_hidden = " << config.drift_hidden << "\n";
  os << "clip_eps = " << format_number(config.clip_eps) << "\n";
  return os.str();
}

}  // namespace tempo::cfg
