#include "tempo/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "tempo/error.hpp"

namespace tempo::ckpt {

namespace {

std::string fmt17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::size_t Checkpoint::expected_param_count() const {
  using objective::ObjectiveKind;
  switch (objective) {
    case ObjectiveKind::PpoRef:
      return 0;
    case ObjectiveKind::Lpo:
    case ObjectiveKind::TaLpo:
      return objective::DriftNet::zeros(objective == ObjectiveKind::TaLpo, drift_hidden)
          .params.size();
    case ObjectiveKind::Lpg:
    case ObjectiveKind::TaLpg: {
      objective::LpgConfig cfg;
      cfg.bootstrap_dim = bootstrap_dim;
      cfg.lstm_hidden = lstm_hidden;
      cfg.temporal = objective == ObjectiveKind::TaLpg;
      return cfg.lstm_spec().param_count();
    }
  }
  return 0;
}

Checkpoint checkpoint_from_objective(const objective::InnerObjective& obj) {
  Checkpoint ckpt;
  ckpt.objective = objective::objective_kind(obj);
  if (const auto* ppo = std::get_if<objective::PpoRefObjective>(&obj)) {
    ckpt.clip_eps = ppo->clip_eps;
  } else if (const auto* lpo = std::get_if<objective::LpoObjective>(&obj)) {
    ckpt.drift_hidden = lpo->net.spec.layer_widths[1];
    ckpt.params = lpo->net.params;
  } else {
    const auto& lpg = std::get<objective::LpgObjective>(obj);
    ckpt.bootstrap_dim = lpg.config.bootstrap_dim;
    ckpt.lstm_hidden = lpg.config.lstm_hidden;
    ckpt.alpha_y = lpg.config.alpha_y;
    ckpt.params = lpg.phi;
  }
  return ckpt;
}

objective::InnerObjective objective_from_checkpoint(const Checkpoint& ckpt,
                                                    const objective::LpgConfig& lpg_base) {
  objective::LpgConfig lpg = lpg_base;
  lpg.bootstrap_dim = ckpt.bootstrap_dim;
  lpg.lstm_hidden = ckpt.lstm_hidden;
  lpg.alpha_y = ckpt.alpha_y;
  return objective::make_objective(ckpt.objective, ckpt.params, lpg, ckpt.drift_hidden,
                                   ckpt.clip_eps);
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::ostringstream os;
  os << "tempo-checkpoint " << ckpt.version << "\n";
  os << "created_by " << ckpt.created_by << "\n";
  os << "objective " << objective::objective_tag(ckpt.objective) << "\n";
  os << "drift_hidden " << ckpt.drift_hidden << "\n";
  os << "bootstrap_dim " << ckpt.bootstrap_dim << "\n";
  os << "lstm_hidden " << ckpt.lstm_hidden << "\n";
  os << "alpha_y " << fmt17(ckpt.alpha_y) << "\n";
  os << "clip_eps " << fmt17(ckpt.clip_eps) << "\n";
  os << "params " << ckpt.params.size() << "\n";
  for (double p : ckpt.params) os << fmt17(p) << "\n";
  return os.str();
}

Checkpoint deserialize_checkpoint(const std::string& text) {
  std::istringstream is(text);
  std::string magic;
  Checkpoint ckpt;
  is >> magic >> ckpt.version;
  if (magic != "tempo-checkpoint") throw ConfigError("checkpoint: bad magic '" + magic + "'");
  if (ckpt.version != kCheckpointVersion)
    throw ConfigError("checkpoint: unsupported version " + std::to_string(ckpt.version));
  std::string key;
  std::size_t declared = 0;
  bool saw_params = false;
  while (is >> key) {
    if (key == "created_by") {
      std::getline(is, ckpt.created_by);
      if (!ckpt.created_by.empty() && ckpt.created_by.front() == ' ')
        ckpt.created_by.erase(0, 1);
    } else if (key == "objective") {
      std::string tag;
      is >> tag;
      ckpt.objective = objective::parse_objective_tag(tag);
    } else if (key == "drift_hidden") {
      is >> ckpt.drift_hidden;
    } else if (key == "bootstrap_dim") {
      is >> ckpt.bootstrap_dim;
    } else if (key == "lstm_hidden") {
      is >> ckpt.lstm_hidden;
    } else if (key == "alpha_y") {
      is >> ckpt.alpha_y;
    } else if (key == "clip_eps") {
      is >> ckpt.clip_eps;
    } else if (key == "params") {
      is >> declared;
      saw_params = true;
      break;
    } else {
      throw ConfigError("checkpoint: unknown header key '" + key + "'");
    }
    if (is.fail()) throw ConfigError("checkpoint: malformed value after '" + key + "'");
  }
  if (!saw_params || is.fail()) throw ConfigError("checkpoint: missing params header");
  ckpt.params.reserve(declared);
  double v = 0.0;
  while (ckpt.params.size() < declared && (is >> v)) ckpt.params.push_back(v);
  if (ckpt.params.size() != declared)
    throw ConfigError("checkpoint: parameter count mismatch (declared " +
                      std::to_string(declared) + ", found " + std::to_string(ckpt.params.size()) +
                      ")");
  std::string trailing;
  if (is >> trailing) throw ConfigError("checkpoint: trailing content after parameters");
  if (ckpt.params.size() != ckpt.expected_param_count())
    throw ConfigError("checkpoint: parameter count does not match the declared architecture");
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open checkpoint for writing: " + path);
  os << serialize_checkpoint(ckpt);
  if (!os) throw IoError("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace tempo::ckpt
