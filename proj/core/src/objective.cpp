#include "tempo/objective.hpp"

#include <string>

#include "tempo/error.hpp"

namespace tempo::objective {

const char* objective_tag(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::Lpg: return "lpg";
    case ObjectiveKind::TaLpg: return "ta-lpg";
    case ObjectiveKind::Lpo: return "lpo";
    case ObjectiveKind::TaLpo: return "ta-lpo";
    case ObjectiveKind::PpoRef: return "ppo-ref";
  }
  return "?";
}

ObjectiveKind parse_objective_tag(const std::string& tag) {
  if (tag == "lpg") return ObjectiveKind::Lpg;
  if (tag == "ta-lpg") return ObjectiveKind::TaLpg;
  if (tag == "lpo") return ObjectiveKind::Lpo;
  if (tag == "ta-lpo") return ObjectiveKind::TaLpo;
  if (tag == "ppo-ref") return ObjectiveKind::PpoRef;
  throw ConfigError("unknown objective tag '" + tag + "'");
}

DriftObjective make_drift_objective(const InnerObjective& o) {
  if (const auto* ppo = std::get_if<PpoRefObjective>(&o))
    return DriftObjective::ppo_clip(ppo->clip_eps);
  if (const auto* lpo = std::get_if<LpoObjective>(&o)) return DriftObjective::learned(lpo->net);
  throw ConfigError("objective is not drift-style");
}

ObjectiveKind objective_kind(const InnerObjective& o) {
  if (std::holds_alternative<PpoRefObjective>(o)) return ObjectiveKind::PpoRef;
  if (const auto* lpo = std::get_if<LpoObjective>(&o))
    return lpo->net.temporal() ? ObjectiveKind::TaLpo : ObjectiveKind::Lpo;
  const auto& lpg = std::get<LpgObjective>(o);
  return lpg.config.temporal ? ObjectiveKind::TaLpg : ObjectiveKind::Lpg;
}

InnerObjective make_objective(ObjectiveKind kind, std::vector<double> phi,
                              const LpgConfig& lpg_config, int drift_hidden, double clip_eps) {
  switch (kind) {
    case ObjectiveKind::PpoRef:
      return PpoRefObjective{clip_eps};
    case ObjectiveKind::Lpo:
    case ObjectiveKind::TaLpo: {
      DriftNet net = DriftNet::zeros(kind == ObjectiveKind::TaLpo, drift_hidden);
      if (phi.size() != net.params.size())
        throw ConfigError("make_objective: drift parameter count mismatch");
      net.params = std::move(phi);
      return LpoObjective{std::move(net)};
    }
    case ObjectiveKind::Lpg:
    case ObjectiveKind::TaLpg: {
      LpgConfig cfg = lpg_config;
      cfg.temporal = (kind == ObjectiveKind::TaLpg);
      if (phi.size() != cfg.lstm_spec().param_count())
        throw ConfigError("make_objective: lpg parameter count mismatch");
      return LpgObjective{cfg, std::move(phi)};
    }
  }
  throw ConfigError("make_objective: unknown kind");
}

std::size_t phi_dimension(ObjectiveKind kind, const LpgConfig& lpg_config, int drift_hidden) {
  switch (kind) {
    case ObjectiveKind::PpoRef: return 0;
    case ObjectiveKind::Lpo: return DriftNet::zeros(false, drift_hidden).params.size();
    case ObjectiveKind::TaLpo: return DriftNet::zeros(true, drift_hidden).params.size();
    case ObjectiveKind::Lpg: {
      LpgConfig cfg = lpg_config;
      cfg.temporal = false;
      return cfg.lstm_spec().param_count();
    }
    case ObjectiveKind::TaLpg: {
      LpgConfig cfg = lpg_config;
      cfg.temporal = true;
      return cfg.lstm_spec().param_count();
    }
  }
  return 0;
}

}  // namespace tempo::objective
