#pragma once

#include <variant>
#include <vector>

#include "tempo/drift.hpp"
#include "tempo/lpg.hpp"

namespace tempo::objective {

enum class ObjectiveKind { Lpg, TaLpg, Lpo, TaLpo, PpoRef };

const char* objective_tag(ObjectiveKind kind);
ObjectiveKind parse_objective_tag(const std::string& tag);

struct PpoRefObjective {
  double clip_eps = 0.2;
};

struct LpoObjective {
  DriftNet net;
};

struct LpgObjective {
  LpgConfig config;
  std::vector<double> phi;
};

// A fully-specified inner-loop objective, owned by value so lifetimes can run
// concurrently without shared state.
using InnerObjective = std::variant<PpoRefObjective, LpoObjective, LpgObjective>;

inline bool is_drift_style(const InnerObjective& o) {
  return !std::holds_alternative<LpgObjective>(o);
}

DriftObjective make_drift_objective(const InnerObjective& o);
ObjectiveKind objective_kind(const InnerObjective& o);

// Builds the objective that owns phi for the given kind; phi layout is the
// drift-net parameter vector (lpo family) or the LSTM parameters (lpg family).
InnerObjective make_objective(ObjectiveKind kind, std::vector<double> phi,
                              const LpgConfig& lpg_config, int drift_hidden = 128,
                              double clip_eps = 0.2);
std::size_t phi_dimension(ObjectiveKind kind, const LpgConfig& lpg_config, int drift_hidden = 128);

}  // namespace tempo::objective
