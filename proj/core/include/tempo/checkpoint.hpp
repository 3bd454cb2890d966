#pragma once

#include <string>
#include <vector>

#include "tempo/objective.hpp"

namespace tempo::ckpt {

inline constexpr int kCheckpointVersion = 1;
inline constexpr const char* kCreatedBy = "tempo 0.1.0";

// Text checkpoint: header plus one 17-significant-digit decimal per line, so
// 64-bit parameters survive a save/load round trip bit-exactly.
struct Checkpoint {
  int version = kCheckpointVersion;
  std::string created_by = kCreatedBy;
  objective::ObjectiveKind objective = objective::ObjectiveKind::TaLpo;
  int drift_hidden = 128;
  int bootstrap_dim = 16;
  int lstm_hidden = 32;
  double alpha_y = 0.5;
  double clip_eps = 0.2;
  std::vector<double> params;

  std::size_t expected_param_count() const;
};

Checkpoint checkpoint_from_objective(const objective::InnerObjective& obj);
objective::InnerObjective objective_from_checkpoint(const Checkpoint& ckpt,
                                                    const objective::LpgConfig& lpg_base);

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& text);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace tempo::ckpt
