#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "tempo/nn.hpp"
#include "tempo/rng.hpp"

namespace tempo::objective {

// probability-ratio clamp applied before feature construction
inline constexpr double kRatioMin = 1e-4;
inline constexpr double kRatioMax = 1e4;
inline constexpr int kBaseFeatures = 8;

// Polynomial ratio/advantage features; every entry carries a factor of
// (1 - p) or log(p), so the whole vector vanishes at p = 1.
struct DriftFeatures {
  std::array<double, kBaseFeatures> base{};
  std::array<double, kBaseFeatures> temporal{};  // lifetime_frac * base
  bool has_temporal = false;
  double ratio = 1.0;
  double advantage = 0.0;
  double lifetime_frac = 0.0;

  int width() const { return has_temporal ? 2 * kBaseFeatures : kBaseFeatures; }
  void write(std::span<double> out) const;
};

DriftFeatures drift_features(double p, double advantage);
DriftFeatures drift_features(double p, double advantage, double lifetime_frac);

// d(base features)/dp; the temporal block's jacobian is lifetime_frac * this
void drift_feature_jacobian(double p, double advantage, std::span<double> out);

// No-bias MLP with one hidden layer; 8 inputs for the plain drift, 16 when the
// lifetime-scaled block is appended.
struct DriftNet {
  nn::MlpSpec spec;
  std::vector<double> params;

  bool temporal() const { return spec.input_width() == 2 * kBaseFeatures; }
  static DriftNet zeros(bool temporal, int hidden = 128);
  static DriftNet random(bool temporal, Rng& rng, int hidden = 128);
};

// Drops the lifetime-scaled input block, keeping first-block weights. At
// n = 0 the reduced net computes exactly the same function.
DriftNet strip_temporal(const DriftNet& net);

double drift_value(const DriftNet& net, const DriftFeatures& features);

// Reusable buffers for the per-transition derivative in training loops.
struct DriftEvalCache {
  nn::MlpCache mlp;
  std::vector<double> input;
  std::vector<double> input_grad;
};

double drift_dp(const DriftNet& net, double p, double advantage, double lifetime_frac);
double drift_dp(const DriftNet& net, double p, double advantage, double lifetime_frac,
                DriftEvalCache& cache);

// max(0, (p - clamp(p, 1-eps, 1+eps)) * A): the drift whose induced objective
// p*A - D equals the clipped surrogate min(p*A, clamp(p)*A).
double ppo_reference_drift(double p, double advantage, double clip_eps);
double ppo_reference_drift_dp(double p, double advantage, double clip_eps);

// Learned drift net or the PPO reference, behind one evaluation surface.
class DriftObjective {
 public:
  static DriftObjective learned(DriftNet net);
  static DriftObjective ppo_clip(double clip_eps);

  bool is_learned() const { return net_.has_value(); }
  bool temporal() const { return net_ && net_->temporal(); }
  const DriftNet* net() const { return net_ ? &*net_ : nullptr; }
  double clip_eps() const { return clip_eps_; }

  double value(double p, double advantage, double lifetime_frac) const;
  double dp(double p, double advantage, double lifetime_frac) const;
  double dp(double p, double advantage, double lifetime_frac, DriftEvalCache& cache) const;

 private:
  std::optional<DriftNet> net_;
  double clip_eps_ = 0.2;
};

// One batch element for the policy-objective gradient.
struct PolicyBatchItem {
  std::vector<double> obs;
  int action = 0;
  double advantage = 0.0;
  double old_prob = 1.0;
  double lifetime_frac = 0.0;
};

// Ascent gradient of mean_t [ p*A - D(p, A, n/N) ] with p = pi(a|s)/old_prob,
// taken with respect to the policy parameters.
std::vector<double> lpo_policy_objective_grad(const DriftObjective& drift,
                                              std::span<const PolicyBatchItem> batch,
                                              const nn::MlpSpec& policy_spec,
                                              std::span<const double> policy_params);

// Reported diagnostics for the drift-function conditions; non-negativity and
// a flat derivative at identity are audited, not enforced.
struct DriftAudit {
  double negative_fraction = 0.0;   // fraction of sampled points with D < 0
  double min_value = 0.0;           // most negative drift value seen
  double max_abs_dp_at_identity = 0.0;
  int samples = 0;
};

DriftAudit audit_drift_conditions(const DriftObjective& drift, double p_min, double p_max,
                                  double a_min, double a_max, int resolution,
                                  std::span<const double> lifetime_fracs);

}  // namespace tempo::objective
