#include "tempo/drift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tempo/agent.hpp"
#include "tempo/error.hpp"

namespace tempo::objective {

namespace {

double clamp_ratio(double p) {
  if (!(p > 0.0)) throw NumericError("drift_features: probability ratio must be positive");
  return std::clamp(p, kRatioMin, kRatioMax);
}

void base_features(double p, double a, std::span<double> out) {
  const double q = 1.0 - p;
  const double lg = std::log(p);
  out[0] = q;
  out[1] = q * q;
  out[2] = q * a;
  out[3] = q * q * a;
  out[4] = lg;
  out[5] = lg * lg;
  out[6] = lg * a;
  out[7] = lg * lg * a;
}

}  // namespace

void DriftFeatures::write(std::span<double> out) const {
  std::copy(base.begin(), base.end(), out.begin());
  if (has_temporal) std::copy(temporal.begin(), temporal.end(), out.begin() + kBaseFeatures);
}

DriftFeatures drift_features(double p, double advantage) {
  DriftFeatures f;
  f.ratio = clamp_ratio(p);
  f.advantage = advantage;
  base_features(f.ratio, advantage, f.base);
  return f;
}

DriftFeatures drift_features(double p, double advantage, double lifetime_frac) {
  DriftFeatures f = drift_features(p, advantage);
  f.has_temporal = true;
  f.lifetime_frac = lifetime_frac;
  for (int i = 0; i < kBaseFeatures; ++i) f.temporal[i] = lifetime_frac * f.base[i];
  return f;
}

void drift_feature_jacobian(double p, double advantage, std::span<double> out) {
  const double q = 1.0 - p;
  const double lg = std::log(p);
  out[0] = -1.0;
  out[1] = -2.0 * q;
  out[2] = -advantage;
  out[3] = -2.0 * q * advantage;
  out[4] = 1.0 / p;
  out[5] = 2.0 * lg / p;
  out[6] = advantage / p;
  out[7] = 2.0 * lg * advantage / p;
}

DriftNet DriftNet::zeros(bool temporal, int hidden) {
  DriftNet net;
  net.spec = nn::MlpSpec{{temporal ? 2 * kBaseFeatures : kBaseFeatures, hidden, 1},
                         nn::Activation::Tanh, /*use_bias=*/false};
  net.params.assign(net.spec.param_count(), 0.0);
  return net;
}

DriftNet DriftNet::random(bool temporal, Rng& rng, int hidden) {
  DriftNet net = zeros(temporal, hidden);
  net.params = nn::init_mlp_params(net.spec, rng);
  return net;
}

DriftNet strip_temporal(const DriftNet& net) {
  if (!net.temporal()) return net;
  DriftNet out;
  out.spec = net.spec;
  out.spec.layer_widths[0] = kBaseFeatures;
  out.params.reserve(out.spec.param_count());
  // first layer rows keep their first 8 columns; remaining layers are shared
  const int hidden = net.spec.layer_widths[1];
  const int in_w = net.spec.input_width();
  for (int r = 0; r < hidden; ++r)
    for (int c = 0; c < kBaseFeatures; ++c)
      out.params.push_back(net.params[static_cast<std::size_t>(r) * in_w + c]);
  out.params.insert(out.params.end(),
                    net.params.begin() + static_cast<std::ptrdiff_t>(hidden) * in_w,
                    net.params.end());
  return out;
}

double drift_value(const DriftNet& net, const DriftFeatures& features) {
  if (features.width() != net.spec.input_width())
    throw ConfigError("drift_value: feature width " + std::to_string(features.width()) +
                      " does not match net input " + std::to_string(net.spec.input_width()));
  std::vector<double> x(features.width());
  features.write(x);
  return nn::mlp_forward(net.spec, net.params, x)[0];
}

double drift_dp(const DriftNet& net, double p, double advantage, double lifetime_frac,
                DriftEvalCache& cache) {
  const bool temporal = net.temporal();
  const DriftFeatures f = temporal ? drift_features(p, advantage, lifetime_frac)
                                   : drift_features(p, advantage);
  cache.input.resize(f.width());
  cache.input_grad.resize(f.width());
  f.write(cache.input);
  nn::mlp_forward_cached(net.spec, net.params, cache.input, cache.mlp);
  static constexpr double kOne[1] = {1.0};
  // only the input gradient is needed for the chain rule through the features
  nn::mlp_backward_cached(net.spec, net.params, cache.mlp, std::span<const double>(kOne, 1), {},
                          cache.input_grad);

  std::array<double, kBaseFeatures> jac{};
  drift_feature_jacobian(f.ratio, advantage, jac);
  double dp = 0.0;
  for (int i = 0; i < kBaseFeatures; ++i) dp += cache.input_grad[i] * jac[i];
  if (temporal)
    for (int i = 0; i < kBaseFeatures; ++i)
      dp += cache.input_grad[kBaseFeatures + i] * lifetime_frac * jac[i];
  return dp;
}

double drift_dp(const DriftNet& net, double p, double advantage, double lifetime_frac) {
  DriftEvalCache cache;
  return drift_dp(net, p, advantage, lifetime_frac, cache);
}

double ppo_reference_drift(double p, double advantage, double clip_eps) {
  const double clamped = std::clamp(p, 1.0 - clip_eps, 1.0 + clip_eps);
  return std::max(0.0, (p - clamped) * advantage);
}

double ppo_reference_drift_dp(double p, double advantage, double clip_eps) {
  const double clamped = std::clamp(p, 1.0 - clip_eps, 1.0 + clip_eps);
  if ((p - clamped) * advantage <= 0.0) return 0.0;  // inactive or inside the clip region
  return advantage;  // clamp saturated, d(clamp)/dp = 0
}

DriftObjective DriftObjective::learned(DriftNet net) {
  if (net.spec.use_bias) throw ConfigError("DriftObjective: drift nets must not use bias");
  DriftObjective d;
  d.net_ = std::move(net);
  return d;
}

DriftObjective DriftObjective::ppo_clip(double clip_eps) {
  if (!(clip_eps > 0.0 && clip_eps < 1.0))
    throw ConfigError("DriftObjective: clip_eps must lie in (0,1)");
  DriftObjective d;
  d.clip_eps_ = clip_eps;
  return d;
}

double DriftObjective::value(double p, double advantage, double lifetime_frac) const {
  if (!net_) return ppo_reference_drift(clamp_ratio(p), advantage, clip_eps_);
  const DriftFeatures f = net_->temporal() ? drift_features(p, advantage, lifetime_frac)
                                           : drift_features(p, advantage);
  return drift_value(*net_, f);
}

double DriftObjective::dp(double p, double advantage, double lifetime_frac) const {
  DriftEvalCache cache;
  return dp(p, advantage, lifetime_frac, cache);
}

double DriftObjective::dp(double p, double advantage, double lifetime_frac,
                          DriftEvalCache& cache) const {
  if (!net_) return ppo_reference_drift_dp(clamp_ratio(p), advantage, clip_eps_);
  return drift_dp(*net_, p, advantage, lifetime_frac, cache);
}

std::vector<double> lpo_policy_objective_grad(const DriftObjective& drift,
                                              std::span<const PolicyBatchItem> batch,
                                              const nn::MlpSpec& policy_spec,
                                              std::span<const double> policy_params) {
  std::vector<double> grad(policy_spec.param_count(), 0.0);
  if (batch.empty()) return grad;
  const int num_actions = policy_spec.output_width();
  std::vector<double> probs(num_actions);
  std::vector<double> cot(num_actions);
  nn::MlpCache cache;
  for (const auto& item : batch) {
    if (!(item.old_prob > 0.0))
      throw NumericError("lpo_policy_objective_grad: non-positive old probability");
    nn::mlp_forward_cached(policy_spec, policy_params, item.obs, cache);
    std::copy(cache.output().begin(), cache.output().end(), probs.begin());
    agent::softmax_in_place(probs);
    const double p = probs[item.action] / item.old_prob;
    if (!std::isfinite(p))
      throw NumericError("lpo_policy_objective_grad: non-finite probability ratio");
    const double coef = (item.advantage - drift.dp(p, item.advantage, item.lifetime_frac)) * p;
    // grad p = p * grad log pi; logit cotangent of log pi is e_a - pi
    for (int a = 0; a < num_actions; ++a)
      cot[a] = coef * ((a == item.action ? 1.0 : 0.0) - probs[a]);
    nn::mlp_backward_cached(policy_spec, policy_params, cache, cot, grad, {});
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (double& g : grad) g *= inv;
  return grad;
}

DriftAudit audit_drift_conditions(const DriftObjective& drift, double p_min, double p_max,
                                  double a_min, double a_max, int resolution,
                                  std::span<const double> lifetime_fracs) {
  DriftAudit audit;
  audit.min_value = std::numeric_limits<double>::infinity();
  int negatives = 0;
  for (double frac : lifetime_fracs) {
    for (int i = 0; i < resolution; ++i) {
      const double p = p_min + (p_max - p_min) * i / (resolution - 1);
      for (int j = 0; j < resolution; ++j) {
        const double a = a_min + (a_max - a_min) * j / (resolution - 1);
        const double v = drift.value(p, a, frac);
        audit.min_value = std::min(audit.min_value, v);
        if (v < 0.0) ++negatives;
        ++audit.samples;
      }
    }
    // derivative at identity across the advantage axis
    for (int j = 0; j < resolution; ++j) {
      const double a = a_min + (a_max - a_min) * j / (resolution - 1);
      audit.max_abs_dp_at_identity =
          std::max(audit.max_abs_dp_at_identity, std::abs(drift.dp(1.0, a, frac)));
    }
  }
  audit.negative_fraction = audit.samples > 0
                                ? static_cast<double>(negatives) / audit.samples
                                : 0.0;
  return audit;
}

}  // namespace tempo::objective
