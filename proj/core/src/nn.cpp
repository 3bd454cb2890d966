#include "tempo/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "tempo/error.hpp"

namespace tempo::nn {

namespace {

inline double activate(Activation act, double z) {
  return act == Activation::Tanh ? std::tanh(z) : (z > 0.0 ? z : 0.0);
}

// derivative expressed through the post-activation value
inline double activate_deriv(Activation act, double a) {
  return act == Activation::Tanh ? 1.0 - a * a : (a > 0.0 ? 1.0 : 0.0);
}

void check_finite_input(std::span<const double> input) {
  if (!all_finite(input)) throw NumericError("mlp_forward: non-finite input");
}

}  // namespace

std::size_t MlpSpec::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_widths.size(); ++l) {
    n += static_cast<std::size_t>(layer_widths[l + 1]) * layer_widths[l];
    if (use_bias) n += layer_widths[l + 1];
  }
  return n;
}

void MlpSpec::validate() const {
  if (layer_widths.size() < 2) throw ConfigError("MlpSpec: need at least input and output widths");
  for (int w : layer_widths) {
    if (w <= 0) throw ConfigError("MlpSpec: layer widths must be positive");
  }
}

ParamVector flatten_mlp(const MlpSpec& spec, const std::vector<MlpLayerWeights>& layers) {
  spec.validate();
  if (layers.size() != static_cast<std::size_t>(spec.num_layers()))
    throw ConfigError("flatten_mlp: layer count mismatch");
  ParamVector out;
  out.reserve(spec.param_count());
  for (int l = 0; l < spec.num_layers(); ++l) {
    const int in_w = spec.layer_widths[l];
    const int out_w = spec.layer_widths[l + 1];
    const auto& lw = layers[l];
    if (lw.weights.size() != static_cast<std::size_t>(out_w))
      throw ConfigError("flatten_mlp: weight row count mismatch at layer " + std::to_string(l));
    for (int r = 0; r < out_w; ++r) {
      if (lw.weights[r].size() != static_cast<std::size_t>(in_w))
        throw ConfigError("flatten_mlp: weight column count mismatch at layer " + std::to_string(l));
      out.insert(out.end(), lw.weights[r].begin(), lw.weights[r].end());
    }
    if (spec.use_bias) {
      if (lw.bias.size() != static_cast<std::size_t>(out_w))
        throw ConfigError("flatten_mlp: bias size mismatch at layer " + std::to_string(l));
      out.insert(out.end(), lw.bias.begin(), lw.bias.end());
    } else if (!lw.bias.empty()) {
      throw ConfigError("flatten_mlp: bias given for a no-bias spec");
    }
  }
  return out;
}

std::vector<MlpLayerWeights> unflatten_mlp(const MlpSpec& spec, std::span<const double> params) {
  spec.validate();
  if (params.size() != spec.param_count()) throw ConfigError("unflatten_mlp: parameter count mismatch");
  std::vector<MlpLayerWeights> layers(spec.num_layers());
  std::size_t k = 0;
  for (int l = 0; l < spec.num_layers(); ++l) {
    const int in_w = spec.layer_widths[l];
    const int out_w = spec.layer_widths[l + 1];
    layers[l].weights.assign(out_w, std::vector<double>(in_w));
    for (int r = 0; r < out_w; ++r)
      for (int c = 0; c < in_w; ++c) layers[l].weights[r][c] = params[k++];
    if (spec.use_bias) {
      layers[l].bias.assign(out_w, 0.0);
      for (int r = 0; r < out_w; ++r) layers[l].bias[r] = params[k++];
    }
  }
  return layers;
}

void MlpCache::prepare(const MlpSpec& spec) {
  acts_.resize(spec.layer_widths.size());
  deltas_.resize(spec.layer_widths.size());
  for (std::size_t i = 0; i < spec.layer_widths.size(); ++i) {
    acts_[i].resize(spec.layer_widths[i]);
    deltas_[i].resize(spec.layer_widths[i]);
  }
}

void mlp_forward_cached(const MlpSpec& spec, std::span<const double> params,
                        std::span<const double> input, MlpCache& cache) {
  if (input.size() != static_cast<std::size_t>(spec.input_width()))
    throw ConfigError("mlp_forward: input width mismatch");
  if (params.size() != spec.param_count())
    throw ConfigError("mlp_forward: parameter count mismatch");
  check_finite_input(input);
  cache.prepare(spec);
  std::memcpy(cache.acts_[0].data(), input.data(), input.size() * sizeof(double));
  std::size_t k = 0;
  for (int l = 0; l < spec.num_layers(); ++l) {
    const int in_w = spec.layer_widths[l];
    const int out_w = spec.layer_widths[l + 1];
    const bool last = (l + 1 == spec.num_layers());
    const double* a = cache.acts_[l].data();
    double* out = cache.acts_[l + 1].data();
    const double* w = params.data() + k;
    k += static_cast<std::size_t>(out_w) * in_w;
    const double* b = spec.use_bias ? params.data() + k : nullptr;
    if (spec.use_bias) k += out_w;
    for (int r = 0; r < out_w; ++r) {
      const double* wr = w + static_cast<std::size_t>(r) * in_w;
      double z = b ? b[r] : 0.0;
      for (int c = 0; c < in_w; ++c) z += wr[c] * a[c];
      out[r] = last ? z : activate(spec.activation, z);
    }
  }
}

void mlp_backward_cached(const MlpSpec& spec, std::span<const double> params, const MlpCache& cache,
                         std::span<const double> output_cotangent,
                         std::span<double> grad_params_accum, std::span<double> grad_input) {
  if (output_cotangent.size() != static_cast<std::size_t>(spec.output_width()))
    throw ConfigError("mlp_grad: cotangent width mismatch");
  if (!grad_params_accum.empty() && grad_params_accum.size() != spec.param_count())
    throw ConfigError("mlp_grad: gradient buffer size mismatch");
  if (!grad_input.empty() && grad_input.size() != static_cast<std::size_t>(spec.input_width()))
    throw ConfigError("mlp_grad: input gradient buffer size mismatch");

  const int L = spec.num_layers();
  auto& deltas = cache.deltas_;
  std::memcpy(deltas[L].data(), output_cotangent.data(), output_cotangent.size() * sizeof(double));

  // walk layers from last to first, keeping a running offset of each layer's
  // parameter block
  std::vector<std::size_t> offsets(L);
  std::size_t k = 0;
  for (int l = 0; l < L; ++l) {
    offsets[l] = k;
    k += static_cast<std::size_t>(spec.layer_widths[l + 1]) * spec.layer_widths[l];
    if (spec.use_bias) k += spec.layer_widths[l + 1];
  }

  for (int l = L - 1; l >= 0; --l) {
    const int in_w = spec.layer_widths[l];
    const int out_w = spec.layer_widths[l + 1];
    const double* w = params.data() + offsets[l];
    const double* a = cache.acts_[l].data();
    double* d_out = deltas[l + 1].data();
    double* d_in = deltas[l].data();

    if (!grad_params_accum.empty()) {
      double* gw = grad_params_accum.data() + offsets[l];
      for (int r = 0; r < out_w; ++r) {
        const double dr = d_out[r];
        double* gwr = gw + static_cast<std::size_t>(r) * in_w;
        for (int c = 0; c < in_w; ++c) gwr[c] += dr * a[c];
      }
      if (spec.use_bias) {
        double* gb = gw + static_cast<std::size_t>(out_w) * in_w;
        for (int r = 0; r < out_w; ++r) gb[r] += d_out[r];
      }
    }

    const bool need_input_grad = (l > 0) || !grad_input.empty();
    if (!need_input_grad) break;
    for (int c = 0; c < in_w; ++c) d_in[c] = 0.0;
    for (int r = 0; r < out_w; ++r) {
      const double dr = d_out[r];
      const double* wr = w + static_cast<std::size_t>(r) * in_w;
      for (int c = 0; c < in_w; ++c) d_in[c] += dr * wr[c];
    }
    if (l > 0) {
      // chain through the hidden activation feeding this layer
      for (int c = 0; c < in_w; ++c) d_in[c] *= activate_deriv(spec.activation, a[c]);
    }
  }
  if (!grad_input.empty())
    std::memcpy(grad_input.data(), deltas[0].data(), grad_input.size() * sizeof(double));
}

std::vector<double> mlp_forward(const MlpSpec& spec, std::span<const double> params,
                                std::span<const double> input) {
  MlpCache cache;
  mlp_forward_cached(spec, params, input, cache);
  return {cache.output().begin(), cache.output().end()};
}

Gradients mlp_grad(const MlpSpec& spec, std::span<const double> params,
                   std::span<const double> input, std::span<const double> output_cotangent) {
  MlpCache cache;
  mlp_forward_cached(spec, params, input, cache);
  Gradients g;
  g.wrt_params.assign(spec.param_count(), 0.0);
  g.wrt_inputs.assign(spec.input_width(), 0.0);
  mlp_backward_cached(spec, params, cache, output_cotangent, g.wrt_params, g.wrt_inputs);
  return g;
}

ParamVector init_mlp_params(const MlpSpec& spec, Rng& rng) {
  spec.validate();
  ParamVector p;
  p.reserve(spec.param_count());
  for (int l = 0; l < spec.num_layers(); ++l) {
    const int in_w = spec.layer_widths[l];
    const int out_w = spec.layer_widths[l + 1];
    const double s = 1.0 / std::sqrt(static_cast<double>(in_w));
    for (int i = 0; i < out_w * in_w; ++i) p.push_back(rng.uniform(-s, s));
    if (spec.use_bias)
      for (int i = 0; i < out_w; ++i) p.push_back(0.0);
  }
  return p;
}

std::size_t LstmSpec::param_count() const {
  const std::size_t h = hidden_width, i = input_width, o = output_width;
  return 4 * h * i + 4 * h * h + 4 * h + o * h + o;
}

void LstmSpec::validate() const {
  if (input_width <= 0 || hidden_width <= 0 || output_width <= 0)
    throw ConfigError("LstmSpec: all widths must be positive");
}

namespace {

struct LstmStepCache {
  std::vector<double> x, h_prev, c_prev;
  std::vector<double> i, f, g, o, c_new, tanh_c;
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct LstmViews {
  const double *wx, *wh, *b, *wr, *br;
  explicit LstmViews(const LstmSpec& s, std::span<const double> params) {
    const std::size_t h = s.hidden_width, in = s.input_width;
    wx = params.data();
    wh = wx + 4 * h * in;
    b = wh + 4 * h * h;
    wr = b + 4 * h;
    br = wr + static_cast<std::size_t>(s.output_width) * h;
  }
};

void lstm_step(const LstmSpec& spec, const LstmViews& v, std::span<const double> x,
               const std::vector<double>& h_prev, const std::vector<double>& c_prev,
               LstmStepCache& cache, std::vector<double>& h_out, std::vector<double>& c_out,
               std::vector<double>& readout) {
  const int H = spec.hidden_width;
  const int I = spec.input_width;
  const int O = spec.output_width;
  cache.x.assign(x.begin(), x.end());
  cache.h_prev = h_prev;
  cache.c_prev = c_prev;
  cache.i.resize(H);
  cache.f.resize(H);
  cache.g.resize(H);
  cache.o.resize(H);
  cache.c_new.resize(H);
  cache.tanh_c.resize(H);
  h_out.resize(H);
  c_out.resize(H);
  readout.resize(O);
  for (int r = 0; r < 4 * H; ++r) {
    double z = v.b[r];
    const double* wxr = v.wx + static_cast<std::size_t>(r) * I;
    for (int c = 0; c < I; ++c) z += wxr[c] * x[c];
    const double* whr = v.wh + static_cast<std::size_t>(r) * H;
    for (int c = 0; c < H; ++c) z += whr[c] * h_prev[c];
    const int gate = r / H, j = r % H;
    switch (gate) {
      case 0: cache.i[j] = sigmoid(z); break;
      case 1: cache.f[j] = sigmoid(z); break;
      case 2: cache.g[j] = std::tanh(z); break;
      default: cache.o[j] = sigmoid(z); break;
    }
  }
  for (int j = 0; j < H; ++j) {
    cache.c_new[j] = cache.f[j] * c_prev[j] + cache.i[j] * cache.g[j];
    cache.tanh_c[j] = std::tanh(cache.c_new[j]);
    h_out[j] = cache.o[j] * cache.tanh_c[j];
    c_out[j] = cache.c_new[j];
  }
  for (int r = 0; r < O; ++r) {
    double z = v.br[r];
    const double* wrr = v.wr + static_cast<std::size_t>(r) * H;
    for (int c = 0; c < H; ++c) z += wrr[c] * h_out[c];
    readout[r] = z;
  }
}

}  // namespace

std::vector<std::vector<double>> lstm_scan_reversed(const LstmSpec& spec,
                                                    std::span<const double> params,
                                                    const std::vector<std::vector<double>>& inputs) {
  spec.validate();
  if (inputs.empty()) throw UsageError("lstm_scan_reversed: empty sequence");
  if (params.size() != spec.param_count())
    throw ConfigError("lstm_scan_reversed: parameter count mismatch");
  for (const auto& x : inputs)
    if (x.size() != static_cast<std::size_t>(spec.input_width))
      throw ConfigError("lstm_scan_reversed: input width mismatch");

  const LstmViews v(spec, params);
  const int T = static_cast<int>(inputs.size());
  std::vector<std::vector<double>> outputs(T);
  std::vector<double> h(spec.hidden_width, 0.0), c(spec.hidden_width, 0.0);
  std::vector<double> h_next, c_next;
  LstmStepCache cache;
  for (int t = T - 1; t >= 0; --t) {
    lstm_step(spec, v, inputs[t], h, c, cache, h_next, c_next, outputs[t]);
    h.swap(h_next);
    c.swap(c_next);
  }
  return outputs;
}

Gradients lstm_scan_reversed_grad(const LstmSpec& spec, std::span<const double> params,
                                  const std::vector<std::vector<double>>& inputs,
                                  const std::vector<std::vector<double>>& output_cotangents) {
  spec.validate();
  if (inputs.empty()) throw UsageError("lstm_scan_reversed_grad: empty sequence");
  if (output_cotangents.size() != inputs.size())
    throw ConfigError("lstm_scan_reversed_grad: cotangent count mismatch");
  const LstmViews v(spec, params);
  const int T = static_cast<int>(inputs.size());
  const int H = spec.hidden_width, I = spec.input_width, O = spec.output_width;

  // forward, keeping every step cache; processing order is t = T-1 .. 0
  std::vector<LstmStepCache> caches(T);
  std::vector<std::vector<double>> outputs(T);
  std::vector<double> h(H, 0.0), c(H, 0.0), h_next, c_next;
  for (int t = T - 1; t >= 0; --t) {
    lstm_step(spec, v, inputs[t], h, c, caches[t], h_next, c_next, outputs[t]);
    h.swap(h_next);
    c.swap(c_next);
  }

  Gradients g;
  g.wrt_params.assign(spec.param_count(), 0.0);
  g.wrt_inputs.assign(static_cast<std::size_t>(T) * I, 0.0);
  const std::size_t h4i = static_cast<std::size_t>(4) * H * I;
  const std::size_t h4h = static_cast<std::size_t>(4) * H * H;
  double* gwx = g.wrt_params.data();
  double* gwh = gwx + h4i;
  double* gb = gwh + h4h;
  double* gwr = gb + 4 * H;
  double* gbr = gwr + static_cast<std::size_t>(O) * H;

  // reverse of the processing order: t = 0 .. T-1
  std::vector<double> dh(H, 0.0), dc(H, 0.0), dh_prev(H), dc_prev(H), dpre(4 * H);
  for (int t = 0; t < T; ++t) {
    const auto& cc = caches[t];
    const auto& cot = output_cotangents[t];
    if (cot.size() != static_cast<std::size_t>(O))
      throw ConfigError("lstm_scan_reversed_grad: cotangent width mismatch");
    // readout
    std::vector<double> h_out(H);
    for (int j = 0; j < H; ++j) h_out[j] = cc.o[j] * cc.tanh_c[j];
    for (int r = 0; r < O; ++r) {
      gbr[r] += cot[r];
      double* gwrr = gwr + static_cast<std::size_t>(r) * H;
      const double* wrr = v.wr + static_cast<std::size_t>(r) * H;
      for (int j = 0; j < H; ++j) {
        gwrr[j] += cot[r] * h_out[j];
        dh[j] += cot[r] * wrr[j];
      }
    }
    for (int j = 0; j < H; ++j) {
      const double d_o = dh[j] * cc.tanh_c[j];
      const double d_cnew = dh[j] * cc.o[j] * (1.0 - cc.tanh_c[j] * cc.tanh_c[j]) + dc[j];
      const double d_f = d_cnew * cc.c_prev[j];
      const double d_i = d_cnew * cc.g[j];
      const double d_g = d_cnew * cc.i[j];
      dpre[0 * H + j] = d_i * cc.i[j] * (1.0 - cc.i[j]);
      dpre[1 * H + j] = d_f * cc.f[j] * (1.0 - cc.f[j]);
      dpre[2 * H + j] = d_g * (1.0 - cc.g[j] * cc.g[j]);
      dpre[3 * H + j] = d_o * cc.o[j] * (1.0 - cc.o[j]);
      dc_prev[j] = d_cnew * cc.f[j];
    }
    std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
    double* gx = g.wrt_inputs.data() + static_cast<std::size_t>(t) * I;
    for (int r = 0; r < 4 * H; ++r) {
      const double dr = dpre[r];
      gb[r] += dr;
      double* gwxr = gwx + static_cast<std::size_t>(r) * I;
      const double* wxr = v.wx + static_cast<std::size_t>(r) * I;
      for (int cI = 0; cI < I; ++cI) {
        gwxr[cI] += dr * cc.x[cI];
        gx[cI] += dr * wxr[cI];
      }
      double* gwhr = gwh + static_cast<std::size_t>(r) * H;
      const double* whr = v.wh + static_cast<std::size_t>(r) * H;
      for (int j = 0; j < H; ++j) {
        gwhr[j] += dr * cc.h_prev[j];
        dh_prev[j] += dr * whr[j];
      }
    }
    dh = dh_prev;
    dc = dc_prev;
  }
  return g;
}

ParamVector init_lstm_params(const LstmSpec& spec, Rng& rng) {
  spec.validate();
  const int H = spec.hidden_width, I = spec.input_width, O = spec.output_width;
  ParamVector p;
  p.reserve(spec.param_count());
  const double sx = 1.0 / std::sqrt(static_cast<double>(I));
  for (int i = 0; i < 4 * H * I; ++i) p.push_back(rng.uniform(-sx, sx));
  const double sh = 1.0 / std::sqrt(static_cast<double>(H));
  for (int i = 0; i < 4 * H * H; ++i) p.push_back(rng.uniform(-sh, sh));
  for (int r = 0; r < 4 * H; ++r) p.push_back(r >= H && r < 2 * H ? 1.0 : 0.0);  // forget bias 1
  for (int i = 0; i < O * H; ++i) p.push_back(rng.uniform(-sh, sh));
  for (int i = 0; i < O; ++i) p.push_back(0.0);
  return p;
}

ParamVector flatten_lstm(const LstmSpec& spec, const LstmWeights& weights) {
  spec.validate();
  const int H = spec.hidden_width, I = spec.input_width, O = spec.output_width;
  const auto check = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("flatten_lstm: ") + what);
  };
  check(weights.wx.size() == static_cast<std::size_t>(4 * H), "wx row count mismatch");
  check(weights.wh.size() == static_cast<std::size_t>(4 * H), "wh row count mismatch");
  check(weights.bias.size() == static_cast<std::size_t>(4 * H), "bias size mismatch");
  check(weights.readout.size() == static_cast<std::size_t>(O), "readout row count mismatch");
  check(weights.readout_bias.size() == static_cast<std::size_t>(O), "readout bias size mismatch");
  ParamVector p;
  p.reserve(spec.param_count());
  for (const auto& row : weights.wx) {
    check(row.size() == static_cast<std::size_t>(I), "wx column count mismatch");
    p.insert(p.end(), row.begin(), row.end());
  }
  for (const auto& row : weights.wh) {
    check(row.size() == static_cast<std::size_t>(H), "wh column count mismatch");
    p.insert(p.end(), row.begin(), row.end());
  }
  p.insert(p.end(), weights.bias.begin(), weights.bias.end());
  for (const auto& row : weights.readout) {
    check(row.size() == static_cast<std::size_t>(H), "readout column count mismatch");
    p.insert(p.end(), row.begin(), row.end());
  }
  p.insert(p.end(), weights.readout_bias.begin(), weights.readout_bias.end());
  return p;
}

LstmWeights unflatten_lstm(const LstmSpec& spec, std::span<const double> params) {
  spec.validate();
  if (params.size() != spec.param_count()) throw ConfigError("unflatten_lstm: parameter count mismatch");
  const int H = spec.hidden_width, I = spec.input_width, O = spec.output_width;
  LstmWeights w;
  std::size_t k = 0;
  w.wx.assign(4 * H, std::vector<double>(I));
  for (auto& row : w.wx)
    for (double& v : row) v = params[k++];
  w.wh.assign(4 * H, std::vector<double>(H));
  for (auto& row : w.wh)
    for (double& v : row) v = params[k++];
  w.bias.assign(4 * H, 0.0);
  for (double& v : w.bias) v = params[k++];
  w.readout.assign(O, std::vector<double>(H));
  for (auto& row : w.readout)
    for (double& v : row) v = params[k++];
  w.readout_bias.assign(O, 0.0);
  for (double& v : w.readout_bias) v = params[k++];
  return w;
}

std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> x, double step) {
  if (step <= 0.0) throw UsageError("finite_diff_grad: step must be positive");
  std::vector<double> xs(x.begin(), x.end());
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = xs[i];
    xs[i] = saved + step;
    const double fp = f(xs);
    xs[i] = saved - step;
    const double fm = f(xs);
    xs[i] = saved;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NumericError("finite_diff_grad: non-finite function value");
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

}  // namespace tempo::nn
