#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "tempo/rng.hpp"
#include "tempo/vec.hpp"

namespace tempo::nn {

enum class Activation { Tanh, Relu };

// Dense network: hidden layers activated, final layer linear.
// Parameter layout is layer-major; within a layer the weight matrix
// (out x in) is row-major, followed by the bias vector when use_bias.
struct MlpSpec {
  std::vector<int> layer_widths;  // at least input and output width
  Activation activation = Activation::Tanh;
  bool use_bias = true;

  int input_width() const { return layer_widths.front(); }
  int output_width() const { return layer_widths.back(); }
  int num_layers() const { return static_cast<int>(layer_widths.size()) - 1; }
  std::size_t param_count() const;
  void validate() const;
};

struct Gradients {
  ParamVector wrt_params;
  std::vector<double> wrt_inputs;
};

// Structured weights, used for the documented flatten ordering.
struct MlpLayerWeights {
  std::vector<std::vector<double>> weights;  // [out][in]
  std::vector<double> bias;                  // empty when use_bias = false
};

ParamVector flatten_mlp(const MlpSpec& spec, const std::vector<MlpLayerWeights>& layers);
std::vector<MlpLayerWeights> unflatten_mlp(const MlpSpec& spec, std::span<const double> params);

// Scratch space for repeated forward/backward passes; keeps post-activation
// values per layer so the backward pass can run without reallocation.
class MlpCache {
 public:
  void prepare(const MlpSpec& spec);
  std::span<const double> output() const { return acts_.back(); }

 private:
  friend void mlp_forward_cached(const MlpSpec&, std::span<const double>, std::span<const double>, MlpCache&);
  friend void mlp_backward_cached(const MlpSpec&, std::span<const double>, const MlpCache&,
                                  std::span<const double>, std::span<double>, std::span<double>);
  std::vector<std::vector<double>> acts_;   // acts_[0] = input copy
  mutable std::vector<std::vector<double>> deltas_;
};

void mlp_forward_cached(const MlpSpec& spec, std::span<const double> params,
                        std::span<const double> input, MlpCache& cache);

// Accumulates d(cotangent . output)/d(params) into grad_params (may be empty
// to skip) and writes the input gradient into grad_input (may be empty).
void mlp_backward_cached(const MlpSpec& spec, std::span<const double> params, const MlpCache& cache,
                         std::span<const double> output_cotangent,
                         std::span<double> grad_params_accum, std::span<double> grad_input);

std::vector<double> mlp_forward(const MlpSpec& spec, std::span<const double> params,
                                std::span<const double> input);

Gradients mlp_grad(const MlpSpec& spec, std::span<const double> params,
                   std::span<const double> input, std::span<const double> output_cotangent);

// Uniform(-1,1)/sqrt(fan_in) initialization.
ParamVector init_mlp_params(const MlpSpec& spec, Rng& rng);

// Four-gate recurrence (input, forget, cell, output) with a linear readout.
// Layout: Wx[4H x I] row-major, Wh[4H x H] row-major, b[4H],
//         Wr[O x H] row-major, br[O]. Gate rows ordered i, f, g, o.
struct LstmSpec {
  int input_width = 0;
  int hidden_width = 0;
  int output_width = 0;

  std::size_t param_count() const;
  void validate() const;
};

// Scans the sequence from the last element to the first with zero-initialized
// state; the output at position t therefore depends only on inputs t..T.
std::vector<std::vector<double>> lstm_scan_reversed(const LstmSpec& spec,
                                                    std::span<const double> params,
                                                    const std::vector<std::vector<double>>& inputs);

// Reverse-mode gradients through the reversed scan. output_cotangents has one
// entry per timestep; wrt_inputs is returned flattened timestep-major.
Gradients lstm_scan_reversed_grad(const LstmSpec& spec, std::span<const double> params,
                                  const std::vector<std::vector<double>>& inputs,
                                  const std::vector<std::vector<double>>& output_cotangents);

// Uniform(-1,1)/sqrt(fan_in) with forget-gate bias set to 1.
ParamVector init_lstm_params(const LstmSpec& spec, Rng& rng);

// Structured recurrence weights matching the documented flat ordering.
struct LstmWeights {
  std::vector<std::vector<double>> wx;  // [4H][I]
  std::vector<std::vector<double>> wh;  // [4H][H]
  std::vector<double> bias;             // [4H]
  std::vector<std::vector<double>> readout;  // [O][H]
  std::vector<double> readout_bias;          // [O]
};

ParamVector flatten_lstm(const LstmSpec& spec, const LstmWeights& weights);
LstmWeights unflatten_lstm(const LstmSpec& spec, std::span<const double> params);

// Central-difference gradient estimate, component-wise.
std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> x, double step);

}  // namespace tempo::nn
