// Copyright 2026 The eeg-prognosis Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// The prognosis network: one dedicated 7-layer conv encoder per bipolar
// channel, token fusion with [class]/[regress] tokens and learnable
// positional encodings, K post-norm attention blocks with M heads, and two
// single-layer heads reading the [class] and [regress] token states.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "prognosis/autodiff.hpp"
#include "prognosis/dsp.hpp"

namespace prognosis::model {

using ad::Tensor;
using ad::Var;

struct ConvLayerSpec {
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t out_channels = 1;
  bool has_instance_norm = false;

  friend bool operator==(const ConvLayerSpec&, const ConvLayerSpec&) = default;
};

/// Kernels (5,3,3,3,4,3,3), strides (5,3,3,3,3,2,3), all of the given
/// width, instance norm in layer 1 only. Receptive field 2970, jump 2430,
/// and 30000 input samples yield 12 outputs.
std::vector<ConvLayerSpec> default_conv_schedule(std::size_t width);

struct ReceptiveField {
  std::size_t size = 1;
  std::size_t jump = 1;
  friend bool operator==(const ReceptiveField&, const ReceptiveField&) = default;
};

/// jump = product of strides; size = 1 + sum_i (k_i - 1) * prod_{j<i} s_j.
ReceptiveField receptive_field(std::span<const ConvLayerSpec> layers);

/// Output length of the valid-convolution stack, or 0 if some layer's kernel
/// exceeds its input.
std::size_t conv_output_length(std::span<const ConvLayerSpec> layers, std::size_t input_len);

struct ModelConfig {
  std::size_t n_bipolar_channels = 18;
  std::vector<ConvLayerSpec> conv_layers = default_conv_schedule(768);
  std::size_t embed_dim = 768;
  std::size_t n_attention_blocks = 8;
  std::size_t n_heads = 8;
  std::size_t ffn_hidden = 3072;
  std::size_t segment_len = dsp::kSegmentSamples;
  double norm_eps = 1e-5;
  /// When true the class logit scores Poor; when false it scores Good and
  /// poor_prob is its complement.
  bool positive_is_poor = true;

  std::size_t tokens_per_channel() const;
  /// n_bipolar_channels * tokens_per_channel + 2.
  std::size_t sequence_length() const;

  /// Throws InvalidConfig: width/heads divisibility, seven conv layers whose
  /// last width equals embed_dim, norm only in layer 1, at least one token.
  void validate() const;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);

  /// "desk", "entry1" .. "entry4". Throws InvalidConfig for other names.
  static ModelConfig preset(std::string_view name);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct ConvLayerParams {
  Tensor weight;  // [out x in x k]
  Tensor bias;    // [out]
  Tensor norm_gain;   // [out], empty without instance norm
  Tensor norm_shift;  // [out]
};

struct EncoderParams {
  std::vector<ConvLayerParams> layers;
};

struct LinearParams {
  Tensor weight;  // [in x out]
  Tensor bias;    // [out]
};

struct LayerNormParams {
  Tensor gain;
  Tensor shift;
};

struct AttentionBlockParams {
  LinearParams query, key, value, output;
  LinearParams ffn_in, ffn_out;
  LayerNormParams norm_attention, norm_ffn;
};

struct NamedTensor {
  std::string name;
  Tensor* tensor;
};
struct ConstNamedTensor {
  std::string name;
  const Tensor* tensor;
};

struct ModelParams {
  std::vector<EncoderParams> encoders;
  Tensor pos_encoding;   // [sequence_length x d]
  Tensor class_token;    // [d]
  Tensor regress_token;  // [d]
  std::vector<AttentionBlockParams> blocks;
  LinearParams class_head;    // [d x 1]
  LinearParams regress_head;  // [d x 1]

  /// Every learnable tensor with a stable dotted name, in a fixed order.
  std::vector<NamedTensor> named();
  std::vector<ConstNamedTensor> named() const;
};

/// Zero-mean uniform conv and linear weights with standard deviation
/// 1/sqrt(fan_in) (bound sqrt(3/fan_in)), zero biases,
/// N(0, 0.02) positional encodings and special tokens, unit norm gains and
/// zero shifts. Deterministic in seed.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

/// Zero-filled parameters with the shapes the config implies.
ModelParams zero_params(const ModelConfig& config);

std::size_t count_parameters(const ModelParams& params);

/// Throws ShapeMismatch naming the first tensor whose shape disagrees with
/// the config.
void check_params(const ModelParams& params, const ModelConfig& config);

/// Maps each parameter tensor to its leaf in one graph, creating leaves on
/// first use.
class ParamBinder {
 public:
  explicit ParamBinder(ad::Graph& graph) : graph_(graph) {}

  Var operator()(const Tensor& param);
  std::optional<Var> find(const Tensor& param) const;
  ad::Graph& graph() const noexcept { return graph_; }

 private:
  ad::Graph& graph_;
  std::unordered_map<const Tensor*, Var> leaves_;
};

/// Layer 1 conv -> instance norm -> GELU, layers 2..7 conv -> GELU, then
/// transposed to [tokens x d]. Throws ShapeMismatch on a wrong length.
Var encode_channel(ParamBinder& bind, const EncoderParams& encoder, const ModelConfig& config,
                   std::span<const float> channel);

/// Stacks the per-channel tokens after the [class] (row 0) and [regress]
/// (row 1) tokens and adds the positional encoding to every row. Uses the
/// first n_bipolar_channels montage channels of the segment.
Var build_sequence(ParamBinder& bind, const ModelParams& params, const ModelConfig& config,
                   const dsp::BipolarSegment& segment);

/// Scaled dot-product attention per head (head width d/M, scale
/// 1/sqrt(d/M)), heads concatenated, then the output projection. When
/// weights is non-null it receives the [S x S] attention matrix of each head.
Var multi_head_attention(ParamBinder& bind, const AttentionBlockParams& block, const Var& x,
                         std::size_t n_heads, std::vector<Tensor>* weights = nullptr);

/// h = LN(x + MHA(x)); out = LN(h + FFN(h)), FFN = linear -> GELU -> linear.
Var attention_block(ParamBinder& bind, const AttentionBlockParams& block, const Var& x,
                    std::size_t n_heads, double eps);

struct HeadOutputs {
  Var class_logit;  // [1 x 1]
  Var cpc_raw;      // [1 x 1]
};

HeadOutputs forward_heads(ParamBinder& bind, const ModelParams& params, const ModelConfig& config,
                          const dsp::BipolarSegment& segment);

struct ModelOutput {
  double poor_prob = 0.0;
  double cpc_raw = 0.0;
  int cpc_pred = 1;
};

/// clamp(round(raw), 1, 5).
int cpc_from_raw(double raw);
double poor_probability(double class_logit, const ModelConfig& config);

/// Inference-mode forward pass.
ModelOutput forward(const ModelParams& params, const ModelConfig& config,
                    const dsp::BipolarSegment& segment);

}  // namespace prognosis::model
