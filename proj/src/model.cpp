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

#include "prognosis/model.hpp"

#include <algorithm>
#include <cmath>

#include "prognosis/error.hpp"
#include "prognosis/rng.hpp"

namespace prognosis::model {

using nlohmann::json;

std::vector<ConvLayerSpec> default_conv_schedule(std::size_t width) {
  constexpr std::size_t kKernels[] = {5, 3, 3, 3, 4, 3, 3};
  constexpr std::size_t kStrides[] = {5, 3, 3, 3, 3, 2, 3};
  std::vector<ConvLayerSpec> layers;
  for (std::size_t i = 0; i < 7; ++i) {
    layers.push_back({kKernels[i], kStrides[i], width, i == 0});
  }
  return layers;
}

ReceptiveField receptive_field(std::span<const ConvLayerSpec> layers) {
  ReceptiveField rf;
  for (const ConvLayerSpec& layer : layers) {
    rf.size += (layer.kernel - 1) * rf.jump;
    rf.jump *= layer.stride;
  }
  return rf;
}

std::size_t conv_output_length(std::span<const ConvLayerSpec> layers, std::size_t input_len) {
  std::size_t len = input_len;
  for (const ConvLayerSpec& layer : layers) {
    if (layer.stride == 0 || layer.kernel == 0 || layer.kernel > len) return 0;
    len = (len - layer.kernel) / layer.stride + 1;
  }
  return len;
}

std::size_t ModelConfig::tokens_per_channel() const { return conv_output_length(conv_layers, segment_len); }

std::size_t ModelConfig::sequence_length() const { return n_bipolar_channels * tokens_per_channel() + 2; }

void ModelConfig::validate() const {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::InvalidConfig, why); };
  if (n_bipolar_channels < 1 || n_bipolar_channels > dsp::kBipolarChannels) {
    fail("n_bipolar_channels must be in 1..18");
  }
  if (conv_layers.size() != 7) fail("conv stack must have 7 layers");
  for (std::size_t i = 0; i < conv_layers.size(); ++i) {
    const ConvLayerSpec& l = conv_layers[i];
    if (l.kernel < 1 || l.stride < 1 || l.out_channels < 1) fail("conv layer " + std::to_string(i + 1) + " has a zero size");
    if (l.has_instance_norm != (i == 0)) fail("instance norm belongs to conv layer 1 only");
  }
  if (embed_dim < 2) fail("embed_dim must be >= 2");
  if (conv_layers.back().out_channels != embed_dim) fail("last conv width must equal embed_dim");
  if (n_heads < 1 || embed_dim % n_heads != 0) fail("embed_dim must be divisible by n_heads");
  if (n_attention_blocks < 1) fail("need at least one attention block");
  if (ffn_hidden < 1) fail("ffn_hidden must be >= 1");
  if (!(norm_eps > 0.0)) fail("norm_eps must be positive");
  if (tokens_per_channel() == 0) fail("conv stack does not fit segment_len");
}

json ModelConfig::to_json() const {
  json layers = json::array();
  for (const ConvLayerSpec& l : conv_layers) {
    layers.push_back({{"kernel", l.kernel},
                      {"stride", l.stride},
                      {"out_channels", l.out_channels},
                      {"has_instance_norm", l.has_instance_norm}});
  }
  return {{"n_bipolar_channels", n_bipolar_channels},
          {"conv_layers", layers},
          {"embed_dim", embed_dim},
          {"n_attention_blocks", n_attention_blocks},
          {"n_heads", n_heads},
          {"ffn_hidden", ffn_hidden},
          {"segment_len", segment_len},
          {"tokens_per_channel", tokens_per_channel()},
          {"norm_eps", norm_eps},
          {"positive_is_poor", positive_is_poor}};
}

ModelConfig ModelConfig::from_json(const json& j) {
  ModelConfig c;
  try {
    c.n_bipolar_channels = j.value("n_bipolar_channels", c.n_bipolar_channels);
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.n_attention_blocks = j.value("n_attention_blocks", c.n_attention_blocks);
    c.n_heads = j.value("n_heads", c.n_heads);
    c.ffn_hidden = j.value("ffn_hidden", 4 * c.embed_dim);
    c.segment_len = j.value("segment_len", c.segment_len);
    c.norm_eps = j.value("norm_eps", c.norm_eps);
    c.positive_is_poor = j.value("positive_is_poor", c.positive_is_poor);
    if (j.contains("conv_layers")) {
      c.conv_layers.clear();
      for (const json& l : j.at("conv_layers")) {
        c.conv_layers.push_back({l.at("kernel").get<std::size_t>(), l.at("stride").get<std::size_t>(),
                                 l.at("out_channels").get<std::size_t>(),
                                 l.value("has_instance_norm", c.conv_layers.empty())});
      }
    } else {
      c.conv_layers = default_conv_schedule(c.embed_dim);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("model config: ") + e.what());
  }
  if (j.contains("tokens_per_channel") && j.at("tokens_per_channel").get<std::size_t>() != c.tokens_per_channel()) {
    throw Error(ErrorCode::InvalidConfig, "tokens_per_channel disagrees with the conv stack");
  }
  c.validate();
  return c;
}

ModelConfig ModelConfig::preset(std::string_view name) {
  ModelConfig c;
  auto shape = [&c](std::size_t channels, std::size_t width, std::size_t blocks, std::size_t heads) {
    c.n_bipolar_channels = channels;
    c.embed_dim = width;
    c.conv_layers = default_conv_schedule(width);
    c.n_attention_blocks = blocks;
    c.n_heads = heads;
    c.ffn_hidden = 4 * width;
  };
  if (name == "desk") {
    shape(2, 32, 2, 2);
  } else if (name == "entry1" || name == "entry2") {
    shape(2, 768, 2, 2);
  } else if (name == "entry3") {
    shape(2, 768, 8, 8);
  } else if (name == "entry4") {
    shape(18, 768, 8, 8);
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown preset \"" + std::string(name) + "\"");
  }
  c.validate();
  return c;
}

// ---- parameters --------------------------------------------------------------

namespace {

template <typename Params, typename Fn>
void visit(Params& p, Fn&& fn) {
  for (std::size_t e = 0; e < p.encoders.size(); ++e) {
    const std::string enc = "encoder." + std::to_string(e) + ".conv.";
    for (std::size_t l = 0; l < p.encoders[e].layers.size(); ++l) {
      auto& layer = p.encoders[e].layers[l];
      const std::string base = enc + std::to_string(l) + ".";
      fn(base + "weight", layer.weight);
      fn(base + "bias", layer.bias);
      if (!layer.norm_gain.empty()) {
        fn(base + "norm.gain", layer.norm_gain);
        fn(base + "norm.shift", layer.norm_shift);
      }
    }
  }
  fn(std::string("pos_encoding"), p.pos_encoding);
  fn(std::string("class_token"), p.class_token);
  fn(std::string("regress_token"), p.regress_token);
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    auto& blk = p.blocks[b];
    const std::string base = "blocks." + std::to_string(b) + ".";
    auto linear = [&](const std::string& name, auto& lin) {
      fn(base + name + ".weight", lin.weight);
      fn(base + name + ".bias", lin.bias);
    };
    linear("attn.query", blk.query);
    linear("attn.key", blk.key);
    linear("attn.value", blk.value);
    linear("attn.output", blk.output);
    fn(base + "norm_attention.gain", blk.norm_attention.gain);
    fn(base + "norm_attention.shift", blk.norm_attention.shift);
    linear("ffn.in", blk.ffn_in);
    linear("ffn.out", blk.ffn_out);
    fn(base + "norm_ffn.gain", blk.norm_ffn.gain);
    fn(base + "norm_ffn.shift", blk.norm_ffn.shift);
  }
  fn(std::string("class_head.weight"), p.class_head.weight);
  fn(std::string("class_head.bias"), p.class_head.bias);
  fn(std::string("regress_head.weight"), p.regress_head.weight);
  fn(std::string("regress_head.bias"), p.regress_head.bias);
}

LinearParams zero_linear(std::size_t in, std::size_t out) {
  return {Tensor({in, out}), Tensor({out})};
}

LayerNormParams unit_norm(std::size_t d) { return {Tensor({d}, 1.0), Tensor({d})}; }

}  // namespace

std::vector<NamedTensor> ModelParams::named() {
  std::vector<NamedTensor> out;
  visit(*this, [&](const std::string& name, Tensor& t) { out.push_back({name, &t}); });
  return out;
}

std::vector<ConstNamedTensor> ModelParams::named() const {
  std::vector<ConstNamedTensor> out;
  visit(*this, [&](const std::string& name, const Tensor& t) { out.push_back({name, &t}); });
  return out;
}

ModelParams zero_params(const ModelConfig& config) {
  config.validate();
  const std::size_t d = config.embed_dim;
  ModelParams p;
  p.encoders.resize(config.n_bipolar_channels);
  for (EncoderParams& enc : p.encoders) {
    std::size_t in = 1;
    for (const ConvLayerSpec& spec : config.conv_layers) {
      ConvLayerParams layer;
      layer.weight = Tensor({spec.out_channels, in, spec.kernel});
      layer.bias = Tensor({spec.out_channels});
      if (spec.has_instance_norm) {
        layer.norm_gain = Tensor({spec.out_channels}, 1.0);
        layer.norm_shift = Tensor({spec.out_channels});
      }
      enc.layers.push_back(std::move(layer));
      in = spec.out_channels;
    }
  }
  p.pos_encoding = Tensor({config.sequence_length(), d});
  p.class_token = Tensor({d});
  p.regress_token = Tensor({d});
  p.blocks.resize(config.n_attention_blocks);
  for (AttentionBlockParams& blk : p.blocks) {
    blk.query = zero_linear(d, d);
    blk.key = zero_linear(d, d);
    blk.value = zero_linear(d, d);
    blk.output = zero_linear(d, d);
    blk.ffn_in = zero_linear(d, config.ffn_hidden);
    blk.ffn_out = zero_linear(config.ffn_hidden, d);
    blk.norm_attention = unit_norm(d);
    blk.norm_ffn = unit_norm(d);
  }
  p.class_head = zero_linear(d, 1);
  p.regress_head = zero_linear(d, 1);
  return p;
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  ModelParams p = zero_params(config);
  Rng rng(seed);
  // Uniform with standard deviation gain/sqrt(fan_in). The conv stack uses gain sqrt(2) so
  // GELU layers keep their activation scale instead of shrinking it layer by layer.
  auto uniform_fill = [&rng](Tensor& w, std::size_t fan_in, double gain = 1.0) {
    const double bound = gain * std::sqrt(3.0 / static_cast<double>(fan_in));
    for (double& v : w.values()) v = rng.uniform(-bound, bound);
  };
  auto normal_fill = [&rng](Tensor& w) {
    for (double& v : w.values()) v = rng.normal(0.0, 0.02);
  };
  for (EncoderParams& enc : p.encoders) {
    for (ConvLayerParams& layer : enc.layers) {
      uniform_fill(layer.weight, layer.weight.dim(1) * layer.weight.dim(2), std::sqrt(2.0));
    }
  }
  normal_fill(p.pos_encoding);
  normal_fill(p.class_token);
  normal_fill(p.regress_token);
  for (AttentionBlockParams& blk : p.blocks) {
    for (LinearParams* lin : {&blk.query, &blk.key, &blk.value, &blk.output, &blk.ffn_in, &blk.ffn_out}) {
      uniform_fill(lin->weight, lin->weight.dim(0));
    }
  }
  uniform_fill(p.class_head.weight, p.class_head.weight.dim(0));
  uniform_fill(p.regress_head.weight, p.regress_head.weight.dim(0));
  return p;
}

std::size_t count_parameters(const ModelParams& params) {
  std::size_t total = 0;
  for (const auto& [name, t] : params.named()) total += t->size();
  return total;
}

void check_params(const ModelParams& params, const ModelConfig& config) {
  const ModelParams expected = zero_params(config);
  const auto want = expected.named();
  const auto have = params.named();
  if (want.size() != have.size()) {
    throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(want.size()) +
                                              " parameter tensors, have " + std::to_string(have.size()));
  }
  for (std::size_t i = 0; i < want.size(); ++i) {
    if (want[i].name != have[i].name || want[i].tensor->shape() != have[i].tensor->shape()) {
      throw Error(ErrorCode::ShapeMismatch, want[i].name + ": expected " +
                                                ad::shape_str(want[i].tensor->shape()) + ", have " +
                                                have[i].name + " " + ad::shape_str(have[i].tensor->shape()));
    }
  }
}

// ---- forward -----------------------------------------------------------------

Var ParamBinder::operator()(const Tensor& param) {
  auto it = leaves_.find(&param);
  if (it != leaves_.end()) return it->second;
  Var leaf = graph_.parameter(param);
  leaves_.emplace(&param, leaf);
  return leaf;
}

std::optional<Var> ParamBinder::find(const Tensor& param) const {
  auto it = leaves_.find(&param);
  if (it == leaves_.end()) return std::nullopt;
  return it->second;
}

Var encode_channel(ParamBinder& bind, const EncoderParams& encoder, const ModelConfig& config,
                   std::span<const float> channel) {
  if (channel.size() != config.segment_len) {
    throw Error(ErrorCode::ShapeMismatch, "channel has " + std::to_string(channel.size()) +
                                              " samples, encoder expects " +
                                              std::to_string(config.segment_len));
  }
  Tensor input({1, channel.size()});
  std::copy(channel.begin(), channel.end(), input.data());
  Var x = bind.graph().constant(std::move(input));
  for (std::size_t l = 0; l < config.conv_layers.size(); ++l) {
    const ConvLayerSpec& spec = config.conv_layers[l];
    const ConvLayerParams& layer = encoder.layers[l];
    x = ad::conv1d(x, bind(layer.weight), bind(layer.bias), spec.stride);
    if (spec.has_instance_norm) {
      x = ad::instance_norm(x, bind(layer.norm_gain), bind(layer.norm_shift), config.norm_eps);
    }
    x = ad::gelu(x);
  }
  return ad::transpose(x);
}

Var build_sequence(ParamBinder& bind, const ModelParams& params, const ModelConfig& config,
                   const dsp::BipolarSegment& segment) {
  if (segment.data.size() != dsp::BipolarSegment::kChannels * dsp::BipolarSegment::kSamples ||
      config.segment_len != dsp::BipolarSegment::kSamples) {
    throw Error(ErrorCode::ShapeMismatch, "segment must be 18 x " + std::to_string(config.segment_len));
  }
  const std::size_t d = config.embed_dim;
  std::vector<Var> rows;
  rows.reserve(config.n_bipolar_channels + 2);
  rows.push_back(ad::reshape(bind(params.class_token), {1, d}));
  rows.push_back(ad::reshape(bind(params.regress_token), {1, d}));
  for (std::size_t c = 0; c < config.n_bipolar_channels; ++c) {
    rows.push_back(encode_channel(bind, params.encoders[c], config, segment.channel(c)));
  }
  return ad::add(ad::concat_rows(rows), bind(params.pos_encoding));
}

Var multi_head_attention(ParamBinder& bind, const AttentionBlockParams& block, const Var& x,
                         std::size_t n_heads, std::vector<Tensor>* weights) {
  const std::size_t d = x.shape().back();
  if (n_heads == 0 || d % n_heads != 0) {
    throw Error(ErrorCode::ShapeMismatch, "width " + std::to_string(d) + " not divisible by " +
                                              std::to_string(n_heads) + " heads");
  }
  const std::size_t head_dim = d / n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  const Var q = ad::linear(x, bind(block.query.weight), bind(block.query.bias));
  const Var k = ad::linear(x, bind(block.key.weight), bind(block.key.bias));
  const Var v = ad::linear(x, bind(block.value.weight), bind(block.value.bias));
  std::vector<Var> heads;
  heads.reserve(n_heads);
  if (weights) weights->clear();
  for (std::size_t h = 0; h < n_heads; ++h) {
    const std::size_t start = h * head_dim;
    const Var qh = ad::slice_cols(q, start, head_dim);
    const Var kh = ad::slice_cols(k, start, head_dim);
    const Var vh = ad::slice_cols(v, start, head_dim);
    const Var attn = ad::softmax(ad::scale(ad::matmul(qh, ad::transpose(kh)), scale));
    if (weights) weights->push_back(attn.value());
    heads.push_back(ad::matmul(attn, vh));
  }
  const Var merged = n_heads == 1 ? heads[0] : ad::concat_cols(heads);
  return ad::linear(merged, bind(block.output.weight), bind(block.output.bias));
}

Var attention_block(ParamBinder& bind, const AttentionBlockParams& block, const Var& x,
                    std::size_t n_heads, double eps) {
  const Var attended = multi_head_attention(bind, block, x, n_heads);
  const Var h = ad::layer_norm(ad::add(x, attended), bind(block.norm_attention.gain),
                               bind(block.norm_attention.shift), eps);
  const Var hidden = ad::gelu(ad::linear(h, bind(block.ffn_in.weight), bind(block.ffn_in.bias)));
  const Var ffn = ad::linear(hidden, bind(block.ffn_out.weight), bind(block.ffn_out.bias));
  return ad::layer_norm(ad::add(h, ffn), bind(block.norm_ffn.gain), bind(block.norm_ffn.shift), eps);
}

HeadOutputs forward_heads(ParamBinder& bind, const ModelParams& params, const ModelConfig& config,
                          const dsp::BipolarSegment& segment) {
  Var x = build_sequence(bind, params, config, segment);
  for (const AttentionBlockParams& block : params.blocks) {
    x = attention_block(bind, block, x, config.n_heads, config.norm_eps);
  }
  HeadOutputs out;
  out.class_logit =
      ad::linear(ad::slice_rows(x, 0, 1), bind(params.class_head.weight), bind(params.class_head.bias));
  out.cpc_raw = ad::linear(ad::slice_rows(x, 1, 1), bind(params.regress_head.weight),
                           bind(params.regress_head.bias));
  return out;
}

int cpc_from_raw(double raw) {
  const double rounded = std::round(raw);
  return static_cast<int>(std::clamp(rounded, 1.0, 5.0));
}

double poor_probability(double class_logit, const ModelConfig& config) {
  const double p = ad::sigmoid_value(class_logit);
  return config.positive_is_poor ? p : 1.0 - p;
}

ModelOutput forward(const ModelParams& params, const ModelConfig& config,
                    const dsp::BipolarSegment& segment) {
  ad::Graph graph(ad::Graph::Mode::Inference);
  ParamBinder bind(graph);
  const HeadOutputs heads = forward_heads(bind, params, config, segment);
  ModelOutput out;
  out.poor_prob = poor_probability(heads.class_logit.value()[0], config);
  out.cpc_raw = heads.cpc_raw.value()[0];
  out.cpc_pred = cpc_from_raw(out.cpc_raw);
  return out;
}

}  // namespace prognosis::model
