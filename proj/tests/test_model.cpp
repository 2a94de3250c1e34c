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

#include <doctest.h>

#include <cmath>
#include <fstream>

#include "generators.hpp"
#include "prognosis/checkpoint.hpp"
#include "prognosis/error.hpp"
#include "prognosis/model.hpp"

using namespace prognosis;
using namespace prognosis::model;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::IoFailure;
}

// Encoder: layer 1 is 32x1x5 weights + bias + norm gain/shift, layers 2-7
// are 32x32xk + bias with k = 3,3,3,4,3,3.
constexpr std::size_t kDeskEncoder = (32 * 5 + 32 + 32 + 32) + 5 * (32 * 32 * 3 + 32) + (32 * 32 * 4 + 32);
// Q, K, V, O (32x32 + 32 each), FFN 32->128->32, two layer norms.
constexpr std::size_t kDeskBlock = 4 * (32 * 32 + 32) + (32 * 128 + 128) + (128 * 32 + 32) + 2 * (32 + 32);
constexpr std::size_t kDeskTotal = 2 * kDeskEncoder + 26 * 32 + 2 * 32 + 2 * kDeskBlock + 2 * (32 + 1);
static_assert(kDeskEncoder == 19904 && kDeskBlock == 12704 && kDeskTotal == 66178);

}  // namespace

TEST_CASE("receptive field and token count of the default schedule") {
  const auto layers = default_conv_schedule(768);
  CHECK(receptive_field(layers) == ReceptiveField{2970, 2430});
  CHECK(conv_output_length(layers, 30000) == 12);
  for (std::size_t width : {1, 8, 32, 100, 768}) {
    CHECK(conv_output_length(default_conv_schedule(width), 30000) == 12);
    CHECK(receptive_field(default_conv_schedule(width)) == ReceptiveField{2970, 2430});
  }
  CHECK(conv_output_length(layers, 2969) == 0);
  CHECK(conv_output_length(layers, 2970) == 1);
}

TEST_CASE("receptive field small cases") {
  const std::vector<ConvLayerSpec> one{{5, 5, 1, true}};
  CHECK(receptive_field(one) == ReceptiveField{5, 5});
  const std::vector<ConvLayerSpec> two{{3, 1, 1, true}, {3, 1, 1, false}};
  CHECK(receptive_field(two) == ReceptiveField{5, 1});
}

TEST_CASE("presets") {
  struct Row {
    const char* name;
    std::size_t channels, blocks, heads, width;
  };
  for (const Row& r : {Row{"desk", 2, 2, 2, 32}, Row{"entry1", 2, 2, 2, 768}, Row{"entry2", 2, 2, 2, 768},
                       Row{"entry3", 2, 8, 8, 768}, Row{"entry4", 18, 8, 8, 768}}) {
    const auto c = ModelConfig::preset(r.name);
    CHECK(c.n_bipolar_channels == r.channels);
    CHECK(c.n_attention_blocks == r.blocks);
    CHECK(c.n_heads == r.heads);
    CHECK(c.embed_dim == r.width);
    CHECK(c.ffn_hidden == 4 * r.width);
  }
  const auto paper = ModelConfig::preset("entry4");
  CHECK(paper.n_bipolar_channels * paper.tokens_per_channel() == 216);
  CHECK(paper.sequence_length() == 218);
  CHECK(ModelConfig::preset("desk").sequence_length() == 26);
  CHECK(code_of([] { ModelConfig::preset("entry5"); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("config validation") {
  auto c = ModelConfig::preset("desk");
  c.n_heads = 3;
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::InvalidConfig);
  c = ModelConfig::preset("desk");
  c.conv_layers[3].has_instance_norm = true;
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::InvalidConfig);
  c = ModelConfig::preset("desk");
  c.conv_layers.pop_back();
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::InvalidConfig);
  c = ModelConfig::preset("desk");
  CHECK(ModelConfig::from_json(c.to_json()) == c);
}

TEST_CASE("parameter counts") {
  const auto desk = ModelConfig::preset("desk");
  CHECK(count_parameters(init_params(desk, 1)) == kDeskTotal);

  // A single d=768 head: 768 weights and one bias.
  auto p = zero_params(ModelConfig::preset("desk"));
  CHECK(p.class_head.weight.size() + p.class_head.bias.size() == 33);
  CHECK(768 + 1 == 769);

  auto more = desk;
  more.n_attention_blocks = 4;
  auto most = desk;
  most.n_attention_blocks = 8;
  const std::size_t c2 = count_parameters(zero_params(desk));
  const std::size_t c4 = count_parameters(zero_params(more));
  const std::size_t c8 = count_parameters(zero_params(most));
  CHECK(c4 - c2 == 2 * kDeskBlock);
  CHECK(c8 - c4 == 4 * kDeskBlock);
}

TEST_CASE("encoders are distinct objects") {
  const auto p = init_params(ModelConfig::preset("desk"), 3);
  REQUIRE(p.encoders.size() == 2);
  CHECK(&p.encoders[0].layers[0].weight != &p.encoders[1].layers[0].weight);
  CHECK(!(p.encoders[0].layers[0].weight == p.encoders[1].layers[0].weight));
}

TEST_CASE("init is deterministic in the seed") {
  const auto c = ModelConfig::preset("desk");
  const auto a = init_params(c, 9), b = init_params(c, 9), d = init_params(c, 10);
  auto na = a.named(), nb = b.named(), nd = d.named();
  bool all_same = true, any_diff = false;
  for (std::size_t i = 0; i < na.size(); ++i) {
    all_same = all_same && *na[i].tensor == *nb[i].tensor;
    any_diff = any_diff || !(*na[i].tensor == *nd[i].tensor);
  }
  CHECK(all_same);
  CHECK(any_diff);
}

TEST_CASE("encode_channel shapes") {
  Rng rng(4);
  const auto desk = ModelConfig::preset("desk");
  const auto p = init_params(desk, 1);
  const auto seg = testgen::random_segment(rng);
  ad::Graph g(ad::Graph::Mode::Inference);
  ParamBinder bind(g);
  CHECK(encode_channel(bind, p.encoders[0], desk, seg.channel(0)).shape() == ad::Shape{12, 32});
  std::vector<float> short_channel(29999, 0.1f);
  CHECK(code_of([&] { encode_channel(bind, p.encoders[0], desk, short_channel); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("encode_channel at paper width") {
  Rng rng(5);
  auto one = ModelConfig::preset("entry1");
  one.n_bipolar_channels = 1;
  one.n_attention_blocks = 1;
  const auto p = init_params(one, 1);
  const auto seg = testgen::random_segment(rng);
  ad::Graph g(ad::Graph::Mode::Inference);
  ParamBinder bind(g);
  CHECK(encode_channel(bind, p.encoders[0], one, seg.channel(0)).shape() == ad::Shape{12, 768});
}

TEST_CASE("build_sequence layout") {
  Rng rng(6);
  const auto desk = ModelConfig::preset("desk");
  auto p = init_params(desk, 2);
  const auto seg = testgen::random_segment(rng);
  {
    ad::Graph g(ad::Graph::Mode::Inference);
    ParamBinder bind(g);
    CHECK(build_sequence(bind, p, desk, seg).shape() == ad::Shape{26, 32});
  }
  p.pos_encoding.fill(0.0);
  p.class_token.fill(0.0);
  p.regress_token.fill(0.0);
  ad::Graph g(ad::Graph::Mode::Inference);
  ParamBinder bind(g);
  const ad::Tensor seq = build_sequence(bind, p, desk, seg).value();
  for (std::size_t c = 0; c < 32; ++c) {
    CHECK(seq.at(0, c) == 0.0);
    CHECK(seq.at(1, c) == 0.0);
  }
  for (std::size_t ch = 0; ch < 2; ++ch) {
    const ad::Tensor tokens = encode_channel(bind, p.encoders[ch], desk, seg.channel(ch)).value();
    for (std::size_t t = 0; t < 12; ++t)
      for (std::size_t c = 0; c < 32; ++c) CHECK(seq.at(2 + 12 * ch + t, c) == tokens.at(t, c));
  }
}

TEST_CASE("class and regress tokens sit at rows 0 and 1 with positions added") {
  Rng rng(7);
  const auto desk = ModelConfig::preset("desk");
  const auto p = init_params(desk, 2);
  ad::Graph g(ad::Graph::Mode::Inference);
  ParamBinder bind(g);
  const ad::Tensor seq = build_sequence(bind, p, desk, testgen::random_segment(rng)).value();
  for (std::size_t c = 0; c < 32; ++c) {
    CHECK(seq.at(0, c) == p.class_token[c] + p.pos_encoding.at(0, c));
    CHECK(seq.at(1, c) == p.regress_token[c] + p.pos_encoding.at(1, c));
  }
}

TEST_CASE("perturbing one channel only changes its own token rows") {
  Rng rng(8);
  const auto desk = ModelConfig::preset("desk");
  const auto p = init_params(desk, 4);
  for (int trial = 0; trial < 3; ++trial) {
    auto seg = testgen::random_segment(rng);
    const std::size_t j = rng.index(2);
    auto bumped = seg;
    for (std::size_t t = 0; t < 30000; t += 7) bumped.data[j * 30000 + t] *= -0.5f;
    ad::Graph g(ad::Graph::Mode::Inference);
    ParamBinder bind(g);
    const ad::Tensor a = build_sequence(bind, p, desk, seg).value();
    const ad::Tensor b = build_sequence(bind, p, desk, bumped).value();
    for (std::size_t r = 0; r < 26; ++r) {
      bool same = true;
      for (std::size_t c = 0; c < 32; ++c) same = same && a.at(r, c) == b.at(r, c);
      const bool own = r >= 2 + 12 * j && r < 2 + 12 * (j + 1);
      CHECK(same == !own);
    }
  }
}

TEST_CASE("attention block shape and attention rows") {
  Rng rng(9);
  const auto desk = ModelConfig::preset("desk");
  const auto p = init_params(desk, 5);
  for (std::size_t s : {1, 3, 26}) {
    ad::Graph g(ad::Graph::Mode::Inference);
    ParamBinder bind(g);
    const Var x = g.constant(testgen::uniform_tensor(rng, {s, 32}));
    std::vector<ad::Tensor> weights;
    multi_head_attention(bind, p.blocks[0], x, 2, &weights);
    REQUIRE(weights.size() == 2);
    for (const auto& w : weights) {
      CHECK(w.shape() == ad::Shape{s, s});
      for (std::size_t r = 0; r < s; ++r) {
        double total = 0.0;
        for (std::size_t c = 0; c < s; ++c) total += w.at(r, c);
        CHECK(std::abs(total - 1.0) <= 1e-6);
      }
    }
    CHECK(attention_block(bind, p.blocks[0], x, 2, 1e-5).shape() == ad::Shape{s, 32});
  }
}

TEST_CASE("zero query/key projections attend uniformly") {
  Rng rng(10);
  const auto desk = ModelConfig::preset("desk");
  auto p = init_params(desk, 6);
  auto& b = p.blocks[0];
  b.query.weight.fill(0.0);
  b.query.bias.fill(0.0);
  b.key.weight.fill(0.0);
  b.key.bias.fill(0.0);
  for (auto* lin : {&b.value, &b.output}) {
    lin->weight.fill(0.0);
    lin->bias.fill(0.0);
    for (std::size_t i = 0; i < 32; ++i) lin->weight.at(i, i) = 1.0;
  }
  ad::Graph g(ad::Graph::Mode::Inference);
  ParamBinder bind(g);
  const ad::Tensor xt = testgen::uniform_tensor(rng, {5, 32});
  const ad::Tensor out = multi_head_attention(bind, b, g.constant(xt), 2).value();
  for (std::size_t c = 0; c < 32; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < 5; ++r) mean += xt.at(r, c);
    mean /= 5.0;
    for (std::size_t r = 0; r < 5; ++r) CHECK(out.at(r, c) == doctest::Approx(mean).epsilon(1e-12));
  }
}

TEST_CASE("forward codomain and determinism") {
  Rng rng(11);
  const auto desk = ModelConfig::preset("desk");
  for (int trial = 0; trial < 4; ++trial) {
    const auto p = init_params(desk, 20 + trial);
    const auto seg = testgen::random_segment(rng);
    const auto a = forward(p, desk, seg);
    const auto b = forward(p, desk, seg);
    CHECK(a.poor_prob >= 0.0);
    CHECK(a.poor_prob <= 1.0);
    CHECK(a.cpc_pred >= 1);
    CHECK(a.cpc_pred <= 5);
    CHECK(a.poor_prob == b.poor_prob);
    CHECK(a.cpc_raw == b.cpc_raw);
  }
}

TEST_CASE("every input channel reaches the class output") {
  Rng rng(12);
  const auto desk = ModelConfig::preset("desk");
  const auto p = init_params(desk, 7);
  const auto seg = testgen::random_segment(rng);
  const double base = forward(p, desk, seg).poor_prob;
  for (std::size_t j = 0; j < desk.n_bipolar_channels; ++j) {
    auto bumped = seg;
    for (std::size_t t = 0; t < 30000; ++t) bumped.data[j * 30000 + t] = 0.9f * bumped.data[j * 30000 + t];
    CHECK(forward(p, desk, bumped).poor_prob != base);
  }
}

TEST_CASE("cpc rounding and label convention") {
  CHECK(cpc_from_raw(2.4) == 2);
  CHECK(cpc_from_raw(2.6) == 3);
  CHECK(cpc_from_raw(-7.0) == 1);
  CHECK(cpc_from_raw(9.0) == 5);
  auto c = ModelConfig::preset("desk");
  CHECK(poor_probability(2.0, c) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))));
  c.positive_is_poor = false;
  CHECK(poor_probability(2.0, c) == doctest::Approx(1.0 - 1.0 / (1.0 + std::exp(-2.0))));
}

TEST_CASE("check_params names the offending tensor") {
  const auto desk = ModelConfig::preset("desk");
  auto p = init_params(desk, 1);
  p.blocks[1].ffn_in.bias = ad::Tensor({127}, 0.0);
  try {
    check_params(p, desk);
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
    CHECK(std::string(e.what()).find("blocks.1.ffn.in.bias") != std::string::npos);
  }
}

TEST_CASE("checkpoint round trip") {
  const auto dir = testgen::scratch_dir("ckpt");
  Checkpoint c;
  c.config = ModelConfig::preset("desk");
  c.params = init_params(c.config, 3);
  round_to_storage_precision(c.params);
  c.provenance = {{"iteration", 5}};
  save_checkpoint(c, dir / "a.ckpt");
  const Checkpoint back = load_checkpoint(dir / "a.ckpt");
  CHECK(back.config == c.config);
  CHECK(back.provenance == c.provenance);
  auto na = c.params.named();
  auto nb = back.params.named();
  REQUIRE(na.size() == nb.size());
  for (std::size_t i = 0; i < na.size(); ++i) {
    CHECK(na[i].name == nb[i].name);
    CHECK(*na[i].tensor == *nb[i].tensor);
  }
  CHECK(!back.optimizer);
}

TEST_CASE("checkpoint errors") {
  const auto dir = testgen::scratch_dir("ckpt-err");
  Checkpoint c;
  c.config = ModelConfig::preset("desk");
  c.params = init_params(c.config, 3);
  save_checkpoint(c, dir / "a.ckpt");
  const auto size = std::filesystem::file_size(dir / "a.ckpt");

  std::filesystem::copy_file(dir / "a.ckpt", dir / "short.ckpt");
  std::filesystem::resize_file(dir / "short.ckpt", size - 100);
  try {
    load_checkpoint(dir / "short.ckpt");
    FAIL("expected CheckpointTruncated");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CheckpointTruncated);
    CHECK(std::string(e.what()).find("checkpoint truncated") != std::string::npos);
  }

  {
    std::ofstream out(dir / "junk.ckpt", std::ios::binary);
    out << "NOTACKPT and some more bytes";
  }
  CHECK(code_of([&] { load_checkpoint(dir / "junk.ckpt"); }) == ErrorCode::CheckpointCorrupt);
  CHECK(code_of([&] { load_checkpoint(dir / "missing.ckpt"); }) == ErrorCode::MissingFile);

  // Parameters saved for d=32 but a config claiming d=16.
  Checkpoint wrong = c;
  auto half = ModelConfig::preset("desk");
  half.embed_dim = 16;
  half.conv_layers = default_conv_schedule(16);
  half.ffn_hidden = 64;
  wrong.config = half;
  save_checkpoint(wrong, dir / "wrong.ckpt");
  try {
    load_checkpoint(dir / "wrong.ckpt");
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
    CHECK(std::string(e.what()).find("dimension") != std::string::npos);
  }
}
