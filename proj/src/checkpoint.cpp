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

#include "prognosis/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "prognosis/error.hpp"

namespace prognosis {

namespace {

constexpr char kMagic[8] = {'P', 'R', 'G', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kMaxRank = 8;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
    if (!out_) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  }
  template <typename T>
  void pod(T value) {
    out_.write(reinterpret_cast<const char*>(&value), sizeof value);
  }
  void bytes(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  }
  void tensor(const std::string& name, const ad::Tensor& t) {
    pod(static_cast<std::uint32_t>(name.size()));
    bytes(name.data(), name.size());
    pod(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) pod(static_cast<std::uint64_t>(d));
    std::vector<float> payload(t.values().begin(), t.values().end());
    bytes(payload.data(), payload.size() * sizeof(float));
  }
  void finish() {
    out_.flush();
    if (!out_) throw Error(ErrorCode::IoFailure, "write failed for " + path_.string());
  }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
    if (!in_) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  }
  void bytes(void* dst, std::size_t n) {
    if (!in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n))) {
      throw Error(ErrorCode::CheckpointTruncated, "checkpoint truncated");
    }
  }
  template <typename T>
  T pod() {
    T value{};
    bytes(&value, sizeof value);
    return value;
  }

 private:
  std::ifstream in_;
};

struct StoredTensor {
  ad::Shape shape;
  std::vector<float> values;
};

}  // namespace

void round_to_storage_precision(model::ModelParams& params) {
  for (auto& [name, t] : params.named()) {
    for (double& v : t->values()) v = static_cast<double>(static_cast<float>(v));
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  const auto named = ckpt.params.named();
  nlohmann::json meta = {{"model", ckpt.config.to_json()},
                         {"train", ckpt.train_config},
                         {"provenance", ckpt.provenance},
                         {"has_optimizer", ckpt.optimizer.has_value()},
                         {"adam_step", ckpt.optimizer ? ckpt.optimizer->t : 0}};
  const std::string meta_text = meta.dump();

  Writer w(path);
  w.bytes(kMagic, sizeof kMagic);
  w.pod(kCheckpointVersion);
  w.pod(static_cast<std::uint64_t>(meta_text.size()));
  w.bytes(meta_text.data(), meta_text.size());
  const std::size_t n_tensors = named.size() * (ckpt.optimizer ? 3 : 1);
  w.pod(static_cast<std::uint64_t>(n_tensors));
  for (const auto& [name, t] : named) w.tensor(name, *t);
  if (ckpt.optimizer) {
    if (ckpt.optimizer->m.size() != named.size() || ckpt.optimizer->v.size() != named.size()) {
      throw Error(ErrorCode::ShapeMismatch, "optimizer state does not match the parameter list");
    }
    for (std::size_t i = 0; i < named.size(); ++i) w.tensor("adam.m/" + named[i].name, ckpt.optimizer->m[i]);
    for (std::size_t i = 0; i < named.size(); ++i) w.tensor("adam.v/" + named[i].name, ckpt.optimizer->v[i]);
  }
  w.finish();
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::MissingFile, path.string());
  const auto file_size = std::filesystem::file_size(path);
  Reader r(path);
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw Error(ErrorCode::CheckpointCorrupt, path.string() + " is not a checkpoint");
  }
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::CheckpointCorrupt, "unsupported checkpoint version " + std::to_string(version));
  }
  const auto meta_len = r.pod<std::uint64_t>();
  if (meta_len > file_size) throw Error(ErrorCode::CheckpointTruncated, "checkpoint truncated");
  std::string meta_text(meta_len, '\0');
  r.bytes(meta_text.data(), meta_text.size());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CheckpointCorrupt, std::string("metadata: ") + e.what());
  }

  Checkpoint ckpt;
  ckpt.config = model::ModelConfig::from_json(meta.at("model"));
  ckpt.train_config = meta.value("train", nlohmann::json::object());
  ckpt.provenance = meta.value("provenance", nlohmann::json::object());

  std::map<std::string, StoredTensor> stored;
  const auto n_tensors = r.pod<std::uint64_t>();
  for (std::uint64_t i = 0; i < n_tensors; ++i) {
    const auto name_len = r.pod<std::uint32_t>();
    if (name_len > 4096) throw Error(ErrorCode::CheckpointCorrupt, "tensor name too long");
    std::string name(name_len, '\0');
    r.bytes(name.data(), name.size());
    const auto rank = r.pod<std::uint32_t>();
    if (rank == 0 || rank > kMaxRank) throw Error(ErrorCode::CheckpointCorrupt, name + ": bad rank");
    StoredTensor t;
    std::uint64_t count = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      const auto dim = r.pod<std::uint64_t>();
      t.shape.push_back(static_cast<std::size_t>(dim));
      count *= dim;
    }
    if (count * sizeof(float) > file_size) throw Error(ErrorCode::CheckpointTruncated, "checkpoint truncated");
    t.values.resize(count);
    r.bytes(t.values.data(), count * sizeof(float));
    stored.emplace(std::move(name), std::move(t));
  }

  auto take = [&stored](const std::string& name, ad::Tensor& dst) {
    auto it = stored.find(name);
    if (it == stored.end()) throw Error(ErrorCode::CheckpointCorrupt, "missing tensor " + name);
    const ad::Shape& want = dst.shape();
    const ad::Shape& have = it->second.shape;
    if (want.size() != have.size()) {
      throw Error(ErrorCode::ShapeMismatch, name + ": rank " + std::to_string(have.size()) +
                                                " in checkpoint, config implies " + std::to_string(want.size()));
    }
    for (std::size_t k = 0; k < want.size(); ++k) {
      if (want[k] != have[k]) {
        throw Error(ErrorCode::ShapeMismatch, name + ": dimension " + std::to_string(k) + " is " +
                                                  std::to_string(have[k]) + " in checkpoint, config implies " +
                                                  std::to_string(want[k]));
      }
    }
    std::copy(it->second.values.begin(), it->second.values.end(), dst.values().begin());
  };

  ckpt.params = model::zero_params(ckpt.config);
  auto named = ckpt.params.named();
  for (auto& [name, t] : named) take(name, *t);
  if (meta.value("has_optimizer", false)) {
    train::AdamState state;
    state.t = meta.value("adam_step", std::uint64_t{0});
    for (auto& [name, t] : named) {
      state.m.emplace_back(t->shape());
      take("adam.m/" + name, state.m.back());
    }
    for (auto& [name, t] : named) {
      state.v.emplace_back(t->shape());
      take("adam.v/" + name, state.v.back());
    }
    ckpt.optimizer = std::move(state);
  }
  return ckpt;
}

}  // namespace prognosis
