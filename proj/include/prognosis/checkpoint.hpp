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

// Checkpoint container, little-endian throughout:
//
//   magic      8 bytes  "PRGCKPT\0"
//   version    u32      kCheckpointVersion
//   meta_len   u64      then meta_len bytes of UTF-8 JSON:
//                       {"model": ModelConfig, "train": {...}, "provenance": {...},
//                        "adam_step": t, "has_optimizer": bool}
//   n_tensors  u64      then per tensor:
//     name_len u32, name bytes, rank u32, rank x u64 dims,
//     product(dims) x float32 payload
//
// Model tensors use the names from ModelParams::named(); optimizer moments are
// stored as "adam.m/<name>" and "adam.v/<name>".

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include <nlohmann/json.hpp>

#include "prognosis/adam.hpp"
#include "prognosis/model.hpp"

namespace prognosis {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  model::ModelConfig config;
  model::ModelParams params;
  nlohmann::json train_config = nlohmann::json::object();
  nlohmann::json provenance = nlohmann::json::object();
  std::optional<train::AdamState> optimizer;
};

/// Throws IoFailure.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);

/// Throws MissingFile, CheckpointTruncated ("checkpoint truncated"),
/// CheckpointCorrupt (bad magic/version/meta), ShapeMismatch naming the tensor
/// and dimension that disagree with the stored config.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Rounds every parameter to float32 precision, the precision a checkpoint
/// stores.
void round_to_storage_precision(model::ModelParams& params);

}  // namespace prognosis
