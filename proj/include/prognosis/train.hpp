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

// Joint classification/regression training: mean binary cross-entropy on the
// outcome plus mean squared error on the CPC score, summed with unit weights,
// optimized with Adam on batches drawn patient -> hour -> segment.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prognosis/adam.hpp"
#include "prognosis/checkpoint.hpp"
#include "prognosis/eeg_io.hpp"
#include "prognosis/model.hpp"
#include "prognosis/rng.hpp"
#include "prognosis/segment_cache.hpp"

namespace prognosis::train {

/// -(1/N) sum [y log p + (1-y) log(1-p)], p clamped to [1e-7, 1 - 1e-7].
/// Throws EmptyBatch or ShapeMismatch.
double cross_entropy_loss(std::span<const double> probs, std::span<const double> labels);
/// (1/N) sum (x - x_hat)^2. Throws EmptyBatch or ShapeMismatch.
double mse_loss(std::span<const double> preds, std::span<const double> targets);

struct LossBreakdown {
  double ce = 0.0;
  double mse = 0.0;
  double total = 0.0;
};

LossBreakdown total_loss(double ce, double mse);

struct TrainConfig {
  std::size_t batch_size = 10;
  AdamConfig adam;
  std::size_t max_iterations = 300;
  std::size_t eval_every = 50;
  double split_ratio = 0.8;
  std::uint64_t seed = 1;
  std::size_t val_segments_per_patient = 4;

  /// Throws InvalidConfig.
  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults.
  static TrainConfig from_json(const nlohmann::json& j);
  /// "paper" (40000 iterations, lr 1e-4) or "desk" (300 iterations, lr 1e-3).
  static TrainConfig preset(std::string_view name);
};

struct Split {
  std::vector<std::string> train;
  std::vector<std::string> val;
};

/// Patient-level split, stratified by outcome: each class is shuffled with
/// the seed and cut at round(ratio * n_class), clamped so a class with at
/// least two patients lands on both sides. Throws TooFewPatients.
Split split_patients(std::span<const io::PatientMeta> patients, double ratio, std::uint64_t seed);

struct TrainingExample {
  dsp::BipolarSegment segment;
  double y = 0.0;  // 1 = Poor
  double x = 1.0;  // CPC
  std::string patient_id;
};

struct PatientLookup {
  std::map<std::string, io::PatientMeta> by_id;
  explicit PatientLookup(std::span<const io::PatientMeta> patients);
  const io::PatientMeta& at(const std::string& id) const;
};

/// Uniform patient, then uniform hour of that patient, then uniform segment
/// of that hour. Throws EmptySplit.
TrainingExample sample_training_example(std::span<const std::string> train_ids, const SegmentCache& cache,
                                        const PatientLookup& patients, Rng& rng);

struct SegmentRef {
  std::string patient_id;
  std::size_t hour_pos = 0;
  std::size_t segment = 0;
};

/// Fixed validation set: per patient (in the given order), up to `per_patient`
/// distinct segments drawn by a seeded shuffle.
std::vector<SegmentRef> select_validation_segments(std::span<const std::string> val_ids, const SegmentCache& cache,
                                                   std::size_t per_patient, std::uint64_t seed);

/// Fraction of segments whose thresholded poor_prob (>= 0.5) matches the
/// outcome.
double segment_accuracy(const model::ModelParams& params, const model::ModelConfig& config,
                        const SegmentCache& cache, std::span<const SegmentRef> refs,
                        const PatientLookup& patients);

struct BatchResult {
  LossBreakdown loss;
  std::vector<ad::Tensor> grads;  // aligned with ModelParams::named()
};

/// Loss of one batch, forward only.
LossBreakdown batch_loss(const model::ModelParams& params, const model::ModelConfig& config,
                         std::span<const TrainingExample> batch);

/// Forward and backward over one batch.
BatchResult batch_gradients(const model::ModelParams& params, const model::ModelConfig& config,
                            std::span<const TrainingExample> batch);

struct MetricsRow {
  std::size_t iteration = 0;
  LossBreakdown loss;
  std::optional<double> val_accuracy;
};

/// "iteration,ce,mse,total,val_accuracy" with a blank accuracy on
/// non-evaluation rows.
std::string metrics_csv(std::span<const MetricsRow> rows);

struct TrainResult {
  Checkpoint best;
  Checkpoint last;
  std::vector<MetricsRow> metrics;
  Split split;
  std::vector<SegmentRef> val_segments;
  double best_val_accuracy = -1.0;
  std::size_t best_iteration = 0;
  /// Retained accuracy after each evaluation; non-decreasing.
  std::vector<double> retained_accuracy;
};

using IterationCallback = std::function<void(const MetricsRow&)>;

/// Throws SingleClassDataset when the patients are all Good or all Poor.
TrainResult train(std::span<const io::PatientMeta> patients, const SegmentCache& cache,
                  const model::ModelConfig& model_config, const TrainConfig& train_config,
                  const IterationCallback& on_iteration = {});

/// Writes best.ckpt, last.ckpt, metrics.csv, and split.json into run_dir.
void save_run(const TrainResult& result, const std::filesystem::path& run_dir);

}  // namespace prognosis::train
