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

// Patient-level predictions and the challenge metric: the largest true
// positive rate (Poor detected) over thresholds whose false positive rate
// stays within a cap, 0.05 by default.

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "prognosis/eeg_io.hpp"
#include "prognosis/model.hpp"

namespace prognosis::eval {

enum class Aggregation { Mean, Median, Max };

Aggregation aggregation_from_string(std::string_view name);

struct PatientPrediction {
  std::string patient_id;
  double poor_prob = 0.0;
  double cpc_raw = 0.0;
  int cpc_pred = 1;
  std::size_t n_segments_used = 0;
  int hour_index = 0;
};

/// Pools segment outputs: poor_prob by the aggregation, cpc_pred from the
/// mean raw CPC. Throws EmptyInput.
PatientPrediction aggregate_segments(const std::string& patient_id, std::span<const model::ModelOutput> segments,
                                     Aggregation aggregation = Aggregation::Mean);

/// Uses the most recent hour that preprocesses cleanly. Throws
/// NoUsableRecording listing why each hour was rejected.
PatientPrediction predict_patient(const model::ModelParams& params, const model::ModelConfig& config,
                                  std::span<const io::RawRecording> recordings,
                                  Aggregation aggregation = Aggregation::Mean);

/// Same, loading hours lazily from disk, newest first.
PatientPrediction predict_patient(const model::ModelParams& params, const model::ModelConfig& config,
                                  const io::PatientEntry& patient, Aggregation aggregation = Aggregation::Mean);

struct RocPoint {
  double threshold = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
};

/// One point per distinct score (positive iff score >= threshold) after a
/// +infinity sentinel, by descending threshold. Throws SingleClassLabels.
std::vector<RocPoint> roc_points(std::span<const double> scores, std::span<const int> labels);

/// max TPR over ROC points with FPR <= fpr_cap. Throws SingleClassLabels.
double challenge_metric(std::span<const double> scores, std::span<const int> labels, double fpr_cap = 0.05);

/// Fraction of equal entries. Throws EmptyInput.
double accuracy(std::span<const int> preds, std::span<const int> labels);

struct PatientRow {
  PatientPrediction prediction;
  io::Outcome outcome = io::Outcome::Good;
  int cpc_true = 1;
};

struct EvaluationReport {
  double challenge_metric = 0.0;
  double accuracy = 0.0;
  double mse_cpc = 0.0;
  std::vector<PatientRow> patients;

  nlohmann::json summary_json() const;
  /// patient_id,poor_prob,outcome,cpc_pred,cpc_true,n_segments_used
  std::string patients_csv() const;
  /// Writes report.json and patients.csv.
  void write(const std::filesystem::path& dir) const;
};

/// Metric, accuracy at 0.5, and CPC MSE over already-made predictions.
EvaluationReport summarize(std::vector<PatientRow> rows, double fpr_cap = 0.05);

EvaluationReport evaluate_dataset(const model::ModelParams& params, const model::ModelConfig& config,
                                  std::span<const io::PatientEntry> patients,
                                  Aggregation aggregation = Aggregation::Mean);

}  // namespace prognosis::eval
