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

#include "prognosis/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "prognosis/dsp.hpp"
#include "prognosis/error.hpp"

namespace prognosis::eval {
namespace fs = std::filesystem;
using nlohmann::json;

Aggregation aggregation_from_string(std::string_view name) {
  if (name == "mean") return Aggregation::Mean;
  if (name == "median") return Aggregation::Median;
  if (name == "max") return Aggregation::Max;
  throw Error(ErrorCode::InvalidConfig, "unknown aggregation '" + std::string(name) + "' (mean, median, max)");
}

PatientPrediction aggregate_segments(const std::string& patient_id, std::span<const model::ModelOutput> segments,
                                     Aggregation aggregation) {
  if (segments.empty()) throw Error(ErrorCode::EmptyInput, "no segment outputs for " + patient_id);
  std::vector<double> probs;
  double raw_sum = 0.0;
  for (const auto& s : segments) {
    probs.push_back(s.poor_prob);
    raw_sum += s.cpc_raw;
  }
  const double n = static_cast<double>(segments.size());

  PatientPrediction p;
  p.patient_id = patient_id;
  p.n_segments_used = segments.size();
  switch (aggregation) {
    case Aggregation::Mean:
      p.poor_prob = std::accumulate(probs.begin(), probs.end(), 0.0) / n;
      break;
    case Aggregation::Median: {
      std::sort(probs.begin(), probs.end());
      const std::size_t mid = probs.size() / 2;
      p.poor_prob = probs.size() % 2 ? probs[mid] : 0.5 * (probs[mid - 1] + probs[mid]);
      break;
    }
    case Aggregation::Max:
      p.poor_prob = *std::max_element(probs.begin(), probs.end());
      break;
  }
  // A mean can drift a few ulps past the segment extremes.
  const auto [lo, hi] = std::minmax_element(probs.begin(), probs.end());
  p.poor_prob = std::clamp(p.poor_prob, *lo, *hi);
  p.cpc_raw = raw_sum / n;
  p.cpc_pred = model::cpc_from_raw(p.cpc_raw);
  return p;
}

namespace {

template <typename LoadHour>
PatientPrediction predict_newest_first(const model::ModelParams& params, const model::ModelConfig& config,
                                       const std::string& patient_id, std::vector<int> hours, LoadHour&& load,
                                       Aggregation aggregation) {
  std::vector<std::size_t> order(hours.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return hours[a] > hours[b]; });

  std::string reasons;
  for (std::size_t i : order) {
    std::vector<dsp::BipolarSegment> segments;
    try {
      segments = dsp::preprocess(load(i));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::MissingElectrode && e.code() != ErrorCode::TooShort) throw;
      reasons += "; hour " + std::to_string(hours[i]) + ": " + e.detail();
      continue;
    }
    std::vector<model::ModelOutput> outputs;
    outputs.reserve(segments.size());
    for (const auto& s : segments) outputs.push_back(model::forward(params, config, s));
    PatientPrediction p = aggregate_segments(patient_id, outputs, aggregation);
    p.hour_index = hours[i];
    return p;
  }
  if (hours.empty()) reasons = "; no recordings";
  throw Error(ErrorCode::NoUsableRecording, "patient " + patient_id + reasons);
}

}  // namespace

PatientPrediction predict_patient(const model::ModelParams& params, const model::ModelConfig& config,
                                  std::span<const io::RawRecording> recordings, Aggregation aggregation) {
  std::vector<int> hours;
  for (const auto& r : recordings) hours.push_back(r.hour_index);
  const std::string id = recordings.empty() ? std::string("<none>") : recordings.front().patient_id;
  return predict_newest_first(params, config, id, hours,
                              [&](std::size_t i) -> const io::RawRecording& { return recordings[i]; }, aggregation);
}

PatientPrediction predict_patient(const model::ModelParams& params, const model::ModelConfig& config,
                                  const io::PatientEntry& patient, Aggregation aggregation) {
  return predict_newest_first(params, config, patient.meta.patient_id, patient.hour_indices,
                              [&](std::size_t i) { return io::load_recording(patient.headers[i]); }, aggregation);
}

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size())
    throw Error(ErrorCode::ShapeMismatch, std::to_string(scores.size()) + " scores vs " +
                                              std::to_string(labels.size()) + " labels");
  std::size_t pos = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw Error(ErrorCode::InvalidConfig, "labels must be 0 or 1");
    pos += static_cast<std::size_t>(l);
  }
  if (pos == 0 || pos == labels.size())
    throw Error(ErrorCode::SingleClassLabels, "ROC needs both classes, got " + std::to_string(pos) + " positives of " +
                                                  std::to_string(labels.size()));
}

}  // namespace

std::vector<RocPoint> roc_points(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  const double n_pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const double n_neg = static_cast<double>(labels.size()) - n_pos;
  std::vector<RocPoint> points{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double thr = scores[order[i]];
    // Tied scores cross the threshold together.
    for (; i < order.size() && scores[order[i]] == thr; ++i) (labels[order[i]] ? tp : fp)++;
    points.push_back({thr, static_cast<double>(tp) / n_pos, static_cast<double>(fp) / n_neg});
  }
  return points;
}

double challenge_metric(std::span<const double> scores, std::span<const int> labels, double fpr_cap) {
  double best = 0.0;
  for (const auto& p : roc_points(scores, labels))
    if (p.fpr <= fpr_cap) best = std::max(best, p.tpr);
  return best;
}

double accuracy(std::span<const int> preds, std::span<const int> labels) {
  if (preds.empty()) throw Error(ErrorCode::EmptyInput, "accuracy of nothing");
  if (preds.size() != labels.size())
    throw Error(ErrorCode::ShapeMismatch, std::to_string(preds.size()) + " predictions vs " +
                                              std::to_string(labels.size()) + " labels");
  std::size_t same = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) same += preds[i] == labels[i];
  return static_cast<double>(same) / static_cast<double>(preds.size());
}

EvaluationReport summarize(std::vector<PatientRow> rows, double fpr_cap) {
  if (rows.empty()) throw Error(ErrorCode::EmptyInput, "no patients to evaluate");
  std::vector<double> scores;
  std::vector<int> labels, preds;
  double sq = 0.0;
  for (const auto& r : rows) {
    scores.push_back(r.prediction.poor_prob);
    labels.push_back(r.outcome == io::Outcome::Poor ? 1 : 0);
    preds.push_back(r.prediction.poor_prob >= 0.5 ? 1 : 0);
    const double d = static_cast<double>(r.prediction.cpc_pred - r.cpc_true);
    sq += d * d;
  }
  EvaluationReport report;
  report.challenge_metric = challenge_metric(scores, labels, fpr_cap);
  report.accuracy = accuracy(preds, labels);
  report.mse_cpc = sq / static_cast<double>(rows.size());
  report.patients = std::move(rows);
  return report;
}

EvaluationReport evaluate_dataset(const model::ModelParams& params, const model::ModelConfig& config,
                                  std::span<const io::PatientEntry> patients, Aggregation aggregation) {
  std::vector<PatientRow> rows;
  for (const auto& p : patients)
    rows.push_back({predict_patient(params, config, p, aggregation), p.meta.outcome, p.meta.cpc});
  return summarize(std::move(rows));
}

json EvaluationReport::summary_json() const {
  return {{"challenge_metric", challenge_metric},
          {"accuracy", accuracy},
          {"mse_cpc", mse_cpc},
          {"n_patients", patients.size()},
          {"fpr_cap", 0.05}};
}

std::string EvaluationReport::patients_csv() const {
  std::string out = "patient_id,poor_prob,outcome,cpc_pred,cpc_true,n_segments_used\n";
  char buf[128];
  for (const auto& r : patients) {
    std::snprintf(buf, sizeof buf, ",%.8f,%s,%d,%d,%zu\n", r.prediction.poor_prob, io::to_string(r.outcome).c_str(),
                  r.prediction.cpc_pred, r.cpc_true, r.prediction.n_segments_used);
    out += r.prediction.patient_id + buf;
  }
  return out;
}

void EvaluationReport::write(const fs::path& dir) const {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
  std::ofstream json_out(dir / "report.json", std::ios::trunc);
  json_out << summary_json().dump(2) << '\n';
  std::ofstream csv_out(dir / "patients.csv", std::ios::binary | std::ios::trunc);
  csv_out << patients_csv();
  if (!json_out || !csv_out) throw Error(ErrorCode::IoFailure, "cannot write report into " + dir.string());
}

}  // namespace prognosis::eval
