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

#include "prognosis/train.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "prognosis/error.hpp"

namespace prognosis::train {
namespace fs = std::filesystem;
using ad::Tensor;
using ad::Var;
using nlohmann::json;

// ---- losses ------------------------------------------------------------------

namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a == 0) throw Error(ErrorCode::EmptyBatch, std::string(what) + " of an empty batch");
  if (a != b)
    throw Error(ErrorCode::ShapeMismatch,
                std::string(what) + ": " + std::to_string(a) + " predictions vs " + std::to_string(b) + " targets");
}

}  // namespace

double cross_entropy_loss(std::span<const double> probs, std::span<const double> labels) {
  check_lengths(probs.size(), labels.size(), "cross-entropy");
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], ad::kProbClamp, 1.0 - ad::kProbClamp);
    acc += labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p);
  }
  return -acc / static_cast<double>(probs.size());
}

double mse_loss(std::span<const double> preds, std::span<const double> targets) {
  check_lengths(preds.size(), targets.size(), "mse");
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double d = targets[i] - preds[i];
    acc += d * d;
  }
  return acc / static_cast<double>(preds.size());
}

LossBreakdown total_loss(double ce, double mse) { return {ce, mse, ce + mse}; }

// ---- Adam ----------------------------------------------------------------------

AdamState AdamState::zeros_like(std::span<Tensor* const> params) {
  AdamState state;
  state.m.reserve(params.size());
  state.v.reserve(params.size());
  for (const Tensor* p : params) {
    state.m.emplace_back(p->shape(), 0.0);
    state.v.emplace_back(p->shape(), 0.0);
  }
  return state;
}

void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state,
               const AdamConfig& config) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size())
    throw Error(ErrorCode::ShapeMismatch, "adam: " + std::to_string(params.size()) + " params, " +
                                              std::to_string(grads.size()) + " grads, " +
                                              std::to_string(state.m.size()) + " moments");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& s = params[i]->shape();
    if (grads[i].shape() != s || state.m[i].shape() != s || state.v[i].shape() != s)
      throw Error(ErrorCode::ShapeMismatch, "adam: tensor " + std::to_string(i) + " is " + ad::shape_str(s) +
                                                " but its gradient is " + ad::shape_str(grads[i].shape()));
  }

  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    double* p = params[i]->data();
    const double* g = grads[i].data();
    double* m = state.m[i].data();
    double* v = state.v[i].data();
    for (std::size_t k = 0, n = params[i]->size(); k < n; ++k) {
      m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g[k];
      v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g[k] * g[k];
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      p[k] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.eps);
    }
  }
}

// ---- configuration -----------------------------------------------------------

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, m); };
  if (batch_size < 1) fail("batch_size must be at least 1");
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) fail("split_ratio must lie strictly between 0 and 1");
  if (max_iterations < 1) fail("max_iterations must be at least 1");
  if (eval_every < 1) fail("eval_every must be at least 1");
  if (val_segments_per_patient < 1) fail("val_segments_per_patient must be at least 1");
  if (!(adam.learning_rate > 0.0)) fail("learning_rate must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0))
    fail("Adam betas must lie in [0, 1)");
  if (!(adam.eps > 0.0)) fail("eps must be positive");
}

json TrainConfig::to_json() const {
  return {{"batch_size", batch_size},       {"learning_rate", adam.learning_rate},
          {"beta1", adam.beta1},            {"beta2", adam.beta2},
          {"eps", adam.eps},                {"max_iterations", max_iterations},
          {"eval_every", eval_every},       {"split_ratio", split_ratio},
          {"seed", seed},                   {"val_segments_per_patient", val_segments_per_patient}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "batch_size") c.batch_size = value.get<std::size_t>();
      else if (key == "learning_rate") c.adam.learning_rate = value.get<double>();
      else if (key == "beta1") c.adam.beta1 = value.get<double>();
      else if (key == "beta2") c.adam.beta2 = value.get<double>();
      else if (key == "eps") c.adam.eps = value.get<double>();
      else if (key == "max_iterations") c.max_iterations = value.get<std::size_t>();
      else if (key == "eval_every") c.eval_every = value.get<std::size_t>();
      else if (key == "split_ratio") c.split_ratio = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "val_segments_per_patient") c.val_segments_per_patient = value.get<std::size_t>();
      else throw Error(ErrorCode::InvalidConfig, "unknown train config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::preset(std::string_view name) {
  TrainConfig c;
  if (name == "desk") {
    c.max_iterations = 300;
    c.eval_every = 50;
    c.adam.learning_rate = 1e-3;
  } else if (name == "paper" || name == "entry1" || name == "entry2" || name == "entry3" || name == "entry4") {
    c.max_iterations = 40000;
    c.eval_every = 1000;
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown train preset '" + std::string(name) + "'");
  }
  return c;
}

// ---- split and sampling ---------------------------------------------------------

Split split_patients(std::span<const io::PatientMeta> patients, double ratio, std::uint64_t seed) {
  if (patients.size() < 2)
    throw Error(ErrorCode::TooFewPatients, "need at least 2 patients to split, got " + std::to_string(patients.size()));
  if (!(ratio > 0.0 && ratio < 1.0)) throw Error(ErrorCode::InvalidConfig, "split ratio must lie in (0, 1)");

  std::array<std::vector<std::string>, 2> groups;
  for (const auto& p : patients) groups[p.outcome == io::Outcome::Poor ? 1 : 0].push_back(p.patient_id);

  // Overall train size round(ratio * n), shared between the classes by
  // largest remainder, then nudged so that a class with two or more patients
  // sits on both sides.
  const std::size_t n = patients.size();
  const auto total = static_cast<std::size_t>(
      std::clamp<double>(std::round(ratio * static_cast<double>(n)), 1.0, static_cast<double>(n - 1)));
  std::array<std::size_t, 2> take{};
  std::array<double, 2> remainder{};
  std::size_t assigned = 0;
  for (int g = 0; g < 2; ++g) {
    const double exact = ratio * static_cast<double>(groups[g].size());
    take[g] = static_cast<std::size_t>(std::floor(exact));
    remainder[g] = exact - std::floor(exact);
    assigned += take[g];
  }
  while (assigned < total) {
    const int g = (remainder[1] > remainder[0] && take[1] < groups[1].size()) || take[0] >= groups[0].size() ? 1 : 0;
    ++take[g];
    remainder[g] = -1.0;
    ++assigned;
  }
  while (assigned > total) {
    const int g = take[0] > take[1] ? 0 : 1;
    --take[g];
    --assigned;
  }
  for (int g = 0; g < 2; ++g) {
    const int other = 1 - g;
    const std::size_t size = groups[g].size();
    if (size < 2) continue;
    if (take[g] == 0) {
      ++take[g];
      if (take[other] > 1) --take[other];
    } else if (take[g] == size) {
      --take[g];
      if (take[other] + 1 < groups[other].size()) ++take[other];
    }
  }

  Split split;
  for (int g = 0; g < 2; ++g) {
    auto& ids = groups[g];
    std::sort(ids.begin(), ids.end());
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(g)));
    for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.index(i)]);
    split.train.insert(split.train.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(take[g]));
    split.val.insert(split.val.end(), ids.begin() + static_cast<std::ptrdiff_t>(take[g]), ids.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  return split;
}

PatientLookup::PatientLookup(std::span<const io::PatientMeta> patients) {
  for (const auto& p : patients) by_id.emplace(p.patient_id, p);
}

const io::PatientMeta& PatientLookup::at(const std::string& id) const {
  auto it = by_id.find(id);
  if (it == by_id.end()) throw Error(ErrorCode::EmptySplit, "no metadata for patient " + id);
  return it->second;
}

TrainingExample sample_training_example(std::span<const std::string> train_ids, const SegmentCache& cache,
                                        const PatientLookup& patients, Rng& rng) {
  if (train_ids.empty()) throw Error(ErrorCode::EmptySplit, "training split is empty");
  const std::string& id = train_ids[rng.index(train_ids.size())];
  const auto& hours = cache.hours(id);
  const std::size_t hour_pos = rng.index(hours.size());
  if (hours[hour_pos].n_segments == 0) throw Error(ErrorCode::EmptySplit, "hour without segments for " + id);
  const std::size_t seg = rng.index(hours[hour_pos].n_segments);

  const auto& meta = patients.at(id);
  TrainingExample ex;
  ex.segment = cache.load(id, hour_pos, seg);
  ex.y = meta.outcome == io::Outcome::Poor ? 1.0 : 0.0;
  ex.x = static_cast<double>(meta.cpc);
  ex.patient_id = id;
  return ex;
}

std::vector<SegmentRef> select_validation_segments(std::span<const std::string> val_ids, const SegmentCache& cache,
                                                   std::size_t per_patient, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SegmentRef> refs;
  for (const auto& id : val_ids) {
    std::vector<SegmentRef> all;
    const auto& hours = cache.hours(id);
    for (std::size_t h = 0; h < hours.size(); ++h)
      for (std::size_t s = 0; s < hours[h].n_segments; ++s) all.push_back({id, h, s});
    const std::size_t k = std::min(per_patient, all.size());
    for (std::size_t i = 0; i < k; ++i) std::swap(all[i], all[i + rng.index(all.size() - i)]);
    refs.insert(refs.end(), all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
  }
  return refs;
}

double segment_accuracy(const model::ModelParams& params, const model::ModelConfig& config,
                        const SegmentCache& cache, std::span<const SegmentRef> refs,
                        const PatientLookup& patients) {
  if (refs.empty()) throw Error(ErrorCode::EmptySplit, "no validation segments");
  std::size_t correct = 0;
  for (const auto& r : refs) {
    const auto out = model::forward(params, config, cache.load(r.patient_id, r.hour_pos, r.segment));
    const bool poor = out.poor_prob >= 0.5;
    if (poor == (patients.at(r.patient_id).outcome == io::Outcome::Poor)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(refs.size());
}

// ---- one batch ---------------------------------------------------------------

namespace {

struct BatchGraph {
  Var ce, mse, total;
};

BatchGraph build_batch(model::ParamBinder& bind, const model::ModelParams& params, const model::ModelConfig& config,
                       std::span<const TrainingExample> batch) {
  if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "batch has no examples");
  std::vector<Var> logits, cpcs;
  std::vector<double> labels, targets;
  for (const auto& ex : batch) {
    auto heads = model::forward_heads(bind, params, config, ex.segment);
    logits.push_back(heads.class_logit);
    cpcs.push_back(heads.cpc_raw);
    labels.push_back(config.positive_is_poor ? ex.y : 1.0 - ex.y);
    targets.push_back(ex.x);
  }
  BatchGraph g;
  g.ce = ad::binary_cross_entropy(ad::sigmoid(ad::concat_rows(logits)), labels);
  g.mse = ad::mean_squared_error(ad::concat_rows(cpcs), targets);
  g.total = ad::add(g.ce, g.mse);
  return g;
}

}  // namespace

LossBreakdown batch_loss(const model::ModelParams& params, const model::ModelConfig& config,
                         std::span<const TrainingExample> batch) {
  ad::Graph graph(ad::Graph::Mode::Inference);
  model::ParamBinder bind(graph);
  const BatchGraph g = build_batch(bind, params, config, batch);
  return {g.ce.value()[0], g.mse.value()[0], g.total.value()[0]};
}

BatchResult batch_gradients(const model::ModelParams& params, const model::ModelConfig& config,
                            std::span<const TrainingExample> batch) {
  ad::Graph graph;
  model::ParamBinder bind(graph);
  const BatchGraph g = build_batch(bind, params, config, batch);
  graph.backward(g.total);

  BatchResult result;
  result.loss = {g.ce.value()[0], g.mse.value()[0], g.total.value()[0]};
  for (const auto& [name, tensor] : params.named()) {
    auto leaf = bind.find(*tensor);
    result.grads.push_back(leaf ? graph.grad(*leaf) : Tensor(tensor->shape(), 0.0));
  }
  return result;
}

// ---- loop ----------------------------------------------------------------------

std::string metrics_csv(std::span<const MetricsRow> rows) {
  std::string out = "iteration,ce,mse,total,val_accuracy\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%.10g,", r.iteration, r.loss.ce, r.loss.mse, r.loss.total);
    out += buf;
    if (r.val_accuracy) {
      std::snprintf(buf, sizeof buf, "%.6f", *r.val_accuracy);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

TrainResult train(std::span<const io::PatientMeta> patients, const SegmentCache& cache,
                  const model::ModelConfig& model_config, const TrainConfig& train_config,
                  const IterationCallback& on_iteration) {
  model_config.validate();
  train_config.validate();
  const bool any_good = std::any_of(patients.begin(), patients.end(),
                                    [](const io::PatientMeta& p) { return p.outcome == io::Outcome::Good; });
  const bool any_poor = std::any_of(patients.begin(), patients.end(),
                                    [](const io::PatientMeta& p) { return p.outcome == io::Outcome::Poor; });
  if (!any_good || !any_poor)
    throw Error(ErrorCode::SingleClassDataset,
                std::string("dataset contains only ") + (any_good ? "Good" : "Poor") + " patients");
  for (const auto& p : patients) p.validate();

  const PatientLookup lookup(patients);
  TrainResult result;
  result.split = split_patients(patients, train_config.split_ratio, train_config.seed);
  for (const auto& id : result.split.train) cache.hours(id);
  result.val_segments = select_validation_segments(result.split.val, cache, train_config.val_segments_per_patient,
                                                   derive_seed(train_config.seed, 3));

  model::ModelParams params = model::init_params(model_config, derive_seed(train_config.seed, 1));
  std::vector<Tensor*> handles;
  for (auto& nt : params.named()) handles.push_back(nt.tensor);
  AdamState state = AdamState::zeros_like(handles);
  Rng sampler(derive_seed(train_config.seed, 2));

  const json train_json = train_config.to_json();
  result.best.config = model_config;
  result.best.train_config = train_json;

  std::vector<TrainingExample> batch(train_config.batch_size);
  for (std::size_t it = 1; it <= train_config.max_iterations; ++it) {
    for (auto& ex : batch) ex = sample_training_example(result.split.train, cache, lookup, sampler);
    BatchResult step = batch_gradients(params, model_config, batch);
    adam_step(handles, step.grads, state, train_config.adam);

    MetricsRow row{it, step.loss, std::nullopt};
    if (it % train_config.eval_every == 0 || it == train_config.max_iterations) {
      // Scored at checkpoint precision so a reloaded checkpoint reproduces it.
      model::ModelParams snapshot = params;
      round_to_storage_precision(snapshot);
      const double acc = segment_accuracy(snapshot, model_config, cache, result.val_segments, lookup);
      row.val_accuracy = acc;
      if (acc > result.best_val_accuracy) {
        result.best_val_accuracy = acc;
        result.best_iteration = it;
        result.best.params = std::move(snapshot);
        result.best.provenance = {{"iteration", it}, {"val_accuracy", acc}, {"seed", train_config.seed}};
      }
      result.retained_accuracy.push_back(result.best_val_accuracy);
    }
    result.metrics.push_back(row);
    if (on_iteration) on_iteration(row);
  }

  result.last.config = model_config;
  result.last.params = std::move(params);
  round_to_storage_precision(result.last.params);
  result.last.train_config = train_json;
  result.last.provenance = {{"iteration", train_config.max_iterations},
                            {"val_accuracy", *result.metrics.back().val_accuracy},
                            {"seed", train_config.seed}};
  result.last.optimizer = std::move(state);
  return result;
}

void save_run(const TrainResult& result, const fs::path& run_dir) {
  std::error_code ec;
  fs::create_directories(run_dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create run directory " + run_dir.string() + ": " + ec.message());
  save_checkpoint(result.best, run_dir / "best.ckpt");
  save_checkpoint(result.last, run_dir / "last.ckpt");

  auto write_text = [](const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  };
  write_text(run_dir / "metrics.csv", metrics_csv(result.metrics));

  json segments = json::array();
  for (const auto& r : result.val_segments) segments.push_back({{"patient_id", r.patient_id}, {"hour_pos", r.hour_pos}, {"segment", r.segment}});
  const json split = {{"train", result.split.train},
                      {"val", result.split.val},
                      {"val_segments", segments},
                      {"best_iteration", result.best_iteration},
                      {"best_val_accuracy", result.best_val_accuracy},
                      {"final_val_accuracy", *result.metrics.back().val_accuracy}};
  write_text(run_dir / "split.json", split.dump(2) + "\n");
}

}  // namespace prognosis::train
