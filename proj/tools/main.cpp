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

// prognosis: command-line entry points.
//
// Exit codes: 0 success, 1 runtime or data error, 2 usage error.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "prognosis/checkpoint.hpp"
#include "prognosis/dsp.hpp"
#include "prognosis/eeg_io.hpp"
#include "prognosis/error.hpp"
#include "prognosis/eval.hpp"
#include "prognosis/gradcheck.hpp"
#include "prognosis/model.hpp"
#include "prognosis/rng.hpp"
#include "prognosis/segment_cache.hpp"
#include "prognosis/synth.hpp"
#include "prognosis/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace prognosis;

namespace {

#ifndef PROGNOSIS_VERSION
#define PROGNOSIS_VERSION "v0.0.0"
#endif

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
}

fs::path runs_root() {
  if (const char* env = std::getenv("PROGNOSIS_RUNS_DIR"); env && *env) return env;
  return "runs";
}

fs::path default_cache_dir(const fs::path& data) {
  fs::path d = data;
  if (!d.has_filename()) d = d.parent_path();
  return d.parent_path() / (d.filename().string() + ".segcache");
}

std::vector<io::PatientEntry> scan_or_fail(const fs::path& data) {
  if (!fs::is_directory(data)) throw Error(ErrorCode::MissingFile, "data directory not found: " + data.string());
  return io::scan_dataset(data);
}

train::SegmentCache build_cache(const std::vector<io::PatientEntry>& patients, const fs::path& dir, bool verbose) {
  auto progress = [verbose](const std::string& id, int hour) {
    if (verbose) std::fprintf(stderr, "preprocess %s hour %d\n", id.c_str(), hour);
  };
  return train::SegmentCache::build(patients, dir, progress);
}

// ---- synthesize ----------------------------------------------------------------

struct SynthArgs {
  int good = 6;
  int poor = 6;
  int hours = 2;
  std::uint64_t seed = 1;
  double duration_s = 3600.0;
  double fs_hz = 250.0;
  std::string out;
};

int cmd_synthesize(const SynthArgs& a) {
  if (a.good < 0 || a.poor < 0 || a.good + a.poor == 0)
    throw UsageError("synthesize needs at least one patient (--good/--poor)");
  if (a.hours < 1) throw UsageError("--hours must be at least 1");
  const int total = a.good + a.poor;
  for (int i = 0; i < total; ++i) {
    synth::SynthesisProfile profile;
    profile.outcome = i < a.good ? io::Outcome::Good : io::Outcome::Poor;
    profile.seed = derive_seed(a.seed, static_cast<std::uint64_t>(i));
    profile.n_hours = a.hours;
    profile.duration_s = a.duration_s;
    profile.fs_hz = a.fs_hz;
    char id[32];
    std::snprintf(id, sizeof id, "syn%04d", i + 1);
    const auto patient = synth::synthesize_patient(profile, id);
    const fs::path dir = fs::path(a.out) / id;
    fs::create_directories(dir);
    io::write_patient_meta(patient.meta, dir);
    for (const auto& rec : patient.recordings) io::write_recording(rec, dir);
  }
  std::printf("wrote %d patients (%d Good, %d Poor), %d recordings to %s\n", total, a.good, a.poor, total * a.hours,
              a.out.c_str());
  return 0;
}

// ---- preprocess ----------------------------------------------------------------

int cmd_preprocess(const std::string& data, std::string cache_dir, bool quiet) {
  const auto patients = scan_or_fail(data);
  if (cache_dir.empty()) cache_dir = default_cache_dir(data).string();
  const auto cache = build_cache(patients, cache_dir, !quiet);
  for (const auto& s : cache.skipped())
    std::fprintf(stderr, "skipped %s/%s: %s\n", s.patient_id.c_str(), s.header.c_str(), s.reason.c_str());
  std::printf("cached %zu segments for %zu patients in %s\n", cache.total_segments(), cache.patient_ids().size(),
              cache_dir.c_str());
  return 0;
}

// ---- train -----------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string preset = "desk";
  std::string config;
  std::string run;
  std::string run_id;
  std::string cache;
  std::optional<std::size_t> iters, batch, eval_every;
  std::optional<double> lr, split_ratio;
  std::optional<std::uint64_t> seed;
  bool dry_run = false;
  bool quiet = false;
};

std::pair<model::ModelConfig, train::TrainConfig> resolve_configs(const TrainArgs& a) {
  json model_json = model::ModelConfig::preset(a.preset).to_json();
  json train_json = train::TrainConfig::preset(a.preset == "desk" ? "desk" : "paper").to_json();
  if (!a.config.empty()) {
    const json file = read_json(a.config);
    for (const auto& [key, value] : file.items()) {
      if (key == "model") model_json.update(value);
      else if (key == "train") train_json.update(value);
      else throw Error(ErrorCode::InvalidConfig, a.config + ": unknown section '" + key + "'");
    }
    // A changed width implies the default schedule at that width.
    if (file.contains("model") && file["model"].contains("embed_dim") && !file["model"].contains("conv_layers")) {
      model_json.erase("conv_layers");
      if (!file["model"].contains("ffn_hidden")) model_json.erase("ffn_hidden");
    }
  }
  if (a.iters) train_json["max_iterations"] = *a.iters;
  if (a.batch) train_json["batch_size"] = *a.batch;
  if (a.eval_every) train_json["eval_every"] = *a.eval_every;
  if (a.lr) train_json["learning_rate"] = *a.lr;
  if (a.split_ratio) train_json["split_ratio"] = *a.split_ratio;
  if (a.seed) train_json["seed"] = *a.seed;
  return {model::ModelConfig::from_json(model_json), train::TrainConfig::from_json(train_json)};
}

int dry_run(const model::ModelConfig& mc, const train::TrainConfig& tc) {
  const auto rf = model::receptive_field(mc.conv_layers);
  const std::size_t tokens = mc.n_bipolar_channels * mc.tokens_per_channel();
  std::printf("channels: %zu\n", mc.n_bipolar_channels);
  std::printf("receptive field: %zu samples, jump %zu\n", rf.size, rf.jump);
  std::printf("tokens per channel: %zu\n", mc.tokens_per_channel());
  std::printf("token sequence: %zux%zu\n", tokens, mc.embed_dim);
  std::printf("model dims: %zux%zu\n", mc.sequence_length(), mc.embed_dim);
  std::printf("attention blocks: K=%zu, heads: M=%zu\n", mc.n_attention_blocks, mc.n_heads);
  std::fflush(stdout);

  const auto params = model::init_params(mc, derive_seed(tc.seed, 1));
  std::printf("parameters: %zu\n", model::count_parameters(params));
  std::fflush(stdout);

  dsp::BipolarSegment seg;
  seg.patient_id = "dry-run";
  seg.data.resize(dsp::BipolarSegment::kChannels * dsp::BipolarSegment::kSamples);
  Rng rng(derive_seed(tc.seed, 7));
  for (auto& v : seg.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  const auto out = model::forward(params, mc, seg);
  std::printf("forward: poor_prob=%.6f cpc_raw=%.6f\n", out.poor_prob, out.cpc_raw);
  return 0;
}

json manifest_base(const std::string& run_id, const std::string& command, const std::string& data) {
  return {{"run_id", run_id}, {"command", command}, {"version", PROGNOSIS_VERSION},
          {"data", data},     {"started_at", timestamp()}};
}

int cmd_train(const TrainArgs& a) {
  const auto [mc, tc] = resolve_configs(a);
  if (a.dry_run) return dry_run(mc, tc);
  if (a.data.empty()) throw UsageError("train needs --data (or --dry-run)");

  const std::string run_id = !a.run_id.empty() ? a.run_id
                             : !a.run.empty()  ? fs::path(a.run).filename().string()
                                               : a.preset + "-seed" + std::to_string(tc.seed);
  const fs::path run_dir = !a.run.empty() ? fs::path(a.run) : runs_root() / run_id;
  json manifest = manifest_base(run_id, "train", a.data);
  manifest["model"] = mc.to_json();
  manifest["train"] = tc.to_json();
  manifest["seed"] = tc.seed;

  const auto patients = scan_or_fail(a.data);
  const fs::path cache_dir = a.cache.empty() ? default_cache_dir(a.data) : fs::path(a.cache);
  const auto cache = build_cache(patients, cache_dir, !a.quiet);
  std::vector<io::PatientMeta> metas;
  for (const auto& p : patients) metas.push_back(p.meta);

  auto on_iteration = [&](const train::MetricsRow& row) {
    if (a.quiet) return;
    if (row.val_accuracy)
      std::fprintf(stderr, "iter %zu total %.5f val_accuracy %.4f\n", row.iteration, row.loss.total, *row.val_accuracy);
    else if (row.iteration % 10 == 0)
      std::fprintf(stderr, "iter %zu total %.5f\n", row.iteration, row.loss.total);
  };
  const auto result = train::train(metas, cache, mc, tc, on_iteration);
  train::save_run(result, run_dir);

  manifest["finished_at"] = timestamp();
  manifest["best_iteration"] = result.best_iteration;
  manifest["best_val_accuracy"] = result.best_val_accuracy;
  manifest["final_val_accuracy"] = *result.metrics.back().val_accuracy;
  manifest["cache"] = cache_dir.string();
  write_json(run_dir / "manifest.json", manifest);
  std::printf("run %s: best val_accuracy %.4f at iteration %zu\n", run_dir.c_str(), result.best_val_accuracy,
              result.best_iteration);
  return 0;
}

// ---- evaluate --------------------------------------------------------------------

struct EvalArgs {
  std::string data;
  std::string checkpoint;
  std::string out;
  std::string split;
  std::string subset = "val";
  std::string aggregation = "mean";
  std::string cache;
  bool quiet = false;
};

int cmd_evaluate(const EvalArgs& a) {
  const auto agg = eval::aggregation_from_string(a.aggregation);
  if (a.subset != "val" && a.subset != "train" && a.subset != "all")
    throw UsageError("--subset must be val, train, or all");
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  auto patients = scan_or_fail(a.data);

  std::optional<json> split;
  if (!a.split.empty()) {
    split = read_json(a.split);
    if (a.subset != "all") {
      const auto ids = split->at(a.subset).get<std::vector<std::string>>();
      std::erase_if(patients, [&](const io::PatientEntry& p) {
        return std::find(ids.begin(), ids.end(), p.meta.patient_id) == ids.end();
      });
      if (patients.size() != ids.size())
        throw Error(ErrorCode::EmptySplit, "split lists patients missing from " + a.data);
    }
  }

  const auto report = eval::evaluate_dataset(ckpt.params, ckpt.config, patients, agg);
  report.write(a.out);
  json manifest = manifest_base(fs::path(a.out).filename().string(), "evaluate", a.data);
  manifest["checkpoint"] = a.checkpoint;
  manifest["model"] = ckpt.config.to_json();
  manifest["train"] = ckpt.train_config;
  manifest["aggregation"] = a.aggregation;
  manifest["report"] = report.summary_json();

  std::printf("challenge_metric=%.6f\n", report.challenge_metric);
  std::printf("accuracy=%.6f\n", report.accuracy);
  std::printf("mse_cpc=%.6f\n", report.mse_cpc);

  if (split && split->contains("val_segments")) {
    // Segment-level accuracy on the exact segments training validated on.
    std::vector<io::PatientMeta> metas;
    for (const auto& p : io::scan_dataset(a.data)) metas.push_back(p.meta);
    const fs::path cache_dir = a.cache.empty() ? default_cache_dir(a.data) : fs::path(a.cache);
    const auto cache = build_cache(io::scan_dataset(a.data), cache_dir, !a.quiet);
    std::vector<train::SegmentRef> refs;
    for (const auto& r : split->at("val_segments"))
      refs.push_back({r.at("patient_id").get<std::string>(), r.at("hour_pos").get<std::size_t>(),
                      r.at("segment").get<std::size_t>()});
    const double acc =
        train::segment_accuracy(ckpt.params, ckpt.config, cache, refs, train::PatientLookup(metas));
    std::printf("val_accuracy=%.6f\n", acc);
    manifest["val_accuracy"] = acc;
  }
  manifest["finished_at"] = timestamp();
  write_json(fs::path(a.out) / "manifest.json", manifest);
  return 0;
}

// ---- predict ---------------------------------------------------------------------

struct PredictArgs {
  std::vector<std::string> inputs;
  std::string checkpoint;
  double threshold = 0.5;
  std::string aggregation = "mean";
};

int cmd_predict(const PredictArgs& a) {
  if (!(a.threshold >= 0.0 && a.threshold <= 1.0)) throw UsageError("--threshold must lie in [0, 1]");
  const auto agg = eval::aggregation_from_string(a.aggregation);
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);

  // Recordings grouped by patient, in first-seen order.
  std::vector<std::string> order;
  std::map<std::string, std::vector<io::RawRecording>> by_patient;
  auto add = [&](io::RawRecording rec) {
    if (!by_patient.count(rec.patient_id)) order.push_back(rec.patient_id);
    by_patient[rec.patient_id].push_back(std::move(rec));
  };
  for (const auto& input : a.inputs) {
    const fs::path path(input);
    if (fs::is_directory(path)) {
      std::vector<fs::path> headers;
      for (const auto& e : fs::directory_iterator(path)) {
        const std::string name = e.path().filename().string();
        if (name.size() > io::kHeaderSuffix.size() && name.ends_with(io::kHeaderSuffix)) headers.push_back(e.path());
      }
      std::sort(headers.begin(), headers.end());
      if (headers.empty()) throw Error(ErrorCode::MissingFile, "no recordings in " + input);
      for (const auto& h : headers) add(io::load_recording(h));
    } else {
      add(io::load_recording(path));
    }
  }

  std::vector<json> lines;
  std::string failures;
  for (const auto& id : order) {
    try {
      const auto p = eval::predict_patient(ckpt.params, ckpt.config, by_patient[id], agg);
      lines.push_back({{"patient_id", p.patient_id},
                       {"poor_prob", p.poor_prob},
                       {"outcome_pred", p.poor_prob >= a.threshold ? "Poor" : "Good"},
                       {"cpc_pred", p.cpc_pred}});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoUsableRecording) throw;
      failures += (failures.empty() ? "" : "\n") + e.detail();
    }
  }
  if (!failures.empty()) throw Error(ErrorCode::NoUsableRecording, failures);
  for (const auto& l : lines) std::printf("%s\n", l.dump().c_str());
  return 0;
}

// ---- montage / gradcheck -------------------------------------------------------------

int cmd_montage_list() {
  std::printf("index,anode,cathode\n");
  const auto& montage = dsp::standard_montage();
  for (std::size_t i = 0; i < montage.size(); ++i)
    std::printf("%zu,%s,%s\n", i, std::string(montage[i].anode).c_str(), std::string(montage[i].cathode).c_str());
  return 0;
}

int cmd_gradcheck(const GradcheckOptions& options) {
  const auto report = run_gradcheck_suite(options);
  for (const auto& c : report.cases)
    std::printf("%-4s %-28s coords=%-4zu max_rel_err=%.3e\n", c.passed ? "ok" : "FAIL", c.name.c_str(),
                c.coordinates, c.max_relative_error);
  std::printf("gradcheck %s\n", report.passed() ? "passed" : "FAILED");
  return report.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EEG outcome prognosis: synthesize, preprocess, train, evaluate, predict"};
  app.set_version_flag("--version", PROGNOSIS_VERSION);
  app.require_subcommand(1);

  int rc = 0;

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synthesize", "Write a labeled synthetic corpus");
  synth->add_option("--good", synth_args.good, "Good-outcome patients")->capture_default_str();
  synth->add_option("--poor", synth_args.poor, "Poor-outcome patients")->capture_default_str();
  synth->add_option("--hours", synth_args.hours, "Recordings per patient")->capture_default_str();
  synth->add_option("--seed", synth_args.seed)->capture_default_str();
  synth->add_option("--duration", synth_args.duration_s, "Seconds per recording")->capture_default_str();
  synth->add_option("--fs", synth_args.fs_hz, "Sampling rate (Hz)")->capture_default_str();
  synth->add_option("--out", synth_args.out, "Output directory")->required();
  synth->callback([&] { rc = cmd_synthesize(synth_args); });

  std::string pre_data, pre_cache;
  bool pre_quiet = false;
  auto* pre = app.add_subcommand("preprocess", "Filter, resample, and segment a corpus into the segment cache");
  pre->add_option("--data", pre_data)->required();
  pre->add_option("--cache", pre_cache, "Cache directory (default <data>.segcache)");
  pre->add_flag("--quiet", pre_quiet);
  pre->callback([&] { rc = cmd_preprocess(pre_data, pre_cache, pre_quiet); });

  TrainArgs train_args;
  auto* tr = app.add_subcommand("train", "Train a model");
  tr->add_option("--data", train_args.data, "Dataset root");
  tr->add_option("--preset", train_args.preset)
      ->check(CLI::IsMember({"desk", "entry1", "entry2", "entry3", "entry4"}))
      ->capture_default_str();
  tr->add_option("--config", train_args.config, "JSON with \"model\" and/or \"train\" sections");
  tr->add_option("--run", train_args.run, "Run directory");
  tr->add_option("--run-id", train_args.run_id, "Run id under $PROGNOSIS_RUNS_DIR (default runs/)");
  tr->add_option("--cache", train_args.cache, "Segment cache directory");
  tr->add_option("--iters", train_args.iters);
  tr->add_option("--batch", train_args.batch);
  tr->add_option("--eval-every", train_args.eval_every);
  tr->add_option("--lr", train_args.lr);
  tr->add_option("--split-ratio", train_args.split_ratio);
  tr->add_option("--seed", train_args.seed);
  tr->add_flag("--dry-run", train_args.dry_run, "Print dims and parameter count, run one forward pass, exit");
  tr->add_flag("--quiet", train_args.quiet);
  tr->callback([&] { rc = cmd_train(train_args); });

  EvalArgs eval_args;
  auto* ev = app.add_subcommand("evaluate", "Score a checkpoint on a dataset");
  ev->add_option("--data", eval_args.data)->required();
  ev->add_option("--checkpoint", eval_args.checkpoint)->required();
  ev->add_option("--out", eval_args.out)->required();
  ev->add_option("--split", eval_args.split, "split.json from a training run");
  ev->add_option("--subset", eval_args.subset, "val, train, or all (with --split)")->capture_default_str();
  ev->add_option("--aggregation", eval_args.aggregation, "mean, median, or max")->capture_default_str();
  ev->add_option("--cache", eval_args.cache);
  ev->add_flag("--quiet", eval_args.quiet);
  ev->callback([&] { rc = cmd_evaluate(eval_args); });

  PredictArgs predict_args;
  auto* pr = app.add_subcommand("predict", "Per-patient predictions as JSON lines");
  pr->add_option("inputs", predict_args.inputs, "Patient directories or recording headers")->required();
  pr->add_option("--checkpoint", predict_args.checkpoint)->required();
  pr->add_option("--threshold", predict_args.threshold)->capture_default_str();
  pr->add_option("--aggregation", predict_args.aggregation)->capture_default_str();
  pr->callback([&] { rc = cmd_predict(predict_args); });

  auto* montage = app.add_subcommand("montage", "Montage inspection");
  montage->require_subcommand(1);
  montage->add_subcommand("list", "Print the bipolar pairs")->callback([&] { rc = cmd_montage_list(); });

  GradcheckOptions gc;
  auto* grad = app.add_subcommand("gradcheck", "Compare autodiff with finite differences");
  grad->add_option("--seed", gc.seed)->capture_default_str();
  grad->add_option("--coords", gc.model_coords, "Model parameters to probe")->capture_default_str();
  grad->add_option("--tolerance", gc.tolerance)->capture_default_str();
  grad->add_option("--step", gc.step, "Central-difference step")->capture_default_str();
  grad->callback([&] { rc = cmd_gradcheck(gc); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
