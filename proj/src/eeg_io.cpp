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

#include "prognosis/eeg_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "prognosis/error.hpp"

namespace prognosis::io {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "signal files are read and written as little-endian float32");

std::string to_string(Outcome outcome) { return outcome == Outcome::Good ? "Good" : "Poor"; }

Outcome outcome_from_string(const std::string& text) {
  if (text == "Good") return Outcome::Good;
  if (text == "Poor") return Outcome::Poor;
  throw Error(ErrorCode::MalformedHeader, "outcome must be \"Good\" or \"Poor\", got \"" + text + "\"");
}

Outcome outcome_for_cpc(int cpc) { return cpc <= 2 ? Outcome::Good : Outcome::Poor; }

std::size_t RawRecording::find_electrode(const std::string& name) const {
  const auto it = std::find(electrodes.begin(), electrodes.end(), name);
  return it == electrodes.end() ? std::string::npos : static_cast<std::size_t>(it - electrodes.begin());
}

void RawRecording::validate() const {
  if (electrodes.empty() || n_samples == 0) {
    throw Error(ErrorCode::MalformedHeader, "recording of " + patient_id + " has no samples");
  }
  if (!(fs_hz > 0.0) || !std::isfinite(fs_hz)) {
    throw Error(ErrorCode::MalformedHeader, "fs_hz must be positive, got " + std::to_string(fs_hz));
  }
  if (samples.size() != electrodes.size() * n_samples) {
    throw Error(ErrorCode::SampleCountMismatch,
                "expected " + std::to_string(electrodes.size() * n_samples) + " values, have " +
                    std::to_string(samples.size()));
  }
  const auto bad = std::find_if(samples.begin(), samples.end(), [](float v) { return !std::isfinite(v); });
  if (bad != samples.end()) {
    const auto index = static_cast<std::size_t>(bad - samples.begin());
    throw Error(ErrorCode::NonFiniteSample, "electrode " + electrodes[index / n_samples] +
                                                " sample " + std::to_string(index % n_samples));
  }
}

void PatientMeta::validate() const {
  if (cpc < 1 || cpc > 5) {
    throw Error(ErrorCode::LabelInconsistent,
                patient_id + ": cpc must be in 1..5, got " + std::to_string(cpc));
  }
  if (outcome_for_cpc(cpc) != outcome) {
    throw Error(ErrorCode::LabelInconsistent, patient_id + ": outcome " + to_string(outcome) +
                                                  " contradicts cpc " + std::to_string(cpc));
  }
}

namespace {

json read_json(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::MissingFile, path.string());
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedHeader, path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

template <typename T>
T require_field(const json& j, const char* key, const fs::path& path) {
  if (!j.contains(key)) {
    throw Error(ErrorCode::MalformedHeader, path.string() + ": missing field \"" + key + "\"");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::MalformedHeader, path.string() + ": field \"" + key + "\" has wrong type");
  }
}

void reject_unknown_fields(const json& j, std::initializer_list<const char*> known, const fs::path& path) {
  if (!j.is_object()) throw Error(ErrorCode::MalformedHeader, path.string() + ": not a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
      throw Error(ErrorCode::MalformedHeader, path.string() + ": unknown field \"" + key + "\"");
    }
  }
}

std::string recording_stem(const RawRecording& rec) {
  char hour[16];
  std::snprintf(hour, sizeof hour, "%03d", rec.hour_index);
  return rec.patient_id + "_h" + hour;
}

}  // namespace

RawRecording load_recording(const fs::path& header_path) {
  const json header = read_json(header_path);
  reject_unknown_fields(header,
                        {"patient_id", "hour_index", "fs_hz", "electrodes", "n_samples",
                         "signal_file", "dtype"},
                        header_path);
  RawRecording rec;
  rec.patient_id = require_field<std::string>(header, "patient_id", header_path);
  rec.hour_index = require_field<int>(header, "hour_index", header_path);
  rec.fs_hz = require_field<double>(header, "fs_hz", header_path);
  rec.electrodes = require_field<std::vector<std::string>>(header, "electrodes", header_path);
  const auto n_samples = require_field<long long>(header, "n_samples", header_path);
  const auto signal_name = require_field<std::string>(header, "signal_file", header_path);
  const auto dtype = require_field<std::string>(header, "dtype", header_path);
  if (dtype != "f32le") {
    throw Error(ErrorCode::MalformedHeader, header_path.string() + ": dtype must be f32le, got " + dtype);
  }
  if (n_samples <= 0 || rec.hour_index < 0 || rec.electrodes.empty()) {
    throw Error(ErrorCode::MalformedHeader,
                header_path.string() + ": need n_samples > 0, hour_index >= 0, and electrodes");
  }
  rec.n_samples = static_cast<std::size_t>(n_samples);

  const fs::path signal_path = header_path.parent_path() / signal_name;
  if (!fs::exists(signal_path)) throw Error(ErrorCode::MissingFile, signal_path.string());
  const auto bytes = fs::file_size(signal_path);
  const std::size_t expected = rec.electrodes.size() * rec.n_samples;
  if (bytes != expected * sizeof(float)) {
    throw Error(ErrorCode::SampleCountMismatch,
                signal_path.string() + ": " + std::to_string(bytes / sizeof(float)) +
                    " values, header declares " + std::to_string(rec.electrodes.size()) + " x " +
                    std::to_string(rec.n_samples));
  }
  rec.samples.resize(expected);
  std::ifstream in(signal_path, std::ios::binary);
  if (!in.read(reinterpret_cast<char*>(rec.samples.data()),
               static_cast<std::streamsize>(expected * sizeof(float)))) {
    throw Error(ErrorCode::IoFailure, "cannot read " + signal_path.string());
  }
  rec.validate();
  return rec;
}

RecordingFiles write_recording(const RawRecording& rec, const fs::path& dir) {
  rec.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  const std::string stem = recording_stem(rec);
  RecordingFiles files{dir / (stem + std::string(kHeaderSuffix)), dir / (stem + std::string(kSignalSuffix))};

  std::ofstream out(files.signal, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + files.signal.string());
  out.write(reinterpret_cast<const char*>(rec.samples.data()),
            static_cast<std::streamsize>(rec.samples.size() * sizeof(float)));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + files.signal.string());
  out.close();

  json header = {{"patient_id", rec.patient_id},
                 {"hour_index", rec.hour_index},
                 {"fs_hz", rec.fs_hz},
                 {"electrodes", rec.electrodes},
                 {"n_samples", rec.n_samples},
                 {"signal_file", files.signal.filename().string()},
                 {"dtype", "f32le"}};
  write_text(files.header, header.dump(2) + "\n");
  return files;
}

PatientMeta load_patient_meta(const fs::path& path) {
  const json j = read_json(path);
  reject_unknown_fields(j, {"patient_id", "outcome", "cpc", "hospital"}, path);
  PatientMeta meta;
  meta.patient_id = require_field<std::string>(j, "patient_id", path);
  meta.outcome = outcome_from_string(require_field<std::string>(j, "outcome", path));
  meta.cpc = require_field<int>(j, "cpc", path);
  meta.hospital = require_field<std::string>(j, "hospital", path);
  meta.validate();
  return meta;
}

fs::path write_patient_meta(const PatientMeta& meta, const fs::path& dir) {
  meta.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  const fs::path path = dir / std::string(kMetaFile);
  json j = {{"patient_id", meta.patient_id},
            {"outcome", to_string(meta.outcome)},
            {"cpc", meta.cpc},
            {"hospital", meta.hospital}};
  write_text(path, j.dump(2) + "\n");
  return path;
}

PatientEntry scan_patient(const fs::path& dir) {
  PatientEntry entry;
  entry.directory = dir;
  const fs::path meta_path = dir / std::string(kMetaFile);
  if (!fs::exists(meta_path)) {
    throw Error(ErrorCode::MissingFile, "no " + std::string(kMetaFile));
  }
  entry.meta = load_patient_meta(meta_path);

  std::vector<std::pair<int, fs::path>> found;
  for (const auto& file : fs::directory_iterator(dir)) {
    const std::string name = file.path().filename().string();
    if (!name.ends_with(kHeaderSuffix)) continue;
    const json header = read_json(file.path());
    if (!header.contains("hour_index") || !header["hour_index"].is_number_integer()) {
      throw Error(ErrorCode::MalformedHeader, file.path().string() + ": missing hour_index");
    }
    found.emplace_back(header["hour_index"].get<int>(), file.path());
  }
  if (found.empty()) {
    throw Error(ErrorCode::MissingFile, "no recordings");
  }
  std::sort(found.begin(), found.end());
  for (auto& [hour, path] : found) {
    entry.hour_indices.push_back(hour);
    entry.headers.push_back(std::move(path));
  }
  return entry;
}

std::vector<PatientEntry> scan_dataset(const fs::path& root) {
  if (!fs::is_directory(root)) throw Error(ErrorCode::MissingFile, root.string());
  std::vector<fs::path> dirs;
  for (const auto& item : fs::directory_iterator(root)) {
    if (item.is_directory()) dirs.push_back(item.path());
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<PatientEntry> entries;
  for (const fs::path& dir : dirs) {
    try {
      entries.push_back(scan_patient(dir));
    } catch (const Error& e) {
      throw Error(e.code(), "patient " + dir.filename().string() + ": " + e.detail());
    }
  }
  if (entries.empty()) throw Error(ErrorCode::EmptyDataset, root.string() + " has no patients");
  std::sort(entries.begin(), entries.end(),
            [](const PatientEntry& a, const PatientEntry& b) { return a.meta.patient_id < b.meta.patient_id; });
  return entries;
}

Dataset load_dataset(const fs::path& root) {
  Dataset dataset;
  for (PatientEntry& entry : scan_dataset(root)) {
    PatientData data;
    data.meta = entry.meta;
    for (const fs::path& header : entry.headers) {
      try {
        data.recordings.push_back(load_recording(header));
      } catch (const Error& e) {
        throw Error(e.code(), "patient " + entry.meta.patient_id + ": " + e.detail());
      }
    }
    dataset.emplace(entry.meta.patient_id, std::move(data));
  }
  return dataset;
}

}  // namespace prognosis::io
