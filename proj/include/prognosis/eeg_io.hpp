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

// On-disk recording format, patient metadata, and dataset discovery.
//
// A recording is a pair of files in the same directory:
//   <stem>.hdr.json  {"patient_id", "hour_index", "fs_hz", "electrodes",
//                     "n_samples", "signal_file", "dtype": "f32le"}
//   <stem>.f32       raw little-endian float32, channel-major
//                    (all samples of electrode 0, then electrode 1, ...)
// A patient directory holds patient.json and one or more recordings.

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace prognosis::io {

enum class Outcome { Good, Poor };

std::string to_string(Outcome outcome);
/// Throws MalformedHeader on anything but "Good" / "Poor".
Outcome outcome_from_string(const std::string& text);
/// Good iff CPC is 1 or 2.
Outcome outcome_for_cpc(int cpc);

struct RawRecording {
  std::string patient_id;
  int hour_index = 0;
  double fs_hz = 0.0;
  std::vector<std::string> electrodes;
  std::size_t n_samples = 0;
  /// Channel-major, electrodes.size() * n_samples microvolt values.
  std::vector<float> samples;

  std::span<const float> channel(std::size_t e) const {
    return std::span<const float>(samples).subspan(e * n_samples, n_samples);
  }
  std::span<float> channel(std::size_t e) {
    return std::span<float>(samples).subspan(e * n_samples, n_samples);
  }
  /// Index of the named electrode, or npos.
  std::size_t find_electrode(const std::string& name) const;

  /// Throws SampleCountMismatch, NonFiniteSample, or MalformedHeader.
  void validate() const;

  friend bool operator==(const RawRecording&, const RawRecording&) = default;
};

struct PatientMeta {
  std::string patient_id;
  Outcome outcome = Outcome::Good;
  int cpc = 1;
  std::string hospital;

  /// CPC in 1..5 and outcome consistent with it; throws LabelInconsistent.
  void validate() const;

  friend bool operator==(const PatientMeta&, const PatientMeta&) = default;
};

struct RecordingFiles {
  std::filesystem::path header;
  std::filesystem::path signal;
};

inline constexpr std::string_view kHeaderSuffix = ".hdr.json";
inline constexpr std::string_view kSignalSuffix = ".f32";
inline constexpr std::string_view kMetaFile = "patient.json";

/// Throws MissingFile, MalformedHeader, SampleCountMismatch, NonFiniteSample.
RawRecording load_recording(const std::filesystem::path& header_path);
/// Writes <patient>_h<hour>.hdr.json and .f32 into dir. Throws IoFailure.
RecordingFiles write_recording(const RawRecording& rec, const std::filesystem::path& dir);

PatientMeta load_patient_meta(const std::filesystem::path& path);
std::filesystem::path write_patient_meta(const PatientMeta& meta, const std::filesystem::path& dir);

/// A patient discovered on disk; recordings are referenced, not loaded.
struct PatientEntry {
  PatientMeta meta;
  std::filesystem::path directory;
  /// Header paths sorted by hour_index ascending.
  std::vector<std::filesystem::path> headers;
  std::vector<int> hour_indices;
};

/// Reads one patient directory: metadata plus recording headers. Throws
/// MissingFile when patient.json or every recording is absent.
PatientEntry scan_patient(const std::filesystem::path& dir);

/// Lists patient directories under root in lexicographic id order, reading
/// metadata and recording headers but no signal payloads. Throws EmptyDataset
/// and per-patient errors prefixed with the patient directory.
std::vector<PatientEntry> scan_dataset(const std::filesystem::path& root);

struct PatientData {
  PatientMeta meta;
  std::vector<RawRecording> recordings;
};
using Dataset = std::map<std::string, PatientData>;

/// Eagerly loads every recording of every patient. Memory scales with the
/// corpus; the training and evaluation paths use scan_dataset instead.
Dataset load_dataset(const std::filesystem::path& root);

}  // namespace prognosis::io
