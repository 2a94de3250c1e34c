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

// Preprocessed segments, grouped by patient and hour.
//
// On disk: <dir>/index.json plus one <patient>_h<hour>.seg file per usable
// hour holding n_segments x 18 x 30000 little-endian float32 values.
// Recordings that cannot be preprocessed (missing electrodes, shorter than a
// segment) are listed under "skipped" with the reason.

#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "prognosis/dsp.hpp"
#include "prognosis/eeg_io.hpp"

namespace prognosis::train {

struct CachedHour {
  int hour_index = 0;
  std::size_t n_segments = 0;
  std::filesystem::path file;       // empty for in-memory hours
  std::vector<float> data;          // used when file is empty
};

struct SkippedRecording {
  std::string patient_id;
  std::string header;
  std::string reason;
};

class SegmentCache {
 public:
  using Progress = std::function<void(const std::string& patient_id, int hour_index)>;

  /// Empty in-memory cache.
  SegmentCache() = default;

  /// Preprocesses every recording of every patient into dir, reusing hour
  /// files an earlier build already wrote. progress fires for each hour that
  /// is actually preprocessed. Throws EmptySplit if a patient ends up with no
  /// usable hour.
  static SegmentCache build(const std::vector<io::PatientEntry>& patients, const std::filesystem::path& dir,
                            const Progress& progress = {});
  /// Opens a cache written by build(). Throws MissingFile / MalformedHeader.
  static SegmentCache open(const std::filesystem::path& dir);

  /// Adds one preprocessed hour held in memory.
  void add_hour(const std::string& patient_id, int hour_index, const std::vector<dsp::BipolarSegment>& segments);

  bool contains(const std::string& patient_id) const { return hours_.count(patient_id) != 0; }
  /// Hours sorted by hour_index. Throws EmptySplit for unknown patients.
  const std::vector<CachedHour>& hours(const std::string& patient_id) const;
  std::vector<std::string> patient_ids() const;
  std::size_t total_segments() const;
  const std::vector<SkippedRecording>& skipped() const { return skipped_; }

  /// Segment `segment` of the hour at position hour_pos of hours(patient_id).
  dsp::BipolarSegment load(const std::string& patient_id, std::size_t hour_pos, std::size_t segment) const;

 private:
  void write_index(const std::filesystem::path& dir) const;

  std::map<std::string, std::vector<CachedHour>> hours_;
  std::vector<SkippedRecording> skipped_;
};

}  // namespace prognosis::train
