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

#include "prognosis/segment_cache.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "prognosis/error.hpp"

namespace prognosis::train {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kSegmentFloats = dsp::BipolarSegment::kChannels * dsp::BipolarSegment::kSamples;
constexpr int kIndexVersion = 1;

std::string hour_file_name(const std::string& patient_id, int hour) {
  std::ostringstream os;
  os << patient_id << "_h" << hour << ".seg";
  return os.str();
}

void write_floats(const fs::path& path, const std::vector<dsp::BipolarSegment>& segments) {
  const fs::path tmp = fs::path(path).concat(".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + tmp.string());
    for (const auto& s : segments)
      out.write(reinterpret_cast<const char*>(s.data.data()),
                static_cast<std::streamsize>(s.data.size() * sizeof(float)));
    if (!out) throw Error(ErrorCode::IoFailure, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

bool file_matches(const fs::path& path, std::size_t n_segments) {
  std::error_code ec;
  const auto size = fs::file_size(path, ec);
  return !ec && size == n_segments * kSegmentFloats * sizeof(float);
}

}  // namespace

SegmentCache SegmentCache::build(const std::vector<io::PatientEntry>& patients, const fs::path& dir,
                                 const Progress& progress) {
  fs::create_directories(dir);

  // Hours an earlier build finished, keyed by file name.
  std::map<std::string, std::size_t> previous;
  if (fs::exists(dir / "index.json")) {
    try {
      const SegmentCache old = open(dir);
      for (const auto& [id, hours] : old.hours_)
        for (const auto& h : hours) previous[h.file.filename().string()] = h.n_segments;
    } catch (const Error&) {
      previous.clear();
    }
  }

  SegmentCache cache;
  for (const auto& patient : patients) {
    const std::string& id = patient.meta.patient_id;
    for (std::size_t i = 0; i < patient.headers.size(); ++i) {
      const int hour = patient.hour_indices[i];
      const std::string name = hour_file_name(id, hour);
      const fs::path file = dir / name;
      auto it = previous.find(name);
      if (it != previous.end() && file_matches(file, it->second)) {
        cache.hours_[id].push_back(CachedHour{hour, it->second, file, {}});
        continue;
      }
      if (progress) progress(id, hour);
      std::vector<dsp::BipolarSegment> segments;
      try {
        segments = dsp::preprocess(io::load_recording(patient.headers[i]));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::MissingElectrode && e.code() != ErrorCode::TooShort) throw;
        cache.skipped_.push_back({id, patient.headers[i].filename().string(), e.what()});
        continue;
      }
      write_floats(file, segments);
      cache.hours_[id].push_back(CachedHour{hour, segments.size(), file, {}});
    }
    if (!cache.contains(id))
      throw Error(ErrorCode::EmptySplit, "patient " + id + " has no usable recording");
  }
  cache.write_index(dir);
  return cache;
}

void SegmentCache::write_index(const fs::path& dir) const {
  json j;
  j["version"] = kIndexVersion;
  json patients = json::object();
  for (const auto& [id, hours] : hours_) {
    json list = json::array();
    for (const auto& h : hours)
      list.push_back({{"hour_index", h.hour_index}, {"n_segments", h.n_segments}, {"file", h.file.filename().string()}});
    patients[id] = std::move(list);
  }
  j["patients"] = std::move(patients);
  json skipped = json::array();
  for (const auto& s : skipped_)
    skipped.push_back({{"patient_id", s.patient_id}, {"header", s.header}, {"reason", s.reason}});
  j["skipped"] = std::move(skipped);

  std::ofstream out(dir / "index.json", std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + (dir / "index.json").string());
  out << j.dump(2) << '\n';
}

SegmentCache SegmentCache::open(const fs::path& dir) {
  const fs::path index = dir / "index.json";
  std::ifstream in(index);
  if (!in) throw Error(ErrorCode::MissingFile, "segment cache index not found: " + index.string());
  SegmentCache cache;
  try {
    const json j = json::parse(in);
    if (j.at("version").get<int>() != kIndexVersion)
      throw Error(ErrorCode::MalformedHeader, "unsupported segment cache version");
    for (const auto& [id, list] : j.at("patients").items()) {
      auto& hours = cache.hours_[id];
      for (const auto& h : list)
        hours.push_back(CachedHour{h.at("hour_index").get<int>(), h.at("n_segments").get<std::size_t>(),
                                   dir / h.at("file").get<std::string>(), {}});
      std::sort(hours.begin(), hours.end(),
                [](const CachedHour& a, const CachedHour& b) { return a.hour_index < b.hour_index; });
    }
    for (const auto& s : j.at("skipped"))
      cache.skipped_.push_back({s.at("patient_id").get<std::string>(), s.at("header").get<std::string>(),
                                s.at("reason").get<std::string>()});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedHeader, index.string() + ": " + e.what());
  }
  return cache;
}

void SegmentCache::add_hour(const std::string& patient_id, int hour_index,
                            const std::vector<dsp::BipolarSegment>& segments) {
  if (segments.empty()) throw Error(ErrorCode::EmptySplit, "hour without segments for " + patient_id);
  CachedHour hour{hour_index, segments.size(), {}, {}};
  hour.data.reserve(segments.size() * kSegmentFloats);
  for (const auto& s : segments) {
    if (s.data.size() != kSegmentFloats) throw Error(ErrorCode::ShapeMismatch, "segment is not 18 x 30000");
    hour.data.insert(hour.data.end(), s.data.begin(), s.data.end());
  }
  auto& hours = hours_[patient_id];
  hours.push_back(std::move(hour));
  std::sort(hours.begin(), hours.end(),
            [](const CachedHour& a, const CachedHour& b) { return a.hour_index < b.hour_index; });
}

const std::vector<CachedHour>& SegmentCache::hours(const std::string& patient_id) const {
  auto it = hours_.find(patient_id);
  if (it == hours_.end() || it->second.empty())
    throw Error(ErrorCode::EmptySplit, "no preprocessed hours for patient " + patient_id);
  return it->second;
}

std::vector<std::string> SegmentCache::patient_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, hours] : hours_) ids.push_back(id);
  return ids;
}

std::size_t SegmentCache::total_segments() const {
  std::size_t n = 0;
  for (const auto& [id, hours] : hours_)
    for (const auto& h : hours) n += h.n_segments;
  return n;
}

dsp::BipolarSegment SegmentCache::load(const std::string& patient_id, std::size_t hour_pos,
                                       std::size_t segment) const {
  const auto& list = hours(patient_id);
  if (hour_pos >= list.size()) throw Error(ErrorCode::EmptySplit, "hour position out of range for " + patient_id);
  const CachedHour& hour = list[hour_pos];
  if (segment >= hour.n_segments) throw Error(ErrorCode::EmptySplit, "segment out of range for " + patient_id);

  dsp::BipolarSegment out;
  out.patient_id = patient_id;
  out.hour_index = hour.hour_index;
  out.segment_index = static_cast<int>(segment);
  out.data.resize(kSegmentFloats);
  if (hour.file.empty()) {
    std::copy_n(hour.data.begin() + static_cast<std::ptrdiff_t>(segment * kSegmentFloats), kSegmentFloats,
                out.data.begin());
    return out;
  }
  std::ifstream in(hour.file, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "segment cache file missing: " + hour.file.string());
  in.seekg(static_cast<std::streamoff>(segment * kSegmentFloats * sizeof(float)));
  in.read(reinterpret_cast<char*>(out.data.data()), static_cast<std::streamsize>(kSegmentFloats * sizeof(float)));
  if (!in) throw Error(ErrorCode::IoFailure, "short read from " + hour.file.string());
  return out;
}

}  // namespace prognosis::train
