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

// Small seeded generators for property tests.

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "prognosis/dsp.hpp"
#include "prognosis/eeg_io.hpp"
#include "prognosis/rng.hpp"
#include "prognosis/tensor.hpp"

namespace testgen {

using prognosis::Rng;

inline std::vector<double> uniform_vector(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

inline prognosis::ad::Tensor uniform_tensor(Rng& rng, prognosis::ad::Shape shape, double lo = -1.0, double hi = 1.0) {
  prognosis::ad::Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

inline std::vector<double> sine(double freq_hz, double fs_hz, std::size_t n, double amplitude = 1.0,
                                double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = amplitude * std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(i) / fs_hz + phase);
  return x;
}

/// Naive DFT power at bin k.
inline double dft_power(const std::vector<double>& x, std::size_t k) {
  std::complex<double> acc{0.0, 0.0};
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    acc += x[i] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) * static_cast<double>(i) / n);
  return std::norm(acc);
}

/// Frequency (Hz) of the largest naive-DFT bin in (0, fs/2].
inline double dominant_frequency(const std::vector<double>& x, double fs_hz) {
  std::size_t best = 1;
  double best_power = -1.0;
  for (std::size_t k = 1; k <= x.size() / 2; ++k) {
    const double p = dft_power(x, k);
    if (p > best_power) {
      best_power = p;
      best = k;
    }
  }
  return static_cast<double>(best) * fs_hz / static_cast<double>(x.size());
}

/// Random recording over the 19 montage electrodes (in a shuffled order).
inline prognosis::io::RawRecording random_recording(Rng& rng, std::size_t n_samples, double fs_hz = 250.0,
                                                    const std::string& patient_id = "p") {
  prognosis::io::RawRecording rec;
  rec.patient_id = patient_id;
  rec.hour_index = static_cast<int>(rng.index(72));
  rec.fs_hz = fs_hz;
  for (auto name : prognosis::dsp::standard_electrodes()) rec.electrodes.emplace_back(name);
  for (std::size_t i = rec.electrodes.size(); i > 1; --i) std::swap(rec.electrodes[i - 1], rec.electrodes[rng.index(i)]);
  rec.n_samples = n_samples;
  rec.samples.resize(rec.electrodes.size() * n_samples);
  for (auto& s : rec.samples) s = static_cast<float>(rng.uniform(-100.0, 100.0));
  return rec;
}

inline prognosis::dsp::BipolarSegment random_segment(Rng& rng, const std::string& patient_id = "p") {
  prognosis::dsp::BipolarSegment s;
  s.patient_id = patient_id;
  s.data.resize(prognosis::dsp::BipolarSegment::kChannels * prognosis::dsp::BipolarSegment::kSamples);
  for (auto& v : s.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return s;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("prognosis-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testgen
