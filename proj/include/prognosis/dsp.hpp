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

// Preprocessing chain applied to every recording before it reaches the model:
// band-pass filter, resample to 100 Hz, per-electrode min-max rescale,
// bipolar derivation, and cutting into 5-minute segments.

#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace prognosis::io {
struct RawRecording;
}

namespace prognosis::dsp {

inline constexpr double kLowCutHz = 0.5;
inline constexpr double kHighCutHz = 35.0;
inline constexpr int kFilterOrder = 4;
inline constexpr double kTargetRateHz = 100.0;
inline constexpr std::size_t kSegmentSamples = 30000;  // 5 min at 100 Hz
inline constexpr std::size_t kBipolarChannels = 18;
inline constexpr std::size_t kMaxRatioTerm = 10000;

/// One second-order section, a0 normalized to 1:
///   H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0, a1 = 0.0, a2 = 0.0;

  /// Poles strictly inside the unit circle.
  bool stable() const noexcept;
  std::complex<double> response(double omega) const noexcept;
};

struct BiquadCascade {
  std::vector<Biquad> sections;

  bool stable() const noexcept;
  /// Complex frequency response at freq_hz for sampling rate fs_hz.
  std::complex<double> response(double freq_hz, double fs_hz) const noexcept;
  double magnitude(double freq_hz, double fs_hz) const noexcept;
};

/// Digital Butterworth band-pass: analog prototype of the given (even) order,
/// low-pass to band-pass transform, bilinear transform with pre-warped band
/// edges. Returns order sections, unit gain at the geometric band center.
/// Throws InvalidBand or UnstableDesign.
BiquadCascade design_butterworth_bandpass(double low_hz, double high_hz, int order, double fs_hz);

/// Causal direct-form-II-transposed filtering, sections in order, zero
/// initial state. Throws NonFiniteInput.
std::vector<double> filter_signal(const BiquadCascade& cascade, std::span<const double> x);

struct ResampleRatio {
  std::size_t up = 1;    // L
  std::size_t down = 1;  // M
};

/// Reduced L/M with L/M == fs_out/fs_in and both terms <= kMaxRatioTerm.
/// Throws BadRate or IrreducibleRatio.
ResampleRatio resample_ratio(double fs_in, double fs_out);

/// Anti-aliasing taps at the upsampled rate: Hann-windowed sinc,
/// 10 * max(L, M) + 1 taps, cutoff 0.45 * min(fs_in, fs_out), normalized to a
/// DC gain of L so each polyphase branch has unit gain.
std::vector<double> resampler_taps(ResampleRatio ratio, double fs_in, double fs_out);

/// Rational polyphase resampling with a zero-delay (centered) FIR. Output
/// length is round(n * fs_out / fs_in). Returns x unchanged when the rates are
/// equal. Throws BadRate, IrreducibleRatio, TooShort (fewer than 2 samples).
std::vector<double> resample(std::span<const double> x, double fs_in, double fs_out);

/// Maps x onto [0, 1]; a constant input maps to all zeros.
std::vector<double> minmax_rescale(std::span<const double> x);

struct MontagePair {
  std::string_view anode;
  std::string_view cathode;
};

/// The 19 scalp electrodes of the 10-20 system used by the montage.
const std::array<std::string_view, 19>& standard_electrodes() noexcept;
/// Longitudinal bipolar ("double banana") montage, 18 pairs.
const std::array<MontagePair, kBipolarChannels>& standard_montage() noexcept;

/// Row i = signal(anode_i) - signal(cathode_i), in montage order. Throws
/// MissingElectrode naming the first absent electrode.
std::vector<std::vector<double>> to_bipolar(std::span<const std::string> names,
                                            std::span<const std::vector<double>> signals,
                                            std::span<const MontagePair> montage);

/// 18 bipolar channels x 30000 samples at 100 Hz, row-major, unit-free.
struct BipolarSegment {
  static constexpr std::size_t kChannels = kBipolarChannels;
  static constexpr std::size_t kSamples = kSegmentSamples;

  std::string patient_id;
  int hour_index = 0;
  int segment_index = 0;
  std::vector<float> data;

  std::span<const float> channel(std::size_t c) const {
    return std::span<const float>(data).subspan(c * kSamples, kSamples);
  }
  /// Shape is exactly 18 x 30000 and every value is finite and in [-1, 1].
  bool valid() const noexcept;
};

/// Consecutive non-overlapping 30000-sample windows from the start; a
/// trailing remainder is dropped. Throws TooShort or ShapeMismatch.
std::vector<BipolarSegment> segment(std::span<const std::vector<double>> bipolar,
                                    const std::string& patient_id, int hour_index);

/// filter -> resample to 100 Hz -> min-max per electrode -> bipolar ->
/// segment. Throws MissingElectrode and anything its stages throw.
std::vector<BipolarSegment> preprocess(const io::RawRecording& rec);

}  // namespace prognosis::dsp
