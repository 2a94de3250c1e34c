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

#include "prognosis/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "prognosis/eeg_io.hpp"
#include "prognosis/error.hpp"

namespace prognosis::dsp {

using cd = std::complex<double>;

bool Biquad::stable() const noexcept {
  return std::abs(a2) < 1.0 && std::abs(a1) < 1.0 + a2;
}

std::complex<double> Biquad::response(double omega) const noexcept {
  const cd z1 = std::polar(1.0, -omega);
  const cd z2 = z1 * z1;
  return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
}

bool BiquadCascade::stable() const noexcept {
  return std::all_of(sections.begin(), sections.end(), [](const Biquad& s) { return s.stable(); });
}

std::complex<double> BiquadCascade::response(double freq_hz, double fs_hz) const noexcept {
  const double omega = 2.0 * std::numbers::pi * freq_hz / fs_hz;
  cd h = 1.0;
  for (const Biquad& s : sections) h *= s.response(omega);
  return h;
}

double BiquadCascade::magnitude(double freq_hz, double fs_hz) const noexcept {
  return std::abs(response(freq_hz, fs_hz));
}

BiquadCascade design_butterworth_bandpass(double low_hz, double high_hz, int order, double fs_hz) {
  if (!(fs_hz > 0.0) || !(low_hz > 0.0) || !(low_hz < high_hz) || !(high_hz < fs_hz / 2.0)) {
    throw Error(ErrorCode::InvalidBand, "need 0 < low < high < fs/2, got low=" +
                                            std::to_string(low_hz) + " high=" +
                                            std::to_string(high_hz) + " fs=" + std::to_string(fs_hz));
  }
  if (order < 2 || order % 2 != 0) {
    throw Error(ErrorCode::InvalidBand, "order must be even and >= 2, got " + std::to_string(order));
  }

  const double two_fs = 2.0 * fs_hz;
  const double w_low = two_fs * std::tan(std::numbers::pi * low_hz / fs_hz);
  const double w_high = two_fs * std::tan(std::numbers::pi * high_hz / fs_hz);
  const double bandwidth = w_high - w_low;
  const double center_sq = w_low * w_high;

  BiquadCascade cascade;
  // Prototype poles in the upper half plane; their conjugates produce the
  // conjugate band-pass poles, so each contributes two sections.
  for (int k = 0; k < order / 2; ++k) {
    const double angle = std::numbers::pi * (2.0 * k + order + 1) / (2.0 * order);
    const cd proto = std::polar(1.0, angle);
    const cd half = proto * (bandwidth / 2.0);
    const cd disc = std::sqrt(half * half - center_sq);
    for (const cd s : {half + disc, half - disc}) {
      const cd z = (two_fs + s) / (two_fs - s);
      Biquad section;
      section.b0 = 1.0;
      section.b1 = 0.0;
      section.b2 = -1.0;
      section.a1 = -2.0 * z.real();
      section.a2 = std::norm(z);
      cascade.sections.push_back(section);
    }
  }

  // Unit gain at the digital image of the analog center frequency.
  const double center_hz = std::atan(std::sqrt(center_sq) / two_fs) * fs_hz / std::numbers::pi;
  const double gain = 1.0 / cascade.magnitude(center_hz, fs_hz);
  const double per_section = std::pow(gain, 1.0 / static_cast<double>(cascade.sections.size()));
  for (Biquad& s : cascade.sections) {
    s.b0 *= per_section;
    s.b1 *= per_section;
    s.b2 *= per_section;
  }

  if (!cascade.stable()) {
    throw Error(ErrorCode::UnstableDesign, "designed section has a pole on or outside the unit circle");
  }
  return cascade;
}

std::vector<double> filter_signal(const BiquadCascade& cascade, std::span<const double> x) {
  if (!std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); })) {
    throw Error(ErrorCode::NonFiniteInput, "filter input contains NaN or Inf");
  }
  std::vector<double> y(x.begin(), x.end());
  for (const Biquad& s : cascade.sections) {
    double s1 = 0.0, s2 = 0.0;
    for (double& v : y) {
      const double in = v;
      const double out = s.b0 * in + s1;
      s1 = s.b1 * in - s.a1 * out + s2;
      s2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
  return y;
}

ResampleRatio resample_ratio(double fs_in, double fs_out) {
  if (!(fs_in > 0.0) || !(fs_out > 0.0) || !std::isfinite(fs_in) || !std::isfinite(fs_out)) {
    throw Error(ErrorCode::BadRate, "rates must be positive, got " + std::to_string(fs_in) +
                                        " -> " + std::to_string(fs_out));
  }
  const double ratio = fs_out / fs_in;
  for (std::size_t down = 1; down <= kMaxRatioTerm; ++down) {
    const double scaled = ratio * static_cast<double>(down);
    const double up = std::round(scaled);
    if (up < 1.0 || up > static_cast<double>(kMaxRatioTerm)) continue;
    if (std::abs(up - scaled) <= 1e-12 * std::max(1.0, scaled)) {
      return {static_cast<std::size_t>(up), down};
    }
  }
  throw Error(ErrorCode::IrreducibleRatio,
              std::to_string(fs_in) + " -> " + std::to_string(fs_out) +
                  " has no ratio with terms <= " + std::to_string(kMaxRatioTerm));
}

std::vector<double> resampler_taps(ResampleRatio ratio, double fs_in, double fs_out) {
  const std::size_t n_taps = 10 * std::max(ratio.up, ratio.down) + 1;
  const double center = static_cast<double>(n_taps - 1) / 2.0;
  const double cutoff = 0.45 * std::min(fs_in, fs_out) / (fs_in * static_cast<double>(ratio.up));
  std::vector<double> taps(n_taps);
  for (std::size_t n = 0; n < n_taps; ++n) {
    const double t = static_cast<double>(n) - center;
    const double arg = 2.0 * cutoff * t;
    const double sinc = t == 0.0 ? 1.0 : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
    const double window =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / (n_taps - 1));
    taps[n] = 2.0 * cutoff * sinc * window;
  }
  const double total = std::accumulate(taps.begin(), taps.end(), 0.0);
  for (double& t : taps) t *= static_cast<double>(ratio.up) / total;
  return taps;
}

std::vector<double> resample(std::span<const double> x, double fs_in, double fs_out) {
  const ResampleRatio ratio = resample_ratio(fs_in, fs_out);
  if (x.size() < 2) throw Error(ErrorCode::TooShort, "resample needs at least 2 samples");
  if (ratio.up == 1 && ratio.down == 1) return {x.begin(), x.end()};

  const std::vector<double> taps = resampler_taps(ratio, fs_in, fs_out);
  const std::size_t up = ratio.up, down = ratio.down;
  const std::size_t n_in = x.size();
  const std::size_t n_out = (2 * n_in * up + down) / (2 * down);
  const std::size_t center = (taps.size() - 1) / 2;
  const std::size_t n_up = n_in * up;

  std::vector<double> y(n_out);
  for (std::size_t m = 0; m < n_out; ++m) {
    // Output m sits at upsampled position m*down; the tap centered there
    // sees upsampled sample j = m*down + center - n.
    const std::size_t j0 = m * down + center;
    double acc = 0.0;
    for (std::size_t n = j0 % up; n < taps.size() && n <= j0; n += up) {
      const std::size_t j = j0 - n;
      if (j < n_up) acc += taps[n] * x[j / up];
    }
    y[m] = acc;
  }
  return y;
}

std::vector<double> minmax_rescale(std::span<const double> x) {
  std::vector<double> y(x.size(), 0.0);
  if (x.empty()) return y;
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it, hi = *hi_it;
  if (hi == lo) return y;
  const double range = hi - lo;
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = (x[i] - lo) / range;
  return y;
}

const std::array<std::string_view, 19>& standard_electrodes() noexcept {
  static constexpr std::array<std::string_view, 19> kElectrodes = {
      "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "T3", "C3", "Cz",
      "C4",  "T4",  "T5", "P3", "Pz", "P4", "T6", "O1", "O2"};
  return kElectrodes;
}

const std::array<MontagePair, kBipolarChannels>& standard_montage() noexcept {
  static constexpr std::array<MontagePair, kBipolarChannels> kMontage = {{
      {"Fp1", "F7"}, {"F7", "T3"}, {"T3", "T5"}, {"T5", "O1"},
      {"Fp2", "F8"}, {"F8", "T4"}, {"T4", "T6"}, {"T6", "O2"},
      {"Fp1", "F3"}, {"F3", "C3"}, {"C3", "P3"}, {"P3", "O1"},
      {"Fp2", "F4"}, {"F4", "C4"}, {"C4", "P4"}, {"P4", "O2"},
      {"Fz", "Cz"},  {"Cz", "Pz"},
  }};
  return kMontage;
}

std::vector<std::vector<double>> to_bipolar(std::span<const std::string> names,
                                            std::span<const std::vector<double>> signals,
                                            std::span<const MontagePair> montage) {
  if (names.size() != signals.size()) {
    throw Error(ErrorCode::ShapeMismatch, std::to_string(names.size()) + " names for " +
                                              std::to_string(signals.size()) + " signals");
  }
  auto lookup = [&](std::string_view name) -> const std::vector<double>& {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return signals[i];
    }
    throw Error(ErrorCode::MissingElectrode, std::string(name));
  };
  std::vector<std::vector<double>> out;
  out.reserve(montage.size());
  for (const MontagePair& pair : montage) {
    const auto& anode = lookup(pair.anode);
    const auto& cathode = lookup(pair.cathode);
    if (anode.size() != cathode.size()) {
      throw Error(ErrorCode::ShapeMismatch, "electrodes " + std::string(pair.anode) + " and " +
                                                std::string(pair.cathode) + " differ in length");
    }
    std::vector<double> row(anode.size());
    for (std::size_t t = 0; t < row.size(); ++t) row[t] = anode[t] - cathode[t];
    out.push_back(std::move(row));
  }
  return out;
}

bool BipolarSegment::valid() const noexcept {
  if (data.size() != kChannels * kSamples) return false;
  return std::all_of(data.begin(), data.end(),
                     [](float v) { return std::isfinite(v) && v >= -1.0f && v <= 1.0f; });
}

std::vector<BipolarSegment> segment(std::span<const std::vector<double>> bipolar,
                                    const std::string& patient_id, int hour_index) {
  if (bipolar.size() != kBipolarChannels) {
    throw Error(ErrorCode::ShapeMismatch,
                "expected 18 bipolar channels, got " + std::to_string(bipolar.size()));
  }
  const std::size_t n = bipolar[0].size();
  for (const auto& row : bipolar) {
    if (row.size() != n) throw Error(ErrorCode::ShapeMismatch, "bipolar channels differ in length");
  }
  if (n < kSegmentSamples) {
    throw Error(ErrorCode::TooShort, std::to_string(n) + " samples, need " +
                                         std::to_string(kSegmentSamples));
  }
  const std::size_t count = n / kSegmentSamples;
  std::vector<BipolarSegment> segments(count);
  for (std::size_t s = 0; s < count; ++s) {
    BipolarSegment& seg = segments[s];
    seg.patient_id = patient_id;
    seg.hour_index = hour_index;
    seg.segment_index = static_cast<int>(s);
    seg.data.resize(kBipolarChannels * kSegmentSamples);
    for (std::size_t c = 0; c < kBipolarChannels; ++c) {
      const double* src = bipolar[c].data() + s * kSegmentSamples;
      float* dst = seg.data.data() + c * kSegmentSamples;
      for (std::size_t t = 0; t < kSegmentSamples; ++t) dst[t] = static_cast<float>(src[t]);
    }
  }
  return segments;
}

std::vector<BipolarSegment> preprocess(const io::RawRecording& rec) {
  rec.validate();
  const auto& electrodes = standard_electrodes();
  for (std::string_view name : electrodes) {
    if (rec.find_electrode(std::string(name)) == std::string::npos) {
      throw Error(ErrorCode::MissingElectrode, std::string(name));
    }
  }
  const BiquadCascade cascade =
      design_butterworth_bandpass(kLowCutHz, kHighCutHz, kFilterOrder, rec.fs_hz);

  std::vector<std::string> names;
  std::vector<std::vector<double>> rescaled;
  for (std::string_view name : electrodes) {
    const auto raw = rec.channel(rec.find_electrode(std::string(name)));
    const std::vector<double> x(raw.begin(), raw.end());
    const std::vector<double> filtered = filter_signal(cascade, x);
    const std::vector<double> resampled = resample(filtered, rec.fs_hz, kTargetRateHz);
    names.emplace_back(name);
    rescaled.push_back(minmax_rescale(resampled));
  }
  const auto bipolar = to_bipolar(names, rescaled, standard_montage());
  return segment(bipolar, rec.patient_id, rec.hour_index);
}

}  // namespace prognosis::dsp
