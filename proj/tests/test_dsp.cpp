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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "generators.hpp"
#include "prognosis/dsp.hpp"
#include "prognosis/error.hpp"
#include "prognosis/synth.hpp"

using namespace prognosis;
using namespace prognosis::dsp;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::IoFailure;
}

// |H| of the order-4 0.5-35 Hz band-pass at fs = 100, computed with
// scipy.signal.butter(4, [0.5, 35], btype="band", fs=100, output="sos").
constexpr std::pair<double, double> kReferenceMagnitude[] = {
    {0.05, 9.68359888436e-05}, {0.25, 0.0608814475033}, {0.5, 0.707106781187}, {1, 0.998401778932},
    {2, 0.999997316404},       {5, 1.0},                {10, 0.999999981011},  {20, 0.999883818853},
    {30, 0.973713693419},      {35, 0.707106781187},    {40, 0.160140823467},  {45, 0.00906884500249},
    {49, 1.40152136762e-05},
};

}  // namespace

TEST_CASE("band-pass magnitude at the cutoffs, DC, and mid-band") {
  const auto h = design_butterworth_bandpass(0.5, 35.0, 4, 100.0);
  CHECK(h.sections.size() == 4);
  CHECK(std::abs(h.magnitude(0.5, 100.0) - 0.7071) <= 0.01);
  CHECK(std::abs(h.magnitude(35.0, 100.0) - 0.7071) <= 0.01);
  CHECK(h.magnitude(0.0, 100.0) <= 1e-12);
  CHECK(std::abs(h.magnitude(10.0, 100.0) - 1.0) <= 0.02);
}

TEST_CASE("band-pass response matches an independent Butterworth implementation") {
  const auto h = design_butterworth_bandpass(0.5, 35.0, 4, 100.0);
  for (auto [f, expected] : kReferenceMagnitude) {
    INFO("f = " << f);
    CHECK(h.magnitude(f, 100.0) == doctest::Approx(expected).epsilon(1e-6).scale(1e-6));
  }
}

TEST_CASE("band-pass stop-band attenuation") {
  const auto h = design_butterworth_bandpass(kLowCutHz, kHighCutHz, kFilterOrder, kTargetRateHz);
  CHECK(h.magnitude(0.05, 100.0) < 0.1);
  CHECK(h.magnitude(49.0, 100.0) < 0.1);
}

TEST_CASE("band-pass designs are stable across a randomized sweep") {
  Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const double fs = rng.uniform(50.0, 2000.0);
    const double nyq = fs / 2.0;
    const double low = rng.uniform(0.01, 0.3) * nyq;
    const double high = rng.uniform(low / nyq + 0.05, 0.9) * nyq;
    if (high <= low) continue;
    const int order = 2 * (1 + static_cast<int>(rng.index(4)));
    const auto h = design_butterworth_bandpass(low, high, order, fs);
    INFO("fs=" << fs << " low=" << low << " high=" << high << " order=" << order);
    CHECK(h.stable());
    CHECK(h.sections.size() == static_cast<std::size_t>(order));
    for (const auto& s : h.sections) CHECK((std::abs(s.a2) < 1.0 && std::abs(s.a1) < 1.0 + s.a2));
    CHECK(std::abs(h.magnitude(low, fs) - M_SQRT1_2) <= 0.01);
    CHECK(std::abs(h.magnitude(high, fs) - M_SQRT1_2) <= 0.01);
  }
}

TEST_CASE("band-pass rejects invalid bands") {
  CHECK(code_of([] { design_butterworth_bandpass(0.0, 35.0, 4, 100.0); }) == ErrorCode::InvalidBand);
  CHECK(code_of([] { design_butterworth_bandpass(35.0, 0.5, 4, 100.0); }) == ErrorCode::InvalidBand);
  CHECK(code_of([] { design_butterworth_bandpass(0.5, 50.0, 4, 100.0); }) == ErrorCode::InvalidBand);
  CHECK(code_of([] { design_butterworth_bandpass(0.5, 35.0, 3, 100.0); }) == ErrorCode::InvalidBand);
  CHECK(code_of([] { design_butterworth_bandpass(0.5, 35.0, 0, 100.0); }) == ErrorCode::InvalidBand);
}

TEST_CASE("filter: zeros in, zeros out") {
  const auto h = design_butterworth_bandpass(0.5, 35.0, 4, 100.0);
  const std::vector<double> zeros(500, 0.0);
  const auto y = filter_signal(h, zeros);
  CHECK(y.size() == zeros.size());
  CHECK(std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("filter is linear") {
  const auto h = design_butterworth_bandpass(0.5, 35.0, 4, 100.0);
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = testgen::uniform_vector(rng, 800);
    const auto z = testgen::uniform_vector(rng, 800);
    const double a = rng.uniform(-3.0, 3.0), b = rng.uniform(-3.0, 3.0);
    std::vector<double> mix(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) mix[i] = a * x[i] + b * z[i];
    const auto fx = filter_signal(h, x), fz = filter_signal(h, z), fm = filter_signal(h, mix);
    double scale = 0.0;
    for (double v : fm) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(fm[i] - (a * fx[i] + b * fz[i])) <= 1e-9 * scale);
  }
}

TEST_CASE("filter passes a 10 Hz tone with unit amplitude") {
  const auto h = design_butterworth_bandpass(0.5, 35.0, 4, 100.0);
  const auto x = testgen::sine(10.0, 100.0, 3000);
  const auto y = filter_signal(h, x);
  double peak = 0.0;
  for (std::size_t i = 500; i < y.size(); ++i) peak = std::max(peak, std::abs(y[i]));
  CHECK(std::abs(peak - 1.0) <= 0.05);
}

TEST_CASE("filter rejects non-finite input") {
  const auto h = design_butterworth_bandpass(0.5, 35.0, 4, 100.0);
  std::vector<double> x(10, 1.0);
  x[4] = std::numeric_limits<double>::quiet_NaN();
  CHECK(code_of([&] { filter_signal(h, x); }) == ErrorCode::NonFiniteInput);
  x[4] = std::numeric_limits<double>::infinity();
  CHECK(code_of([&] { filter_signal(h, x); }) == ErrorCode::NonFiniteInput);
}

TEST_CASE("resample ratio reduction") {
  CHECK(resample_ratio(250.0, 100.0).up == 2);
  CHECK(resample_ratio(250.0, 100.0).down == 5);
  CHECK(resample_ratio(200.0, 100.0).up == 1);
  CHECK(resample_ratio(200.0, 100.0).down == 2);
  CHECK(resample_ratio(256.0, 100.0).up == 25);
  CHECK(resample_ratio(256.0, 100.0).down == 64);
  CHECK(code_of([] { resample_ratio(0.0, 100.0); }) == ErrorCode::BadRate);
  CHECK(code_of([] { resample_ratio(-5.0, 100.0); }) == ErrorCode::BadRate);
  CHECK(code_of([] { resample_ratio(std::numeric_limits<double>::quiet_NaN(), 100.0); }) == ErrorCode::BadRate);
  CHECK(code_of([] { resample_ratio(100.0 + 1e-7, 100.0); }) == ErrorCode::IrreducibleRatio);
}

TEST_CASE("resampler taps") {
  for (double fs_in : {200.0, 250.0, 500.0, 256.0}) {
    const auto r = resample_ratio(fs_in, 100.0);
    const auto taps = resampler_taps(r, fs_in, 100.0);
    CHECK(taps.size() == 10 * std::max(r.up, r.down) + 1);
    double sum = 0.0;
    for (double t : taps) sum += t;
    CHECK(sum == doctest::Approx(static_cast<double>(r.up)).epsilon(1e-12));
    for (std::size_t i = 0; i < taps.size(); ++i) CHECK(taps[i] == doctest::Approx(taps[taps.size() - 1 - i]));
  }
}

TEST_CASE("resample length contract and identity") {
  const auto x = testgen::sine(3.0, 200.0, 1000);
  CHECK(resample(x, 200.0, 100.0).size() == 500);
  const auto same = resample(x, 100.0, 100.0);
  CHECK(same == x);
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.index(3000);
    const double fs_in = std::array{200.0, 250.0, 500.0, 256.0, 128.0}[rng.index(5)];
    const auto y = resample(testgen::uniform_vector(rng, n), fs_in, 100.0);
    CHECK(y.size() == static_cast<std::size_t>(std::llround(static_cast<double>(n) * 100.0 / fs_in)));
  }
  CHECK(code_of([] { resample(std::vector<double>{1.0}, 250.0, 100.0); }) == ErrorCode::TooShort);
}

TEST_CASE("resampled 5 Hz tone correlates with the analytic 5 Hz tone") {
  const auto x = testgen::sine(5.0, 250.0, 2500);
  const auto y = resample(x, 250.0, 100.0);
  const auto ref = testgen::sine(5.0, 100.0, y.size());
  double xy = 0.0, xx = 0.0, yy = 0.0;
  for (std::size_t i = 50; i + 50 < y.size(); ++i) {
    xy += y[i] * ref[i];
    xx += y[i] * y[i];
    yy += ref[i] * ref[i];
  }
  CHECK(xy / std::sqrt(xx * yy) >= 0.99);
}

TEST_CASE("resampler preserves tone frequency within one DFT bin") {
  Rng rng(21);
  for (double fs_in : {200.0, 250.0, 500.0}) {
    for (int trial = 0; trial < 8; ++trial) {
      const double f = rng.uniform(1.0, 30.0);
      const auto y = resample(testgen::sine(f, fs_in, static_cast<std::size_t>(fs_in * 20)), fs_in, 100.0);
      const double bin = 100.0 / static_cast<double>(y.size());
      INFO("fs_in=" << fs_in << " f=" << f);
      CHECK(std::abs(testgen::dominant_frequency(y, 100.0) - f) <= bin);
    }
  }
}

TEST_CASE("min-max rescale") {
  CHECK(minmax_rescale(std::vector<double>{1, 3, 5}) == std::vector<double>{0, 0.5, 1});
  CHECK(minmax_rescale(std::vector<double>{7, 7, 7}) == std::vector<double>{0, 0, 0});
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    auto x = testgen::uniform_vector(rng, 2 + rng.index(200), -1e4, 1e4);
    const auto y = minmax_rescale(x);
    CHECK(*std::min_element(y.begin(), y.end()) == 0.0);
    CHECK(*std::max_element(y.begin(), y.end()) == 1.0);
  }
}

TEST_CASE("standard montage") {
  const auto& m = standard_montage();
  const auto& electrodes = standard_electrodes();
  CHECK(m.size() == 18);
  std::set<std::string_view> used;
  for (const auto& p : m) {
    CHECK(p.anode != p.cathode);
    CHECK(std::find(electrodes.begin(), electrodes.end(), p.anode) != electrodes.end());
    CHECK(std::find(electrodes.begin(), electrodes.end(), p.cathode) != electrodes.end());
    used.insert(p.anode);
    used.insert(p.cathode);
  }
  CHECK(used.size() == 19);
  CHECK(m[0].anode == "Fp1");
  CHECK(m[0].cathode == "F7");
  CHECK(m[17].anode == "Cz");
  CHECK(m[17].cathode == "Pz");
}

TEST_CASE("bipolar derivation") {
  std::vector<std::string> names;
  std::vector<std::vector<double>> signals;
  for (auto e : standard_electrodes()) {
    names.emplace_back(e);
    signals.emplace_back(4, e == "Fp1" ? 3.0 : e == "F7" ? 1.0 : 0.5);
  }
  const auto b = to_bipolar(names, signals, standard_montage());
  CHECK(b.size() == 18);
  CHECK(b[0] == std::vector<double>(4, 2.0));  // Fp1 - F7
  CHECK(b[17] == std::vector<double>(4, 0.0));  // Cz - Pz, identical signals

  names.erase(std::find(names.begin(), names.end(), "Cz"));
  signals.pop_back();
  try {
    to_bipolar(names, signals, standard_montage());
    FAIL("expected MissingElectrode");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingElectrode);
    CHECK(std::string(e.what()).find("Cz") != std::string::npos);
  }
}

TEST_CASE("segmenting") {
  auto rows = [](std::size_t n) { return std::vector<std::vector<double>>(18, std::vector<double>(n, 0.25)); };
  const auto hour = segment(rows(360000), "p", 3);
  CHECK(hour.size() == 12);
  for (std::size_t i = 0; i < hour.size(); ++i) {
    CHECK(hour[i].segment_index == static_cast<int>(i));
    CHECK(hour[i].hour_index == 3);
    CHECK(hour[i].valid());
  }
  CHECK(segment(rows(30000), "p", 0).size() == 1);
  CHECK(segment(rows(89999), "p", 0).size() == 2);
  CHECK(code_of([&] { segment(rows(29999), "p", 0); }) == ErrorCode::TooShort);

  // Window k starts at sample 30000 k.
  auto ramp = rows(60000);
  for (auto& r : ramp)
    for (std::size_t t = 0; t < r.size(); ++t) r[t] = static_cast<double>(t) / 60000.0;
  const auto two = segment(ramp, "p", 0);
  CHECK(two[1].data[0] == static_cast<float>(30000.0 / 60000.0));
}

TEST_CASE("preprocess a synthetic hour into 12 valid segments") {
  synth::SynthesisProfile profile;
  profile.outcome = io::Outcome::Poor;
  profile.seed = 4;
  const auto patient = synth::synthesize_patient(profile, "s1");
  const auto segments = preprocess(patient.recordings.at(0));
  CHECK(segments.size() == 12);
  for (const auto& s : segments) {
    CHECK(s.valid());
    CHECK(s.data.size() == 18 * 30000);
    CHECK(s.patient_id == "s1");
    CHECK(std::all_of(s.data.begin(), s.data.end(), [](float v) { return v >= -1.0f && v <= 1.0f; }));
  }
  const auto again = preprocess(patient.recordings.at(0));
  for (std::size_t i = 0; i < segments.size(); ++i) CHECK(again[i].data == segments[i].data);
}

TEST_CASE("preprocess names a missing electrode") {
  Rng rng(2);
  auto rec = testgen::random_recording(rng, 80000, 250.0);
  const std::size_t cz = rec.find_electrode("Cz");
  rec.electrodes.erase(rec.electrodes.begin() + static_cast<std::ptrdiff_t>(cz));
  rec.samples.erase(rec.samples.begin() + static_cast<std::ptrdiff_t>(cz * rec.n_samples),
                    rec.samples.begin() + static_cast<std::ptrdiff_t>((cz + 1) * rec.n_samples));
  try {
    preprocess(rec);
    FAIL("expected MissingElectrode");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingElectrode);
    CHECK(e.detail() == "Cz");
  }
}

TEST_CASE("preprocess output is bounded for random recordings") {
  Rng rng(31);
  for (int trial = 0; trial < 3; ++trial) {
    const double fs = std::array{200.0, 250.0, 500.0}[trial];
    const auto rec = testgen::random_recording(rng, static_cast<std::size_t>(fs * 310), fs);
    const auto segs = preprocess(rec);
    REQUIRE(segs.size() == 1);
    CHECK(segs[0].valid());
  }
}
