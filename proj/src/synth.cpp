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

#include "prognosis/synth.hpp"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>

#include "prognosis/dsp.hpp"
#include "prognosis/error.hpp"
#include "prognosis/rng.hpp"

namespace prognosis::synth {

namespace {

// Good-outcome amplitudes (microvolts).
constexpr double kAlphaAmplitudeLo = 12.0;
constexpr double kAlphaAmplitudeHi = 20.0;
constexpr int kAlphaComponents = 3;
constexpr double kGoodNoiseRms = 6.0;
// Poor-outcome burst amplitude (RMS, microvolts).
constexpr double kBurstRms = 40.0;
// Per-electrode gain jitter.
constexpr double kGainLo = 0.8;
constexpr double kGainHi = 1.2;

// The FFTW planner is not thread-safe; execution with distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};
struct PlanDestroy {
  void operator()(fftw_plan p) const noexcept {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p);
  }
};
using PlanPtr = std::unique_ptr<std::remove_pointer_t<fftw_plan>, PlanDestroy>;

class NoiseShaper {
 public:
  NoiseShaper(std::size_t n, double exponent) : n_(n), exponent_(exponent) {
    real_.reset(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
    spectrum_.reset(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1))));
    std::lock_guard lock(planner_mutex());
    // FFTW_ESTIMATE keeps the plan, and therefore the output bits, independent
    // of timing measurements.
    forward_.reset(fftw_plan_dft_r2c_1d(static_cast<int>(n), real_.get(), spectrum_.get(), FFTW_ESTIMATE));
    inverse_.reset(fftw_plan_dft_c2r_1d(static_cast<int>(n), spectrum_.get(), real_.get(), FFTW_ESTIMATE));
  }

  std::vector<double> generate(std::uint64_t seed) {
    Rng rng(seed);
    for (std::size_t i = 0; i < n_; ++i) real_.get()[i] = rng.normal();
    fftw_execute(forward_.get());
    fftw_complex* bins = spectrum_.get();
    bins[0][0] = bins[0][1] = 0.0;
    for (std::size_t k = 1; k <= n_ / 2; ++k) {
      const double gain = std::pow(static_cast<double>(k), -exponent_ / 2.0);
      bins[k][0] *= gain;
      bins[k][1] *= gain;
    }
    fftw_execute(inverse_.get());
    std::vector<double> out(real_.get(), real_.get() + n_);
    double power = 0.0;
    for (double v : out) power += v * v;
    const double rms = std::sqrt(power / static_cast<double>(n_));
    if (rms > 0.0) {
      for (double& v : out) v /= rms;
    }
    return out;
  }

 private:
  std::size_t n_;
  double exponent_;
  std::unique_ptr<double, FftwFree> real_;
  std::unique_ptr<fftw_complex, FftwFree> spectrum_;
  PlanPtr forward_;
  PlanPtr inverse_;
};

}  // namespace

void SynthesisProfile::validate() const {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::InvalidProfile, why); };
  if (n_hours < 1) fail("n_hours must be >= 1");
  if (!(fs_hz > 70.0) || !std::isfinite(fs_hz)) fail("fs_hz must exceed 70 Hz");
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) fail("duration_s must be positive");
  if (!(burst_period_s > 0.0)) fail("burst_period_s must be positive");
  if (!(suppression_amplitude > 0.0) || suppression_amplitude > 1.0) {
    fail("suppression_amplitude must be in (0, 1]");
  }
  const auto [lo, hi] = oscillation_band_hz;
  if (!(lo > 0.0) || !(lo < hi) || !(hi < fs_hz / 2.0)) fail("oscillation band must satisfy 0 < lo < hi < fs/2");
  if (!(noise_exponent >= 0.0) || !std::isfinite(noise_exponent)) fail("noise_exponent must be >= 0");
  if (static_cast<std::size_t>(std::llround(duration_s * fs_hz)) < 2) fail("recording too short");
}

bool in_suppression(const SynthesisProfile& profile, double t_s) {
  if (profile.outcome != io::Outcome::Poor) return false;
  const auto window = static_cast<long long>(std::floor(t_s / profile.burst_period_s));
  return window % 2 == 1;
}

std::vector<double> colored_noise(std::size_t n, double exponent, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorCode::InvalidProfile, "noise length must be >= 2");
  NoiseShaper shaper(n, exponent);
  return shaper.generate(seed);
}

SynthesizedPatient synthesize_patient(const SynthesisProfile& profile, const std::string& patient_id) {
  profile.validate();
  const auto& electrodes = dsp::standard_electrodes();
  const std::size_t n = static_cast<std::size_t>(std::llround(profile.duration_s * profile.fs_hz));

  SynthesizedPatient out;
  Rng label_rng(derive_seed(profile.seed, 0xC9C));
  out.meta.patient_id = patient_id;
  out.meta.outcome = profile.outcome;
  out.meta.cpc = profile.outcome == io::Outcome::Good ? 1 + static_cast<int>(label_rng.index(2))
                                                      : 3 + static_cast<int>(label_rng.index(3));
  out.meta.hospital = "SYN";

  // Envelope is shared by all electrodes of an hour.
  std::vector<double> envelope(n, 1.0);
  if (profile.outcome == io::Outcome::Poor) {
    for (std::size_t i = 0; i < n; ++i) {
      if (in_suppression(profile, static_cast<double>(i) / profile.fs_hz)) {
        envelope[i] = profile.suppression_amplitude;
      }
    }
  }

  NoiseShaper shaper(n, profile.noise_exponent);
  for (int hour = 0; hour < profile.n_hours; ++hour) {
    io::RawRecording rec;
    rec.patient_id = patient_id;
    rec.hour_index = hour;
    rec.fs_hz = profile.fs_hz;
    rec.n_samples = n;
    rec.electrodes.assign(electrodes.begin(), electrodes.end());
    rec.samples.resize(electrodes.size() * n);

    for (std::size_t e = 0; e < electrodes.size(); ++e) {
      const std::uint64_t stream = static_cast<std::uint64_t>(hour) * 64 + e;
      Rng rng(derive_seed(profile.seed, 2 * stream + 1));
      const double gain = rng.uniform(kGainLo, kGainHi);
      const std::vector<double> noise = shaper.generate(derive_seed(profile.seed, 2 * stream + 2));
      auto dst = rec.channel(e);

      if (profile.outcome == io::Outcome::Good) {
        double freq[kAlphaComponents], phase[kAlphaComponents], amp[kAlphaComponents];
        for (int c = 0; c < kAlphaComponents; ++c) {
          freq[c] = rng.uniform(profile.oscillation_band_hz.first, profile.oscillation_band_hz.second);
          phase[c] = rng.uniform(0.0, 2.0 * std::numbers::pi);
          amp[c] = rng.uniform(kAlphaAmplitudeLo, kAlphaAmplitudeHi);
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double t = static_cast<double>(i) / profile.fs_hz;
          double v = kGoodNoiseRms * noise[i];
          for (int c = 0; c < kAlphaComponents; ++c) {
            v += amp[c] * std::sin(2.0 * std::numbers::pi * freq[c] * t + phase[c]);
          }
          dst[i] = static_cast<float>(gain * v);
        }
      } else {
        for (std::size_t i = 0; i < n; ++i) {
          dst[i] = static_cast<float>(gain * kBurstRms * envelope[i] * noise[i]);
        }
      }
    }
    out.recordings.push_back(std::move(rec));
  }
  return out;
}

}  // namespace prognosis::synth
