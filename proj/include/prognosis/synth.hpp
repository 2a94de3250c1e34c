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

// Synthetic labeled EEG for desk-scale runs.
//
// Good outcome: stationary alpha-band oscillation plus 1/f^a background.
// Poor outcome: burst suppression, a 1/f^a background whose amplitude is
// scaled by suppression_amplitude in every other burst_period_s window.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "prognosis/eeg_io.hpp"

namespace prognosis::synth {

struct SynthesisProfile {
  io::Outcome outcome = io::Outcome::Good;
  std::uint64_t seed = 0;
  int n_hours = 1;
  double fs_hz = 250.0;
  double burst_period_s = 6.0;
  double suppression_amplitude = 0.05;
  std::pair<double, double> oscillation_band_hz{8.0, 12.0};
  double noise_exponent = 1.0;
  /// Recording length; one hour unless shortened for tests.
  double duration_s = 3600.0;

  /// Throws InvalidProfile.
  void validate() const;
};

struct SynthesizedPatient {
  io::PatientMeta meta;
  std::vector<io::RawRecording> recordings;
};

/// True when time t (seconds from the start of an hour) falls in a
/// suppression window of a Poor profile.
bool in_suppression(const SynthesisProfile& profile, double t_s);

/// Pure function of (profile, patient_id). Recordings cover the 19 standard
/// electrodes; CPC is drawn from {1,2} (Good) or {3,4,5} (Poor).
SynthesizedPatient synthesize_patient(const SynthesisProfile& profile,
                                      const std::string& patient_id = "synthetic");

/// Unit-RMS noise with power spectral density proportional to 1/f^exponent
/// (DC removed), shaped in the frequency domain.
std::vector<double> colored_noise(std::size_t n, double exponent, std::uint64_t seed);

}  // namespace prognosis::synth
