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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace prognosis {

enum class ErrorCode {
  // eeg_io
  MissingFile,
  MalformedHeader,
  SampleCountMismatch,
  NonFiniteSample,
  IoFailure,
  InvalidProfile,
  EmptyDataset,
  LabelInconsistent,
  // dsp
  InvalidBand,
  UnstableDesign,
  NonFiniteInput,
  BadRate,
  IrreducibleRatio,
  MissingElectrode,
  TooShort,
  // autodiff / model
  ShapeMismatch,
  NonFiniteValue,
  NotScalarLoss,
  InvalidConfig,
  CheckpointTruncated,
  CheckpointCorrupt,
  // train
  EmptyBatch,
  TooFewPatients,
  EmptySplit,
  SingleClassDataset,
  // eval
  NoUsableRecording,
  SingleClassLabels,
  EmptyInput,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library. The code identifies the failure kind;
/// the message carries the context (file, patient, electrode, dimension).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace prognosis
