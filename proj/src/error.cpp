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

#include "prognosis/error.hpp"

namespace prognosis {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::SampleCountMismatch: return "SampleCountMismatch";
    case ErrorCode::NonFiniteSample: return "NonFiniteSample";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::InvalidProfile: return "InvalidProfile";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::LabelInconsistent: return "LabelInconsistent";
    case ErrorCode::InvalidBand: return "InvalidBand";
    case ErrorCode::UnstableDesign: return "UnstableDesign";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::BadRate: return "BadRate";
    case ErrorCode::IrreducibleRatio: return "IrreducibleRatio";
    case ErrorCode::MissingElectrode: return "MissingElectrode";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::NotScalarLoss: return "NotScalarLoss";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::CheckpointTruncated: return "CheckpointTruncated";
    case ErrorCode::CheckpointCorrupt: return "CheckpointCorrupt";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::TooFewPatients: return "TooFewPatients";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::SingleClassDataset: return "SingleClassDataset";
    case ErrorCode::NoUsableRecording: return "NoUsableRecording";
    case ErrorCode::SingleClassLabels: return "SingleClassLabels";
    case ErrorCode::EmptyInput: return "EmptyInput";
  }
  return "Unknown";
}

}  // namespace prognosis
