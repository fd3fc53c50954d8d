// Copyright 2026 The RL-RBN Authors.
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

#include "core/error.hpp"

namespace rlrbn {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kNumericDomain: return "numeric_domain";
    case ErrorCode::kInsufficientIdentities: return "insufficient_identities";
    case ErrorCode::kTrainingDiverged: return "training_diverged";
    case ErrorCode::kDegenerateSer: return "degenerate_ser";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kMissingArtifact: return "missing_artifact";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kInternal: return "internal";
  }
  return "unknown";
}

}  // namespace rlrbn
