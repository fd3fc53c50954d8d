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

#ifndef RLRBN_CORE_ERROR_HPP_
#define RLRBN_CORE_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace rlrbn {

// Numeric values are mirrored by rlrbn_status in the public C header.
enum class ErrorCode : int {
  kConfig = 1,
  kNumericDomain = 2,
  kInsufficientIdentities = 3,
  kTrainingDiverged = 4,
  kDegenerateSer = 5,
  kIo = 6,
  kMissingArtifact = 7,
  kInvalidArgument = 8,
  kInternal = 99,
};

const char* ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& m) : Error(ErrorCode::kConfig, m) {}
};

class NumericDomainError : public Error {
 public:
  explicit NumericDomainError(const std::string& m)
      : Error(ErrorCode::kNumericDomain, m) {}
};

class InsufficientIdentitiesError : public Error {
 public:
  explicit InsufficientIdentitiesError(const std::string& m)
      : Error(ErrorCode::kInsufficientIdentities, m) {}
};

// Carries the epoch (or iteration) at which a non-finite loss appeared.
class TrainingDivergedError : public Error {
 public:
  TrainingDivergedError(const std::string& m, long long at)
      : Error(ErrorCode::kTrainingDiverged, m), at_(at) {}
  long long at() const noexcept { return at_; }

 private:
  long long at_;
};

class DegenerateSerError : public Error {
 public:
  explicit DegenerateSerError(const std::string& m)
      : Error(ErrorCode::kDegenerateSer, m) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& m) : Error(ErrorCode::kIo, m) {}
};

class MissingArtifactError : public Error {
 public:
  explicit MissingArtifactError(const std::string& m)
      : Error(ErrorCode::kMissingArtifact, m) {}
};

}  // namespace rlrbn

#endif  // RLRBN_CORE_ERROR_HPP_
