/*
 * Copyright 2026 The lrasr Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lrasr {

enum class ErrorKind {
  kInvalidArgument,
  kParse,
  kIo,
  kEmptyReference,
  kAllReferencesEmpty,
  kInfeasibleSplit,
  kSegmentTooLong,
  kBadBoundaries,
  kEmptyAudio,
  kShapeMismatch,
  kSequenceTooLong,
  kAllPositionsMasked,
  kNonFiniteLoss,
  kExhaustedNamespace,
  kAlphabetMismatch,
  kMissingIntermediate,
  kEmptyCorpus,
};

std::string_view ErrorKindName(ErrorKind kind);

// Every domain failure in the library is reported through this type; the
// kind lets callers (and the CLI exit-code mapping) branch without parsing
// messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(ErrorKindName(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace lrasr
