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

#include "lrasr/errors.hpp"

namespace lrasr {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument:
      return "InvalidArgument";
    case ErrorKind::kParse:
      return "ParseError";
    case ErrorKind::kIo:
      return "IOFailure";
    case ErrorKind::kEmptyReference:
      return "EmptyReference";
    case ErrorKind::kAllReferencesEmpty:
      return "AllReferencesEmpty";
    case ErrorKind::kInfeasibleSplit:
      return "InfeasibleSplit";
    case ErrorKind::kSegmentTooLong:
      return "SegmentTooLong";
    case ErrorKind::kBadBoundaries:
      return "BadBoundaries";
    case ErrorKind::kEmptyAudio:
      return "EmptyAudio";
    case ErrorKind::kShapeMismatch:
      return "ShapeMismatch";
    case ErrorKind::kSequenceTooLong:
      return "SequenceTooLong";
    case ErrorKind::kAllPositionsMasked:
      return "AllPositionsMasked";
    case ErrorKind::kNonFiniteLoss:
      return "NonFiniteLoss";
    case ErrorKind::kExhaustedNamespace:
      return "ExhaustedNamespace";
    case ErrorKind::kAlphabetMismatch:
      return "AlphabetMismatch";
    case ErrorKind::kMissingIntermediate:
      return "MissingIntermediate";
    case ErrorKind::kEmptyCorpus:
      return "EmptyCorpus";
  }
  return "Unknown";
}

}  // namespace lrasr
