// Copyright 2026 The CTA Authors. All Rights Reserved.
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

#include "cta/error.hpp"

namespace cta {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kShapeMismatch: return "shape mismatch";
    case ErrorCode::kOutOfRange: return "out of range";
    case ErrorCode::kNonFinite: return "non-finite value";
    case ErrorCode::kComposition: return "layer composition";
    case ErrorCode::kMissingGradient: return "missing gradient";
    case ErrorCode::kIo: return "i/o";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kVersionMismatch: return "version mismatch";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kNotFound: return "not found";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace cta
