// Copyright 2026 The ValleyForge Authors
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

#include "valleyforge/error.hpp"

namespace valleyforge {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IndivisibleGrid: return "IndivisibleGrid";
    case ErrorCode::OversizedSample: return "OversizedSample";
    case ErrorCode::DenseTooLarge: return "DenseTooLarge";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::EmptyPool: return "EmptyPool";
    case ErrorCode::StructureViolation: return "StructureViolation";
    case ErrorCode::MissingResponse: return "MissingResponse";
    case ErrorCode::CorpusTooSmall: return "CorpusTooSmall";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::Config: return "Config";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

OversizedSampleError::OversizedSampleError(std::string id, int64_t length,
                                           int64_t max_len)
    : Error(ErrorCode::OversizedSample,
            "sample '" + id + "' has length " + std::to_string(length) +
                " > max_len " + std::to_string(max_len)),
      id_(std::move(id)) {}

namespace {
std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ", ";
    out += ids[i];
  }
  return out;
}
}  // namespace

StructureViolationError::StructureViolationError(std::vector<std::string> ids)
    : Error(ErrorCode::StructureViolation,
            "CoT responses missing required sections: " + join_ids(ids)),
      ids_(std::move(ids)) {}

MissingResponseError::MissingResponseError(std::string qid, int rotation)
    : Error(ErrorCode::MissingResponse,
            "no response for question '" + qid + "' rotation " +
                std::to_string(rotation)),
      qid_(std::move(qid)),
      rotation_(rotation) {}

}  // namespace valleyforge
