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

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace valleyforge {

enum class ErrorCode {
  InvalidArgument,
  IndivisibleGrid,
  OversizedSample,
  DenseTooLarge,
  EmptyCorpus,
  EmptyPool,
  StructureViolation,
  MissingResponse,
  CorpusTooSmall,
  Parse,
  Config,
  Io,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class OversizedSampleError : public Error {
 public:
  OversizedSampleError(std::string id, int64_t length, int64_t max_len);
  const std::string& sample_id() const noexcept { return id_; }

 private:
  std::string id_;
};

class StructureViolationError : public Error {
 public:
  explicit StructureViolationError(std::vector<std::string> ids);
  const std::vector<std::string>& ids() const noexcept { return ids_; }

 private:
  std::vector<std::string> ids_;
};

class MissingResponseError : public Error {
 public:
  MissingResponseError(std::string qid, int rotation);
  const std::string& qid() const noexcept { return qid_; }
  int rotation() const noexcept { return rotation_; }

 private:
  std::string qid_;
  int rotation_;
};

}  // namespace valleyforge
