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

#include "valleyforge/core_model.hpp"

#include <algorithm>
#include <cctype>

#include "valleyforge/error.hpp"

namespace valleyforge {

std::string_view to_string(ModalityKind kind) {
  switch (kind) {
    case ModalityKind::Text: return "text";
    case ModalityKind::SingleImage: return "single_image";
    case ModalityKind::MultiImage: return "multi_image";
    case ModalityKind::Video: return "video";
  }
  return "text";
}

std::optional<ModalityKind> parse_modality_kind(std::string_view name) {
  if (name == "text") return ModalityKind::Text;
  if (name == "single_image") return ModalityKind::SingleImage;
  if (name == "multi_image") return ModalityKind::MultiImage;
  if (name == "video") return ModalityKind::Video;
  return std::nullopt;
}

int64_t Modality::expected_dims() const {
  switch (kind) {
    case ModalityKind::Text: return 0;
    case ModalityKind::SingleImage: return 1;
    case ModalityKind::MultiImage:
    case ModalityKind::Video: return count;
  }
  return 0;
}

std::string_view to_string(ViolationCode code) {
  switch (code) {
    case ViolationCode::EmptyId: return "EmptyId";
    case ViolationCode::InvalidModalityCount: return "InvalidModalityCount";
    case ViolationCode::DimCountMismatch: return "DimCountMismatch";
    case ViolationCode::NonPositiveDimension: return "NonPositiveDimension";
    case ViolationCode::NegativeTextTokens: return "NegativeTextTokens";
    case ViolationCode::InvalidQualityTier: return "InvalidQualityTier";
  }
  return "Unknown";
}

std::vector<Violation> validate_sample(const Sample& sample) {
  std::vector<Violation> out;
  if (sample.id.empty()) {
    out.push_back({ViolationCode::EmptyId, "id must be non-empty"});
  }

  const auto& m = sample.modality;
  bool count_ok = true;
  switch (m.kind) {
    case ModalityKind::Text: count_ok = m.count == 0; break;
    case ModalityKind::SingleImage: count_ok = m.count == 1; break;
    case ModalityKind::MultiImage: count_ok = m.count >= 2; break;
    case ModalityKind::Video: count_ok = m.count >= 1; break;
  }
  if (!count_ok) {
    out.push_back({ViolationCode::InvalidModalityCount,
                   std::string(to_string(m.kind)) + " count " +
                       std::to_string(m.count) + " is out of range"});
  }

  const auto expected = m.expected_dims();
  if (static_cast<int64_t>(sample.image_dims.size()) != expected) {
    out.push_back({ViolationCode::DimCountMismatch,
                   "expected " + std::to_string(expected) +
                       " image_dims entries, got " +
                       std::to_string(sample.image_dims.size())});
  }

  for (size_t i = 0; i < sample.image_dims.size(); ++i) {
    const auto& d = sample.image_dims[i];
    if (d.width < 1 || d.height < 1) {
      out.push_back({ViolationCode::NonPositiveDimension,
                     "image_dims[" + std::to_string(i) + "] = " +
                         std::to_string(d.width) + "x" +
                         std::to_string(d.height)});
    }
  }

  if (sample.text_tokens < 0) {
    out.push_back({ViolationCode::NegativeTextTokens,
                   "text_tokens must be >= 0"});
  }
  if (sample.quality_tier != 1 && sample.quality_tier != 2) {
    out.push_back({ViolationCode::InvalidQualityTier,
                   "quality_tier must be 1 or 2, got " +
                       std::to_string(sample.quality_tier)});
  }
  return out;
}

void validate(const VisionConfig& cfg) {
  std::string problems;
  auto check = [&](bool ok, const char* what) {
    if (!ok) problems += std::string(problems.empty() ? "" : "; ") + what;
  };
  check(cfg.base_resolution >= 1, "base_resolution must be >= 1");
  check(cfg.patch_grid >= 1, "patch_grid must be >= 1");
  check(cfg.downsample >= 1, "downsample must be >= 1");
  check(cfg.max_slices >= 1, "max_slices must be >= 1");
  check(cfg.tile_overhead_tokens >= 0, "tile_overhead_tokens must be >= 0");
  check(cfg.sample_overhead_tokens >= 0, "sample_overhead_tokens must be >= 0");
  if (!problems.empty()) throw Error(ErrorCode::InvalidArgument, problems);
}

void validate(const EagleConfig& cfg) {
  std::string problems;
  auto check = [&](bool ok, const char* what) {
    if (!ok) problems += std::string(problems.empty() ? "" : "; ") + what;
  };
  check(cfg.patch_size >= 1, "patch_size must be >= 1");
  check(cfg.spatial_merge >= 1, "spatial_merge must be >= 1");
  check(!cfg.max_pixels_infer || *cfg.max_pixels_infer >= 1,
        "max_pixels_infer must be >= 1");
  if (!problems.empty()) throw Error(ErrorCode::InvalidArgument, problems);
}

int64_t whitespace_token_count(std::string_view text) {
  int64_t n = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

size_t BoolMatrix::count() const {
  return static_cast<size_t>(std::count(data_.begin(), data_.end(), 1));
}

}  // namespace valleyforge
