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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace valleyforge {

enum class ModalityKind { Text, SingleImage, MultiImage, Video };

std::string_view to_string(ModalityKind kind);
std::optional<ModalityKind> parse_modality_kind(std::string_view name);

// `count` is the number of images (MultiImage) or frames (Video); it is 0 for
// Text and 1 for SingleImage.
struct Modality {
  ModalityKind kind = ModalityKind::Text;
  int64_t count = 0;

  static Modality text() { return {ModalityKind::Text, 0}; }
  static Modality single_image() { return {ModalityKind::SingleImage, 1}; }
  static Modality multi_image(int64_t n) { return {ModalityKind::MultiImage, n}; }
  static Modality video(int64_t frames) { return {ModalityKind::Video, frames}; }

  // Number of image_dims entries a sample of this modality must carry.
  int64_t expected_dims() const;

  friend bool operator==(const Modality&, const Modality&) = default;
};

struct ImageDims {
  int64_t width = 0;
  int64_t height = 0;

  friend bool operator==(const ImageDims&, const ImageDims&) = default;
};

struct Sample {
  std::string id;
  Modality modality;
  std::vector<ImageDims> image_dims;
  int64_t text_tokens = 0;
  int quality_tier = 1;
  bool is_cot = false;
  std::optional<std::string> payload_path;

  friend bool operator==(const Sample&, const Sample&) = default;
};

enum class ViolationCode {
  EmptyId,
  InvalidModalityCount,
  DimCountMismatch,
  NonPositiveDimension,
  NegativeTextTokens,
  InvalidQualityTier,
};

std::string_view to_string(ViolationCode code);

struct Violation {
  ViolationCode code;
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

// Reports every invariant violation of `sample`; an empty result means valid.
std::vector<Violation> validate_sample(const Sample& sample);

struct VisionConfig {
  int64_t base_resolution = 384;
  // Tokens per side emitted by the encoder for one base tile. 27 makes a
  // downsampled tile 14x14 = 196 tokens.
  int64_t patch_grid = 27;
  int64_t downsample = 2;
  int64_t max_slices = 9;
  bool use_thumbnail = true;
  int64_t tile_overhead_tokens = 0;
  int64_t sample_overhead_tokens = 0;

  friend bool operator==(const VisionConfig&, const VisionConfig&) = default;
};

// Throws Error(InvalidArgument) listing every broken field.
void validate(const VisionConfig& cfg);

struct EagleConfig {
  bool enabled = false;
  int64_t patch_size = 14;
  int64_t spatial_merge = 2;
  // Pixel-area cap applied at inference; nullopt means uncapped.
  std::optional<int64_t> max_pixels_infer;

  friend bool operator==(const EagleConfig&, const EagleConfig&) = default;
};

void validate(const EagleConfig& cfg);

// Fixture-only stand-in for a tokenizer: counts whitespace-separated words.
int64_t whitespace_token_count(std::string_view text);

// Row-major dense boolean matrix, used for token keep-masks and dense
// attention masks.
class BoolMatrix {
 public:
  BoolMatrix() = default;
  BoolMatrix(size_t rows, size_t cols, bool value = false)
      : rows_(rows), cols_(cols), data_(rows * cols, value ? 1 : 0) {}

  size_t rows() const noexcept { return rows_; }
  size_t cols() const noexcept { return cols_; }

  bool operator()(size_t r, size_t c) const { return data_[r * cols_ + c] != 0; }
  void set(size_t r, size_t c, bool v) { data_[r * cols_ + c] = v ? 1 : 0; }

  size_t count() const;

  friend bool operator==(const BoolMatrix&, const BoolMatrix&) = default;

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<uint8_t> data_;
};

}  // namespace valleyforge
