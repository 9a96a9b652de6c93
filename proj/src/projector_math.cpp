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

#include "valleyforge/projector_math.hpp"

#include <algorithm>
#include <cmath>

#include "valleyforge/error.hpp"

namespace valleyforge {

GridShape conv_out_grid(int64_t rows, int64_t cols, int64_t stride) {
  if (rows < 1 || cols < 1 || stride < 1) {
    throw Error(ErrorCode::InvalidArgument,
                "conv_out_grid requires rows, cols, stride >= 1");
  }
  return {(rows + stride - 1) / stride, (cols + stride - 1) / stride};
}

PixelShuffleOut pixelshuffle_out(int64_t rows, int64_t cols, int64_t ratio) {
  if (rows < 1 || cols < 1 || ratio < 1) {
    throw Error(ErrorCode::InvalidArgument,
                "pixelshuffle_out requires rows, cols, ratio >= 1");
  }
  if (rows % ratio != 0 || cols % ratio != 0) {
    throw Error(ErrorCode::IndivisibleGrid,
                "grid " + std::to_string(rows) + "x" + std::to_string(cols) +
                    " is not divisible by ratio " + std::to_string(ratio));
  }
  return {{rows / ratio, cols / ratio}, ratio * ratio};
}

int64_t visual_vocab_dim(int64_t vocab_size) {
  if (vocab_size < 5) {
    throw Error(ErrorCode::InvalidArgument, "vocab_size must be >= 5");
  }
  return (2 * vocab_size + 5) / 10;
}

void validate(const ProjectorSpec& spec) {
  if (spec.factor < 1 || spec.d_vis < 1 || spec.d_h < 1 || spec.d_llm < 1) {
    throw Error(ErrorCode::InvalidArgument,
                "projector dims and ratio/stride must be >= 1");
  }
}

int64_t TensorShape::elements() const {
  int64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::vector<TensorShape> projector_tensors(const ProjectorSpec& spec) {
  validate(spec);
  const int64_t f = spec.factor;
  std::vector<TensorShape> t;
  if (spec.variant == ProjectorVariant::ConvAdapter) {
    t.push_back({"conv.weight", {spec.d_vis, spec.d_vis, f, f}});
    t.push_back({"conv.bias", {spec.d_vis}});
    t.push_back({"mlp1.weight", {spec.d_h, spec.d_vis}});
  } else {
    t.push_back({"mlp1.weight", {spec.d_h, f * f * spec.d_vis}});
  }
  t.push_back({"mlp1.bias", {spec.d_h}});
  t.push_back({"mlp2.weight", {spec.d_llm, spec.d_h}});
  t.push_back({"mlp2.bias", {spec.d_llm}});
  return t;
}

int64_t projector_param_count(const ProjectorSpec& spec) {
  validate(spec);
  const int64_t f2 = spec.factor * spec.factor;
  const int64_t head = spec.d_h * spec.d_llm + spec.d_h + spec.d_llm;
  if (spec.variant == ProjectorVariant::ConvAdapter) {
    return f2 * spec.d_vis * spec.d_vis + spec.d_vis + spec.d_vis * spec.d_h + head;
  }
  return f2 * spec.d_vis * spec.d_h + head;
}

double lr_scale(double base_lr, double n) {
  if (!(base_lr > 0.0) || !(n > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "lr_scale requires base_lr > 0 and n > 0");
  }
  return base_lr * std::sqrt(n);
}

int64_t eagle_infer_tokens(int64_t width, int64_t height, const EagleConfig& eagle) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::InvalidArgument, "image dimensions must be >= 1");
  }
  validate(eagle);
  int64_t w = width;
  int64_t h = height;
  if (eagle.max_pixels_infer) {
    const long double area = static_cast<long double>(w) * static_cast<long double>(h);
    const long double cap = static_cast<long double>(*eagle.max_pixels_infer);
    if (area > cap) {
      const long double scale = std::sqrt(cap / area);
      w = std::max<int64_t>(1, static_cast<int64_t>(std::floor(w * scale)));
      h = std::max<int64_t>(1, static_cast<int64_t>(std::floor(h * scale)));
    }
  }
  const int64_t patches = (w / eagle.patch_size) * (h / eagle.patch_size);
  const int64_t merge = eagle.spatial_merge * eagle.spatial_merge;
  return std::max<int64_t>(1, patches / merge);
}

int64_t eagle_train_cap(int64_t tiling_tokens) {
  if (tiling_tokens < 0) {
    throw Error(ErrorCode::InvalidArgument, "tiling_tokens must be >= 0");
  }
  return tiling_tokens;
}

}  // namespace valleyforge
