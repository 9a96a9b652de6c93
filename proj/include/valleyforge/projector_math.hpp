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
#include <string>
#include <vector>

#include "valleyforge/core_model.hpp"

namespace valleyforge {

struct GridShape {
  int64_t rows = 0;
  int64_t cols = 0;

  int64_t tokens() const { return rows * cols; }
  friend bool operator==(const GridShape&, const GridShape&) = default;
};

struct PixelShuffleOut {
  GridShape grid;
  int64_t channel_multiplier = 1;

  friend bool operator==(const PixelShuffleOut&, const PixelShuffleOut&) = default;
};

// Spatial grid after a stride x stride convolution with ceil padding.
GridShape conv_out_grid(int64_t rows, int64_t cols, int64_t stride);

// Space-to-channel merge of ratio x ratio blocks. Throws IndivisibleGrid when
// either side is not a multiple of ratio; callers pad explicitly.
PixelShuffleOut pixelshuffle_out(int64_t rows, int64_t cols, int64_t ratio);

// Visual-vocabulary hidden size: vocab_size / 5 rounded half-up.
int64_t visual_vocab_dim(int64_t vocab_size);

enum class ProjectorVariant { PixelShuffle, ConvAdapter };

struct ProjectorSpec {
  ProjectorVariant variant = ProjectorVariant::ConvAdapter;
  int64_t factor = 2;  // PixelShuffle ratio or ConvAdapter stride
  int64_t d_vis = 1152;
  int64_t d_h = 9 * 3584;
  int64_t d_llm = 3584;
  // Softmax over the visual vocabulary adds no parameters.
  bool softmax_vocab = true;

  friend bool operator==(const ProjectorSpec&, const ProjectorSpec&) = default;
};

void validate(const ProjectorSpec& spec);

struct TensorShape {
  std::string name;
  std::vector<int64_t> dims;

  int64_t elements() const;
};

// Per-tensor composition (weights and biases; no normalization layers).
//   ConvAdapter : conv.weight [d_vis, d_vis, s, s], conv.bias [d_vis],
//                 mlp1 [d_h, d_vis] + [d_h], mlp2 [d_llm, d_h] + [d_llm]
//   PixelShuffle: mlp1 [d_h, r*r*d_vis] + [d_h], mlp2 [d_llm, d_h] + [d_llm]
std::vector<TensorShape> projector_tensors(const ProjectorSpec& spec);

// Closed-form total of projector_tensors(spec).
int64_t projector_param_count(const ProjectorSpec& spec);

// Learning rate for an MLP widened by a factor n: base_lr * sqrt(n).
double lr_scale(double base_lr, double n);

struct EagleBudget {
  int64_t train_cap = 0;
  int64_t infer_tokens = 0;
};

// Tokens from the parallel encoder at native resolution, after an
// aspect-preserving downscale under max_pixels_infer.
int64_t eagle_infer_tokens(int64_t width, int64_t height, const EagleConfig& eagle);

// Training-time cap on the parallel encoder: the tiling branch's token count.
int64_t eagle_train_cap(int64_t tiling_tokens);

}  // namespace valleyforge
