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
#include <vector>

#include "valleyforge/core_model.hpp"

namespace valleyforge {

struct Grid {
  int64_t cols = 1;
  int64_t rows = 1;

  int64_t tiles() const { return cols * rows; }
  Grid transposed() const { return {rows, cols}; }

  friend bool operator==(const Grid&, const Grid&) = default;
};

struct TileRect {
  int64_t x = 0;
  int64_t y = 0;
  int64_t w = 0;
  int64_t h = 0;

  friend bool operator==(const TileRect&, const TileRect&) = default;
};

struct TilingPlan {
  Grid grid;
  int64_t resized_width = 0;
  int64_t resized_height = 0;
  std::vector<TileRect> tile_rects;  // row-major
  bool include_thumbnail = false;
  int64_t tokens_per_tile = 0;
  int64_t total_vision_tokens = 0;

  int64_t num_tiles() const {
    return static_cast<int64_t>(tile_rects.size()) + (include_thumbnail ? 1 : 0);
  }

  friend bool operator==(const TilingPlan&, const TilingPlan&) = default;
};

// All (cols, rows) with cols*rows <= max_slices, ordered by tile count and
// then by cols.
std::vector<Grid> candidate_grids(int64_t max_slices);

// Best-ratio grid for a width x height image. Distance between aspects is
// |log(grid) - log(image)|, compared exactly in integer arithmetic. On a tie
// the larger grid wins only while the image area exceeds half the larger
// grid's canvas area.
Grid select_grid(int64_t width, int64_t height, const VisionConfig& cfg);

// Post-downsample tokens per base tile: ceil(patch_grid / downsample)^2.
int64_t tokens_per_tile(const VisionConfig& cfg);

// One plan per image/frame; single images are tiled, everything else is a
// single untiled base tile. Text samples yield no plans.
std::vector<TilingPlan> plan_tiling(const Sample& sample, const VisionConfig& cfg);

// The tiled plan used for a single image of the given size.
TilingPlan plan_single_image(int64_t width, int64_t height, const VisionConfig& cfg);

// The 1x1 plan used for multi-image and video frames.
TilingPlan plan_untiled(const VisionConfig& cfg);

struct LetterboxTokens {
  int64_t count = 0;
  BoolMatrix kept;  // side ceil(patch_grid / downsample), row-major
};

// Token keep-mask for an untiled frame letterboxed into the base square.
//
// The image is scaled so its long side spans the base square and centred
// along the short side. An encoder patch counts as content when its centre
// falls inside the content span (closed interval); the patch at the canvas
// centre is always content. A downsampled token is dropped only when every
// patch it aggregates is padding.
LetterboxTokens effective_tokens_letterboxed(int64_t width, int64_t height,
                                             const VisionConfig& cfg);

}  // namespace valleyforge
