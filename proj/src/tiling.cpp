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

#include "valleyforge/tiling.hpp"

#include <algorithm>

#include "valleyforge/error.hpp"

namespace valleyforge {

namespace {

using u128 = unsigned __int128;

int64_t ceil_div(int64_t a, int64_t b) { return (a + b - 1) / b; }

// |log(c/r) - log(w/h)| = log(hi/lo) with hi = max(c*h, r*w), lo = min(...).
struct AspectDistance {
  u128 hi;
  u128 lo;
};

AspectDistance aspect_distance(const Grid& g, int64_t width, int64_t height) {
  const u128 a = static_cast<u128>(g.cols) * static_cast<u128>(height);
  const u128 b = static_cast<u128>(g.rows) * static_cast<u128>(width);
  return a >= b ? AspectDistance{a, b} : AspectDistance{b, a};
}

// Sign of x.hi/x.lo - y.hi/y.lo. Each operand is a product of two int64
// values, so the cross products are formed in 256 bits.
int compare(const AspectDistance& x, const AspectDistance& y) {
  auto mul = [](u128 a, u128 b, u128& hi, u128& lo) {
    const u128 mask = (static_cast<u128>(1) << 64) - 1;
    const u128 a0 = a & mask, a1 = a >> 64, b0 = b & mask, b1 = b >> 64;
    const u128 p00 = a0 * b0, p01 = a0 * b1, p10 = a1 * b0, p11 = a1 * b1;
    const u128 mid = (p00 >> 64) + (p01 & mask) + (p10 & mask);
    lo = (p00 & mask) | (mid << 64);
    hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
  };
  u128 lh, ll, rh, rl;
  mul(x.hi, y.lo, lh, ll);
  mul(y.hi, x.lo, rh, rl);
  if (lh != rh) return lh < rh ? -1 : 1;
  if (ll != rl) return ll < rl ? -1 : 1;
  return 0;
}

void require_positive_dims(int64_t width, int64_t height) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::InvalidArgument,
                "image dimensions must be >= 1, got " + std::to_string(width) +
                    "x" + std::to_string(height));
  }
}

}  // namespace

std::vector<Grid> candidate_grids(int64_t max_slices) {
  if (max_slices < 1) {
    throw Error(ErrorCode::InvalidArgument, "max_slices must be >= 1");
  }
  std::vector<Grid> grids;
  for (int64_t area = 1; area <= max_slices; ++area) {
    for (int64_t cols = 1; cols <= area; ++cols) {
      if (area % cols == 0) grids.push_back({cols, area / cols});
    }
  }
  return grids;
}

Grid select_grid(int64_t width, int64_t height, const VisionConfig& cfg) {
  require_positive_dims(width, height);
  const auto grids = candidate_grids(cfg.max_slices);
  const long double image_area =
      static_cast<long double>(width) * static_cast<long double>(height);
  const long double base_area = static_cast<long double>(cfg.base_resolution) *
                                static_cast<long double>(cfg.base_resolution);

  Grid best = grids.front();
  AspectDistance best_dist = aspect_distance(best, width, height);
  for (size_t i = 1; i < grids.size(); ++i) {
    const Grid& g = grids[i];
    const auto dist = aspect_distance(g, width, height);
    const int cmp = compare(dist, best_dist);
    if (cmp < 0) {
      best = g;
      best_dist = dist;
    } else if (cmp == 0 && g.tiles() > best.tiles() &&
               image_area > 0.5L * static_cast<long double>(g.tiles()) * base_area) {
      best = g;
      best_dist = dist;
    }
  }
  return best;
}

int64_t tokens_per_tile(const VisionConfig& cfg) {
  const int64_t side = ceil_div(cfg.patch_grid, cfg.downsample);
  return side * side;
}

TilingPlan plan_single_image(int64_t width, int64_t height,
                             const VisionConfig& cfg) {
  const Grid grid = select_grid(width, height, cfg);
  const int64_t base = cfg.base_resolution;

  TilingPlan plan;
  plan.grid = grid;
  plan.resized_width = grid.cols * base;
  plan.resized_height = grid.rows * base;
  plan.tile_rects.reserve(static_cast<size_t>(grid.tiles()));
  for (int64_t r = 0; r < grid.rows; ++r) {
    for (int64_t c = 0; c < grid.cols; ++c) {
      plan.tile_rects.push_back({c * base, r * base, base, base});
    }
  }
  plan.include_thumbnail = cfg.use_thumbnail && grid.tiles() > 1;
  plan.tokens_per_tile = tokens_per_tile(cfg);
  plan.total_vision_tokens = plan.num_tiles() * plan.tokens_per_tile;
  return plan;
}

TilingPlan plan_untiled(const VisionConfig& cfg) {
  const int64_t base = cfg.base_resolution;
  TilingPlan plan;
  plan.grid = {1, 1};
  plan.resized_width = base;
  plan.resized_height = base;
  plan.tile_rects = {{0, 0, base, base}};
  plan.include_thumbnail = false;
  plan.tokens_per_tile = tokens_per_tile(cfg);
  plan.total_vision_tokens = plan.tokens_per_tile;
  return plan;
}

std::vector<TilingPlan> plan_tiling(const Sample& sample, const VisionConfig& cfg) {
  std::vector<TilingPlan> plans;
  switch (sample.modality.kind) {
    case ModalityKind::Text:
      break;
    case ModalityKind::SingleImage: {
      const auto& d = sample.image_dims.at(0);
      plans.push_back(plan_single_image(d.width, d.height, cfg));
      break;
    }
    case ModalityKind::MultiImage:
    case ModalityKind::Video:
      for (const auto& d : sample.image_dims) {
        require_positive_dims(d.width, d.height);
        plans.push_back(plan_untiled(cfg));
      }
      break;
  }
  return plans;
}

LetterboxTokens effective_tokens_letterboxed(int64_t width, int64_t height,
                                             const VisionConfig& cfg) {
  require_positive_dims(width, height);
  const int64_t pg = cfg.patch_grid;
  const int64_t ds = cfg.downsample;
  const int64_t side = ceil_div(pg, ds);
  const int64_t long_side = std::max(width, height);
  const int64_t short_side = std::min(width, height);

  // Patch i (centre at (2i+1) * base / (2 pg)) is content iff
  //   (base - s)/2 <= centre <= (base + s)/2,  s = short * base / long,
  // which after scaling by 2 * pg * long / base is integer-exact.
  const u128 lhs = static_cast<u128>(pg) * static_cast<u128>(long_side - short_side);
  const u128 rhs = static_cast<u128>(pg) * static_cast<u128>(long_side + short_side);
  std::vector<bool> content(static_cast<size_t>(pg), false);
  for (int64_t i = 0; i < pg; ++i) {
    const u128 centre = static_cast<u128>(2 * i + 1) * static_cast<u128>(long_side);
    content[static_cast<size_t>(i)] = lhs <= centre && centre <= rhs;
  }
  content[static_cast<size_t>(pg / 2)] = true;

  std::vector<bool> kept_line(static_cast<size_t>(side), false);
  for (int64_t t = 0; t < side; ++t) {
    for (int64_t i = t * ds; i < std::min((t + 1) * ds, pg); ++i) {
      if (content[static_cast<size_t>(i)]) kept_line[static_cast<size_t>(t)] = true;
    }
  }

  LetterboxTokens out;
  out.kept = BoolMatrix(static_cast<size_t>(side), static_cast<size_t>(side));
  const bool landscape = width >= height;
  for (int64_t r = 0; r < side; ++r) {
    for (int64_t c = 0; c < side; ++c) {
      const bool keep = landscape ? kept_line[static_cast<size_t>(r)]
                                  : kept_line[static_cast<size_t>(c)];
      out.kept.set(static_cast<size_t>(r), static_cast<size_t>(c), keep);
    }
  }
  out.count = static_cast<int64_t>(out.kept.count());
  return out;
}

}  // namespace valleyforge
