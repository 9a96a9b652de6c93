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

#include <doctest.h>

#include <cmath>
#include <random>

#include "valleyforge/tiling.hpp"

using namespace valleyforge;

namespace {

// Independent float-based reference for select_grid: exhaustive scan with
// log-distance and the same area tie rule.
Grid oracle_select(int64_t w, int64_t h, const VisionConfig& cfg) {
  std::vector<Grid> grids;
  for (int64_t area = 1; area <= cfg.max_slices; ++area)
    for (int64_t c = 1; c <= cfg.max_slices; ++c)
      for (int64_t r = 1; r <= cfg.max_slices; ++r)
        if (c * r == area) grids.push_back({c, r});
  const double target = std::log(static_cast<double>(w) / static_cast<double>(h));
  Grid best{};
  double best_d = INFINITY;
  for (const auto& g : grids) {
    const double d = std::abs(std::log(static_cast<double>(g.cols) / g.rows) - target);
    if (d < best_d - 1e-12) {
      best = g;
      best_d = d;
    } else if (std::abs(d - best_d) <= 1e-12 &&
               static_cast<double>(w) * h > 0.5 * g.tiles() * cfg.base_resolution * cfg.base_resolution) {
      best = g;
      best_d = d;
    }
  }
  return best;
}

// Geometric reference for the letterbox mask using real-valued coordinates.
BoolMatrix oracle_letterbox(int64_t w, int64_t h, const VisionConfig& cfg) {
  const double base = static_cast<double>(cfg.base_resolution);
  const double lo = std::min(w, h), hi = std::max(w, h);
  const double span = lo * base / hi;
  const double a = (base - span) / 2, b = (base + span) / 2;
  const double patch = base / static_cast<double>(cfg.patch_grid);
  std::vector<bool> content(cfg.patch_grid);
  for (int64_t i = 0; i < cfg.patch_grid; ++i) {
    const double c = (i + 0.5) * patch;
    content[i] = c >= a - 1e-9 && c <= b + 1e-9;
  }
  content[cfg.patch_grid / 2] = true;
  const int64_t side = (cfg.patch_grid + cfg.downsample - 1) / cfg.downsample;
  BoolMatrix m(side, side);
  for (int64_t r = 0; r < side; ++r)
    for (int64_t c = 0; c < side; ++c) {
      const int64_t t = w >= h ? r : c;
      bool keep = false;
      for (int64_t k = t * cfg.downsample; k < std::min((t + 1) * cfg.downsample, cfg.patch_grid); ++k)
        keep = keep || content[k];
      m.set(r, c, keep);
    }
  return m;
}

}  // namespace

TEST_CASE("candidate_grids enumerates every product <= max") {
  CHECK(candidate_grids(1) == std::vector<Grid>{{1, 1}});
  CHECK(candidate_grids(2) == std::vector<Grid>{{1, 1}, {1, 2}, {2, 1}});

  // Brute-force count of (c, r) with c * r <= 9.
  int brute = 0;
  for (int c = 1; c <= 9; ++c)
    for (int r = 1; r <= 9; ++r) brute += c * r <= 9;
  CHECK(brute == 23);
  const auto grids = candidate_grids(9);
  CHECK(grids.size() == 23);
  for (size_t i = 1; i < grids.size(); ++i) {
    const auto& p = grids[i - 1];
    const auto& q = grids[i];
    CHECK((p.tiles() < q.tiles() || (p.tiles() == q.tiles() && p.cols < q.cols)));
  }
}

TEST_CASE("select_grid examples") {
  VisionConfig cfg;
  CHECK(select_grid(384, 384, cfg) == Grid{1, 1});
  // 800x400: (2,1) and (4,2) tie on ratio; area 320000 <= 0.5*8*384^2.
  CHECK(oracle_select(800, 400, cfg) == Grid{2, 1});
  CHECK(select_grid(800, 400, cfg) == Grid{2, 1});
  CHECK(select_grid(4000, 400, cfg) == Grid{9, 1});
  CHECK(select_grid(1152, 1152, cfg) == Grid{3, 3});
  CHECK(select_grid(1600, 800, cfg) == Grid{4, 2});
}

TEST_CASE("select_grid matches the float oracle on random images") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int64_t> dim(1, 5000);
  std::uniform_int_distribution<int64_t> slices(1, 12);
  for (int i = 0; i < 3000; ++i) {
    VisionConfig cfg;
    cfg.max_slices = slices(rng);
    const auto w = dim(rng), h = dim(rng);
    CHECK(select_grid(w, h, cfg) == oracle_select(w, h, cfg));
  }
}

TEST_CASE("select_grid is scale invariant and transpose consistent") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int64_t> dim(1, 3000);
  std::uniform_int_distribution<int64_t> k(2, 7);
  VisionConfig cfg;
  for (int i = 0; i < 2000; ++i) {
    const auto w = dim(rng), h = dim(rng);
    const Grid g = select_grid(w, h, cfg);
    CHECK(g.tiles() <= cfg.max_slices);
    CHECK(select_grid(h, w, cfg) == g.transposed());
  }
  // The area tie rule can pick a larger grid of the same ratio for a larger
  // image (800x400 -> 2x1, 1600x800 -> 4x2); the chosen ratio never changes.
  for (int i = 0; i < 2000; ++i) {
    const auto w = dim(rng), h = dim(rng), f = k(rng);
    const Grid a = select_grid(w, h, cfg);
    const Grid b = select_grid(w * f, h * f, cfg);
    CHECK(a.cols * b.rows == b.cols * a.rows);
  }
}

TEST_CASE("plan_tiling token counts") {
  VisionConfig cfg;
  CHECK(tokens_per_tile(cfg) == 196);

  Sample one{"a", Modality::single_image(), {{384, 384}}, 0, 1, false, {}};
  auto plans = plan_tiling(one, cfg);
  REQUIRE(plans.size() == 1);
  CHECK(plans[0].grid == Grid{1, 1});
  CHECK_FALSE(plans[0].include_thumbnail);
  CHECK(plans[0].total_vision_tokens == 196);

  Sample big{"b", Modality::single_image(), {{1152, 1152}}, 0, 1, false, {}};
  plans = plan_tiling(big, cfg);
  REQUIRE(plans.size() == 1);
  CHECK(plans[0].grid == Grid{3, 3});
  CHECK(plans[0].include_thumbnail);
  CHECK(plans[0].num_tiles() == 10);
  CHECK(plans[0].total_vision_tokens == 1960);

  Sample video{"v", Modality::video(8), std::vector<ImageDims>(8, {1920, 1080}), 0, 1, false, {}};
  plans = plan_tiling(video, cfg);
  REQUIRE(plans.size() == 8);
  for (const auto& p : plans) {
    CHECK(p.grid == Grid{1, 1});
    CHECK(p.total_vision_tokens == 196);
    CHECK_FALSE(p.include_thumbnail);
  }

  Sample text{"t", Modality::text(), {}, 5, 1, false, {}};
  CHECK(plan_tiling(text, cfg).empty());

  cfg.use_thumbnail = false;
  CHECK(plan_tiling(big, cfg)[0].total_vision_tokens == 9 * 196);
}

TEST_CASE("tile rects partition the resized canvas") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int64_t> dim(1, 6000);
  VisionConfig cfg;
  for (int i = 0; i < 500; ++i) {
    const auto plan = plan_single_image(dim(rng), dim(rng), cfg);
    CHECK(plan.num_tiles() >= 1);
    CHECK(plan.num_tiles() <= cfg.max_slices + 1);
    CHECK(plan.include_thumbnail == (plan.grid.tiles() > 1));
    CHECK(plan.total_vision_tokens == plan.num_tiles() * plan.tokens_per_tile);
    int64_t area = 0;
    for (size_t a = 0; a < plan.tile_rects.size(); ++a) {
      const auto& r = plan.tile_rects[a];
      CHECK(r.w == cfg.base_resolution);
      CHECK(r.h == cfg.base_resolution);
      CHECK(r.x + r.w <= plan.resized_width);
      CHECK(r.y + r.h <= plan.resized_height);
      area += r.w * r.h;
      for (size_t b = a + 1; b < plan.tile_rects.size(); ++b) {
        const auto& s = plan.tile_rects[b];
        const bool disjoint = r.x + r.w <= s.x || s.x + s.w <= r.x || r.y + r.h <= s.y ||
                              s.y + s.h <= r.y;
        CHECK(disjoint);
      }
    }
    CHECK(area == plan.resized_width * plan.resized_height);
  }
}

TEST_CASE("letterboxed token counts") {
  VisionConfig cfg;
  auto square = effective_tokens_letterboxed(384, 384, cfg);
  CHECK(square.count == 196);
  CHECK(square.kept.count() == 196);

  auto half = effective_tokens_letterboxed(384, 192, cfg);
  CHECK(half.count == 98);
  CHECK(half.kept == oracle_letterbox(384, 192, cfg));
  // Whole rows are dropped for landscape inputs.
  for (size_t r = 0; r < 14; ++r) {
    for (size_t c = 1; c < 14; ++c) CHECK(half.kept(r, c) == half.kept(r, 0));
  }

  CHECK(effective_tokens_letterboxed(384, 1, cfg).count == 14);
  CHECK(effective_tokens_letterboxed(1, 384, cfg).count == 14);
  CHECK(effective_tokens_letterboxed(192, 384, cfg).kept ==
        oracle_letterbox(192, 384, cfg));
}

TEST_CASE("letterbox mask matches the geometric oracle and is monotone") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int64_t> dim(1, 4000);
  VisionConfig cfg;
  for (int i = 0; i < 2000; ++i) {
    const auto w = dim(rng), h = dim(rng);
    const auto got = effective_tokens_letterboxed(w, h, cfg);
    CHECK(got.kept == oracle_letterbox(w, h, cfg));
    CHECK(got.count >= 14);
    if (w == h) CHECK(got.count == 196);
  }
  int64_t prev = 0;
  for (int64_t h = 1; h <= 1000; ++h) {
    const auto c = effective_tokens_letterboxed(1000, h, cfg).count;
    CHECK(c >= prev);
    prev = c;
  }
  CHECK(prev == 196);
}
