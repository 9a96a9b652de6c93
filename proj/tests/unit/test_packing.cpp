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

#include <algorithm>
#include <map>
#include <random>

#include "valleyforge/error.hpp"
#include "valleyforge/packing.hpp"

using namespace valleyforge;

namespace {

std::vector<std::vector<std::string>> ids_of(const std::vector<Pack>& packs) {
  std::vector<std::vector<std::string>> out;
  for (const auto& p : packs) {
    auto& row = out.emplace_back();
    for (const auto& s : p.segments) row.push_back(s.id);
  }
  return out;
}

std::vector<PackItem> random_items(std::mt19937_64& rng, size_t n, int64_t max_len) {
  std::uniform_int_distribution<int64_t> len(1, max_len);
  std::vector<PackItem> items;
  for (size_t i = 0; i < n; ++i) items.push_back({"i" + std::to_string(i), len(rng), ""});
  return items;
}

// Minimum bin count by DP over subsets: for each mask, the fewest bins and the
// smallest fill of the last open bin.
int64_t optimal_bins(const std::vector<PackItem>& items, int64_t cap) {
  const size_t n = items.size();
  std::vector<std::pair<int64_t, int64_t>> best(size_t{1} << n, {INT64_MAX, 0});
  best[0] = {1, 0};
  for (size_t mask = 0; mask < best.size(); ++mask) {
    if (best[mask].first == INT64_MAX) continue;
    for (size_t i = 0; i < n; ++i) {
      if (mask & (size_t{1} << i)) continue;
      auto [bins, fill] = best[mask];
      if (fill + items[i].length <= cap) {
        fill += items[i].length;
      } else {
        ++bins;
        fill = items[i].length;
      }
      auto& slot = best[mask | (size_t{1} << i)];
      slot = std::min(slot, std::pair{bins, fill});
    }
  }
  return n == 0 ? 0 : best.back().first;
}

void check_valid(std::span<const PackItem> items, const std::vector<Pack>& packs,
                 int64_t max_len) {
  std::map<std::string, int64_t> seen;
  for (size_t i = 0; i < packs.size(); ++i) {
    const auto& p = packs[i];
    CHECK(p.pack_id == static_cast<int64_t>(i));
    CHECK(!p.segments.empty());
    int64_t sum = 0;
    for (const auto& s : p.segments) {
      sum += s.length;
      ++seen[s.id];
    }
    CHECK(sum == p.total_len);
    CHECK(p.total_len <= max_len);
    CHECK(p.pad_len == max_len - p.total_len);
  }
  CHECK(seen.size() == items.size());
  for (const auto& item : items) CHECK(seen[item.id] == 1);
}

}  // namespace

TEST_CASE("pack policy names") {
  for (auto p : {PackPolicy::FirstFitDecreasing, PackPolicy::FirstFit,
                 PackPolicy::BestFitDecreasing}) {
    CHECK(parse_pack_policy(to_string(p)) == p);
  }
  CHECK(parse_pack_policy("ffd") == PackPolicy::FirstFitDecreasing);
  CHECK_FALSE(parse_pack_policy("worst").has_value());
}

TEST_CASE("FFD example") {
  const std::vector<PackItem> items{{"a", 6, ""}, {"b", 3, ""}, {"c", 1, ""}, {"d", 5, ""}};
  const auto packs = plan_packs(items, {.max_len = 10});
  CHECK(ids_of(packs) == std::vector<std::vector<std::string>>{{"a", "b", "c"}, {"d"}});
  CHECK(packs[0].pad_len == 0);
  CHECK(packs[1].pad_len == 5);
}

TEST_CASE("FF keeps input order, ties in FFD break by id") {
  const std::vector<PackItem> items{{"c", 4, ""}, {"a", 7, ""}, {"b", 4, ""}};
  CHECK(ids_of(plan_packs(items, {.max_len = 10, .policy = PackPolicy::FirstFit})) ==
        std::vector<std::vector<std::string>>{{"c", "b"}, {"a"}});
  CHECK(ids_of(plan_packs(items, {.max_len = 10})) ==
        std::vector<std::vector<std::string>>{{"a"}, {"b", "c"}});
}

TEST_CASE("BFD picks the tightest bin") {
  // After 6 and 5 open two bins, a 4 fits both; best fit puts it with the 6.
  const std::vector<PackItem> items{{"x", 6, ""}, {"y", 5, ""}, {"z", 4, ""}};
  CHECK(ids_of(plan_packs(items, {.max_len = 10, .policy = PackPolicy::BestFitDecreasing})) ==
        std::vector<std::vector<std::string>>{{"x", "z"}, {"y"}});
  const std::vector<PackItem> items2{{"x", 5, ""}, {"y", 3, ""}, {"z", 2, ""}};
  // Opens 5; 3 joins (8); 2 joins (10).
  CHECK(plan_packs(items2, {.max_len = 10, .policy = PackPolicy::BestFitDecreasing}).size() == 1);
}

TEST_CASE("exact fit and empty input") {
  const std::vector<PackItem> items{{"a", 4096, ""}, {"b", 4096, ""}};
  const auto packs = plan_packs(items, {});
  CHECK(packs.size() == 2);
  CHECK(packs[0].pad_len == 0);
  CHECK(plan_packs({}, {}).empty());
}

TEST_CASE("oversized sample names the offender") {
  const std::vector<PackItem> items{{"ok", 10, ""}, {"huge", 11, ""}};
  try {
    plan_packs(items, {.max_len = 10});
    FAIL("expected OversizedSample");
  } catch (const OversizedSampleError& e) {
    CHECK(e.code() == ErrorCode::OversizedSample);
    CHECK(e.sample_id() == "huge");
  }
}

TEST_CASE("invalid lengths are rejected") {
  const std::vector<PackItem> negative{{"z", -1, ""}};
  CHECK_THROWS_AS(plan_packs(negative, {.max_len = 10}), Error);
  CHECK_THROWS_AS(plan_packs({}, {.max_len = 0}), Error);
}

TEST_CASE("packing invariants hold for every policy") {
  std::mt19937_64 rng(53);
  for (auto policy : {PackPolicy::FirstFitDecreasing, PackPolicy::FirstFit,
                      PackPolicy::BestFitDecreasing}) {
    for (int round = 0; round < 40; ++round) {
      const int64_t max_len = 64 + round * 50;
      const auto items = random_items(rng, 1 + static_cast<size_t>(round) * 7, max_len);
      const PackConfig cfg{.max_len = max_len, .policy = policy};
      const auto packs = plan_packs(items, cfg);
      check_valid(items, packs, max_len);
      // Any-fit algorithms leave at most one bin at or below half capacity.
      int64_t half_or_less = 0;
      for (const auto& p : packs) half_or_less += 2 * p.total_len <= max_len;
      CHECK(half_or_less <= 1);
      CHECK(plan_packs(items, cfg) == packs);
    }
  }
}

TEST_CASE("FFD against exhaustive optimum for small inputs") {
  std::mt19937_64 rng(59);
  std::uniform_int_distribution<size_t> count(0, 10);
  for (int round = 0; round < 300; ++round) {
    const int64_t cap = 20;
    const auto items = random_items(rng, count(rng), cap);
    const auto opt = optimal_bins(items, cap);
    const auto ffd = static_cast<int64_t>(plan_packs(items, {.max_len = cap}).size());
    CHECK(ffd >= opt);
    CHECK(9 * ffd <= 11 * opt + 6);
    CHECK(ffd <= opt + 1);
  }
}

TEST_CASE("sharded planning is independent of worker count") {
  std::mt19937_64 rng(61);
  const auto items = random_items(rng, 5000, 4096);
  const PackConfig cfg{};
  const auto one = plan_packs_sharded(items, cfg, 8, 1);
  const auto many = plan_packs_sharded(items, cfg, 8, 8);
  CHECK(one == many);
  check_valid(items, one, cfg.max_len);
  CHECK(plan_packs_sharded(items, cfg, 1, 4) == plan_packs(items, cfg));
}

TEST_CASE("group segregation") {
  const std::vector<PackItem> items{
      {"t1", 3, "text"}, {"v1", 3, "video"}, {"t2", 3, "text"}, {"v2", 3, "video"}};
  const auto mixed = plan_packs(items, {.max_len = 12});
  CHECK(mixed.size() == 1);
  const auto split = plan_packs(items, {.max_len = 12, .segregate_groups = true});
  REQUIRE(split.size() == 2);
  CHECK(ids_of(split) == std::vector<std::vector<std::string>>{{"t1", "t2"}, {"v1", "v2"}});
  CHECK(split[1].pack_id == 1);
}

TEST_CASE("mask descriptor and dense expansion") {
  Pack p{0, {{"a", 2}, {"b", 3}}, 5, 0};
  const auto d = mask_descriptor(p, false, true);
  CHECK(d.segment_lengths == std::vector<int64_t>{2, 3});
  REQUIRE(d.dense.has_value());
  const auto& m = *d.dense;
  CHECK(m.rows() == 5);
  CHECK(m(0, 1));
  CHECK(m(1, 0));
  CHECK_FALSE(m(1, 2));
  CHECK(m(4, 2));
  CHECK(m.count() == 4 + 9);

  const auto causal = expand_mask(d.segment_lengths, true);
  CHECK(causal(1, 0));
  CHECK_FALSE(causal(0, 1));
  CHECK(causal.count() == 3 + 6);

  CHECK_FALSE(mask_descriptor(p, true).dense.has_value());
}

TEST_CASE("dense masks are symmetric and block diagonal") {
  std::mt19937_64 rng(67);
  std::uniform_int_distribution<int64_t> len(1, 9);
  for (int round = 0; round < 100; ++round) {
    std::vector<int64_t> lens;
    int64_t n = 0;
    while (true) {
      const auto l = len(rng);
      if (n + l > kMaxDenseMask) break;
      lens.push_back(l);
      n += l;
    }
    const auto m = expand_mask(lens, false);
    const auto c = expand_mask(lens, true);
    int64_t expected = 0, expected_causal = 0;
    for (auto l : lens) {
      expected += l * l;
      expected_causal += l * (l + 1) / 2;
    }
    CHECK(static_cast<int64_t>(m.count()) == expected);
    CHECK(static_cast<int64_t>(c.count()) == expected_causal);
    for (size_t r = 0; r < m.rows(); ++r) {
      for (size_t col = 0; col < m.cols(); ++col) {
        CHECK(m(r, col) == m(col, r));
        CHECK(c(r, col) == (m(r, col) && r >= col));
      }
    }
  }
}

TEST_CASE("dense mask above the limit is refused") {
  Pack p{0, {{"a", 40}, {"b", 25}}, 65, 0};
  try {
    mask_descriptor(p, false, true);
    FAIL("expected DenseTooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DenseTooLarge);
  }
  CHECK_NOTHROW(mask_descriptor(p, false, false));
}

TEST_CASE("position ids restart per segment") {
  Pack p{0, {{"a", 3}, {"b", 1}, {"c", 2}}, 6, 0};
  CHECK(position_ids(p) == std::vector<int64_t>{0, 1, 2, 0, 0, 1});
}

TEST_CASE("packing stats") {
  const std::vector<PackItem> items{{"a", 6, ""}, {"b", 3, ""}, {"c", 1, ""}, {"d", 5, ""}};
  const PackConfig cfg{.max_len = 10};
  const auto packs = plan_packs(items, cfg);
  const auto s = packing_stats(items, packs, cfg);
  CHECK(s.samples == 4);
  CHECK(s.packs == 2);
  CHECK(s.avg_cases_per_pack() == 2.0);
  CHECK(s.padded_tokens_before() == 40);
  CHECK(s.padded_tokens_after() == 20);
  CHECK(s.est_speedup() == 2.0);

  PackingStats merged = s;
  merged.merge(s);
  CHECK(merged.samples == 8);
  CHECK(merged.packs == 4);
  CHECK(merged.est_speedup() == 2.0);
  CHECK(PackingStats{}.est_speedup() == 0.0);
}
