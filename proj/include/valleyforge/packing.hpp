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
#include <span>
#include <string>
#include <vector>

#include "valleyforge/core_model.hpp"

namespace valleyforge {

enum class PackPolicy { FirstFitDecreasing, FirstFit, BestFitDecreasing };

std::string_view to_string(PackPolicy policy);
std::optional<PackPolicy> parse_pack_policy(std::string_view name);

struct PackConfig {
  int64_t max_len = 4096;
  PackPolicy policy = PackPolicy::FirstFitDecreasing;
  // Reserved for randomized tie shuffling; every current policy is
  // deterministic without it.
  uint64_t seed = 0;
  // Never mix items with different `group` in one pack.
  bool segregate_groups = false;

  friend bool operator==(const PackConfig&, const PackConfig&) = default;
};

struct PackItem {
  std::string id;
  int64_t length = 0;
  std::string group;  // e.g. modality name; only used with segregate_groups
};

struct Segment {
  std::string id;
  int64_t length = 0;

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct Pack {
  int64_t pack_id = 0;
  std::vector<Segment> segments;
  int64_t total_len = 0;
  int64_t pad_len = 0;

  friend bool operator==(const Pack&, const Pack&) = default;
};

// Greedy offline bin packing under cfg.max_len. Packs are numbered in the
// order they were opened. FirstFitDecreasing and BestFitDecreasing sort by
// length descending, ties by id ascending; FirstFit keeps input order.
// Throws OversizedSampleError for any item longer than max_len.
std::vector<Pack> plan_packs(std::span<const PackItem> items, const PackConfig& cfg);

// Splits items into `shards` by stable hash of id, plans each shard
// independently on up to `workers` threads and concatenates the results in
// shard order. Output is independent of `workers`.
std::vector<Pack> plan_packs_sharded(std::span<const PackItem> items,
                                     const PackConfig& cfg, size_t shards,
                                     size_t workers);

struct MaskDescriptor {
  std::vector<int64_t> segment_lengths;
  bool causal = false;
  std::optional<BoolMatrix> dense;
};

inline constexpr int64_t kMaxDenseMask = 64;

// Compact block-diagonal mask; `dense` additionally expands it (side <= 64,
// otherwise DenseTooLarge).
MaskDescriptor mask_descriptor(const Pack& pack, bool causal, bool dense = false);

// Expands segment lengths into the dense mask: true iff both tokens share a
// segment (and row >= col when causal).
BoolMatrix expand_mask(std::span<const int64_t> segment_lengths, bool causal);

// Position ids restarting at 0 at every segment boundary.
std::vector<int64_t> position_ids(const Pack& pack);

struct PackingStats {
  int64_t samples = 0;
  int64_t packs = 0;
  int64_t max_len = 0;

  double avg_cases_per_pack() const;
  // Baseline pads every sample to max_len.
  int64_t padded_tokens_before() const { return samples * max_len; }
  int64_t padded_tokens_after() const { return packs * max_len; }
  double est_speedup() const;

  PackingStats& merge(const PackingStats& other);
};

PackingStats packing_stats(std::span<const PackItem> items,
                           std::span<const Pack> packs, const PackConfig& cfg);

}  // namespace valleyforge
