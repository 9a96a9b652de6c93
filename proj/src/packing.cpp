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

#include "valleyforge/packing.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <numeric>
#include <set>
#include <thread>

#include "valleyforge/error.hpp"
#include "valleyforge/random.hpp"

namespace valleyforge {

std::string_view to_string(PackPolicy policy) {
  switch (policy) {
    case PackPolicy::FirstFitDecreasing: return "ffd";
    case PackPolicy::FirstFit: return "ff";
    case PackPolicy::BestFitDecreasing: return "bfd";
  }
  return "ffd";
}

std::optional<PackPolicy> parse_pack_policy(std::string_view name) {
  if (name == "ffd") return PackPolicy::FirstFitDecreasing;
  if (name == "ff") return PackPolicy::FirstFit;
  if (name == "bfd") return PackPolicy::BestFitDecreasing;
  return std::nullopt;
}

namespace {

// Max-segment-tree over bin remaining capacities; unopened bins hold the
// full cap, so the leftmost fitting bin is exactly the first-fit choice.
class FirstFitTree {
 public:
  FirstFitTree(size_t bins, int64_t cap) : size_(1) {
    while (size_ < bins) size_ <<= 1;
    tree_.assign(2 * size_, 0);
    for (size_t i = 0; i < bins; ++i) tree_[size_ + i] = cap;
    for (size_t i = size_ - 1; i >= 1; --i) {
      tree_[i] = std::max(tree_[2 * i], tree_[2 * i + 1]);
    }
  }

  // Leftmost bin with remaining >= need; the caller guarantees one exists.
  size_t leftmost_fitting(int64_t need) const {
    size_t i = 1;
    while (i < size_) i = tree_[2 * i] >= need ? 2 * i : 2 * i + 1;
    return i - size_;
  }

  void consume(size_t bin, int64_t amount) {
    size_t i = size_ + bin;
    tree_[i] -= amount;
    for (i >>= 1; i >= 1; i >>= 1) {
      tree_[i] = std::max(tree_[2 * i], tree_[2 * i + 1]);
    }
  }

 private:
  size_t size_;
  std::vector<int64_t> tree_;
};

std::vector<size_t> processing_order(std::span<const PackItem> items, PackPolicy policy) {
  std::vector<size_t> order(items.size());
  std::iota(order.begin(), order.end(), size_t{0});
  if (policy != PackPolicy::FirstFit) {
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      if (items[a].length != items[b].length) return items[a].length > items[b].length;
      return items[a].id < items[b].id;
    });
  }
  return order;
}

std::vector<Pack> pack_group(std::span<const PackItem> items, const PackConfig& cfg) {
  const auto order = processing_order(items, cfg.policy);
  std::vector<Pack> packs;

  auto place = [&](size_t bin, const PackItem& item) {
    if (bin == packs.size()) packs.emplace_back();
    auto& p = packs[bin];
    p.segments.push_back({item.id, item.length});
    p.total_len += item.length;
  };

  if (cfg.policy == PackPolicy::BestFitDecreasing) {
    std::set<std::pair<int64_t, size_t>> open;  // (remaining, bin)
    for (size_t idx : order) {
      const auto& item = items[idx];
      auto it = open.lower_bound({item.length, 0});
      size_t bin;
      int64_t remaining;
      if (it == open.end()) {
        bin = packs.size();
        remaining = cfg.max_len;
      } else {
        bin = it->second;
        remaining = it->first;
        open.erase(it);
      }
      place(bin, item);
      open.insert({remaining - item.length, bin});
    }
  } else {
    FirstFitTree tree(std::max<size_t>(items.size(), 1), cfg.max_len);
    for (size_t idx : order) {
      const auto& item = items[idx];
      const size_t bin = tree.leftmost_fitting(item.length);
      tree.consume(bin, item.length);
      place(bin, item);
    }
  }
  return packs;
}

void check_items(std::span<const PackItem> items, const PackConfig& cfg) {
  if (cfg.max_len < 1) throw Error(ErrorCode::InvalidArgument, "max_len must be >= 1");
  for (const auto& item : items) {
    if (item.length < 0) {
      throw Error(ErrorCode::InvalidArgument,
                  "sample '" + item.id + "' has negative length");
    }
    if (item.length > cfg.max_len) {
      throw OversizedSampleError(item.id, item.length, cfg.max_len);
    }
  }
}

void finish(std::vector<Pack>& packs, int64_t max_len) {
  for (size_t i = 0; i < packs.size(); ++i) {
    packs[i].pack_id = static_cast<int64_t>(i);
    packs[i].pad_len = max_len - packs[i].total_len;
  }
}

}  // namespace

std::vector<Pack> plan_packs(std::span<const PackItem> items, const PackConfig& cfg) {
  check_items(items, cfg);
  std::vector<Pack> packs;
  if (!cfg.segregate_groups) {
    packs = pack_group(items, cfg);
  } else {
    std::vector<std::string> group_order;
    std::map<std::string, std::vector<PackItem>> groups;
    for (const auto& item : items) {
      auto [it, inserted] = groups.try_emplace(item.group);
      if (inserted) group_order.push_back(item.group);
      it->second.push_back(item);
    }
    for (const auto& g : group_order) {
      auto part = pack_group(groups[g], cfg);
      std::move(part.begin(), part.end(), std::back_inserter(packs));
    }
  }
  finish(packs, cfg.max_len);
  return packs;
}

std::vector<Pack> plan_packs_sharded(std::span<const PackItem> items,
                                     const PackConfig& cfg, size_t shards,
                                     size_t workers) {
  if (shards == 0) throw Error(ErrorCode::InvalidArgument, "shards must be >= 1");
  check_items(items, cfg);
  std::vector<std::vector<PackItem>> parts(shards);
  for (const auto& item : items) {
    parts[stable_hash(item.id) % shards].push_back(item);
  }

  std::vector<std::vector<Pack>> results(shards);
  std::atomic<size_t> next{0};
  auto work = [&] {
    for (size_t s; (s = next.fetch_add(1)) < shards;) {
      results[s] = plan_packs(parts[s], cfg);
    }
  };
  const size_t threads = std::clamp<size_t>(workers, 1, shards);
  if (threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (size_t t = 0; t < threads; ++t) pool.emplace_back(work);
  }

  std::vector<Pack> packs;
  for (auto& r : results) std::move(r.begin(), r.end(), std::back_inserter(packs));
  finish(packs, cfg.max_len);
  return packs;
}

BoolMatrix expand_mask(std::span<const int64_t> segment_lengths, bool causal) {
  const int64_t n = std::accumulate(segment_lengths.begin(), segment_lengths.end(), int64_t{0});
  if (n > kMaxDenseMask) {
    throw Error(ErrorCode::DenseTooLarge,
                "dense mask side " + std::to_string(n) + " exceeds " +
                    std::to_string(kMaxDenseMask));
  }
  BoolMatrix m(static_cast<size_t>(n), static_cast<size_t>(n));
  size_t start = 0;
  for (int64_t len : segment_lengths) {
    const size_t end = start + static_cast<size_t>(len);
    for (size_t i = start; i < end; ++i) {
      for (size_t j = start; j < (causal ? i + 1 : end); ++j) m.set(i, j, true);
    }
    start = end;
  }
  return m;
}

MaskDescriptor mask_descriptor(const Pack& pack, bool causal, bool dense) {
  MaskDescriptor d;
  d.causal = causal;
  d.segment_lengths.reserve(pack.segments.size());
  for (const auto& s : pack.segments) d.segment_lengths.push_back(s.length);
  if (dense) d.dense = expand_mask(d.segment_lengths, causal);
  return d;
}

std::vector<int64_t> position_ids(const Pack& pack) {
  std::vector<int64_t> ids;
  ids.reserve(static_cast<size_t>(pack.total_len));
  for (const auto& s : pack.segments) {
    for (int64_t p = 0; p < s.length; ++p) ids.push_back(p);
  }
  return ids;
}

double PackingStats::avg_cases_per_pack() const {
  return packs == 0 ? 0.0 : static_cast<double>(samples) / static_cast<double>(packs);
}

double PackingStats::est_speedup() const {
  return packs == 0 ? 0.0
                    : static_cast<double>(padded_tokens_before()) /
                          static_cast<double>(padded_tokens_after());
}

PackingStats& PackingStats::merge(const PackingStats& other) {
  if (samples != 0 && other.samples != 0 && max_len != other.max_len) {
    throw Error(ErrorCode::InvalidArgument, "cannot merge stats with different max_len");
  }
  if (max_len == 0) max_len = other.max_len;
  samples += other.samples;
  packs += other.packs;
  return *this;
}

PackingStats packing_stats(std::span<const PackItem> items,
                           std::span<const Pack> packs, const PackConfig& cfg) {
  return {static_cast<int64_t>(items.size()), static_cast<int64_t>(packs.size()),
          cfg.max_len};
}

}  // namespace valleyforge
