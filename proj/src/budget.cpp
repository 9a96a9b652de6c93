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

#include "valleyforge/budget.hpp"

#include <algorithm>
#include <cmath>

#include "valleyforge/error.hpp"
#include "valleyforge/projector_math.hpp"
#include "valleyforge/tiling.hpp"

namespace valleyforge {

std::string_view to_string(BudgetMode mode) {
  return mode == BudgetMode::Train ? "train" : "infer";
}

TokenBudget budget_sample(const Sample& sample, const VisionConfig& cfg,
                          const EagleConfig& eagle, BudgetMode mode,
                          const BudgetOptions& options) {
  TokenBudget b;
  b.sample_id = sample.id;
  b.modality = sample.modality.kind;
  b.mode = mode;
  b.text_tokens = sample.text_tokens;

  const auto plans = plan_tiling(sample, cfg);
  const bool untiled = sample.modality.kind == ModalityKind::MultiImage ||
                       sample.modality.kind == ModalityKind::Video;
  int64_t tiles = 0;
  for (size_t i = 0; i < plans.size(); ++i) {
    tiles += plans[i].num_tiles();
    if (untiled && options.letterbox_untiled) {
      const auto& d = sample.image_dims[i];
      b.vision_tokens += effective_tokens_letterboxed(d.width, d.height, cfg).count;
    } else {
      b.vision_tokens += plans[i].total_vision_tokens;
    }
  }

  if (eagle.enabled) {
    int64_t native = 0;
    for (const auto& d : sample.image_dims) {
      native += eagle_infer_tokens(d.width, d.height, eagle);
    }
    b.eagle_tokens = mode == BudgetMode::Train
                         ? std::min(native, eagle_train_cap(b.vision_tokens))
                         : native;
  }

  b.overhead_tokens = tiles * cfg.tile_overhead_tokens + cfg.sample_overhead_tokens;
  b.total = b.vision_tokens + b.eagle_tokens + b.text_tokens + b.overhead_tokens;
  return b;
}

void CorpusAccumulator::add(const TokenBudget& budget) {
  ++count_;
  ++totals_[budget.total];
  auto& m = modality_[budget.modality];
  ++m.first;
  m.second += budget.total;
}

void CorpusAccumulator::merge(const CorpusAccumulator& other) {
  count_ += other.count_;
  for (const auto& [total, n] : other.totals_) totals_[total] += n;
  for (const auto& [kind, m] : other.modality_) {
    modality_[kind].first += m.first;
    modality_[kind].second += m.second;
  }
}

int64_t nearest_rank(std::span<const int64_t> sorted, double percent) {
  if (sorted.empty()) throw Error(ErrorCode::EmptyCorpus, "empty sequence");
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<size_t>(std::ceil(percent / 100.0 * n));
  rank = std::clamp<size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

CorpusStats CorpusAccumulator::finalize(int64_t bucket_width) const {
  if (bucket_width < 1) {
    throw Error(ErrorCode::InvalidArgument, "bucket_width must be >= 1");
  }
  if (count_ == 0) throw Error(ErrorCode::EmptyCorpus, "corpus has no samples");

  CorpusStats s;
  s.count = count_;
  // Rank lookups walk the run-length encoded totals.
  auto at_rank = [&](int64_t rank) {
    int64_t seen = 0;
    for (const auto& [total, n] : totals_) {
      seen += n;
      if (seen >= rank) return total;
    }
    return totals_.rbegin()->first;
  };
  auto percentile = [&](double p) {
    auto rank = static_cast<int64_t>(std::ceil(p / 100.0 * static_cast<double>(count_)));
    return at_rank(std::clamp<int64_t>(rank, 1, count_));
  };
  s.p50 = percentile(50);
  s.p90 = percentile(90);
  s.p99 = percentile(99);
  s.min = totals_.begin()->first;
  s.max = totals_.rbegin()->first;

  long double sum = 0;
  for (const auto& [total, n] : totals_) {
    sum += static_cast<long double>(total) * static_cast<long double>(n);
    const int64_t start = (total / bucket_width) * bucket_width;
    if (s.histogram.empty() || s.histogram.back().start != start) {
      s.histogram.push_back({start, start + bucket_width, 0});
    }
    s.histogram.back().count += n;
  }
  s.mean = static_cast<double>(sum / static_cast<long double>(count_));

  for (const auto& [kind, m] : modality_) {
    s.per_modality_count[kind] = m.first;
    s.per_modality_mean[kind] =
        static_cast<double>(m.second) / static_cast<double>(m.first);
  }
  return s;
}

CorpusStats corpus_stats(std::span<const TokenBudget> budgets, int64_t bucket_width) {
  CorpusAccumulator acc;
  for (const auto& b : budgets) acc.add(b);
  return acc.finalize(bucket_width);
}

}  // namespace valleyforge
