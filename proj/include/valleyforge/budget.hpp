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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "valleyforge/core_model.hpp"

namespace valleyforge {

enum class BudgetMode { Train, Infer };

std::string_view to_string(BudgetMode mode);

struct BudgetOptions {
  // Count untiled frames with letterbox padding tokens removed.
  bool letterbox_untiled = false;
};

struct TokenBudget {
  std::string sample_id;
  ModalityKind modality = ModalityKind::Text;
  int64_t vision_tokens = 0;
  int64_t eagle_tokens = 0;
  int64_t text_tokens = 0;
  int64_t overhead_tokens = 0;
  int64_t total = 0;
  BudgetMode mode = BudgetMode::Train;

  friend bool operator==(const TokenBudget&, const TokenBudget&) = default;
};

TokenBudget budget_sample(const Sample& sample, const VisionConfig& cfg,
                          const EagleConfig& eagle, BudgetMode mode,
                          const BudgetOptions& options = {});

struct HistogramBucket {
  int64_t start = 0;  // inclusive
  int64_t end = 0;    // exclusive
  int64_t count = 0;

  friend bool operator==(const HistogramBucket&, const HistogramBucket&) = default;
};

struct CorpusStats {
  int64_t count = 0;
  double mean = 0.0;
  int64_t p50 = 0;
  int64_t p90 = 0;
  int64_t p99 = 0;
  int64_t min = 0;
  int64_t max = 0;
  std::vector<HistogramBucket> histogram;  // non-empty buckets only
  std::map<ModalityKind, int64_t> per_modality_count;
  std::map<ModalityKind, double> per_modality_mean;
};

// Mergeable partial aggregate over budget totals. merge() is associative and
// commutative, so shards can be reduced in any grouping.
class CorpusAccumulator {
 public:
  void add(const TokenBudget& budget);
  void merge(const CorpusAccumulator& other);

  int64_t count() const { return count_; }

  // Throws EmptyCorpus when nothing was added.
  CorpusStats finalize(int64_t bucket_width) const;

  friend bool operator==(const CorpusAccumulator&, const CorpusAccumulator&) = default;

 private:
  int64_t count_ = 0;
  std::map<int64_t, int64_t> totals_;  // total -> occurrences
  std::map<ModalityKind, std::pair<int64_t, int64_t>> modality_;  // count, sum
};

// Nearest-rank percentile of an ascending-sorted, non-empty sequence.
int64_t nearest_rank(std::span<const int64_t> sorted, double percent);

CorpusStats corpus_stats(std::span<const TokenBudget> budgets, int64_t bucket_width);

}  // namespace valleyforge
