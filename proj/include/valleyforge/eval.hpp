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

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "valleyforge/core_model.hpp"

namespace valleyforge {

// Ecom-VQA task taxonomy: IU/OCR (single image), DS/MIU/PTU (multi-image),
// GVU/PEU/AL/VCR (video).
enum class Category { IU, OCR, DS, MIU, PTU, GVU, PEU, AL, VCR };

inline constexpr std::array<Category, 9> kAllCategories = {
    Category::IU,  Category::OCR, Category::DS, Category::MIU, Category::PTU,
    Category::GVU, Category::PEU, Category::AL, Category::VCR};

std::string_view to_string(Category c);
std::optional<Category> parse_category(std::string_view name);

struct MCQuestion {
  std::string qid;
  std::string stem;
  std::array<std::string, 4> options;
  int correct_index = 0;
  Category category = Category::IU;
  Modality modality = Modality::single_image();
  int rotation = 0;  // which cyclic variant this is (0 for the original)

  friend bool operator==(const MCQuestion&, const MCQuestion&) = default;
};

void validate(const MCQuestion& q);

// Variant k moves the correct option to position k by rotating the option
// list; relative order of the options is preserved.
std::array<MCQuestion, 4> expand_cyclic(const MCQuestion& q);

// Index 0..3 for A..D. Liberal mode returns the first standalone letter
// (word-bounded, so "(C)", "B." and "Answer: A" all match), preferring
// upper-case letters over lower-case ones so the article "a" does not shadow
// a later capital answer. Strict mode accepts only a bare leading letter.
std::optional<int> extract_choice(std::string_view response, bool strict = false);

struct CyclicResult {
  std::string qid;
  Category category = Category::IU;
  std::array<bool, 4> per_rotation{};
  bool passed = false;
};

struct CyclicScore {
  std::vector<CyclicResult> results;
  double accuracy = 0.0;  // percent
};

// (qid, rotation) -> raw response text
using ResponseMap = std::map<std::pair<std::string, int>, std::string>;

// A question passes only when all four rotations are answered correctly;
// unparseable answers count as wrong. Throws MissingResponseError.
CyclicScore score_cyclic(std::span<const MCQuestion> questions,
                         const ResponseMap& responses, bool strict = false);

struct CategoryScore {
  double accuracy = 0.0;  // percent
  int64_t count = 0;
};

// Sample-weighted mean: sum(acc * n) / sum(n).
double weighted_average(const std::map<Category, CategoryScore>& per_category);

std::map<Category, CategoryScore> per_category_accuracy(std::span<const CyclicResult> results);

// Lower-cases, replaces ASCII punctuation with spaces and splits on whitespace.
std::vector<std::string> caption_tokens(std::string_view text);

// BLEU-2 with max-reference clipping, closest-reference brevity penalty and
// no smoothing.
double bleu2(std::string_view candidate, std::span<const std::string> references);
double bleu2_corpus(std::span<const std::string> candidates,
                    std::span<const std::vector<std::string>> references);

inline constexpr double kRougeBeta = 1.2;

// LCS F-measure, (1 + b^2) P R / (R + b^2 P) with b = 1.2. With several
// references, P and R are each maximised over references first.
double rouge_l(std::string_view candidate, std::string_view reference);
double rouge_l_multi(std::string_view candidate, std::span<const std::string> references);

struct CiderResult {
  double score = 0.0;              // corpus mean
  std::vector<double> per_item;
};

inline constexpr double kCiderSigma = 6.0;

// CIDEr-D over n = 1..4: tf-idf vectors with document frequency taken over
// the reference sets, clipped cosine similarity, Gaussian length penalty
// (sigma 6, lengths counted in bigrams as in the reference scorer), averaged
// over n and references, scaled by 10. Throws CorpusTooSmall below two items.
CiderResult cider(std::span<const std::string> candidates,
                  std::span<const std::vector<std::string>> references);

struct CaptionMetrics {
  double bleu2 = 0.0;
  double rouge_l = 0.0;
  double cider = 0.0;
};

CaptionMetrics caption_metrics(std::span<const std::string> candidates,
                               std::span<const std::vector<std::string>> references);

struct EvalReport {
  std::map<Category, CategoryScore> per_category;
  double weighted_avg = 0.0;
  int64_t questions = 0;
  std::optional<CaptionMetrics> captions;
};

EvalReport build_report(const CyclicScore& score,
                        std::optional<CaptionMetrics> captions = std::nullopt);

}  // namespace valleyforge
