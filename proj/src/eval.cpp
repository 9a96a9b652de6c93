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

#include "valleyforge/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <unordered_map>

#include "valleyforge/error.hpp"

namespace valleyforge {

std::string_view to_string(Category c) {
  switch (c) {
    case Category::IU: return "IU";
    case Category::OCR: return "OCR";
    case Category::DS: return "DS";
    case Category::MIU: return "MIU";
    case Category::PTU: return "PTU";
    case Category::GVU: return "GVU";
    case Category::PEU: return "PEU";
    case Category::AL: return "AL";
    case Category::VCR: return "VCR";
  }
  return "IU";
}

std::optional<Category> parse_category(std::string_view name) {
  for (auto c : kAllCategories) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

void validate(const MCQuestion& q) {
  if (q.qid.empty()) throw Error(ErrorCode::InvalidArgument, "question id is empty");
  if (q.correct_index < 0 || q.correct_index > 3) {
    throw Error(ErrorCode::InvalidArgument,
                "question '" + q.qid + "' correct_index must be in 0..3");
  }
}

std::array<MCQuestion, 4> expand_cyclic(const MCQuestion& q) {
  validate(q);
  std::array<MCQuestion, 4> out;
  for (int k = 0; k < 4; ++k) {
    MCQuestion v = q;
    for (int i = 0; i < 4; ++i) v.options[i] = q.options[(i + q.correct_index - k + 4) % 4];
    v.correct_index = k;
    v.rotation = k;
    out[k] = std::move(v);
  }
  return out;
}

namespace {

bool word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' || c == '\'';
}

std::optional<int> find_standalone(std::string_view s, bool upper_only) {
  for (size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (!upper_only) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (c < 'A' || c > 'D') continue;
    const bool left = i == 0 || !word_char(s[i - 1]);
    const bool right = i + 1 == s.size() || !word_char(s[i + 1]);
    if (left && right) return c - 'A';
  }
  return std::nullopt;
}

}  // namespace

std::optional<int> extract_choice(std::string_view response, bool strict) {
  if (strict) {
    size_t i = 0;
    while (i < response.size() && std::isspace(static_cast<unsigned char>(response[i]))) ++i;
    if (i == response.size()) return std::nullopt;
    const char c = response[i];
    if (c < 'A' || c > 'D') return std::nullopt;
    if (i + 1 < response.size() && word_char(response[i + 1])) return std::nullopt;
    return c - 'A';
  }
  if (auto upper = find_standalone(response, true)) return upper;
  return find_standalone(response, false);
}

CyclicScore score_cyclic(std::span<const MCQuestion> questions,
                         const ResponseMap& responses, bool strict) {
  CyclicScore score;
  score.results.reserve(questions.size());
  int64_t passed = 0;
  for (const auto& q : questions) {
    const auto variants = expand_cyclic(q);
    CyclicResult r;
    r.qid = q.qid;
    r.category = q.category;
    r.passed = true;
    for (int k = 0; k < 4; ++k) {
      const auto it = responses.find({q.qid, k});
      if (it == responses.end()) throw MissingResponseError(q.qid, k);
      const auto choice = extract_choice(it->second, strict);
      r.per_rotation[k] = choice && *choice == variants[k].correct_index;
      r.passed = r.passed && r.per_rotation[k];
    }
    passed += r.passed ? 1 : 0;
    score.results.push_back(std::move(r));
  }
  score.accuracy = questions.empty() ? 0.0
                                     : 100.0 * static_cast<double>(passed) /
                                           static_cast<double>(questions.size());
  return score;
}

double weighted_average(const std::map<Category, CategoryScore>& per_category) {
  double weighted = 0.0;
  int64_t n = 0;
  for (const auto& [cat, s] : per_category) {
    if (s.count < 1) {
      throw Error(ErrorCode::InvalidArgument,
                  "category " + std::string(to_string(cat)) + " has count < 1");
    }
    weighted += s.accuracy * static_cast<double>(s.count);
    n += s.count;
  }
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "weighted_average of no categories");
  return weighted / static_cast<double>(n);
}

std::map<Category, CategoryScore> per_category_accuracy(std::span<const CyclicResult> results) {
  std::map<Category, std::pair<int64_t, int64_t>> tally;  // passed, total
  for (const auto& r : results) {
    auto& t = tally[r.category];
    t.first += r.passed ? 1 : 0;
    ++t.second;
  }
  std::map<Category, CategoryScore> out;
  for (const auto& [cat, t] : tally) {
    out[cat] = {100.0 * static_cast<double>(t.first) / static_cast<double>(t.second), t.second};
  }
  return out;
}

std::vector<std::string> caption_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isspace(u) || std::ispunct(u)) {
      if (!cur.empty()) tokens.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += static_cast<char>(std::tolower(u));
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

namespace {

using NgramCounts = std::unordered_map<std::string, double>;

std::string ngram_key(const std::vector<std::string>& toks, size_t start, size_t n) {
  std::string key;
  for (size_t i = start; i < start + n; ++i) {
    if (i > start) key += '\x1f';
    key += toks[i];
  }
  return key;
}

NgramCounts ngrams(const std::vector<std::string>& toks, size_t n) {
  NgramCounts counts;
  for (size_t i = 0; i + n <= toks.size(); ++i) counts[ngram_key(toks, i, n)] += 1.0;
  return counts;
}

struct BleuAccum {
  double matches[2] = {0, 0};
  double totals[2] = {0, 0};
  double cand_len = 0;
  double ref_len = 0;
};

void bleu_add(BleuAccum& acc, std::string_view candidate,
              std::span<const std::string> references) {
  const auto cand = caption_tokens(candidate);
  std::vector<std::vector<std::string>> refs;
  for (const auto& r : references) refs.push_back(caption_tokens(r));

  for (size_t n = 1; n <= 2; ++n) {
    const auto cand_counts = ngrams(cand, n);
    NgramCounts max_ref;
    for (const auto& r : refs) {
      for (const auto& [g, c] : ngrams(r, n)) max_ref[g] = std::max(max_ref[g], c);
    }
    for (const auto& [g, c] : cand_counts) {
      const auto it = max_ref.find(g);
      if (it != max_ref.end()) acc.matches[n - 1] += std::min(c, it->second);
    }
    acc.totals[n - 1] += cand.size() >= n ? static_cast<double>(cand.size() - n + 1) : 0.0;
  }

  // Closest reference length; ties go to the shorter one.
  const auto c = static_cast<double>(cand.size());
  double best = -1;
  for (const auto& r : refs) {
    const auto len = static_cast<double>(r.size());
    if (best < 0 || std::abs(len - c) < std::abs(best - c) ||
        (std::abs(len - c) == std::abs(best - c) && len < best)) {
      best = len;
    }
  }
  acc.cand_len += c;
  acc.ref_len += std::max(best, 0.0);
}

double bleu_finish(const BleuAccum& acc) {
  if (acc.totals[0] == 0 || acc.totals[1] == 0) return 0.0;
  const double p1 = acc.matches[0] / acc.totals[0];
  const double p2 = acc.matches[1] / acc.totals[1];
  if (p1 == 0 || p2 == 0) return 0.0;
  const double bp = acc.cand_len > acc.ref_len ? 1.0 : std::exp(1.0 - acc.ref_len / acc.cand_len);
  return bp * std::sqrt(p1 * p2);
}

size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (size_t i = 1; i <= a.size(); ++i) {
    for (size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_f(double p, double r) {
  if (p == 0 || r == 0) return 0.0;
  const double b2 = kRougeBeta * kRougeBeta;
  return (1 + b2) * p * r / (r + b2 * p);
}

void check_parallel(size_t candidates, size_t references) {
  if (candidates != references) {
    throw Error(ErrorCode::InvalidArgument, "candidates and references differ in length");
  }
}

}  // namespace

double bleu2(std::string_view candidate, std::span<const std::string> references) {
  BleuAccum acc;
  bleu_add(acc, candidate, references);
  return bleu_finish(acc);
}

double bleu2_corpus(std::span<const std::string> candidates,
                    std::span<const std::vector<std::string>> references) {
  check_parallel(candidates.size(), references.size());
  BleuAccum acc;
  for (size_t i = 0; i < candidates.size(); ++i) bleu_add(acc, candidates[i], references[i]);
  return bleu_finish(acc);
}

double rouge_l(std::string_view candidate, std::string_view reference) {
  const std::string ref(reference);
  return rouge_l_multi(candidate, std::span(&ref, 1));
}

double rouge_l_multi(std::string_view candidate, std::span<const std::string> references) {
  const auto cand = caption_tokens(candidate);
  double best_p = 0, best_r = 0;
  for (const auto& reference : references) {
    const auto ref = caption_tokens(reference);
    if (cand.empty() && ref.empty()) return 1.0;
    if (cand.empty() || ref.empty()) continue;
    const auto lcs = static_cast<double>(lcs_length(cand, ref));
    best_p = std::max(best_p, lcs / static_cast<double>(cand.size()));
    best_r = std::max(best_r, lcs / static_cast<double>(ref.size()));
  }
  return rouge_f(best_p, best_r);
}

CiderResult cider(std::span<const std::string> candidates,
                  std::span<const std::vector<std::string>> references) {
  check_parallel(candidates.size(), references.size());
  if (candidates.size() < 2) {
    throw Error(ErrorCode::CorpusTooSmall, "CIDEr needs at least two items");
  }
  constexpr size_t kMaxN = 4;
  using Cooked = std::array<NgramCounts, kMaxN>;
  auto cook = [](std::string_view text) {
    const auto toks = caption_tokens(text);
    Cooked c;
    for (size_t n = 1; n <= kMaxN; ++n) c[n - 1] = ngrams(toks, n);
    return c;
  };

  std::vector<Cooked> hyps;
  std::vector<std::vector<Cooked>> refs;
  std::unordered_map<std::string, double> df[kMaxN];
  for (size_t i = 0; i < candidates.size(); ++i) {
    if (references[i].empty()) {
      throw Error(ErrorCode::InvalidArgument, "caption item without references");
    }
    hyps.push_back(cook(candidates[i]));
    refs.emplace_back();
    std::set<std::string> seen[kMaxN];
    for (const auto& r : references[i]) {
      refs.back().push_back(cook(r));
      for (size_t n = 0; n < kMaxN; ++n) {
        for (const auto& [g, c] : refs.back().back()[n]) seen[n].insert(g);
      }
    }
    for (size_t n = 0; n < kMaxN; ++n) {
      for (const auto& g : seen[n]) df[n][g] += 1.0;
    }
  }
  const double log_items = std::log(static_cast<double>(candidates.size()));

  struct Vec {
    std::array<NgramCounts, kMaxN> w;
    std::array<double, kMaxN> norm{};
    double length = 0;
  };
  auto to_vec = [&](const Cooked& c) {
    Vec v;
    for (size_t n = 0; n < kMaxN; ++n) {
      for (const auto& [g, tf] : c[n]) {
        const auto it = df[n].find(g);
        const double d = it == df[n].end() ? 1.0 : std::max(1.0, it->second);
        const double weight = tf * (log_items - std::log(d));
        v.w[n][g] = weight;
        v.norm[n] += weight * weight;
      }
      v.norm[n] = std::sqrt(v.norm[n]);
    }
    for (const auto& [g, tf] : c[1]) v.length += tf;
    return v;
  };

  CiderResult result;
  for (size_t i = 0; i < hyps.size(); ++i) {
    const Vec h = to_vec(hyps[i]);
    std::array<double, kMaxN> total{};
    for (const auto& rc : refs[i]) {
      const Vec r = to_vec(rc);
      const double delta = h.length - r.length;
      const double penalty = std::exp(-(delta * delta) / (2 * kCiderSigma * kCiderSigma));
      for (size_t n = 0; n < kMaxN; ++n) {
        double val = 0;
        for (const auto& [g, hw] : h.w[n]) {
          const auto it = r.w[n].find(g);
          if (it != r.w[n].end()) val += std::min(hw, it->second) * it->second;
        }
        if (h.norm[n] != 0 && r.norm[n] != 0) val /= h.norm[n] * r.norm[n];
        total[n] += val * penalty;
      }
    }
    double mean = 0;
    for (double t : total) mean += t;
    mean /= static_cast<double>(kMaxN);
    mean /= static_cast<double>(refs[i].size());
    result.per_item.push_back(mean * 10.0);
  }
  double sum = 0;
  for (double s : result.per_item) sum += s;
  result.score = sum / static_cast<double>(result.per_item.size());
  return result;
}

CaptionMetrics caption_metrics(std::span<const std::string> candidates,
                               std::span<const std::vector<std::string>> references) {
  check_parallel(candidates.size(), references.size());
  CaptionMetrics m;
  m.bleu2 = bleu2_corpus(candidates, references);
  double rouge = 0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    rouge += rouge_l_multi(candidates[i], references[i]);
  }
  m.rouge_l = candidates.empty() ? 0.0 : rouge / static_cast<double>(candidates.size());
  m.cider = cider(candidates, references).score;
  return m;
}

EvalReport build_report(const CyclicScore& score, std::optional<CaptionMetrics> captions) {
  EvalReport report;
  report.per_category = per_category_accuracy(score.results);
  report.questions = static_cast<int64_t>(score.results.size());
  report.weighted_avg = report.per_category.empty() ? 0.0 : weighted_average(report.per_category);
  report.captions = captions;
  return report;
}

}  // namespace valleyforge
