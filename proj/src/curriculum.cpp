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

#include "valleyforge/curriculum.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include "valleyforge/error.hpp"
#include "valleyforge/random.hpp"

namespace valleyforge {

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::S1: return "S1";
    case Stage::S1_5: return "S1_5";
    case Stage::S2: return "S2";
    case Stage::S3: return "S3";
  }
  return "S1";
}

std::optional<Stage> parse_stage(std::string_view name) {
  if (name == "S1") return Stage::S1;
  if (name == "S1_5") return Stage::S1_5;
  if (name == "S2") return Stage::S2;
  if (name == "S3") return Stage::S3;
  return std::nullopt;
}

std::string_view to_string(Trainable trainable) {
  return trainable == Trainable::ProjectorOnly ? "projector" : "projector+llm";
}

std::optional<Trainable> parse_trainable(std::string_view name) {
  if (name == "projector") return Trainable::ProjectorOnly;
  if (name == "projector+llm") return Trainable::ProjectorAndLLM;
  return std::nullopt;
}

StageConfig stage_config(Stage stage) {
  switch (stage) {
    case Stage::S1:
      return {Stage::S1, 1e-4, 0.0, 96, 1, Trainable::ProjectorOnly, 7'500'000};
    case Stage::S1_5:
      return {Stage::S1_5, 1e-5, 0.0, 96, 1, Trainable::ProjectorAndLLM, 8'000'000};
    case Stage::S2:
      return {Stage::S2, 1e-5, 0.0, 192, 1, Trainable::ProjectorAndLLM, 11'500'000};
    case Stage::S3:
      return {Stage::S3, 2e-6, 0.0, 192, 1, Trainable::ProjectorAndLLM, 200'000};
  }
  throw Error(ErrorCode::InvalidArgument, "unknown stage");
}

double cosine_lr(int64_t step, int64_t total_steps, double lr_max, double lr_min) {
  if (total_steps < 1 || step < 0 || step > total_steps || lr_min > lr_max) {
    throw Error(ErrorCode::InvalidArgument,
                "cosine_lr requires 0 <= step <= total_steps, total_steps >= 1, "
                "lr_min <= lr_max");
  }
  // Exact endpoints; cos(pi) rounds to -1 but the product need not cancel.
  if (step == 0) return lr_max;
  if (step == total_steps) return lr_min;
  const double phase = std::numbers::pi * static_cast<double>(step) /
                       static_cast<double>(total_steps);
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(phase));
}

Schedule annealed_order(std::span<const Sample> samples, bool enabled, uint64_t seed,
                        const ScheduleOptions& options) {
  if (options.batch_size < 1) {
    throw Error(ErrorCode::InvalidArgument, "batch_size must be >= 1");
  }
  for (const auto& s : samples) {
    if (s.quality_tier != 1 && s.quality_tier != 2) {
      throw Error(ErrorCode::InvalidArgument,
                  "sample '" + s.id + "' has quality_tier outside {1, 2}");
    }
  }

  Rng rng(seed);
  std::vector<const Sample*> order;
  order.reserve(samples.size());
  Schedule schedule;
  if (enabled) {
    std::vector<const Sample*> tier2;
    for (const auto& s : samples) (s.quality_tier == 1 ? order : tier2).push_back(&s);
    rng.shuffle(std::span(order));
    rng.shuffle(std::span(tier2));
    schedule.tier_boundary = order.size();
    order.insert(order.end(), tier2.begin(), tier2.end());
  } else {
    for (const auto& s : samples) order.push_back(&s);
    rng.shuffle(std::span(order));
  }

  const auto n = static_cast<int64_t>(order.size());
  schedule.total_steps = std::max<int64_t>(1, (n + options.batch_size - 1) / options.batch_size);
  schedule.entries.reserve(order.size());
  for (int64_t i = 0; i < n; ++i) {
    const int64_t step = i / options.batch_size;
    schedule.entries.push_back(
        {step, order[static_cast<size_t>(i)]->id,
         cosine_lr(step, schedule.total_steps, options.lr_max, options.lr_min)});
  }
  return schedule;
}

namespace {
std::string fill_template(const std::string& tmpl, std::string_view section) {
  std::string out = tmpl;
  const auto pos = out.find("{}");
  if (pos != std::string::npos) out.replace(pos, 2, section);
  return out;
}
}  // namespace

std::string CotMarkers::open_tag(std::string_view section) const {
  return fill_template(open_template, section);
}

std::string CotMarkers::close_tag(std::string_view section) const {
  return fill_template(close_template, section);
}

CotCheck validate_cot_structure(std::string_view response, const CotMarkers& markers) {
  CotCheck check;
  size_t last_open = 0;
  bool have_last = false;
  for (const auto& section : markers.sections) {
    const auto open = response.find(markers.open_tag(section));
    const auto close = open == std::string_view::npos
                           ? std::string_view::npos
                           : response.find(markers.close_tag(section), open);
    if (open == std::string_view::npos || close == std::string_view::npos) {
      check.missing.push_back(section);
      continue;
    }
    if (have_last && open < last_open) check.out_of_order.push_back(section);
    last_open = open;
    have_last = true;
  }
  check.ok = check.missing.empty() && check.out_of_order.empty();
  return check;
}

bool ends_with_prompt(std::string_view query, std::string_view prompt) {
  while (!query.empty() && std::isspace(static_cast<unsigned char>(query.back()))) {
    query.remove_suffix(1);
  }
  return query.ends_with(prompt);
}

std::string apply_cot_prompt(std::string_view query, std::string_view prompt) {
  if (ends_with_prompt(query, prompt)) return std::string(query);
  std::string out(query);
  if (!out.empty() && !std::isspace(static_cast<unsigned char>(out.back()))) out += ' ';
  out += prompt;
  return out;
}

std::vector<InstructionRecord> mix_cot(std::span<const InstructionRecord> cot,
                                       std::span<const InstructionRecord> plain,
                                       const CotMixConfig& cfg) {
  if (cot.empty() || plain.empty()) {
    throw Error(ErrorCode::EmptyPool, "mix_cot needs non-empty CoT and plain pools");
  }
  if (cfg.ratio_cot < 1 || cfg.ratio_plain < 1) {
    throw Error(ErrorCode::InvalidArgument, "mix ratio components must be >= 1");
  }

  std::vector<std::string> bad;
  for (const auto& r : cot) {
    if (!validate_cot_structure(r.response, cfg.markers).ok) bad.push_back(r.sample.id);
  }
  if (!bad.empty()) throw StructureViolationError(std::move(bad));

  std::vector<size_t> cot_idx(cot.size()), plain_idx(plain.size());
  for (size_t i = 0; i < cot.size(); ++i) cot_idx[i] = i;
  for (size_t i = 0; i < plain.size(); ++i) plain_idx[i] = i;
  Rng cot_rng(hash_combine(cfg.seed, 1));
  Rng plain_rng(hash_combine(cfg.seed, 2));
  cot_rng.shuffle(std::span(cot_idx));
  plain_rng.shuffle(std::span(plain_idx));

  const auto rc = static_cast<size_t>(cfg.ratio_cot);
  const auto rp = static_cast<size_t>(cfg.ratio_plain);
  const size_t rounds = std::min(cot.size() / rc, plain.size() / rp);

  std::vector<InstructionRecord> out;
  out.reserve(rounds * (rc + rp));
  for (size_t round = 0; round < rounds; ++round) {
    for (size_t k = 0; k < rc; ++k) {
      InstructionRecord r = cot[cot_idx[round * rc + k]];
      r.query = apply_cot_prompt(r.query, cfg.cot_prompt);
      r.cot_prompt_applied = true;
      r.sample.is_cot = true;
      out.push_back(std::move(r));
    }
    for (size_t k = 0; k < rp; ++k) {
      InstructionRecord r = plain[plain_idx[round * rp + k]];
      r.cot_prompt_applied = false;
      r.sample.is_cot = false;
      out.push_back(std::move(r));
    }
  }
  if (cfg.global_shuffle) {
    Rng mix_rng(hash_combine(cfg.seed, 3));
    mix_rng.shuffle(std::span(out));
  }
  return out;
}

}  // namespace valleyforge
