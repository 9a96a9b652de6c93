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
#include <string_view>
#include <vector>

#include "valleyforge/core_model.hpp"

namespace valleyforge {

enum class Stage { S1, S1_5, S2, S3 };
enum class Trainable { ProjectorOnly, ProjectorAndLLM };

std::string_view to_string(Stage stage);
std::optional<Stage> parse_stage(std::string_view name);
std::string_view to_string(Trainable trainable);
std::optional<Trainable> parse_trainable(std::string_view name);

struct StageConfig {
  Stage stage = Stage::S1;
  double lr_max = 0.0;
  double lr_min = 0.0;
  int64_t batch_size = 1;
  int64_t epochs = 1;
  Trainable trainable = Trainable::ProjectorOnly;
  int64_t dataset_size_hint = 0;

  friend bool operator==(const StageConfig&, const StageConfig&) = default;
};

// Four-stage recipe defaults:
//   S1   1e-4  batch  96  projector only        7.5M samples
//   S1_5 1e-5  batch  96  projector + LLM       8M
//   S2   1e-5  batch 192  projector + LLM      11.5M
//   S3   2e-6  batch 192  projector + LLM       0.2M
// All run one epoch with lr_min = 0.
StageConfig stage_config(Stage stage);

// lr_min + (lr_max - lr_min) * (1 + cos(pi * step / total_steps)) / 2
double cosine_lr(int64_t step, int64_t total_steps, double lr_max, double lr_min);

struct ScheduleEntry {
  int64_t step = 0;
  std::string sample_id;
  double lr = 0.0;

  friend bool operator==(const ScheduleEntry&, const ScheduleEntry&) = default;
};

struct Schedule {
  std::vector<ScheduleEntry> entries;
  int64_t total_steps = 0;
  // Index of the first tier-2 entry when annealing; nullopt otherwise.
  std::optional<size_t> tier_boundary;

  friend bool operator==(const Schedule&, const Schedule&) = default;
};

struct ScheduleOptions {
  double lr_max = 1e-5;
  double lr_min = 0.0;
  int64_t batch_size = 1;
};

// Annealed ordering: tier-1 samples shuffled, then tier-2 samples shuffled,
// both from one seeded stream. Disabled, the whole list is shuffled with the
// same stream ("uniform mixed"). Sample i runs at step i / batch_size and the
// learning rate follows cosine_lr over ceil(n / batch_size) steps.
Schedule annealed_order(std::span<const Sample> samples, bool enabled, uint64_t seed,
                        const ScheduleOptions& options = {});

struct CotMarkers {
  std::vector<std::string> sections{"summary", "caption", "reasoning", "conclusion"};
  // "{}" is replaced by the section name.
  std::string open_template = "<{}>";
  std::string close_template = "</{}>";

  std::string open_tag(std::string_view section) const;
  std::string close_tag(std::string_view section) const;

  friend bool operator==(const CotMarkers&, const CotMarkers&) = default;
};

struct CotCheck {
  bool ok = false;
  std::vector<std::string> missing;
  // Sections present but opened before a section that must precede them.
  std::vector<std::string> out_of_order;
};

CotCheck validate_cot_structure(std::string_view response, const CotMarkers& markers = {});

inline constexpr std::string_view kCotPrompt = "Please think step by step.";

struct CotMixConfig {
  std::string cot_prompt{kCotPrompt};
  int64_t ratio_cot = 1;
  int64_t ratio_plain = 1;
  CotMarkers markers;
  uint64_t seed = 0;
  // Shuffle the interleaved result instead of keeping strict alternation.
  bool global_shuffle = false;

  friend bool operator==(const CotMixConfig&, const CotMixConfig&) = default;
};

struct InstructionRecord {
  Sample sample;
  std::string query;
  std::string response;
  bool cot_prompt_applied = false;

  friend bool operator==(const InstructionRecord&, const InstructionRecord&) = default;
};

bool ends_with_prompt(std::string_view query, std::string_view prompt);

// Appends the prompt (space-separated) unless the query already ends with it.
std::string apply_cot_prompt(std::string_view query, std::string_view prompt);

// Interleaves seeded shuffles of both pools, ratio_cot CoT records then
// ratio_plain plain records per round, for as many full rounds as both pools
// allow. CoT records get the prompt and is_cot = true.
// Throws EmptyPool, or StructureViolationError naming every CoT record whose
// response fails validate_cot_structure.
std::vector<InstructionRecord> mix_cot(std::span<const InstructionRecord> cot,
                                       std::span<const InstructionRecord> plain,
                                       const CotMixConfig& cfg);

}  // namespace valleyforge
