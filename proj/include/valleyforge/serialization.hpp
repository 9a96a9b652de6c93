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
#include <functional>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "valleyforge/budget.hpp"
#include "valleyforge/core_model.hpp"
#include "valleyforge/curriculum.hpp"
#include "valleyforge/error.hpp"
#include "valleyforge/eval.hpp"
#include "valleyforge/packing.hpp"
#include "valleyforge/projector_math.hpp"
#include "valleyforge/tiling.hpp"

namespace valleyforge {

using json = nlohmann::json;

// JSONL record schemas. Parsers throw Error(Parse) naming the offending field.
json to_json(const Modality& m);
json to_json(const Sample& s);
Sample sample_from_json(const json& j);

json to_json(const TilingPlan& p);
json to_json(const TokenBudget& b);
TokenBudget budget_from_json(const json& j);
json to_json(const CorpusStats& s, int64_t bucket_width);

json to_json(const Pack& p);
Pack pack_from_json(const json& j);
json to_json(const PackingStats& s);

json to_json(const StageConfig& c);
StageConfig stage_config_from_json(const json& j);
json to_json(const ScheduleEntry& e);

// Core sample schema plus `query`, `response` and `cot_prompt_applied`.
json to_json(const InstructionRecord& r);
InstructionRecord instruction_from_json(const json& j);

json to_json(const MCQuestion& q);
MCQuestion question_from_json(const json& j);
json to_json(const CaptionMetrics& m);
json to_json(const EvalReport& r);

json projector_report(const ProjectorSpec& spec, int64_t vocab_size, double base_lr);

// Every configurable knob, one section per pipeline stage.
struct PipelineConfig {
  VisionConfig vision;
  EagleConfig eagle;
  PackConfig pack;
  int64_t pack_shards = 1;
  StageConfig schedule = stage_config(Stage::S2);
  bool anneal = true;
  CotMixConfig cot;
  ProjectorSpec projector;
  int64_t vocab_size = 151'936;
  double projector_base_lr = 1e-4;
  int64_t bucket_width = 256;
  bool eval_strict = false;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

json to_json(const PipelineConfig& c);

// Overlays `j` on the defaults. Unknown keys and type errors are collected
// and thrown together as a ConfigError.
PipelineConfig config_from_json(const json& j);

// 16 hex digits of a stable hash over the canonical resolved config.
std::string config_hash(const PipelineConfig& c);

json manifest_header(std::string_view schema, const PipelineConfig& c);

bool is_manifest_header(const json& j);

struct JsonlLine {
  size_t line_no = 0;  // 1-based
  json value;
};

struct JsonlError {
  size_t line_no = 0;
  std::string message;
};

// Parses every non-blank line; malformed lines are reported, not thrown.
// A leading manifest header line is skipped.
void read_jsonl(std::istream& in, const std::function<void(JsonlLine&&)>& on_record,
                std::vector<JsonlError>& errors);

}  // namespace valleyforge
