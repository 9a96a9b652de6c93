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

#include "valleyforge/serialization.hpp"

#include <cstdio>
#include <set>

#include "valleyforge/random.hpp"

namespace valleyforge {

namespace {

[[noreturn]] void parse_fail(std::string_view what) {
  throw Error(ErrorCode::Parse, std::string(what));
}

const json& require(const json& j, const char* key) {
  if (!j.is_object()) parse_fail("record must be a JSON object");
  const auto it = j.find(key);
  if (it == j.end()) parse_fail(std::string("missing field '") + key + "'");
  return *it;
}

int64_t get_int(const json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_number_integer()) parse_fail(std::string("field '") + key + "' must be an integer");
  return v.get<int64_t>();
}

double get_double(const json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_number()) parse_fail(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

bool get_bool(const json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_boolean()) parse_fail(std::string("field '") + key + "' must be a boolean");
  return v.get<bool>();
}

std::string get_string(const json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_string()) parse_fail(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

bool has(const json& j, const char* key) {
  return j.is_object() && j.contains(key) && !j.at(key).is_null();
}

Modality modality_from_json(const json& j) {
  if (!j.is_object()) parse_fail("field 'modality' must be an object");
  const auto type = get_string(j, "type");
  const auto kind = parse_modality_kind(type);
  if (!kind) parse_fail("unknown modality type '" + type + "'");
  switch (*kind) {
    case ModalityKind::Text: return Modality::text();
    case ModalityKind::SingleImage: return Modality::single_image();
    case ModalityKind::MultiImage: return Modality::multi_image(get_int(j, "count"));
    case ModalityKind::Video: return Modality::video(get_int(j, "count"));
  }
  return Modality::text();
}

std::optional<ModalityKind> modality_kind_field(const json& j, const char* key) {
  const auto name = get_string(j, key);
  auto kind = parse_modality_kind(name);
  if (!kind) parse_fail("unknown modality '" + name + "'");
  return kind;
}

}  // namespace

json to_json(const Modality& m) {
  json j{{"type", to_string(m.kind)}};
  if (m.kind == ModalityKind::MultiImage || m.kind == ModalityKind::Video) j["count"] = m.count;
  return j;
}

json to_json(const Sample& s) {
  json dims = json::array();
  for (const auto& d : s.image_dims) dims.push_back({d.width, d.height});
  json j{{"id", s.id},
         {"modality", to_json(s.modality)},
         {"image_dims", std::move(dims)},
         {"text_tokens", s.text_tokens},
         {"quality_tier", s.quality_tier},
         {"is_cot", s.is_cot}};
  if (s.payload_path) j["payload_path"] = *s.payload_path;
  return j;
}

Sample sample_from_json(const json& j) {
  Sample s;
  s.id = get_string(j, "id");
  s.modality = modality_from_json(require(j, "modality"));
  const auto& dims = require(j, "image_dims");
  if (!dims.is_array()) parse_fail("field 'image_dims' must be an array");
  for (const auto& d : dims) {
    if (!d.is_array() || d.size() != 2 || !d[0].is_number_integer() ||
        !d[1].is_number_integer()) {
      parse_fail("image_dims entries must be [width, height] integer pairs");
    }
    s.image_dims.push_back({d[0].get<int64_t>(), d[1].get<int64_t>()});
  }
  s.text_tokens = get_int(j, "text_tokens");
  s.quality_tier = has(j, "quality_tier") ? static_cast<int>(get_int(j, "quality_tier")) : 1;
  s.is_cot = has(j, "is_cot") ? get_bool(j, "is_cot") : false;
  if (has(j, "payload_path")) s.payload_path = get_string(j, "payload_path");
  return s;
}

json to_json(const TilingPlan& p) {
  json rects = json::array();
  for (const auto& r : p.tile_rects) rects.push_back({r.x, r.y, r.w, r.h});
  return {{"grid", {{"cols", p.grid.cols}, {"rows", p.grid.rows}}},
          {"resized_width", p.resized_width},
          {"resized_height", p.resized_height},
          {"tile_rects", std::move(rects)},
          {"include_thumbnail", p.include_thumbnail},
          {"tokens_per_tile", p.tokens_per_tile},
          {"total_vision_tokens", p.total_vision_tokens}};
}

json to_json(const TokenBudget& b) {
  return {{"sample_id", b.sample_id},     {"modality", to_string(b.modality)},
          {"vision_tokens", b.vision_tokens}, {"eagle_tokens", b.eagle_tokens},
          {"text_tokens", b.text_tokens}, {"overhead_tokens", b.overhead_tokens},
          {"total", b.total},             {"mode", to_string(b.mode)}};
}

TokenBudget budget_from_json(const json& j) {
  TokenBudget b;
  b.sample_id = get_string(j, "sample_id");
  b.modality = has(j, "modality") ? *modality_kind_field(j, "modality") : ModalityKind::Text;
  b.vision_tokens = has(j, "vision_tokens") ? get_int(j, "vision_tokens") : 0;
  b.eagle_tokens = has(j, "eagle_tokens") ? get_int(j, "eagle_tokens") : 0;
  b.text_tokens = has(j, "text_tokens") ? get_int(j, "text_tokens") : 0;
  b.overhead_tokens = has(j, "overhead_tokens") ? get_int(j, "overhead_tokens") : 0;
  b.total = get_int(j, "total");
  if (has(j, "mode")) {
    const auto mode = get_string(j, "mode");
    if (mode != "train" && mode != "infer") parse_fail("field 'mode' must be train|infer");
    b.mode = mode == "train" ? BudgetMode::Train : BudgetMode::Infer;
  }
  return b;
}

json to_json(const CorpusStats& s, int64_t bucket_width) {
  json hist = json::array();
  for (const auto& h : s.histogram) {
    hist.push_back({{"bucket_start", h.start}, {"bucket_end", h.end}, {"count", h.count}});
  }
  json per_mod = json::object();
  for (const auto& [kind, n] : s.per_modality_count) {
    per_mod[std::string(to_string(kind))] = {{"count", n},
                                             {"mean", s.per_modality_mean.at(kind)}};
  }
  return {{"count", s.count}, {"mean", s.mean},          {"p50", s.p50},
          {"p90", s.p90},     {"p99", s.p99},            {"min", s.min},
          {"max", s.max},     {"bucket_width", bucket_width}, {"histogram", std::move(hist)},
          {"per_modality", std::move(per_mod)}, {"percentile_method", "nearest-rank"}};
}

json to_json(const Pack& p) {
  json segs = json::array();
  for (const auto& s : p.segments) segs.push_back({{"id", s.id}, {"len", s.length}});
  return {{"pack_id", p.pack_id},
          {"segments", std::move(segs)},
          {"total_len", p.total_len},
          {"pad_len", p.pad_len}};
}

Pack pack_from_json(const json& j) {
  Pack p;
  p.pack_id = get_int(j, "pack_id");
  const auto& segs = require(j, "segments");
  if (!segs.is_array()) parse_fail("field 'segments' must be an array");
  for (const auto& s : segs) p.segments.push_back({get_string(s, "id"), get_int(s, "len")});
  p.total_len = get_int(j, "total_len");
  p.pad_len = get_int(j, "pad_len");
  return p;
}

json to_json(const PackingStats& s) {
  return {{"packs", s.packs},
          {"samples", s.samples},
          {"max_len", s.max_len},
          {"avg_cases_per_pack", s.avg_cases_per_pack()},
          {"padded_tokens_before", s.padded_tokens_before()},
          {"padded_tokens_after", s.padded_tokens_after()},
          {"est_speedup", s.est_speedup()},
          {"baseline", "pad-to-max_len"}};
}

json to_json(const StageConfig& c) {
  return {{"stage", to_string(c.stage)},
          {"lr_max", c.lr_max},
          {"lr_min", c.lr_min},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"trainable", to_string(c.trainable)},
          {"dataset_size_hint", c.dataset_size_hint}};
}

StageConfig stage_config_from_json(const json& j) {
  StageConfig c;
  const auto stage = get_string(j, "stage");
  const auto parsed = parse_stage(stage);
  if (!parsed) parse_fail("unknown stage '" + stage + "'");
  c.stage = *parsed;
  c.lr_max = get_double(j, "lr_max");
  c.lr_min = get_double(j, "lr_min");
  c.batch_size = get_int(j, "batch_size");
  c.epochs = get_int(j, "epochs");
  const auto trainable = get_string(j, "trainable");
  const auto t = parse_trainable(trainable);
  if (!t) parse_fail("unknown trainable '" + trainable + "'");
  c.trainable = *t;
  c.dataset_size_hint = get_int(j, "dataset_size_hint");
  return c;
}

json to_json(const ScheduleEntry& e) {
  return {{"step", e.step}, {"sample_id", e.sample_id}, {"lr", e.lr}};
}

json to_json(const InstructionRecord& r) {
  json j = to_json(r.sample);
  j["query"] = r.query;
  j["response"] = r.response;
  j["cot_prompt_applied"] = r.cot_prompt_applied;
  return j;
}

InstructionRecord instruction_from_json(const json& j) {
  InstructionRecord r;
  r.sample = sample_from_json(j);
  r.query = has(j, "query") ? get_string(j, "query") : std::string();
  r.response = has(j, "response") ? get_string(j, "response") : std::string();
  r.cot_prompt_applied = has(j, "cot_prompt_applied") ? get_bool(j, "cot_prompt_applied") : false;
  return r;
}

json to_json(const MCQuestion& q) {
  return {{"qid", q.qid},
          {"stem", q.stem},
          {"options", q.options},
          {"correct_index", q.correct_index},
          {"category", to_string(q.category)},
          {"modality", to_json(q.modality)}};
}

MCQuestion question_from_json(const json& j) {
  MCQuestion q;
  q.qid = get_string(j, "qid");
  q.stem = has(j, "stem") ? get_string(j, "stem") : std::string();
  const auto& opts = require(j, "options");
  if (!opts.is_array() || opts.size() != 4) parse_fail("field 'options' must hold exactly 4 texts");
  for (size_t i = 0; i < 4; ++i) {
    if (!opts[i].is_string()) parse_fail("field 'options' must hold strings");
    q.options[i] = opts[i].get<std::string>();
  }
  q.correct_index = static_cast<int>(get_int(j, "correct_index"));
  if (q.correct_index < 0 || q.correct_index > 3) parse_fail("field 'correct_index' must be 0..3");
  const auto cat = get_string(j, "category");
  const auto c = parse_category(cat);
  if (!c) parse_fail("unknown category '" + cat + "'");
  q.category = *c;
  if (has(j, "modality")) q.modality = modality_from_json(j.at("modality"));
  return q;
}

json to_json(const CaptionMetrics& m) {
  return {{"bleu2", m.bleu2},
          {"rouge_l", m.rouge_l},
          {"rouge_l_beta", kRougeBeta},
          {"cider", m.cider},
          {"cider_variant", "CIDEr-D sigma=6 x10"},
          {"meteor", nullptr}};
}

json to_json(const EvalReport& r) {
  json per = json::object();
  for (const auto& [cat, s] : r.per_category) {
    per[std::string(to_string(cat))] = {{"accuracy", s.accuracy}, {"count", s.count}};
  }
  json j{{"per_category", std::move(per)},
         {"weighted_avg", r.weighted_avg},
         {"questions", r.questions},
         {"protocol", "cyclic-4"}};
  j["caption_metrics"] = r.captions ? to_json(*r.captions) : json(nullptr);
  return j;
}

json projector_report(const ProjectorSpec& spec, int64_t vocab_size, double base_lr) {
  auto variant_json = [](const ProjectorSpec& s) {
    json tensors = json::array();
    int64_t enumerated = 0;
    for (const auto& t : projector_tensors(s)) {
      tensors.push_back({{"name", t.name}, {"shape", t.dims}, {"params", t.elements()}});
      enumerated += t.elements();
    }
    const bool conv = s.variant == ProjectorVariant::ConvAdapter;
    return json{{"token_compress", conv ? "Conv" : "PixelShuffle"},
                {"factor", s.factor},
                {"mlp_input_dim", conv ? s.d_vis : s.factor * s.factor * s.d_vis},
                {"mlp_hidden_size", s.d_h},
                {"d_vis", s.d_vis},
                {"d_llm", s.d_llm},
                {"tensors", std::move(tensors)},
                {"total_params", projector_param_count(s)},
                {"enumerated_params", enumerated}};
  };

  ProjectorSpec conv = spec;
  conv.variant = ProjectorVariant::ConvAdapter;
  ProjectorSpec shuffle = spec;
  shuffle.variant = ProjectorVariant::PixelShuffle;

  constexpr int64_t kReferenceParams = 163'000'000;
  const int64_t total = projector_param_count(spec);

  json grid{{"input_grid", {27, 27}}};
  const auto co = conv_out_grid(27, 27, spec.factor);
  grid["conv_out_grid"] = {co.rows, co.cols};
  try {
    const auto ps = pixelshuffle_out(27, 27, spec.factor);
    grid["pixelshuffle_out_grid"] = {ps.grid.rows, ps.grid.cols};
    grid["pixelshuffle_error"] = nullptr;
  } catch (const Error& e) {
    grid["pixelshuffle_out_grid"] = nullptr;
    grid["pixelshuffle_error"] = to_string(e.code());
  }

  const double width_factor = static_cast<double>(spec.d_h) / static_cast<double>(spec.d_llm);
  return {{"selected", spec.variant == ProjectorVariant::ConvAdapter ? "Conv" : "PixelShuffle"},
          {"softmax_vocab", spec.softmax_vocab},
          {"total_params", total},
          {"reference_params", kReferenceParams},
          {"relative_error", static_cast<double>(total - kReferenceParams) /
                                 static_cast<double>(kReferenceParams)},
          {"composition", "weights + biases, no normalization layers"},
          {"comparison", json::array({variant_json(shuffle), variant_json(conv)})},
          {"visual_vocab_dim", {{"vocab_size", vocab_size},
                                {"d_h", visual_vocab_dim(vocab_size)}}},
          {"lr_scaling", {{"base_lr", base_lr},
                          {"width_factor", width_factor},
                          {"scaled_lr", lr_scale(base_lr, width_factor)}}},
          {"token_grid", std::move(grid)}};
}

ConfigError::ConfigError(std::vector<std::string> problems)
    : Error(ErrorCode::Config,
            [&] {
              std::string msg = "invalid config:";
              for (const auto& p : problems) msg += "\n  " + p;
              return msg;
            }()),
      problems_(std::move(problems)) {}

namespace {

std::string_view variant_name(ProjectorVariant v) {
  return v == ProjectorVariant::ConvAdapter ? "conv_adapter" : "pixel_shuffle";
}

// Walks one config section, overlaying known keys and recording problems.
class SectionReader {
 public:
  SectionReader(const json& root, std::string name, std::vector<std::string>& problems)
      : name_(std::move(name)), problems_(problems) {
    const auto it = root.find(name_);
    if (it == root.end()) return;
    if (!it->is_object()) {
      problems_.push_back(name_ + ": must be an object");
      return;
    }
    obj_ = &*it;
  }

  bool present() const { return obj_ != nullptr; }

  template <typename T, typename Check>
  void read(const char* key, T& target, Check&& check, const char* type_name) {
    known_.insert(key);
    if (!obj_) return;
    const auto it = obj_->find(key);
    if (it == obj_->end()) return;
    if (!check(*it)) {
      problems_.push_back(name_ + "." + key + ": expected " + type_name);
      return;
    }
    target = it->template get<T>();
  }

  void integer(const char* key, int64_t& t) {
    read(key, t, [](const json& v) { return v.is_number_integer(); }, "integer");
  }
  void number(const char* key, double& t) {
    read(key, t, [](const json& v) { return v.is_number(); }, "number");
  }
  void boolean(const char* key, bool& t) {
    read(key, t, [](const json& v) { return v.is_boolean(); }, "boolean");
  }
  void string(const char* key, std::string& t) {
    read(key, t, [](const json& v) { return v.is_string(); }, "string");
  }
  void optional_integer(const char* key, std::optional<int64_t>& t) {
    known_.insert(key);
    if (!obj_) return;
    const auto it = obj_->find(key);
    if (it == obj_->end()) return;
    if (it->is_null()) {
      t.reset();
    } else if (it->is_number_integer()) {
      t = it->get<int64_t>();
    } else {
      problems_.push_back(name_ + "." + key + ": expected integer or null");
    }
  }
  void string_list(const char* key, std::vector<std::string>& t) {
    read(key, t, [](const json& v) {
      if (!v.is_array()) return false;
      for (const auto& e : v) if (!e.is_string()) return false;
      return true;
    }, "array of strings");
  }

  template <typename Enum, typename Parse>
  void enumeration(const char* key, Enum& target, Parse&& parse, const char* allowed) {
    std::string raw;
    string(key, raw);
    if (raw.empty()) return;
    if (auto v = parse(raw)) {
      target = *v;
    } else {
      problems_.push_back(name_ + "." + key + ": expected one of " + allowed);
    }
  }

  void problem(const std::string& key, const std::string& what) {
    problems_.push_back(name_ + "." + key + ": " + what);
  }

  void finish() {
    if (!obj_) return;
    for (const auto& [k, v] : obj_->items()) {
      if (!known_.count(k)) problems_.push_back(name_ + "." + k + ": unknown key");
    }
  }

 private:
  std::string name_;
  std::vector<std::string>& problems_;
  const json* obj_ = nullptr;
  std::set<std::string> known_;
};

}  // namespace

json to_json(const PipelineConfig& c) {
  json schedule = to_json(c.schedule);
  schedule["anneal"] = c.anneal;
  return {
      {"vision", {{"base_resolution", c.vision.base_resolution},
                  {"patch_grid", c.vision.patch_grid},
                  {"downsample", c.vision.downsample},
                  {"max_slices", c.vision.max_slices},
                  {"use_thumbnail", c.vision.use_thumbnail},
                  {"tile_overhead_tokens", c.vision.tile_overhead_tokens},
                  {"sample_overhead_tokens", c.vision.sample_overhead_tokens}}},
      {"eagle", {{"enabled", c.eagle.enabled},
                 {"patch_size", c.eagle.patch_size},
                 {"spatial_merge", c.eagle.spatial_merge},
                 {"max_pixels_infer", c.eagle.max_pixels_infer ? json(*c.eagle.max_pixels_infer)
                                                               : json(nullptr)}}},
      {"pack", {{"max_len", c.pack.max_len},
                {"policy", to_string(c.pack.policy)},
                {"seed", c.pack.seed},
                {"segregate_modality", c.pack.segregate_groups},
                {"shards", c.pack_shards}}},
      {"schedule", std::move(schedule)},
      {"cot", {{"prompt", c.cot.cot_prompt},
               {"ratio", {c.cot.ratio_cot, c.cot.ratio_plain}},
               {"sections", c.cot.markers.sections},
               {"open_template", c.cot.markers.open_template},
               {"close_template", c.cot.markers.close_template},
               {"global_shuffle", c.cot.global_shuffle}}},
      {"projector", {{"variant", variant_name(c.projector.variant)},
                     {"factor", c.projector.factor},
                     {"d_vis", c.projector.d_vis},
                     {"d_h", c.projector.d_h},
                     {"d_llm", c.projector.d_llm},
                     {"softmax_vocab", c.projector.softmax_vocab},
                     {"vocab_size", c.vocab_size},
                     {"base_lr", c.projector_base_lr}}},
      {"stats", {{"bucket_width", c.bucket_width}}},
      {"eval", {{"strict", c.eval_strict}}},
  };
}

PipelineConfig config_from_json(const json& j) {
  std::vector<std::string> problems;
  PipelineConfig c;
  if (!j.is_object()) throw ConfigError({"config root must be an object"});

  const std::set<std::string> sections{"vision", "eagle",     "pack",  "schedule",
                                       "cot",    "projector", "stats", "eval"};
  for (const auto& [k, v] : j.items()) {
    if (!sections.count(k)) problems.push_back(k + ": unknown section");
  }

  SectionReader vision(j, "vision", problems);
  vision.integer("base_resolution", c.vision.base_resolution);
  vision.integer("patch_grid", c.vision.patch_grid);
  vision.integer("downsample", c.vision.downsample);
  vision.integer("max_slices", c.vision.max_slices);
  vision.boolean("use_thumbnail", c.vision.use_thumbnail);
  vision.integer("tile_overhead_tokens", c.vision.tile_overhead_tokens);
  vision.integer("sample_overhead_tokens", c.vision.sample_overhead_tokens);
  vision.finish();
  try {
    validate(c.vision);
  } catch (const Error& e) {
    problems.push_back(std::string("vision: ") + e.what());
  }

  SectionReader eagle(j, "eagle", problems);
  eagle.boolean("enabled", c.eagle.enabled);
  eagle.integer("patch_size", c.eagle.patch_size);
  eagle.integer("spatial_merge", c.eagle.spatial_merge);
  eagle.optional_integer("max_pixels_infer", c.eagle.max_pixels_infer);
  eagle.finish();
  try {
    validate(c.eagle);
  } catch (const Error& e) {
    problems.push_back(std::string("eagle: ") + e.what());
  }

  SectionReader pack(j, "pack", problems);
  pack.integer("max_len", c.pack.max_len);
  pack.enumeration("policy", c.pack.policy, parse_pack_policy, "ffd|ff|bfd");
  int64_t seed = static_cast<int64_t>(c.pack.seed);
  pack.integer("seed", seed);
  c.pack.seed = static_cast<uint64_t>(seed);
  pack.boolean("segregate_modality", c.pack.segregate_groups);
  pack.integer("shards", c.pack_shards);
  if (c.pack.max_len < 1) pack.problem("max_len", "must be >= 1");
  if (c.pack_shards < 1) pack.problem("shards", "must be >= 1");
  pack.finish();

  SectionReader schedule(j, "schedule", problems);
  Stage stage = c.schedule.stage;
  schedule.enumeration("stage", stage, parse_stage, "S1|S1_5|S2|S3");
  c.schedule = stage_config(stage);
  schedule.number("lr_max", c.schedule.lr_max);
  schedule.number("lr_min", c.schedule.lr_min);
  schedule.integer("batch_size", c.schedule.batch_size);
  schedule.integer("epochs", c.schedule.epochs);
  schedule.enumeration("trainable", c.schedule.trainable, parse_trainable,
                       "projector|projector+llm");
  schedule.integer("dataset_size_hint", c.schedule.dataset_size_hint);
  schedule.boolean("anneal", c.anneal);
  if (c.schedule.batch_size < 1) schedule.problem("batch_size", "must be >= 1");
  if (c.schedule.lr_min > c.schedule.lr_max) schedule.problem("lr_min", "must be <= lr_max");
  schedule.finish();

  SectionReader cot(j, "cot", problems);
  cot.string("prompt", c.cot.cot_prompt);
  std::vector<int64_t> ratio{c.cot.ratio_cot, c.cot.ratio_plain};
  cot.read("ratio", ratio, [](const json& v) {
    return v.is_array() && v.size() == 2 && v[0].is_number_integer() && v[1].is_number_integer();
  }, "[cot, plain] integer pair");
  c.cot.ratio_cot = ratio[0];
  c.cot.ratio_plain = ratio[1];
  cot.string_list("sections", c.cot.markers.sections);
  cot.string("open_template", c.cot.markers.open_template);
  cot.string("close_template", c.cot.markers.close_template);
  cot.boolean("global_shuffle", c.cot.global_shuffle);
  if (c.cot.ratio_cot < 1 || c.cot.ratio_plain < 1) cot.problem("ratio", "components must be >= 1");
  if (c.cot.cot_prompt.empty()) cot.problem("prompt", "must be non-empty");
  cot.finish();

  SectionReader proj(j, "projector", problems);
  proj.enumeration("variant", c.projector.variant,
                   [](std::string_view s) -> std::optional<ProjectorVariant> {
                     if (s == "conv_adapter") return ProjectorVariant::ConvAdapter;
                     if (s == "pixel_shuffle") return ProjectorVariant::PixelShuffle;
                     return std::nullopt;
                   },
                   "conv_adapter|pixel_shuffle");
  proj.integer("factor", c.projector.factor);
  proj.integer("d_vis", c.projector.d_vis);
  proj.integer("d_h", c.projector.d_h);
  proj.integer("d_llm", c.projector.d_llm);
  proj.boolean("softmax_vocab", c.projector.softmax_vocab);
  proj.integer("vocab_size", c.vocab_size);
  proj.number("base_lr", c.projector_base_lr);
  try {
    validate(c.projector);
  } catch (const Error& e) {
    problems.push_back(std::string("projector: ") + e.what());
  }
  if (c.vocab_size < 5) proj.problem("vocab_size", "must be >= 5");
  if (!(c.projector_base_lr > 0)) proj.problem("base_lr", "must be > 0");
  proj.finish();

  SectionReader stats(j, "stats", problems);
  stats.integer("bucket_width", c.bucket_width);
  if (c.bucket_width < 1) stats.problem("bucket_width", "must be >= 1");
  stats.finish();

  SectionReader ev(j, "eval", problems);
  ev.boolean("strict", c.eval_strict);
  ev.finish();

  if (!problems.empty()) throw ConfigError(std::move(problems));
  return c;
}

std::string config_hash(const PipelineConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(stable_hash(to_json(c).dump())));
  return buf;
}

json manifest_header(std::string_view schema, const PipelineConfig& c) {
  return {{"schema", std::string(schema) + "/1"}, {"config_hash", config_hash(c)}};
}

bool is_manifest_header(const json& j) {
  return j.is_object() && j.contains("schema") && j.contains("config_hash");
}

void read_jsonl(std::istream& in, const std::function<void(JsonlLine&&)>& on_record,
                std::vector<JsonlError>& errors) {
  std::string line;
  size_t line_no = 0;
  bool first_record = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json value = json::parse(line, nullptr, false);
    if (value.is_discarded()) {
      errors.push_back({line_no, "malformed JSON"});
      continue;
    }
    if (first_record && is_manifest_header(value)) {
      first_record = false;
      continue;
    }
    first_record = false;
    on_record({line_no, std::move(value)});
  }
}

}  // namespace valleyforge
