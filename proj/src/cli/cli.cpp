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

#include "cli.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include "valleyforge/random.hpp"
#include "valleyforge/serialization.hpp"

namespace valleyforge::cli {

namespace {

struct Shard {
  uint64_t index = 0;
  uint64_t total = 1;

  bool contains(std::string_view id) const { return stable_hash(id) % total == index; }
  std::string str() const { return std::to_string(index) + "/" + std::to_string(total); }
};

struct CommonOptions {
  std::string config_path;
  std::optional<int64_t> seed;
  std::string shard_spec = "0/1";
  bool dry_run = false;
  bool version = false;
  std::string output;
  size_t workers = 1;
};

// Thrown for problems the user must fix in inputs, flags or config.
struct InputFailure {
  json errors = json::array();
};

// Thrown for unreadable or unwritable paths.
struct IoFailure {
  std::string message;
};

void init_logging() {
  static const bool once = [] {
    auto logger = spdlog::stderr_color_mt("valleyforge");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    spdlog::level::level_enum level = spdlog::level::warn;
    if (const char* env = std::getenv("VALLEYFORGE_LOG")) {
      level = spdlog::level::from_str(env);
    }
    spdlog::set_level(level);
    return true;
  }();
  (void)once;
}

[[noreturn]] void fail_input(std::string code, std::string message) {
  InputFailure f;
  f.errors.push_back({{"code", std::move(code)}, {"message", std::move(message)}});
  throw f;
}

Shard parse_shard(const std::string& spec) {
  const auto slash = spec.find('/');
  Shard s;
  try {
    if (slash == std::string::npos) throw std::invalid_argument("no slash");
    size_t used = 0;
    s.index = std::stoull(spec.substr(0, slash), &used);
    if (used != slash) throw std::invalid_argument("index");
    const auto rest = spec.substr(slash + 1);
    s.total = std::stoull(rest, &used);
    if (used != rest.size()) throw std::invalid_argument("total");
  } catch (const std::exception&) {
    fail_input("BadShard", "--shard must look like i/N, got '" + spec + "'");
  }
  if (s.total == 0 || s.index >= s.total) {
    fail_input("BadShard", "--shard index must be < total, got '" + spec + "'");
  }
  return s;
}

PipelineConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) throw IoFailure{"cannot open config '" + path + "'"};
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) fail_input("Config", "config '" + path + "' is not valid JSON");
  try {
    return config_from_json(j);
  } catch (const ConfigError& e) {
    InputFailure f;
    for (const auto& p : e.problems()) f.errors.push_back({{"code", "Config"}, {"message", p}});
    throw f;
  }
}

// Reads a JSONL file, converting each record with `convert`; every malformed
// line or conversion failure is collected before failing.
template <typename T, typename Convert>
std::vector<std::pair<size_t, T>> read_records(const std::string& path, Convert&& convert) {
  std::ifstream in(path);
  if (!in) throw IoFailure{"cannot open input '" + path + "'"};
  std::vector<std::pair<size_t, T>> out;
  std::vector<JsonlError> errors;
  read_jsonl(in, [&](JsonlLine&& line) {
    try {
      out.emplace_back(line.line_no, convert(line.value));
    } catch (const Error& e) {
      errors.push_back({line.line_no, e.what()});
    }
  }, errors);
  if (!errors.empty()) {
    std::sort(errors.begin(), errors.end(),
              [](const auto& a, const auto& b) { return a.line_no < b.line_no; });
    InputFailure f;
    for (const auto& e : errors) {
      f.errors.push_back({{"code", "Parse"}, {"path", path}, {"line", e.line_no},
                          {"message", e.message}});
    }
    throw f;
  }
  return out;
}

std::vector<std::pair<size_t, Sample>> read_samples(const std::string& path) {
  auto samples = read_records<Sample>(path, sample_from_json);
  InputFailure f;
  for (const auto& [line, s] : samples) {
    for (const auto& v : validate_sample(s)) {
      f.errors.push_back({{"code", to_string(v.code)}, {"path", path}, {"line", line},
                          {"id", s.id}, {"message", v.message}});
    }
  }
  if (!f.errors.empty()) throw f;
  return samples;
}

// Order-preserving parallel map over [0, n).
template <typename T, typename Fn>
std::vector<T> parallel_map(size_t n, size_t workers, Fn&& fn) {
  std::vector<T> out(n);
  const size_t threads = std::clamp<size_t>(workers, 1, std::max<size_t>(n, 1));
  if (threads == 1) {
    for (size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::vector<std::exception_ptr> failures(threads);
  {
    std::vector<std::jthread> pool;
    for (size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (size_t i = t; i < n; i += threads) out[i] = fn(i);
        } catch (...) {
          failures[t] = std::current_exception();
        }
      });
    }
  }  // joined here, before `out` is read
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return out;
}

class Context {
 public:
  Context(std::string command, const CommonOptions& opts, std::ostream& out, std::ostream& err)
      : command_(std::move(command)), opts_(opts), out_(out), err_(err) {
    config = load_config(opts.config_path);
    shard = parse_shard(opts.shard_spec);
  }

  const std::string& command() const { return command_; }
  const CommonOptions& opts() const { return opts_; }

  uint64_t require_seed() const {
    if (!opts_.seed) fail_input("MissingSeed", command_ + " is randomized and requires --seed");
    return derived_seed();
  }

  // Sub-seed from (seed, command, shard) so shards draw independent streams.
  uint64_t derived_seed() const {
    const std::string key = std::to_string(*opts_.seed) + "|" + command_ + "|" + shard.str();
    return stable_hash(key);
  }

  // Writes the buffered manifest, unless this is a dry run.
  int emit(const std::string& body, size_t records) const {
    if (opts_.dry_run) {
      out_ << json{{"dry_run", true}, {"command", command_}, {"records", records},
                   {"shard", shard.str()}, {"config_hash", config_hash(config)}}.dump()
           << "\n";
      return kOk;
    }
    write_to(opts_.output, body);
    spdlog::info("{}: wrote {} records", command_, records);
    return kOk;
  }

  void write_to(const std::string& path, const std::string& body) const {
    if (path.empty() || path == "-") {
      out_ << body;
      return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoFailure{"cannot open output '" + path + "'"};
    f << body;
    if (!f) throw IoFailure{"failed writing '" + path + "'"};
  }

  std::ostream& err() const { return err_; }

  PipelineConfig config;
  Shard shard;

 private:
  std::string command_;
  CommonOptions opts_;
  std::ostream& out_;
  std::ostream& err_;
};

std::string jsonl(const json& header, const std::vector<json>& records) {
  std::string body = header.dump() + "\n";
  for (const auto& r : records) body += r.dump() + "\n";
  return body;
}

int cmd_tile(Context& ctx, const std::string& input) {
  auto samples = read_samples(input);
  std::erase_if(samples, [&](const auto& s) { return !ctx.shard.contains(s.second.id); });
  const auto records = parallel_map<json>(samples.size(), ctx.opts().workers, [&](size_t i) {
    const auto& s = samples[i].second;
    json plans = json::array();
    for (const auto& p : plan_tiling(s, ctx.config.vision)) plans.push_back(to_json(p));
    return json{{"id", s.id}, {"plans", std::move(plans)}};
  });
  return ctx.emit(jsonl(manifest_header("tiling", ctx.config), records), records.size());
}

int cmd_budget(Context& ctx, const std::string& input, BudgetMode mode,
               const BudgetOptions& options) {
  auto samples = read_samples(input);
  std::erase_if(samples, [&](const auto& s) { return !ctx.shard.contains(s.second.id); });
  const auto records = parallel_map<json>(samples.size(), ctx.opts().workers, [&](size_t i) {
    return to_json(budget_sample(samples[i].second, ctx.config.vision, ctx.config.eagle, mode,
                                 options));
  });
  return ctx.emit(jsonl(manifest_header("budget", ctx.config), records), records.size());
}

int cmd_stats(Context& ctx, const std::string& input) {
  const auto budgets = read_records<TokenBudget>(input, budget_from_json);
  CorpusAccumulator acc;
  for (const auto& [line, b] : budgets) {
    if (ctx.shard.contains(b.sample_id)) acc.add(b);
  }
  CorpusStats stats;
  try {
    stats = acc.finalize(ctx.config.bucket_width);
  } catch (const Error& e) {
    fail_input(std::string(to_string(e.code())), e.what());
  }
  json doc = manifest_header("stats", ctx.config);
  doc.update(to_json(stats, ctx.config.bucket_width));
  return ctx.emit(doc.dump() + "\n", static_cast<size_t>(acc.count()));
}

int cmd_pack(Context& ctx, const std::string& input, const std::string& stats_out) {
  const auto budgets = read_records<TokenBudget>(input, budget_from_json);
  std::vector<PackItem> items;
  for (const auto& [line, b] : budgets) {
    if (ctx.shard.contains(b.sample_id)) {
      items.push_back({b.sample_id, b.total, std::string(to_string(b.modality))});
    }
  }
  std::vector<Pack> packs;
  try {
    packs = plan_packs_sharded(items, ctx.config.pack,
                               static_cast<size_t>(ctx.config.pack_shards), ctx.opts().workers);
  } catch (const OversizedSampleError& e) {
    InputFailure f;
    f.errors.push_back({{"code", "OversizedSample"}, {"id", e.sample_id()}, {"message", e.what()}});
    throw f;
  }
  std::vector<json> records;
  records.reserve(packs.size());
  for (const auto& p : packs) records.push_back(to_json(p));

  const auto stats = packing_stats(items, packs, ctx.config.pack);
  spdlog::info("pack: {} samples -> {} packs, est_speedup {:.3f}", stats.samples, stats.packs,
               stats.est_speedup());
  if (!stats_out.empty() && !ctx.opts().dry_run) {
    json doc = manifest_header("pack_stats", ctx.config);
    doc.update(to_json(stats));
    ctx.write_to(stats_out, doc.dump() + "\n");
  }
  return ctx.emit(jsonl(manifest_header("packs", ctx.config), records), records.size());
}

int cmd_schedule(Context& ctx, const std::string& input, const std::string& stage_flag,
                 bool uniform) {
  if (!stage_flag.empty()) {
    const auto stage = parse_stage(stage_flag);
    if (!stage) fail_input("BadStage", "--stage must be S1|S1_5|S2|S3");
    ctx.config.schedule = stage_config(*stage);
  }
  const bool anneal = ctx.config.anneal && !uniform;
  const uint64_t seed = ctx.require_seed();

  auto samples = read_samples(input);
  std::vector<Sample> selected;
  for (auto& [line, s] : samples) {
    if (ctx.shard.contains(s.id)) selected.push_back(std::move(s));
  }
  const auto& stage = ctx.config.schedule;
  const auto schedule = annealed_order(selected, anneal, seed,
                                       {stage.lr_max, stage.lr_min, stage.batch_size});

  json header = manifest_header("schedule", ctx.config);
  header["stage"] = to_json(stage);
  header["anneal"] = anneal;
  header["total_steps"] = schedule.total_steps;
  header["tier_boundary"] = schedule.tier_boundary ? json(*schedule.tier_boundary) : json(nullptr);
  std::vector<json> records;
  records.reserve(schedule.entries.size());
  for (const auto& e : schedule.entries) records.push_back(to_json(e));
  return ctx.emit(jsonl(header, records), records.size());
}

int cmd_mix_cot(Context& ctx, const std::string& cot_path, const std::string& plain_path) {
  const uint64_t seed = ctx.require_seed();
  auto load = [&](const std::string& path) {
    std::vector<InstructionRecord> out;
    for (auto& [line, r] : read_records<InstructionRecord>(path, instruction_from_json)) {
      if (ctx.shard.contains(r.sample.id)) out.push_back(std::move(r));
    }
    return out;
  };
  const auto cot = load(cot_path);
  const auto plain = load(plain_path);
  auto cfg = ctx.config.cot;
  cfg.seed = seed;
  std::vector<InstructionRecord> mixed;
  try {
    mixed = mix_cot(cot, plain, cfg);
  } catch (const StructureViolationError& e) {
    InputFailure f;
    for (const auto& id : e.ids()) {
      f.errors.push_back({{"code", "StructureViolation"}, {"id", id},
                          {"message", "CoT response is missing or misorders a required section"}});
    }
    throw f;
  } catch (const Error& e) {
    fail_input(std::string(to_string(e.code())), e.what());
  }
  std::vector<json> records;
  records.reserve(mixed.size());
  for (const auto& r : mixed) records.push_back(to_json(r));
  return ctx.emit(jsonl(manifest_header("cot_mix", ctx.config), records), records.size());
}

int cmd_eval(Context& ctx, const std::string& questions_path, const std::string& responses_path,
             const std::string& captions_path, bool strict) {
  std::vector<MCQuestion> questions;
  for (auto& [line, q] : read_records<MCQuestion>(questions_path, question_from_json)) {
    if (ctx.shard.contains(q.qid)) questions.push_back(std::move(q));
  }

  ResponseMap responses;
  if (!responses_path.empty()) {
    struct Response {
      std::string qid;
      int rotation;
      std::string text;
    };
    const auto parsed = read_records<Response>(responses_path, [](const json& j) {
      if (!j.is_object() || !j.contains("qid") || !j["qid"].is_string() ||
          !j.contains("rotation") || !j["rotation"].is_number_integer() ||
          !j.contains("text") || !j["text"].is_string()) {
        throw Error(ErrorCode::Parse, "response needs string qid, integer rotation, string text");
      }
      const int rotation = j["rotation"].get<int>();
      if (rotation < 0 || rotation > 3) throw Error(ErrorCode::Parse, "rotation must be 0..3");
      return Response{j["qid"].get<std::string>(), rotation, j["text"].get<std::string>()};
    });
    for (const auto& [line, r] : parsed) responses[{r.qid, r.rotation}] = r.text;
  }

  CyclicScore score;
  try {
    score = score_cyclic(questions, responses, strict || ctx.config.eval_strict);
  } catch (const MissingResponseError& e) {
    InputFailure f;
    f.errors.push_back({{"code", "MissingResponse"}, {"qid", e.qid()},
                        {"rotation", e.rotation()}, {"message", e.what()}});
    throw f;
  }

  std::optional<CaptionMetrics> captions;
  if (!captions_path.empty()) {
    struct Caption {
      std::string candidate;
      std::vector<std::string> references;
    };
    const auto parsed = read_records<std::pair<std::string, Caption>>(
        captions_path, [](const json& j) {
          if (!j.is_object() || !j.contains("id") || !j["id"].is_string() ||
              !j.contains("candidate") || !j["candidate"].is_string() ||
              !j.contains("references") || !j["references"].is_array() ||
              j["references"].empty()) {
            throw Error(ErrorCode::Parse,
                        "caption needs string id, string candidate, non-empty references");
          }
          Caption c{j["candidate"].get<std::string>(), {}};
          for (const auto& r : j["references"]) {
            if (!r.is_string()) throw Error(ErrorCode::Parse, "references must be strings");
            c.references.push_back(r.get<std::string>());
          }
          return std::pair{j["id"].get<std::string>(), std::move(c)};
        });
    std::vector<std::string> cands;
    std::vector<std::vector<std::string>> refs;
    for (const auto& [line, item] : parsed) {
      if (!ctx.shard.contains(item.first)) continue;
      cands.push_back(item.second.candidate);
      refs.push_back(item.second.references);
    }
    try {
      captions = caption_metrics(cands, refs);
    } catch (const Error& e) {
      fail_input(std::string(to_string(e.code())), e.what());
    }
  }

  json doc = manifest_header("eval_report", ctx.config);
  doc.update(to_json(build_report(score, captions)));
  doc["accuracy"] = score.accuracy;
  return ctx.emit(doc.dump() + "\n", questions.size());
}

int cmd_projector_report(Context& ctx) {
  json doc = manifest_header("projector_report", ctx.config);
  doc.update(projector_report(ctx.config.projector, ctx.config.vocab_size,
                              ctx.config.projector_base_lr));
  return ctx.emit(doc.dump() + "\n", 1);
}

void add_common(CLI::App* sub, CommonOptions& o) {
  sub->add_option("--config", o.config_path, "JSON config file");
  sub->add_option("--seed", o.seed, "Seed for randomized commands");
  sub->add_option("--shard", o.shard_spec, "Process shard i of N (i/N)");
  sub->add_flag("--dry-run", o.dry_run, "Validate and count; write nothing");
  sub->add_flag("--version", o.version, "Print version and config hash");
  sub->add_option("-o,--output", o.output, "Output path (default stdout)");
  sub->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  init_logging();

  CLI::App app{"valleyforge: multimodal training-data pipeline tools"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("valleyforge ") + kVersion);

  CommonOptions common;
  std::string input, mode = "infer", stats_out, stage, cot_path, plain_path;
  std::string questions_path, responses_path, captions_path;
  bool letterbox = false, segregate = false, uniform = false, strict = false;

  auto* tile = app.add_subcommand("tile", "Tiling plans per sample");
  tile->add_option("input", input, "Samples JSONL")->required();
  auto* budget = app.add_subcommand("budget", "Token budget per sample");
  budget->add_option("input", input, "Samples JSONL")->required();
  budget->add_option("--mode", mode, "train|infer")->check(CLI::IsMember({"train", "infer"}));
  budget->add_flag("--letterbox-untiled", letterbox, "Drop letterbox padding tokens on untiled frames");
  auto* stats = app.add_subcommand("stats", "Corpus token statistics from a budget manifest");
  stats->add_option("input", input, "Budget manifest JSONL")->required();
  auto* pack = app.add_subcommand("pack", "Offline sequence packing from a budget manifest");
  pack->add_option("input", input, "Budget manifest JSONL")->required();
  pack->add_flag("--segregate-modality", segregate, "Never mix modalities in one pack");
  pack->add_option("--stats-out", stats_out, "Write packing stats JSON here");
  auto* schedule = app.add_subcommand("schedule", "Annealed sample order with cosine LR");
  schedule->add_option("input", input, "Samples JSONL")->required();
  schedule->add_option("--stage", stage, "S1|S1_5|S2|S3");
  schedule->add_flag("--uniform", uniform, "Uniform mixing instead of annealing");
  auto* mix = app.add_subcommand("mix-cot", "Mix CoT and plain instruction data");
  mix->add_option("--cot", cot_path, "CoT records JSONL")->required();
  mix->add_option("--plain", plain_path, "Plain records JSONL")->required();
  auto* eval = app.add_subcommand("eval", "Cyclic multiple-choice and caption evaluation");
  eval->add_option("--questions", questions_path, "Questions JSONL")->required();
  eval->add_option("--responses", responses_path, "Responses JSONL")->required();
  eval->add_option("--captions", captions_path, "Caption JSONL {id, candidate, references}");
  eval->add_flag("--strict", strict, "Accept only a bare leading answer letter");
  auto* projector = app.add_subcommand("projector-report", "Projector parameter arithmetic");

  // --version on a subcommand must not trip required positionals.
  const bool wants_version = std::find(args.begin(), args.end(), "--version") != args.end();
  for (auto* sub : {tile, budget, stats, pack, schedule, mix, eval, projector}) {
    add_common(sub, common);
    if (wants_version) {
      for (auto* opt : sub->get_options()) opt->required(false);
    }
  }

  std::vector<std::string> argv_storage{"valleyforge"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << json{{"errors", {{{"code", "Usage"}, {"message", e.what()}}}}}.dump() << "\n";
    return kInvalidInput;
  }

  auto* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  try {
    Context ctx(command, common, out, err);
    if (common.version) {
      out << json{{"tool", "valleyforge"}, {"version", kVersion}, {"command", command},
                  {"config_hash", config_hash(ctx.config)}}.dump()
          << "\n";
      return kOk;
    }
    if (segregate) ctx.config.pack.segregate_groups = true;

    if (command == "tile") return cmd_tile(ctx, input);
    if (command == "budget") {
      return cmd_budget(ctx, input, mode == "train" ? BudgetMode::Train : BudgetMode::Infer,
                        {letterbox});
    }
    if (command == "stats") return cmd_stats(ctx, input);
    if (command == "pack") return cmd_pack(ctx, input, stats_out);
    if (command == "schedule") return cmd_schedule(ctx, input, stage, uniform);
    if (command == "mix-cot") return cmd_mix_cot(ctx, cot_path, plain_path);
    if (command == "eval") return cmd_eval(ctx, questions_path, responses_path, captions_path, strict);
    if (command == "projector-report") return cmd_projector_report(ctx);
  } catch (const InputFailure& f) {
    err << json{{"errors", f.errors}}.dump() << "\n";
    return kInvalidInput;
  } catch (const IoFailure& f) {
    err << json{{"errors", {{{"code", "Io"}, {"message", f.message}}}}}.dump() << "\n";
    return kIoError;
  } catch (const Error& e) {
    err << json{{"errors", {{{"code", to_string(e.code())}, {"message", e.what()}}}}}.dump()
        << "\n";
    return kInvalidInput;
  }
  return kInvalidInput;
}

}  // namespace valleyforge::cli
