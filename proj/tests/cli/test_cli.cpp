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

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "valleyforge/serialization.hpp"

using namespace valleyforge;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;

  std::vector<json> lines() const {
    std::vector<json> v;
    std::istringstream in(out);
    for (std::string l; std::getline(in, l);) {
      if (!l.empty()) v.push_back(json::parse(l));
    }
    return v;
  }
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string write(const std::string& name, const std::string& body) {
  const fs::path dir(VALLEYFORGE_TEST_TMP);
  fs::create_directories(dir);
  const auto path = (dir / name).string();
  std::ofstream(path, std::ios::binary) << body;
  return path;
}

std::string samples_jsonl(int n) {
  std::string body;
  for (int i = 0; i < n; ++i) {
    Sample s{"s" + std::to_string(i), Modality::single_image(), {{300 + 97 * i, 200 + 31 * i}},
             10 + i, 1 + i % 2, false, {}};
    if (i % 5 == 4) s = {"s" + std::to_string(i), Modality::video(2), {{640, 360}, {640, 360}}, 7, 2, false, {}};
    body += to_json(s).dump() + "\n";
  }
  return body;
}

std::vector<std::string> sorted_records(const Result& r) {
  auto lines = r.lines();
  std::vector<std::string> v;
  for (size_t i = 1; i < lines.size(); ++i) v.push_back(lines[i].dump());
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST_CASE("tile on empty input writes only the header") {
  const auto r = run({"tile", write("empty.jsonl", "")});
  CHECK(r.code == 0);
  const auto lines = r.lines();
  REQUIRE(lines.size() == 1);
  CHECK(lines[0].at("schema") == "tiling/1");
  CHECK(is_manifest_header(lines[0]));
}

TEST_CASE("tile keeps input order") {
  const std::string body =
      R"({"id":"b","modality":{"type":"single_image"},"image_dims":[[384,384]],"text_tokens":1,"quality_tier":1,"is_cot":false})"
      "\n"
      R"({"id":"a","modality":{"type":"single_image"},"image_dims":[[1152,1152]],"text_tokens":1,"quality_tier":1,"is_cot":false})"
      "\n"
      R"({"id":"c","modality":{"type":"text"},"image_dims":[],"text_tokens":1,"quality_tier":1,"is_cot":false})"
      "\n";
  const auto r = run({"tile", write("three.jsonl", body)});
  REQUIRE(r.code == 0);
  const auto lines = r.lines();
  REQUIRE(lines.size() == 4);
  CHECK(lines[1].at("id") == "b");
  CHECK(lines[2].at("id") == "a");
  CHECK(lines[3].at("id") == "c");
  CHECK(lines[1].at("plans")[0].at("total_vision_tokens") == 196);
  CHECK(lines[2].at("plans")[0].at("total_vision_tokens") == 1960);
  CHECK(lines[3].at("plans").empty());
}

TEST_CASE("invalid JSON exits 2 and names the line") {
  const auto r = run({"tile", write("bad.jsonl", "{not json\n")});
  CHECK(r.code == 2);
  CHECK(r.out.empty());
  const auto err = json::parse(r.err);
  CHECK(err.at("errors")[0].at("line") == 1);
  CHECK(err.at("errors")[0].at("code") == "Parse");
}

TEST_CASE("invalid samples are all reported") {
  const std::string body =
      R"({"id":"","modality":{"type":"single_image"},"image_dims":[[0,4]],"text_tokens":1,"quality_tier":1,"is_cot":false})"
      "\n"
      R"({"id":"x","modality":{"type":"multi_image","count":2},"image_dims":[[4,4]],"text_tokens":-1,"quality_tier":1,"is_cot":false})"
      "\n";
  const auto r = run({"budget", write("invalid.jsonl", body)});
  CHECK(r.code == 2);
  CHECK(json::parse(r.err).at("errors").size() >= 4);
}

TEST_CASE("missing input file is an I/O error") {
  const auto r = run({"tile", "/nonexistent/samples.jsonl"});
  CHECK(r.code == 1);
  CHECK(json::parse(r.err).at("errors")[0].at("code") == "Io");
}

TEST_CASE("budget then pack reproduces the FFD example") {
  // text_tokens 6, 3, 1, 5 with max_len 10 -> [[a, b, c], [d]]
  std::string body;
  for (auto [id, n] : std::vector<std::pair<std::string, int>>{{"a", 6}, {"b", 3}, {"c", 1}, {"d", 5}}) {
    body += to_json(Sample{id, Modality::text(), {}, n, 1, false, {}}).dump() + "\n";
  }
  const auto samples = write("pack_samples.jsonl", body);
  const auto budgets = (fs::path(VALLEYFORGE_TEST_TMP) / "pack_budget.jsonl").string();
  const auto config = write("pack_config.json", R"({"pack":{"max_len":10}})");
  REQUIRE(run({"budget", samples, "-o", budgets}).code == 0);

  const auto stats_path = (fs::path(VALLEYFORGE_TEST_TMP) / "pack_stats.json").string();
  const auto r = run({"pack", budgets, "--config", config, "--stats-out", stats_path});
  REQUIRE(r.code == 0);
  const auto lines = r.lines();
  REQUIRE(lines.size() == 3);
  CHECK(lines[0].at("schema") == "packs/1");
  std::vector<std::string> first;
  for (const auto& s : lines[1].at("segments")) first.push_back(s.at("id"));
  CHECK(first == std::vector<std::string>{"a", "b", "c"});
  CHECK(lines[2].at("segments")[0].at("id") == "d");

  std::ifstream sf(stats_path);
  const auto stats = json::parse(sf);
  CHECK(stats.at("packs") == 2);
  CHECK(stats.at("est_speedup") == 2.0);

  const auto oversized = write("pack_small.json", R"({"pack":{"max_len":4}})");
  const auto bad = run({"pack", budgets, "--config", oversized});
  CHECK(bad.code == 2);
  CHECK(bad.out.empty());
  CHECK(json::parse(bad.err).at("errors")[0].at("code") == "OversizedSample");
}

TEST_CASE("schedule header carries the stage recipe") {
  const auto r = run({"schedule", write("sched.jsonl", samples_jsonl(20)), "--stage", "S1",
                      "--seed", "5"});
  REQUIRE(r.code == 0);
  const auto lines = r.lines();
  CHECK(lines[0].at("stage").at("lr_max") == 1e-4);
  CHECK(lines[0].at("stage").at("batch_size") == 96);
  CHECK(lines[0].at("anneal") == true);
  CHECK(lines.size() == 21);
  CHECK(lines[1].at("lr") == 1e-4);

  const auto again = run({"schedule", write("sched.jsonl", samples_jsonl(20)), "--stage", "S1",
                          "--seed", "5"});
  CHECK(again.out == r.out);
}

TEST_CASE("randomized commands require a seed") {
  const auto r = run({"schedule", write("sched2.jsonl", samples_jsonl(3))});
  CHECK(r.code == 2);
  CHECK(json::parse(r.err).at("errors")[0].at("code") == "MissingSeed");
}

TEST_CASE("eval with all-correct responses") {
  std::string qs, rs;
  int i = 0;
  for (auto cat : kAllCategories) {
    const std::string qid = "q" + std::to_string(i++);
    qs += to_json(MCQuestion{qid, "?", {"a", "b", "c", "d"}, i % 4, cat, Modality::single_image(), 0}).dump() + "\n";
    for (int k = 0; k < 4; ++k) {
      rs += json{{"qid", qid}, {"rotation", k}, {"text", std::string(1, static_cast<char>('A' + k))}}.dump() + "\n";
    }
  }
  const auto r = run({"eval", "--questions", write("q.jsonl", qs), "--responses", write("r.jsonl", rs)});
  REQUIRE(r.code == 0);
  const auto doc = json::parse(r.out);
  CHECK(doc.at("weighted_avg") == 100.0);
  CHECK(doc.at("per_category").size() == 9);
  for (const auto& [cat, s] : doc.at("per_category").items()) CHECK(s.at("accuracy") == 100.0);

  const auto partial = run({"eval", "--questions", write("q.jsonl", qs), "--responses",
                            write("r_missing.jsonl", rs.substr(0, rs.find('\n') + 1))});
  CHECK(partial.code == 2);
  CHECK(json::parse(partial.err).at("errors")[0].at("code") == "MissingResponse");
}

TEST_CASE("sharded outputs union to the unsharded output") {
  const auto input = write("shard.jsonl", samples_jsonl(60));
  for (const std::string cmd : {"tile", "budget"}) {
    const auto whole = run({cmd, input});
    REQUIRE(whole.code == 0);
    std::vector<std::string> joined;
    for (int i = 0; i < 3; ++i) {
      const auto part = run({cmd, input, "--shard", std::to_string(i) + "/3"});
      REQUIRE(part.code == 0);
      const auto recs = sorted_records(part);
      joined.insert(joined.end(), recs.begin(), recs.end());
    }
    std::sort(joined.begin(), joined.end());
    CHECK(joined == sorted_records(whole));
    CHECK(run({cmd, input, "--workers", "4"}).out == whole.out);
  }
  CHECK(run({"tile", input, "--shard", "3/3"}).code == 2);
  CHECK(run({"tile", input, "--shard", "x"}).code == 2);
}

TEST_CASE("dry run writes nothing") {
  const auto out = (fs::path(VALLEYFORGE_TEST_TMP) / "dry.jsonl").string();
  fs::remove(out);
  const auto r = run({"tile", write("dry_in.jsonl", samples_jsonl(5)), "--dry-run", "-o", out});
  CHECK(r.code == 0);
  CHECK_FALSE(fs::exists(out));
  const auto doc = json::parse(r.out);
  CHECK(doc.at("dry_run") == true);
  CHECK(doc.at("records") == 5);
}

TEST_CASE("version and config hash") {
  const auto r = run({"tile", "--version"});
  CHECK(r.code == 0);
  const auto doc = json::parse(r.out);
  CHECK(doc.at("version") == cli::kVersion);
  CHECK(doc.at("config_hash") == config_hash(PipelineConfig{}));
}

TEST_CASE("unknown config keys are rejected together") {
  const auto config = write("bad_config.json", R"({"vision":{"tiles":3},"pak":{}})");
  const auto r = run({"projector-report", "--config", config});
  CHECK(r.code == 2);
  CHECK(json::parse(r.err).at("errors").size() == 2);
}

TEST_CASE("projector report") {
  const auto r = run({"projector-report"});
  REQUIRE(r.code == 0);
  const auto doc = json::parse(r.out);
  CHECK(doc.at("schema") == "projector_report/1");
}

TEST_CASE("mix-cot end to end") {
  const std::string good =
      "<summary>s</summary><caption>c</caption><reasoning>r</reasoning><conclusion>x</conclusion>";
  std::string cot, plain;
  for (int i = 0; i < 4; ++i) {
    cot += to_json(InstructionRecord{{"c" + std::to_string(i), Modality::text(), {}, 1, 1, false, {}}, "Q", good, false}).dump() + "\n";
    plain += to_json(InstructionRecord{{"p" + std::to_string(i), Modality::text(), {}, 1, 1, false, {}}, "Q", "A", false}).dump() + "\n";
  }
  const auto r = run({"mix-cot", "--cot", write("cot.jsonl", cot), "--plain",
                      write("plain.jsonl", plain), "--seed", "1"});
  REQUIRE(r.code == 0);
  const auto lines = r.lines();
  REQUIRE(lines.size() == 9);
  CHECK(lines[1].at("cot_prompt_applied") == true);
  CHECK(lines[2].at("cot_prompt_applied") == false);

  const auto bad = run({"mix-cot", "--cot", write("cot_bad.jsonl", to_json(InstructionRecord{{"bad", Modality::text(), {}, 1, 1, false, {}}, "Q", "no tags", false}).dump() + "\n"),
                        "--plain", write("plain.jsonl", plain), "--seed", "1"});
  CHECK(bad.code == 2);
  CHECK(json::parse(bad.err).at("errors")[0].at("id") == "bad");
}

TEST_CASE("shipped default config equals the built-in defaults") {
  const auto path = std::string(VALLEYFORGE_SOURCE_DIR) + "/configs/default.json";
  const auto with = run({"tile", "--version", "--config", path});
  const auto without = run({"tile", "--version"});
  REQUIRE(with.code == 0);
  CHECK(json::parse(with.out).at("config_hash") == json::parse(without.out).at("config_hash"));
}
