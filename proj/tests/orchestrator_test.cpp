/*
 * Copyright 2026 The lrasr Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "lrasr/orchestrator.hpp"

#include <fstream>
#include <sstream>

#include "doctest.h"
#include "lrasr/synthlang.hpp"
#include "test_util.hpp"

namespace o = lrasr::orchestrator;
namespace t = lrasr::training;
namespace s = lrasr::synth;
namespace c = lrasr::corpus;
using lrasr::ErrorKind;
using lrasr::testing::TempDir;

namespace {

s::SynthConfig short_audio(std::uint64_t seed, double punct) {
  s::SynthConfig cfg;
  cfg.phone_duration = 0.05;
  cfg.gap = 0.01;
  cfg.word_gap = 0.05;
  cfg.min_words = 2;
  cfg.max_words = 3;
  cfg.seed = seed;
  cfg.punctuation_rate = punct;
  return cfg;
}

void assign_splits(c::Manifest& m, std::size_t train, std::size_t val) {
  for (std::size_t i = 0; i < m.records.size(); ++i)
    m.records[i].split =
        i < train ? c::Split::kTrain : (i < train + val ? c::Split::kValidation : c::Split::kTest);
}

t::TrainConfig quick(int steps) {
  auto cfg = t::TrainConfig::Toy();
  cfg.batch_size = 4;
  cfg.total_steps = steps;
  cfg.warmup_steps = 2;
  cfg.eval_every = 4;
  cfg.max_decode_tokens = 24;
  return cfg;
}

// A parent language and a related target, 16/4/4 utterances each.
struct Corpora {
  TempDir dir{"orchestrator"};
  s::Lexicon parent = s::gen_language(5, 12, s::PhoneInventory::Default(8), "par");
  s::Lexicon target = s::derive_related(parent, 0.7, 6, "tgt");
  c::Manifest parent_manifest, target_manifest;
  o::CorpusTriple parent_triple, target_triple;

  Corpora() {
    parent_manifest = s::synth_corpus(parent, 24, short_audio(1, 0.0), dir / "par");
    target_manifest = s::synth_corpus(target, 24, short_audio(2, 0.3), dir / "tgt");
    assign_splits(parent_manifest, 16, 4);
    assign_splits(target_manifest, 16, 4);
    c::write_manifest(dir / "par" / "manifest.jsonl", parent_manifest);
    c::write_manifest(dir / "tgt" / "manifest.jsonl", target_manifest);
    parent_triple = o::triple_from_manifest(parent_manifest);
    target_triple = o::triple_from_manifest(target_manifest);
  }

  o::ExperimentPlan plan(bool with_intermediate) const {
    o::ExperimentPlan p;
    p.base.seed = 3;
    p.base.max_target_positions = 40;
    p.target = {target_triple, quick(8)};
    if (with_intermediate) p.intermediate = o::StagePlan{parent_triple, quick(8)};
    return p;
  }
};

const Corpora& corpora() {
  static const Corpora instance;
  return instance;
}

const o::ExperimentReport& full_report() {
  static const o::ExperimentReport report = o::run_matrix(corpora().plan(true));
  return report;
}

}  // namespace

TEST_CASE("manifests partition by split") {
  const auto& k = corpora();
  CHECK(k.target_triple.train.records.size() == 16);
  CHECK(k.target_triple.validation.records.size() == 4);
  CHECK(k.target_triple.test.records.size() == 4);
  CHECK(k.target_triple.test.base_dir == k.target_manifest.base_dir);
  auto m = k.target_manifest;
  m.records[3].split.reset();
  CHECK_THROWS_KIND(o::triple_from_manifest(m), ErrorKind::kInvalidArgument);
}

TEST_CASE("the base must cover the union alphabet") {
  const auto& k = corpora();
  const auto tok = o::union_tokenizer(&k.parent_triple, k.target_triple);
  for (const auto* triple : {&k.parent_triple, &k.target_triple})
    for (const auto* m : {&triple->train, &triple->validation})
      for (const auto& r : m->records) CHECK(tok.unknown_count(r.text) == 0);

  o::BaseSpec spec;
  spec.seed = 1;
  const auto fresh = o::resolve_base(spec, tok);
  CHECK(fresh.tokenizer == tok);

  // A checkpoint built over the unpunctuated parent lacks the target's marks.
  const auto narrow = o::union_tokenizer(nullptr, k.parent_triple);
  REQUIRE(narrow.vocab_size() < tok.vocab_size());
  spec.checkpoint = o::resolve_base(o::BaseSpec{}, narrow);
  CHECK_THROWS_KIND(o::resolve_base(spec, tok), ErrorKind::kAlphabetMismatch);
  spec.checkpoint = fresh;
  CHECK(t::parameter_digest(o::resolve_base(spec, narrow).params) ==
        t::parameter_digest(fresh.params));
}

TEST_CASE("multistage fine-tuning requires an intermediate corpus") {
  const auto& k = corpora();
  const auto base = o::resolve_base(o::BaseSpec{}, o::union_tokenizer(nullptr, k.target_triple));
  const auto target = o::load_triple(k.target_triple, base.config);
  CHECK_THROWS_KIND(o::multistage_finetune(base, nullptr, target, quick(2), quick(2)),
                    ErrorKind::kMissingIntermediate);
}

TEST_CASE("multistage stage two starts from stage one's best checkpoint") {
  const auto& k = corpora();
  auto spec = o::BaseSpec{};
  spec.max_target_positions = 40;
  const auto base = o::resolve_base(spec, o::union_tokenizer(&k.parent_triple, k.target_triple));
  const auto inter = o::load_triple(k.parent_triple, base.config);
  const auto target = o::load_triple(k.target_triple, base.config);
  std::ostringstream log;
  const auto r = o::multistage_finetune(base, &inter, target, quick(8), quick(6), &log);
  CHECK(r.stage2_init_digest == r.stage1_best_digest);
  CHECK(r.stage1_best_digest == t::parameter_digest(r.intermediate.best.params));
  CHECK(r.target.losses.size() == 6);
  const auto d = o::direct_finetune(base, target, quick(6));
  CHECK(d.losses.size() == r.target.losses.size());
}

TEST_CASE("the full matrix has four scored rows") {
  const auto& report = full_report();
  REQUIRE(report.rows.size() == 4);
  REQUIRE(report.normalizations.size() == 2);
  for (auto row : o::kRows) {
    const auto& r = report[row];
    CHECK(r.row == row);
    REQUIRE(r.cells.size() == 2);
    for (const auto& cell : r.cells) {
      CHECK(cell.status == o::CellStatus::kOk);
      CHECK(cell.wer >= 0.0);
      CHECK(cell.cer >= 0.0);
    }
    // Marks are attached to words, so filtering maps tokens one to one and
    // cannot turn a match into an error.
    CHECK(r.cells[1].wer <= r.cells[0].wer + 1e-12);
  }
  CHECK(report[o::Row::kMtf].provenance.at("init_digest") ==
        report[o::Row::kMtf].provenance.at("stage1_best_digest"));
  CHECK(report[o::Row::kMtf].provenance.at("init_digest") ==
        report[o::Row::kIntermediate].provenance.at("best_digest"));
  CHECK(report[o::Row::kDtf].provenance.at("init_digest") ==
        report[o::Row::kZeroshot].provenance.at("checkpoint").at("digest"));
  CHECK(report[o::Row::kDtf].provenance.at("steps") == report[o::Row::kMtf].provenance.at("steps"));
  CHECK(report[o::Row::kDtf].provenance.at("train_config") ==
        report[o::Row::kMtf].provenance.at("train_config"));
}

TEST_CASE("the matrix is reproducible, including with more jobs") {
  auto plan = corpora().plan(true);
  plan.jobs = 2;
  CHECK(o::run_matrix(plan).same_results(full_report()));
}

TEST_CASE("without an intermediate corpus only zeroshot and dtf run") {
  const auto report = o::run_matrix(corpora().plan(false));
  for (auto row : {o::Row::kIntermediate, o::Row::kMtf})
    for (const auto& cell : report[row].cells) {
      CHECK(cell.status == o::CellStatus::kSkipped);
      CHECK_FALSE(cell.reason.empty());
    }
  for (auto row : {o::Row::kZeroshot, o::Row::kDtf})
    for (const auto& cell : report[row].cells) CHECK(cell.status == o::CellStatus::kOk);
  std::ostringstream table;
  o::write_table(table, report);
  CHECK(table.str().find("skipped") != std::string::npos);
}

TEST_CASE("a reused stage-one checkpoint reproduces the multistage row") {
  TempDir dir("reuse");
  o::RunOptions opt;
  opt.work_dir = dir.path();
  const auto first = o::run_matrix(corpora().plan(true), opt);
  CHECK(first.same_results(full_report()));
  for (const char* f : {"intermediate.best.lrck", "dtf.final.lrck", "mtf.log.jsonl"})
    CHECK(std::filesystem::exists(dir / f));
  const auto stage1 = t::load_checkpoint(dir / "intermediate.best.lrck");
  o::RunOptions reuse;
  reuse.intermediate_checkpoint = &stage1;
  const auto second = o::run_matrix(corpora().plan(true), reuse);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(second[o::Row::kMtf].cells[i].wer == first[o::Row::kMtf].cells[i].wer);
    CHECK(second[o::Row::kMtf].cells[i].cer == first[o::Row::kMtf].cells[i].cer);
  }
  CHECK(second[o::Row::kIntermediate].provenance.at("reused") == true);
}

TEST_CASE("report JSON, table and chart") {
  const auto& report = full_report();
  const auto back = o::ExperimentReport::from_json(report.to_json());
  CHECK(back.same_results(report));
  CHECK(back.to_json() == report.to_json());

  std::ostringstream table;
  o::write_table(table, report);
  for (auto row : o::kRows)
    CHECK(table.str().find(std::string(o::row_name(row))) != std::string::npos);

  std::ostringstream svg;
  o::write_svg(svg, report);
  const auto text = svg.str();
  CHECK(text.rfind("<svg", 0) == 0);
  CHECK(text.find("</svg>") != std::string::npos);
  std::size_t rects = 0;
  for (auto p = text.find("<rect"); p != std::string::npos; p = text.find("<rect", p + 1)) ++rects;
  // One bar per cell plus one legend swatch per normalization.
  CHECK(rects == 4 * 2 + 2);

  auto j = report.to_json();
  j["rows"][0]["cells"][0]["status"] = "bogus";
  CHECK_THROWS_KIND(o::ExperimentReport::from_json(j), ErrorKind::kParse);
}

TEST_CASE("plans load from INI files") {
  const auto& k = corpora();
  TempDir dir("plan");
  const auto par = std::filesystem::relative(k.dir / "par" / "manifest.jsonl", dir.path());
  {
    std::ofstream out(dir / "plan.ini");
    out << "[base]\nseed = 11\npreset = toy\nmax_target_positions = 40\n"
        << "[intermediate]\nmanifest = " << par.string() << "\n"
        << "[intermediate_train]\ntotal_steps = 12\nbatch_size = 4\nwarmup_steps = 3\neval_every = "
           "6\n"
        << "[target]\ntrain = " << (k.dir / "tgt" / "manifest.jsonl").string() << "\n"
        << "validation = " << (k.dir / "tgt" / "manifest.jsonl").string() << "\n"
        << "test = " << (k.dir / "tgt" / "manifest.jsonl").string() << "\n"
        << "[target_train]\ntotal_steps = 7\npeak_lr = 0.001\nwarmup_steps = 1\neval_every = 7\n"
        << "[experiment]\njobs = 2\nnormalizations = raw,punct,punct+sym\n";
  }
  const auto plan = o::read_plan(dir / "plan.ini");
  CHECK(plan.base.seed == 11);
  CHECK(plan.base.max_target_positions == 40);
  CHECK_FALSE(plan.base.checkpoint.has_value());
  REQUIRE(plan.intermediate.has_value());
  CHECK(plan.intermediate->data.train.records.size() == 16);
  CHECK(plan.intermediate->train.total_steps == 12);
  CHECK(plan.intermediate->train.batch_size == 4);
  CHECK(plan.target.train.total_steps == 7);
  CHECK(plan.target.train.peak_lr == doctest::Approx(1e-3));
  // Separate train/validation/test manifests are taken whole.
  CHECK(plan.target.data.test.records.size() == 24);
  CHECK(plan.jobs == 2);
  REQUIRE(plan.normalizations.size() == 3);
  CHECK(plan.normalizations[0] == lrasr::textnorm::NormalizationConfig::None());
  CHECK(plan.normalizations[1] == lrasr::textnorm::NormalizationConfig::PunctuationFilter());
  CHECK(plan.normalizations[2].remove_symbols);

  {
    std::ofstream out(dir / "bad.ini");
    out << "[base]\nseed = 1\n";
  }
  CHECK_THROWS_KIND(o::read_plan(dir / "bad.ini"), ErrorKind::kParse);
  {
    std::ofstream out(dir / "bad2.ini");
    out << "[target]\nmanifest = x.jsonl\n[experiment]\nnormalizations = loud\n";
  }
  CHECK_THROWS(o::read_plan(dir / "bad2.ini"));
}
