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

// lrasr command-line entry point.
//
// Exit codes: 0 success, 1 domain error (validation failures, metric
// preconditions, I/O), 2 usage error. Results go to stdout or files,
// diagnostics to stderr. `--config FILE` reads INI defaults (one section per
// subcommand path, e.g. [synth.gen]); flags on the command line win.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lrasr/corpus.hpp"
#include "lrasr/errors.hpp"
#include "lrasr/kernels.hpp"
#include "lrasr/metrics.hpp"
#include "lrasr/orchestrator.hpp"
#include "lrasr/synthlang.hpp"
#include "lrasr/textnorm.hpp"
#include "lrasr/training.hpp"

namespace fs = std::filesystem;
using namespace lrasr;

namespace {

// Bad flag combinations detected after parsing; exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> out;
  std::stringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw UsageError("not a number list: '" + s + "'");
    }
  }
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + dir.string());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  return out;
}

// Options shared by every training subcommand.
struct TrainFlags {
  std::optional<int> steps, batch, warmup, eval_every, accumulation, max_decode;
  std::optional<double> lr, clip;
  std::string schedule;
  std::string preset = "toy";
  int max_target_positions = 0;
  bool full_schedule = false;

  void add(CLI::App* app, const std::string& prefix = "") {
    app->add_option("--" + prefix + "steps", steps, "Optimizer updates");
    app->add_option("--" + prefix + "batch", batch, "Utterances per micro-batch");
    app->add_option("--" + prefix + "grad-accumulation", accumulation, "Micro-batches per update");
    app->add_option("--" + prefix + "lr", lr, "Peak learning rate");
    app->add_option("--" + prefix + "warmup", warmup, "Linear warmup steps");
    app->add_option("--" + prefix + "eval-every", eval_every, "Validation interval in steps");
    app->add_option("--" + prefix + "clip-norm", clip, "Gradient-norm clip (0 disables)");
    app->add_option("--" + prefix + "max-decode", max_decode, "Greedy-decoding cap in tokens");
    if (prefix.empty()) {
      app->add_option("--schedule", schedule, "linear_decay or constant")
          ->check(CLI::IsMember({"linear_decay", "constant"}));
      app->add_flag("--full-schedule", full_schedule,
                    "Start from batch 32 / lr 1e-5 / 2000 steps instead of the toy preset");
      app->add_option("--preset", preset, "Model preset for fresh models")
          ->check(CLI::IsMember({"toy", "small", "medium"}));
      app->add_option("--max-target-positions", max_target_positions,
                      "Decoder position table size for fresh models");
    }
  }

  training::TrainConfig resolve(std::uint64_t seed, int jobs,
                                const TrainFlags* shared = nullptr) const {
    auto c = (shared ? shared->full_schedule : full_schedule) ? training::TrainConfig::Full()
                                                                : training::TrainConfig::Toy();
    const auto& sched = shared ? shared->schedule : schedule;
    if (sched == "constant") c.schedule = training::Schedule::kConstant;
    if (steps) c.total_steps = *steps;
    if (batch) c.batch_size = *batch;
    if (accumulation) c.grad_accumulation = *accumulation;
    if (lr) c.peak_lr = *lr;
    if (warmup) c.warmup_steps = *warmup;
    if (eval_every) c.eval_every = *eval_every;
    if (clip) c.clip_norm = *clip;
    if (max_decode) c.max_decode_tokens = *max_decode;
    if (!warmup && c.warmup_steps >= c.total_steps) c.warmup_steps = c.total_steps / 10;
    c.seed = seed;
    c.jobs = jobs;
    try {
      c.check();
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    return c;
  }
};

orchestrator::CorpusTriple triple_arg(const std::string& manifest) {
  return orchestrator::triple_from_manifest(corpus::read_manifest(manifest));
}

// Logs every option of the invoked command path with its effective value, in
// the same INI layout `--config` accepts.
void print_resolved(const CLI::App& app) {
  std::cerr << "# resolved configuration\n";
  const CLI::App* cur = &app;
  std::string section;
  while (cur != nullptr) {
    std::string lines;
    for (const CLI::Option* opt : cur->get_options()) {
      if (opt->get_lnames().empty() || opt->get_lnames()[0] == "help" ||
          opt->get_lnames()[0] == "config")
        continue;
      std::string value;
      if (opt->count() > 0) {
        for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
      } else {
        value = opt->get_default_str();
      }
      lines += opt->get_lnames()[0] + " = " + value + '\n';
    }
    if (!lines.empty()) {
      if (!section.empty()) std::cerr << '[' << section << "]\n";
      std::cerr << lines;
    }
    const auto subs = cur->get_subcommands();
    cur = subs.empty() ? nullptr : subs.front();
    if (cur != nullptr) section += (section.empty() ? "" : ".") + cur->get_name();
  }
}

void write_eval(std::ostream& out, const metrics::EvalReport& r) { metrics::write_table(out, r); }

std::vector<metrics::UtterancePair> read_pairs(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  std::vector<metrics::UtterancePair> pairs;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '{') {
      try {
        const auto j = nlohmann::json::parse(line);
        pairs.push_back({j.value("id", std::to_string(n)), j.at("reference").get<std::string>(),
                         j.at("hypothesis").get<std::string>()});
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::kParse, path.string() + ":" + std::to_string(n) + ": " + e.what());
      }
      continue;
    }
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, '\t')) cols.push_back(col);
    if (line.back() == '\t') cols.emplace_back();
    if (cols.size() == 2)
      pairs.push_back({std::to_string(n), cols[0], cols[1]});
    else if (cols.size() == 3)
      pairs.push_back({cols[0], cols[1], cols[2]});
    else
      throw Error(ErrorKind::kParse, path.string() + ":" + std::to_string(n) +
                                         ": expected ref<TAB>hyp or id<TAB>ref<TAB>hyp");
  }
  return pairs;
}

void save_result(const fs::path& out_dir, const std::string& name, const training::TrainResult& r) {
  training::save_checkpoint(out_dir / (name + ".best.lrck"), r.best);
  training::save_checkpoint(out_dir / (name + ".final.lrck"), r.final);
  std::cout << name << ": best step " << r.best.step << ", digest "
            << training::digest_hex(training::parameter_digest(r.best.params)) << '\n';
  for (const auto& e : r.evals)
    std::cout << "  step " << e.step << "  val WER " << e.wer << "  CER " << e.cer << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lrasr: low-resource speech recognition toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "INI file with defaults; command-line flags win");
  std::uint64_t seed = 0;
  int jobs = 1;
  app.add_option("--seed", seed, "Seed for every stochastic step")->capture_default_str();
  app.add_option("--jobs", jobs, "Worker threads (default 1: deterministic baseline)")
      ->check(CLI::PositiveNumber);

  // corpus ------------------------------------------------------------------
  auto* corpus_cmd = app.add_subcommand("corpus", "Manifest tools");
  corpus_cmd->require_subcommand(1);

  std::string manifest_path;
  bool skip_audio = false, as_json = false;
  auto* validate = corpus_cmd->add_subcommand("validate", "Check corpus constraints");
  validate->add_option("manifest", manifest_path)->required();
  validate->add_flag("--skip-audio-check", skip_audio, "Do not open audio files");
  validate->add_flag("--json", as_json, "JSON lines output");

  auto* stats = corpus_cmd->add_subcommand("stats", "Duration statistics");
  stats->add_option("manifest", manifest_path)->required();
  stats->add_flag("--json", as_json, "JSON output");

  std::string ratios = "0.70,0.10,0.20", split_out;
  bool stratify = false;
  double tolerance = 0.02;
  auto* split_cmd =
      corpus_cmd->add_subcommand("split", "Duration-balanced train/validation/test split");
  split_cmd->add_option("manifest", manifest_path)->required();
  split_cmd->add_option("--out", split_out, "Manifest with split fields")->required();
  split_cmd->add_option("--ratios", ratios, "train,validation,test duration ratios");
  split_cmd->add_flag("--stratify", stratify, "Keep each speaker in one split");
  split_cmd->add_option("--tolerance", tolerance, "Allowed ratio deviation");

  std::string audio_path, boundaries, segment_out;
  auto* segment = corpus_cmd->add_subcommand("segment", "Cut a long recording at boundaries");
  segment->add_option("audio", audio_path)->required();
  segment->add_option("--boundaries", boundaries, "Cut times in seconds, comma separated")
      ->required();
  segment->add_option("--out", segment_out, "Output directory")->required();

  // synth -------------------------------------------------------------------
  auto* synth_cmd = app.add_subcommand("synth", "Synthetic languages");
  synth_cmd->require_subcommand(1);
  auto* gen = synth_cmd->add_subcommand("gen", "Generate a lexicon and a corpus");
  int vocab = 60;
  std::optional<double> overlap;
  std::string parent_path, gen_out, tag, splits;
  std::size_t utterances = 100, first_index = 0;
  synth::SynthConfig sc;
  int phones = 12;
  gen->add_option("--vocab", vocab, "Words in a new lexicon")->check(CLI::PositiveNumber);
  gen->add_option("--parent", parent_path, "Derive from this lexicon.json");
  gen->add_option("--overlap", overlap, "Shared fraction of the parent lexicon")
      ->check(CLI::Range(0.0, 1.0));
  gen->add_option("--utterances", utterances, "Utterances to synthesize");
  gen->add_option("--punct-rate", sc.punctuation_rate, "Per-word punctuation probability")
      ->check(CLI::Range(0.0, 1.0));
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--tag", tag, "Language tag");
  gen->add_option("--phones", phones, "Phone inventory size")->check(CLI::Range(1, 23));
  gen->add_option("--splits", splits, "train,validation,test utterance counts");
  gen->add_option("--first-index", first_index, "Offset of utterance sub-seeds");
  gen->add_option("--phone-duration", sc.phone_duration, "Seconds per phone");
  gen->add_option("--gap", sc.gap, "Silence between phones");
  gen->add_option("--word-gap", sc.word_gap, "Silence between words");
  gen->add_option("--min-words", sc.min_words, "Fewest words per utterance");
  gen->add_option("--max-words", sc.max_words, "Most words per utterance");
  gen->add_option("--snr", sc.noise_snr, "Noise level in dB");

  // train / finetune ----------------------------------------------------------
  std::string train_manifest, val_manifest, data_manifest, init_path, out_dir;
  TrainFlags tf;
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--data", data_manifest, "Manifest with split fields");
  train_cmd->add_option("--train", train_manifest, "Training manifest");
  train_cmd->add_option("--val", val_manifest, "Validation manifest");
  train_cmd->add_option("--init", init_path, "Start from this checkpoint");
  train_cmd->add_option("--out", out_dir, "Output directory")->required();
  tf.add(train_cmd);

  auto* finetune = app.add_subcommand("finetune", "Direct or multistage fine-tuning");
  finetune->require_subcommand(1);
  std::string base_path, target_manifest, inter_manifest;
  TrainFlags stage1_flags;
  auto* dtf_cmd = finetune->add_subcommand("dtf", "Fine-tune the base on the target only");
  auto* mtf_cmd = finetune->add_subcommand("mtf", "Intermediate stage, then target");
  for (auto* cmd : {dtf_cmd, mtf_cmd}) {
    cmd->add_option("--base", base_path, "Base checkpoint (fresh model when omitted)");
    cmd->add_option("--target", target_manifest, "Target manifest with split fields")->required();
    cmd->add_option("--out", out_dir, "Output directory")->required();
    tf.add(cmd);
  }
  mtf_cmd->add_option("--intermediate", inter_manifest, "Intermediate manifest with split fields")
      ->required();
  stage1_flags.add(mtf_cmd, "stage1-");

  // eval ----------------------------------------------------------------------
  std::string ref_hyp, ckpt_path, eval_manifest, jsonl_out;
  bool filter_punct = false, filter_symbols = false, collapse = false, code_points = false,
       no_spaces = false;
  int max_decode = 0;
  auto* eval_cmd = app.add_subcommand("eval", "Score transcripts or a checkpoint");
  eval_cmd->add_option("--ref-hyp", ref_hyp, "TSV (ref, hyp or id, ref, hyp) or JSON lines");
  eval_cmd->add_option("--checkpoint", ckpt_path, "Decode a manifest with this checkpoint");
  eval_cmd->add_option("--manifest", eval_manifest, "Manifest to decode");
  eval_cmd->add_flag("--filter-punctuation", filter_punct, "Remove punctuation before scoring");
  eval_cmd->add_flag("--filter-symbols", filter_symbols, "Remove symbols before scoring");
  eval_cmd->add_flag("--collapse-whitespace", collapse, "Collapse and trim whitespace");
  eval_cmd->add_flag("--code-points", code_points, "CER over code points instead of graphemes");
  eval_cmd->add_flag("--no-spaces", no_spaces, "Exclude spaces from CER units");
  eval_cmd->add_option("--jsonl", jsonl_out, "Also write per-utterance JSON lines here");
  eval_cmd->add_option("--max-decode", max_decode, "Greedy-decoding cap in tokens");

  // experiment / report ---------------------------------------------------------
  auto* experiment = app.add_subcommand("experiment", "Comparison matrix");
  experiment->require_subcommand(1);
  std::string plan_path, stage1_ckpt;
  auto* run_cmd = experiment->add_subcommand("run", "Run an experiment plan");
  run_cmd->add_option("--plan", plan_path, "INI plan")->required();
  run_cmd->add_option("--out", out_dir, "Output directory")->required();
  run_cmd->add_option("--reuse-intermediate", stage1_ckpt, "Skip stage 1 and use this checkpoint");

  auto* report_cmd = app.add_subcommand("report", "Report rendering");
  report_cmd->require_subcommand(1);
  std::string report_in, svg_out;
  auto* render = report_cmd->add_subcommand("render", "Render a report as a table and a chart");
  render->add_option("--in", report_in, "report.json")->required();
  render->add_option("--svg", svg_out, "Bar chart output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    kernels::set_threads(jobs);

    if (*validate) {
      const auto m = corpus::read_manifest(manifest_path);
      const auto violations = corpus::validate(m, !skip_audio);
      for (const auto& v : violations) {
        if (as_json)
          std::cout
              << nlohmann::json{{"id", v.id}, {"violation", corpus::violation_name(v.kind)}}.dump()
              << '\n';
        else
          std::cout << v.id << '\t' << corpus::violation_name(v.kind) << '\n';
      }
      if (!violations.empty()) {
        std::cerr << violations.size() << " violation(s)\n";
        return 1;
      }
      std::cerr << "ok: " << m.records.size() << " utterances\n";
      return 0;
    }

    if (*stats) {
      const auto s = corpus::stats(corpus::read_manifest(manifest_path));
      if (as_json) {
        std::cout << nlohmann::json{{"utterances", s.utterances},
                                    {"total_seconds", s.total_seconds},
                                    {"total_hms", corpus::format_hms(s.total_seconds)},
                                    {"min_seconds", s.min_seconds},
                                    {"max_seconds", s.max_seconds},
                                    {"mean_seconds", s.mean_seconds},
                                    {"per_speaker", s.per_speaker},
                                    {"per_split", s.per_split}}
                         .dump(1)
                  << '\n';
      } else {
        corpus::write_stats(std::cout, s);
      }
      return 0;
    }

    if (*split_cmd) {
      print_resolved(app);
      const auto m = corpus::read_manifest(manifest_path);
      const auto r = parse_doubles(ratios);
      if (r.size() != 3) throw UsageError("--ratios needs three values");
      corpus::SplitSpec spec;
      spec.ratios = {r[0], r[1], r[2]};
      spec.seed = seed;
      spec.stratify_by_speaker = stratify;
      spec.tolerance = tolerance;
      const auto result = corpus::split(m, spec);
      corpus::Manifest out;
      out.header = m.header;
      out.base_dir = m.base_dir;
      for (auto s : {corpus::Split::kTrain, corpus::Split::kValidation, corpus::Split::kTest})
        for (auto rec : result[s].records) {
          rec.split = s;
          out.records.push_back(rec);
        }
      // Keep audio paths valid relative to the new manifest's directory.
      const auto out_dir_path = fs::absolute(fs::path(split_out)).parent_path();
      for (auto& rec : out.records) {
        const auto abs = fs::absolute(m.audio_path(rec));
        rec.audio = fs::relative(abs, out_dir_path).string();
      }
      corpus::write_manifest(split_out, out);
      const double total = m.total_duration();
      for (auto s : {corpus::Split::kTrain, corpus::Split::kValidation, corpus::Split::kTest}) {
        const double d = result[s].total_duration();
        std::cout << corpus::split_name(s) << '\t' << result[s].records.size() << '\t'
                  << corpus::format_hms(d) << '\t' << (total > 0 ? d / total : 0.0) << '\n';
      }
      return 0;
    }

    if (*segment) {
      const auto times = parse_doubles(boundaries);
      const auto seg = corpus::segment_audio(audio_path, times, segment_out);
      corpus::Manifest draft;
      draft.records = seg.drafts;
      corpus::write_manifest(std::cout, draft);
      return 0;
    }

    if (*gen) {
      print_resolved(app);
      sc.seed = seed;
      sc.check();
      synth::Lexicon lex;
      if (!parent_path.empty()) {
        lex = synth::derive_related(synth::Lexicon::load(parent_path), overlap.value_or(0.7), seed,
                                    tag);
      } else {
        if (overlap) throw UsageError("--overlap needs --parent");
        lex = synth::gen_language(seed, vocab, synth::PhoneInventory::Default(phones), tag);
      }
      ensure_dir(gen_out);
      auto m = synth::synth_corpus(lex, utterances, sc, gen_out, first_index, jobs);
      if (!splits.empty()) {
        const auto counts = parse_doubles(splits);
        if (counts.size() != 3 ||
            counts[0] + counts[1] + counts[2] != static_cast<double>(utterances))
          throw UsageError("--splits needs three counts summing to --utterances");
        const std::size_t a = static_cast<std::size_t>(counts[0]);
        const std::size_t b = a + static_cast<std::size_t>(counts[1]);
        for (std::size_t i = 0; i < m.records.size(); ++i)
          m.records[i].split = i < a ? corpus::Split::kTrain
                                     : (i < b ? corpus::Split::kValidation : corpus::Split::kTest);
        corpus::write_manifest(fs::path(gen_out) / "manifest.jsonl", m);
      }
      std::cout << "language " << lex.language_tag << ": " << lex.words.size() << " words, "
                << m.records.size() << " utterances, " << corpus::format_hms(m.total_duration())
                << '\n';
      if (lex.parent_tag)
        std::cout << "derived from " << *lex.parent_tag << " with overlap " << *lex.overlap_fraction
                  << '\n';
      return 0;
    }

    if (*train_cmd) {
      print_resolved(app);
      const auto cfg = tf.resolve(seed, jobs);
      corpus::Manifest tm, vm;
      if (!data_manifest.empty()) {
        const auto t = triple_arg(data_manifest);
        tm = t.train;
        vm = t.validation;
      } else {
        if (train_manifest.empty() || val_manifest.empty())
          throw UsageError("train needs --data or both --train and --val");
        tm = corpus::read_manifest(train_manifest);
        vm = corpus::read_manifest(val_manifest);
      }
      training::Checkpoint init;
      if (!init_path.empty()) {
        init = training::load_checkpoint(init_path);
      } else {
        std::vector<std::string> texts;
        for (const auto* m : {&tm, &vm})
          for (const auto& r : m->records) texts.push_back(r.text);
        const auto tok = model::Tokenizer::FromTexts(texts);
        auto mc = model::ModelConfig::Preset(tf.preset, tok.vocab_size());
        if (tf.max_target_positions > 0) mc.max_target_positions = tf.max_target_positions;
        init = training::fresh_checkpoint(mc, tok, seed);
      }
      ensure_dir(out_dir);
      auto log = open_out(fs::path(out_dir) / "train.log.jsonl");
      training::TrainOptions opt;
      opt.log = &log;
      const auto r = training::train(init, training::load_dataset(tm, init.config, jobs),
                                     training::load_dataset(vm, init.config, jobs), cfg, opt);
      save_result(out_dir, "model", r);
      return 0;
    }

    if (*dtf_cmd || *mtf_cmd) {
      print_resolved(app);
      const auto cfg = tf.resolve(seed, jobs);
      const auto target = triple_arg(target_manifest);
      std::optional<orchestrator::CorpusTriple> inter;
      if (*mtf_cmd) inter = triple_arg(inter_manifest);
      orchestrator::BaseSpec bs;
      bs.seed = seed;
      bs.preset = tf.preset;
      bs.max_target_positions = tf.max_target_positions;
      if (!base_path.empty()) bs.checkpoint = training::load_checkpoint(base_path);
      const auto tok = orchestrator::union_tokenizer(inter ? &*inter : nullptr, target);
      const auto base = orchestrator::resolve_base(bs, tok);
      const auto tgt = orchestrator::load_triple(target, base.config, jobs);
      ensure_dir(out_dir);
      auto log = open_out(fs::path(out_dir) / "train.log.jsonl");
      if (*dtf_cmd) {
        save_result(out_dir, "dtf", orchestrator::direct_finetune(base, tgt, cfg, &log));
      } else {
        const auto c1 = stage1_flags.resolve(seed, jobs, &tf);
        const auto in = orchestrator::load_triple(*inter, base.config, jobs);
        const auto r = orchestrator::multistage_finetune(base, &in, tgt, c1, cfg, &log);
        save_result(out_dir, "intermediate", r.intermediate);
        save_result(out_dir, "mtf", r.target);
        std::cout << "stage-2 init digest " << training::digest_hex(r.stage2_init_digest)
                  << " == stage-1 best digest " << training::digest_hex(r.stage1_best_digest)
                  << '\n';
      }
      return 0;
    }

    if (*eval_cmd) {
      textnorm::NormalizationConfig norm;
      norm.remove_punctuation = filter_punct;
      norm.remove_symbols = filter_symbols;
      norm.collapse_whitespace = filter_punct || filter_symbols || collapse;
      norm.trim = norm.collapse_whitespace;
      metrics::CharOptions co;
      co.unit = code_points ? metrics::CharUnit::kCodePoint : metrics::CharUnit::kGrapheme;
      co.include_spaces = !no_spaces;
      std::vector<metrics::UtterancePair> pairs;
      if (!ref_hyp.empty()) {
        if (!ckpt_path.empty()) throw UsageError("use either --ref-hyp or --checkpoint");
        pairs = read_pairs(ref_hyp);
      } else {
        if (ckpt_path.empty() || eval_manifest.empty())
          throw UsageError("eval needs --ref-hyp, or --checkpoint with --manifest");
        const auto ckpt = training::load_checkpoint(ckpt_path);
        const auto data =
            training::load_dataset(corpus::read_manifest(eval_manifest), ckpt.config, jobs);
        pairs = training::transcribe(ckpt, data, max_decode, jobs);
      }
      const auto report = metrics::corpus_eval(pairs, norm, co, jobs);
      write_eval(std::cout, report);
      if (!jsonl_out.empty()) {
        auto out = open_out(jsonl_out);
        metrics::write_jsonl(out, report);
      }
      return 0;
    }

    if (*run_cmd) {
      print_resolved(app);
      const auto plan = orchestrator::read_plan(plan_path);
      auto p = plan;
      if (app.get_option("--jobs")->count() > 0) p.jobs = jobs;
      orchestrator::RunOptions opt;
      opt.work_dir = out_dir;
      std::optional<training::Checkpoint> reuse;
      if (!stage1_ckpt.empty()) {
        reuse = training::load_checkpoint(stage1_ckpt);
        opt.intermediate_checkpoint = &*reuse;
      }
      const auto report = orchestrator::run_matrix(p, opt);
      {
        auto out = open_out(fs::path(out_dir) / "report.json");
        out << report.to_json().dump(1) << '\n';
      }
      {
        auto out = open_out(fs::path(out_dir) / "report.txt");
        orchestrator::write_table(out, report);
      }
      {
        auto out = open_out(fs::path(out_dir) / "report.svg");
        orchestrator::write_svg(out, report);
      }
      orchestrator::write_table(std::cout, report);
      return 0;
    }

    if (*render) {
      std::ifstream in(report_in);
      if (!in) throw Error(ErrorKind::kIo, "cannot read " + report_in);
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::kParse, e.what());
      }
      const auto report = orchestrator::ExperimentReport::from_json(j);
      orchestrator::write_table(std::cout, report);
      if (!svg_out.empty()) {
        auto out = open_out(svg_out);
        orchestrator::write_svg(out, report);
      }
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
