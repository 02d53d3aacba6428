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

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>

#include "lrasr/errors.hpp"
#include "lrasr/metrics.hpp"

namespace lrasr::orchestrator {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

const char* status_name(CellStatus s) {
  switch (s) {
    case CellStatus::kOk:
      return "ok";
    case CellStatus::kSkipped:
      return "skipped";
    case CellStatus::kFailed:
      return "failed";
  }
  return "failed";
}

CellStatus parse_status(const std::string& s) {
  if (s == "ok") return CellStatus::kOk;
  if (s == "skipped") return CellStatus::kSkipped;
  if (s == "failed") return CellStatus::kFailed;
  throw Error(ErrorKind::kParse, "unknown cell status '" + s + "'");
}

Row parse_row(const std::string& s) {
  for (Row r : kRows)
    if (row_name(r) == s) return r;
  throw Error(ErrorKind::kParse, "unknown row '" + s + "'");
}

void mark_all(RowReport& row, CellStatus status, const std::string& reason) {
  for (auto& c : row.cells) {
    c.status = status;
    c.reason = reason;
  }
}

// Decodes the test split once and scores it under every normalization.
void score_row(RowReport& row, const training::Checkpoint& ckpt, const training::Dataset& test,
               const std::vector<textnorm::NormalizationConfig>& norms, int max_tokens, int jobs) {
  const auto pairs = training::transcribe(ckpt, test, max_tokens, jobs);
  for (std::size_t i = 0; i < norms.size(); ++i) {
    auto& cell = row.cells[i];
    try {
      const auto report = metrics::corpus_eval(pairs, norms[i], {}, jobs);
      cell = {CellStatus::kOk, report.pooled_wer, report.pooled_cer, {}};
    } catch (const Error& e) {
      cell = {CellStatus::kFailed, 0, 0, e.what()};
    }
  }
}

nlohmann::json result_provenance(const training::Checkpoint& init, const training::TrainResult& r,
                                 const training::TrainConfig& cfg) {
  return {{"init_digest", training::digest_hex(training::parameter_digest(init.params))},
          {"best_digest", training::digest_hex(training::parameter_digest(r.best.params))},
          {"best_step", r.best.step},
          {"steps", r.losses.size()},
          {"train_config", cfg.to_json()}};
}

void save_stage(const RunOptions& options, const std::string& name,
                const training::TrainResult& r) {
  if (options.work_dir.empty()) return;
  training::save_checkpoint(options.work_dir / (name + ".best.lrck"), r.best);
  training::save_checkpoint(options.work_dir / (name + ".final.lrck"), r.final);
}

// Log stream for one stage, or null when running in memory.
std::unique_ptr<std::ofstream> stage_log(const RunOptions& options, const std::string& name) {
  if (options.work_dir.empty()) return nullptr;
  auto out = std::make_unique<std::ofstream>(options.work_dir / (name + ".log.jsonl"));
  if (!*out) throw Error(ErrorKind::kIo, "cannot write training log for " + name);
  return out;
}

textnorm::NormalizationConfig parse_normalization(const std::string& token) {
  if (token == "raw") return textnorm::NormalizationConfig::None();
  if (token == "punct") return textnorm::NormalizationConfig::PunctuationFilter();
  if (token == "punct+sym") {
    auto c = textnorm::NormalizationConfig::PunctuationFilter();
    c.remove_symbols = true;
    return c;
  }
  return textnorm::NormalizationConfig::Parse(token);
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    const auto b = cur.find_first_not_of(" \t");
    const auto e = cur.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
  }
  return out;
}

// INI values are untyped; numbers become JSON numbers so the typed readers
// accept them.
nlohmann::json section_json(const boost::property_tree::ptree& section) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, node] : section) {
    const std::string v = node.get_value<std::string>();
    char* end = nullptr;
    const long long as_int = std::strtoll(v.c_str(), &end, 10);
    if (!v.empty() && end && *end == '\0') {
      j[key] = as_int;
      continue;
    }
    const double as_double = std::strtod(v.c_str(), &end);
    if (!v.empty() && end && *end == '\0') {
      j[key] = as_double;
      continue;
    }
    if (v == "true" || v == "false")
      j[key] = v == "true";
    else
      j[key] = v;
  }
  return j;
}

CorpusTriple read_triple(const boost::property_tree::ptree& section,
                         const std::filesystem::path& dir, const std::string& name) {
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : dir / path;
  };
  if (auto m = section.get_optional<std::string>("manifest"))
    return triple_from_manifest(corpus::read_manifest(resolve(*m)));
  CorpusTriple t;
  auto need = [&](const char* key) {
    const auto v = section.get_optional<std::string>(key);
    if (!v) throw Error(ErrorKind::kParse, "[" + name + "] needs 'manifest' or '" + key + "'");
    return corpus::read_manifest(resolve(*v));
  };
  t.train = need("train");
  t.validation = need("validation");
  t.test = need("test");
  return t;
}

}  // namespace

std::string_view row_name(Row r) {
  switch (r) {
    case Row::kZeroshot:
      return "zeroshot";
    case Row::kIntermediate:
      return "intermediate";
    case Row::kDtf:
      return "dtf";
    case Row::kMtf:
      return "mtf";
  }
  return "?";
}

CorpusTriple triple_from_manifest(const corpus::Manifest& manifest) {
  CorpusTriple t;
  for (auto* m : {&t.train, &t.validation, &t.test}) {
    m->header = manifest.header;
    m->base_dir = manifest.base_dir;
  }
  for (const auto& r : manifest.records) {
    if (!r.split) throw Error(ErrorKind::kInvalidArgument, r.id + ": record has no split");
    switch (*r.split) {
      case corpus::Split::kTrain:
        t.train.records.push_back(r);
        break;
      case corpus::Split::kValidation:
        t.validation.records.push_back(r);
        break;
      case corpus::Split::kTest:
        t.test.records.push_back(r);
        break;
    }
  }
  return t;
}

model::Tokenizer union_tokenizer(const CorpusTriple* intermediate, const CorpusTriple& target) {
  std::vector<std::string> texts;
  auto add = [&](const CorpusTriple& t) {
    for (const auto* m : {&t.train, &t.validation})
      for (const auto& r : m->records) texts.push_back(r.text);
  };
  if (intermediate) add(*intermediate);
  add(target);
  return model::Tokenizer::FromTexts(texts);
}

training::Checkpoint resolve_base(const BaseSpec& base, const model::Tokenizer& tokenizer) {
  if (base.checkpoint) {
    if (!base.checkpoint->tokenizer.covers(tokenizer))
      throw Error(ErrorKind::kAlphabetMismatch,
                  "base checkpoint's alphabet does not cover the experiment corpora");
    return *base.checkpoint;
  }
  auto config = model::ModelConfig::Preset(base.preset, tokenizer.vocab_size());
  if (base.max_target_positions > 0) config.max_target_positions = base.max_target_positions;
  return training::fresh_checkpoint(config, tokenizer, base.seed);
}

LoadedTriple load_triple(const CorpusTriple& triple, const model::ModelConfig& config, int jobs) {
  return {training::load_dataset(triple.train, config, jobs),
          training::load_dataset(triple.validation, config, jobs),
          training::load_dataset(triple.test, config, jobs)};
}

training::TrainResult direct_finetune(const training::Checkpoint& base, const LoadedTriple& target,
                                      const training::TrainConfig& config, std::ostream* log) {
  training::TrainOptions options;
  options.log = log;
  return training::train(base, target.train, target.validation, config, options);
}

MultistageResult multistage_finetune(const training::Checkpoint& base,
                                     const LoadedTriple* intermediate, const LoadedTriple& target,
                                     const training::TrainConfig& stage1,
                                     const training::TrainConfig& stage2, std::ostream* log) {
  if (!intermediate)
    throw Error(ErrorKind::kMissingIntermediate,
                "multistage fine-tuning needs an intermediate corpus");
  MultistageResult r;
  training::TrainOptions options;
  options.log = log;
  r.intermediate =
      training::train(base, intermediate->train, intermediate->validation, stage1, options);
  r.stage1_best_digest = training::parameter_digest(r.intermediate.best.params);
  const training::Checkpoint init = r.intermediate.best;
  r.stage2_init_digest = training::parameter_digest(init.params);
  if (r.stage2_init_digest != r.stage1_best_digest)
    throw Error(ErrorKind::kInvalidArgument, "stage-2 initialization differs from stage-1 best");
  r.target = training::train(init, target.train, target.validation, stage2, options);
  return r;
}

ExperimentReport run_matrix(const ExperimentPlan& plan, const RunOptions& options) {
  if (plan.normalizations.empty())
    throw Error(ErrorKind::kInvalidArgument, "plan needs at least one normalization");
  if (!options.work_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(options.work_dir, ec);
    if (ec) throw Error(ErrorKind::kIo, "cannot create " + options.work_dir.string());
  }
  ExperimentReport report;
  report.normalizations = plan.normalizations;
  for (Row r : kRows) {
    RowReport row;
    row.row = r;
    row.cells.resize(plan.normalizations.size());
    report.rows.push_back(std::move(row));
  }
  auto& zs = report.rows[0];
  auto& inter = report.rows[1];
  auto& dtf = report.rows[2];
  auto& mtf = report.rows[3];

  const CorpusTriple* inter_data = plan.intermediate ? &plan.intermediate->data : nullptr;
  const auto tokenizer = union_tokenizer(inter_data, plan.target.data);
  const auto base = resolve_base(plan.base, tokenizer);
  const int jobs = plan.jobs;
  auto target_cfg = plan.target.train;
  target_cfg.jobs = jobs;
  const int target_cap = target_cfg.max_decode_tokens;

  auto t0 = Clock::now();
  const auto target = load_triple(plan.target.data, base.config, jobs);
  std::optional<LoadedTriple> inter_loaded;
  if (plan.intermediate && !options.intermediate_checkpoint)
    inter_loaded = load_triple(plan.intermediate->data, base.config, jobs);
  const double load_seconds = seconds_since(t0);

  const nlohmann::json base_info = {
      {"digest", training::digest_hex(training::parameter_digest(base.params))},
      {"source", plan.base.checkpoint ? "checkpoint" : "fresh"},
      {"seed", plan.base.seed},
      {"model", base.config.to_json()}};

  t0 = Clock::now();
  score_row(zs, base, target.test, plan.normalizations, target_cap, jobs);
  zs.seconds = seconds_since(t0) + load_seconds;
  zs.provenance = {{"checkpoint", base_info}};

  std::optional<training::Checkpoint> stage1;
  if (!plan.intermediate) {
    mark_all(inter, CellStatus::kSkipped, "plan has no intermediate corpus");
    mark_all(mtf, CellStatus::kSkipped, "plan has no intermediate corpus");
  } else {
    t0 = Clock::now();
    try {
      if (options.intermediate_checkpoint) {
        stage1 = *options.intermediate_checkpoint;
        inter.provenance = {
            {"reused", true},
            {"best_digest", training::digest_hex(training::parameter_digest(stage1->params))}};
      } else {
        auto log = stage_log(options, "intermediate");
        training::TrainOptions topt;
        topt.log = log.get();
        auto cfg = plan.intermediate->train;
        cfg.jobs = jobs;
        auto r = training::train(base, inter_loaded->train, inter_loaded->validation, cfg, topt);
        save_stage(options, "intermediate", r);
        inter.provenance = result_provenance(base, r, plan.intermediate->train);
        stage1 = std::move(r.best);
      }
      score_row(inter, *stage1, target.test, plan.normalizations, target_cap, jobs);
    } catch (const Error& e) {
      mark_all(inter, CellStatus::kFailed, e.what());
      mark_all(mtf, CellStatus::kFailed, std::string("intermediate stage failed: ") + e.what());
    }
    inter.seconds = seconds_since(t0);
  }

  t0 = Clock::now();
  try {
    auto log = stage_log(options, "dtf");
    const auto r = direct_finetune(base, target, target_cfg, log.get());
    save_stage(options, "dtf", r);
    dtf.provenance = result_provenance(base, r, plan.target.train);
    score_row(dtf, r.best, target.test, plan.normalizations, target_cap, jobs);
  } catch (const Error& e) {
    mark_all(dtf, CellStatus::kFailed, e.what());
  }
  dtf.seconds = seconds_since(t0);

  if (stage1) {
    t0 = Clock::now();
    try {
      const training::Checkpoint init = *stage1;
      const auto init_digest = training::parameter_digest(init.params);
      if (init_digest != training::parameter_digest(stage1->params))
        throw Error(ErrorKind::kInvalidArgument,
                    "stage-2 initialization differs from stage-1 best");
      auto log = stage_log(options, "mtf");
      const auto r = direct_finetune(init, target, target_cfg, log.get());
      save_stage(options, "mtf", r);
      mtf.provenance = result_provenance(init, r, plan.target.train);
      mtf.provenance["stage1_best_digest"] = training::digest_hex(init_digest);
      score_row(mtf, r.best, target.test, plan.normalizations, target_cap, jobs);
    } catch (const Error& e) {
      mark_all(mtf, CellStatus::kFailed, e.what());
    }
    mtf.seconds = seconds_since(t0);
  }
  return report;
}

// --- report ----------------------------------------------------------------

nlohmann::json ExperimentReport::to_json() const {
  nlohmann::json j;
  auto norms = nlohmann::json::array();
  for (const auto& n : normalizations) norms.push_back(n.ToString());
  j["normalizations"] = norms;
  auto rs = nlohmann::json::array();
  for (const auto& row : rows) {
    auto cells = nlohmann::json::array();
    for (std::size_t i = 0; i < row.cells.size(); ++i) {
      const auto& c = row.cells[i];
      nlohmann::json cj = {{"normalization", normalizations[i].Label()},
                           {"status", status_name(c.status)}};
      if (c.status == CellStatus::kOk) {
        cj["wer"] = c.wer;
        cj["cer"] = c.cer;
      } else {
        cj["reason"] = c.reason;
      }
      cells.push_back(cj);
    }
    rs.push_back({{"row", row_name(row.row)},
                  {"cells", cells},
                  {"provenance", row.provenance},
                  {"seconds", row.seconds}});
  }
  j["rows"] = rs;
  return j;
}

ExperimentReport ExperimentReport::from_json(const nlohmann::json& j) {
  try {
    ExperimentReport r;
    for (const auto& n : j.at("normalizations"))
      r.normalizations.push_back(textnorm::NormalizationConfig::Parse(n.get<std::string>()));
    for (const auto& rj : j.at("rows")) {
      RowReport row;
      row.row = parse_row(rj.at("row").get<std::string>());
      for (const auto& cj : rj.at("cells")) {
        Cell c;
        c.status = parse_status(cj.at("status").get<std::string>());
        if (c.status == CellStatus::kOk) {
          c.wer = cj.at("wer").get<double>();
          c.cer = cj.at("cer").get<double>();
        } else {
          c.reason = cj.value("reason", "");
        }
        row.cells.push_back(c);
      }
      if (row.cells.size() != r.normalizations.size())
        throw Error(ErrorKind::kParse, "row has the wrong number of cells");
      row.provenance = rj.value("provenance", nlohmann::json::object());
      row.seconds = rj.value("seconds", 0.0);
      r.rows.push_back(std::move(row));
    }
    if (r.rows.size() != kRows.size()) throw Error(ErrorKind::kParse, "report needs four rows");
    for (std::size_t i = 0; i < r.rows.size(); ++i)
      if (r.rows[i].row != kRows[i]) throw Error(ErrorKind::kParse, "rows out of order");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("report: ") + e.what());
  }
}

bool ExperimentReport::same_results(const ExperimentReport& other) const {
  if (normalizations != other.normalizations || rows.size() != other.rows.size()) return false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto &a = rows[i], &b = other.rows[i];
    if (a.row != b.row || a.cells.size() != b.cells.size() || a.provenance != b.provenance)
      return false;
    for (std::size_t k = 0; k < a.cells.size(); ++k)
      if (a.cells[k].status != b.cells[k].status || a.cells[k].wer != b.cells[k].wer ||
          a.cells[k].cer != b.cells[k].cer)
        return false;
  }
  return true;
}

void write_table(std::ostream& os, const ExperimentReport& report) {
  std::vector<std::string> header{"row"};
  for (const auto& n : report.normalizations) {
    header.push_back("WER " + n.Label());
    header.push_back("CER " + n.Label());
  }
  std::vector<std::vector<std::string>> lines{header};
  for (const auto& row : report.rows) {
    std::vector<std::string> line{std::string(row_name(row.row))};
    for (const auto& c : row.cells) {
      if (c.status == CellStatus::kOk) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * c.wer);
        line.emplace_back(buf);
        std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * c.cer);
        line.emplace_back(buf);
      } else {
        line.emplace_back(status_name(c.status));
        line.emplace_back(status_name(c.status));
      }
    }
    lines.push_back(std::move(line));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& l : lines)
    for (std::size_t i = 0; i < l.size(); ++i) width[i] = std::max(width[i], l[i].size());
  for (const auto& l : lines) {
    for (std::size_t i = 0; i < l.size(); ++i) {
      if (i == 0)
        os << std::left << std::setw(static_cast<int>(width[i])) << l[i];
      else
        os << "  " << std::right << std::setw(static_cast<int>(width[i])) << l[i];
    }
    os << '\n';
  }
  os << "(error rates in percent)\n";
  for (const auto& row : report.rows)
    for (std::size_t i = 0; i < row.cells.size(); ++i)
      if (row.cells[i].status != CellStatus::kOk)
        os << row_name(row.row) << " / " << report.normalizations[i].Label() << ": "
           << row.cells[i].reason << '\n';
}

void write_svg(std::ostream& os, const ExperimentReport& report) {
  static const char* const kColors[] = {"#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1"};
  const std::size_t groups = report.rows.size();
  const std::size_t bars = report.normalizations.size();
  const double left = 60, top = 30, plot_h = 240, bar_w = 28, group_gap = 30;
  const double group_w = static_cast<double>(bars) * bar_w + group_gap;
  const double width = left + static_cast<double>(groups) * group_w + 20;
  const double height = top + plot_h + 70;

  double ymax = 1.0;
  for (const auto& row : report.rows)
    for (const auto& c : row.cells)
      if (c.status == CellStatus::kOk) ymax = std::max(ymax, c.wer);
  ymax = std::ceil(ymax * 4.0) / 4.0;
  auto y_of = [&](double v) { return top + plot_h * (1.0 - v / ymax); };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<text x=\"" << left << "\" y=\"18\" font-size=\"13\">WER by configuration</text>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = ymax * k / 4.0;
    const double y = y_of(v);
    os << "<line x1=\"" << left << "\" x2=\"" << width - 20 << "\" y1=\"" << y << "\" y2=\"" << y
       << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">"
       << std::lround(100 * v) << "%</text>\n";
  }
  for (std::size_t g = 0; g < groups; ++g) {
    const auto& row = report.rows[g];
    const double gx = left + group_gap / 2 + static_cast<double>(g) * group_w;
    for (std::size_t b = 0; b < bars; ++b) {
      const auto& c = row.cells[b];
      const double x = gx + static_cast<double>(b) * bar_w;
      if (c.status != CellStatus::kOk) continue;
      const double y = y_of(c.wer);
      os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << bar_w - 4 << "\" height=\""
         << top + plot_h - y << "\" fill=\"" << kColors[b % 5] << "\"/>\n";
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.1f", 100.0 * c.wer);
      os << "<text x=\"" << x + (bar_w - 4) / 2 << "\" y=\"" << y - 3
         << "\" text-anchor=\"middle\" font-size=\"9\">" << buf << "</text>\n";
    }
    os << "<text x=\"" << gx + static_cast<double>(bars) * bar_w / 2 << "\" y=\""
       << top + plot_h + 16 << "\" text-anchor=\"middle\">" << row_name(row.row) << "</text>\n";
  }
  for (std::size_t b = 0; b < bars; ++b) {
    const double x = left + static_cast<double>(b) * 110;
    const double y = top + plot_h + 40;
    os << "<rect x=\"" << x << "\" y=\"" << y - 9 << "\" width=\"10\" height=\"10\" fill=\""
       << kColors[b % 5] << "\"/>\n";
    os << "<text x=\"" << x + 14 << "\" y=\"" << y << "\">" << report.normalizations[b].Label()
       << "</text>\n";
  }
  os << "</svg>\n";
}

ExperimentPlan read_plan(const std::filesystem::path& path) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorKind::kParse, e.what());
  }
  const auto dir = path.parent_path();
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path q(p);
    return q.is_absolute() ? q : dir / q;
  };
  ExperimentPlan plan;
  try {
    if (auto base = tree.get_child_optional("base")) {
      plan.base.seed = base->get<std::uint64_t>("seed", 0);
      plan.base.preset = base->get<std::string>("preset", "toy");
      plan.base.max_target_positions = base->get<int>("max_target_positions", 0);
      if (auto ck = base->get_optional<std::string>("checkpoint"))
        plan.base.checkpoint = training::load_checkpoint(resolve(*ck));
    }
    const auto target = tree.get_child_optional("target");
    if (!target) throw Error(ErrorKind::kParse, "plan needs a [target] section");
    plan.target.data = read_triple(*target, dir, "target");
    if (auto tc = tree.get_child_optional("target_train"))
      plan.target.train = training::TrainConfig::from_json(section_json(*tc));
    if (auto inter = tree.get_child_optional("intermediate")) {
      StagePlan stage;
      stage.data = read_triple(*inter, dir, "intermediate");
      if (auto tc = tree.get_child_optional("intermediate_train"))
        stage.train = training::TrainConfig::from_json(section_json(*tc));
      plan.intermediate = std::move(stage);
    }
    if (auto exp = tree.get_child_optional("experiment")) {
      plan.jobs = exp->get<int>("jobs", 1);
      if (auto norms = exp->get_optional<std::string>("normalizations")) {
        plan.normalizations.clear();
        for (const auto& tok : split_list(*norms, ','))
          plan.normalizations.push_back(parse_normalization(tok));
      }
    }
  } catch (const pt::ptree_error& e) {
    throw Error(ErrorKind::kParse, std::string("plan: ") + e.what());
  }
  return plan;
}

}  // namespace lrasr::orchestrator
