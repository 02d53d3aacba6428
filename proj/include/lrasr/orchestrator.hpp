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

// Zeroshot, direct and multistage fine-tuning, and the comparison matrix.
//
// Rows are fixed: zeroshot, intermediate, dtf, mtf. Every row is scored on the
// target test split under each requested normalization. DTF and MTF's second
// stage share one TrainConfig, so both spend the same number of target steps.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lrasr/corpus.hpp"
#include "lrasr/model.hpp"
#include "lrasr/textnorm.hpp"
#include "lrasr/training.hpp"

namespace lrasr::orchestrator {

struct CorpusTriple {
  corpus::Manifest train;
  corpus::Manifest validation;
  corpus::Manifest test;
};

// Partitions a manifest by each record's split field. Records without one
// are an error.
CorpusTriple triple_from_manifest(const corpus::Manifest& manifest);

struct StagePlan {
  CorpusTriple data;
  training::TrainConfig train;
};

struct BaseSpec {
  // A trained starting point; when absent a fresh model is drawn from seed.
  std::optional<training::Checkpoint> checkpoint;
  std::uint64_t seed = 0;
  std::string preset = "toy";
  int max_target_positions = 0;  // 0 keeps the preset's table
};

struct ExperimentPlan {
  BaseSpec base;
  std::optional<StagePlan> intermediate;
  StagePlan target;
  std::vector<textnorm::NormalizationConfig> normalizations{
      textnorm::NormalizationConfig::None(), textnorm::NormalizationConfig::PunctuationFilter()};
  int jobs = 1;
};

enum class Row { kZeroshot = 0, kIntermediate = 1, kDtf = 2, kMtf = 3 };
inline constexpr std::array<Row, 4> kRows{Row::kZeroshot, Row::kIntermediate, Row::kDtf, Row::kMtf};
std::string_view row_name(Row r);

enum class CellStatus { kOk, kSkipped, kFailed };

struct Cell {
  CellStatus status = CellStatus::kSkipped;
  double wer = 0;
  double cer = 0;
  std::string reason;
};

struct RowReport {
  Row row = Row::kZeroshot;
  std::vector<Cell> cells;  // one per normalization
  nlohmann::json provenance = nlohmann::json::object();
  double seconds = 0;  // wall clock of the stages this row needed
};

struct ExperimentReport {
  std::vector<textnorm::NormalizationConfig> normalizations;
  std::vector<RowReport> rows;  // always the four rows, in order

  const RowReport& operator[](Row r) const { return rows[static_cast<std::size_t>(r)]; }

  nlohmann::json to_json() const;
  static ExperimentReport from_json(const nlohmann::json& j);
  // Same matrix, ignoring wall-clock times.
  bool same_results(const ExperimentReport& other) const;
};

// Tokenizer over every training and validation transcript of both corpora.
model::Tokenizer union_tokenizer(const CorpusTriple* intermediate, const CorpusTriple& target);

// Resolves the base: a fresh model over `tokenizer`, or the given checkpoint,
// which must cover `tokenizer` (Error(kAlphabetMismatch) otherwise).
training::Checkpoint resolve_base(const BaseSpec& base, const model::Tokenizer& tokenizer);

struct LoadedTriple {
  training::Dataset train, validation, test;
};

LoadedTriple load_triple(const CorpusTriple& triple, const model::ModelConfig& config,
                         int jobs = 1);

training::TrainResult direct_finetune(const training::Checkpoint& base, const LoadedTriple& target,
                                      const training::TrainConfig& config,
                                      std::ostream* log = nullptr);

struct MultistageResult {
  training::TrainResult intermediate;
  training::TrainResult target;
  std::uint64_t stage1_best_digest = 0;
  std::uint64_t stage2_init_digest = 0;
};

// Stage 1 on the intermediate corpus, then stage 2 from stage 1's best
// checkpoint. Throws Error(kMissingIntermediate) when `intermediate` is null.
MultistageResult multistage_finetune(const training::Checkpoint& base,
                                     const LoadedTriple* intermediate, const LoadedTriple& target,
                                     const training::TrainConfig& stage1,
                                     const training::TrainConfig& stage2,
                                     std::ostream* log = nullptr);

struct RunOptions {
  // Directory for checkpoints and training logs; empty keeps everything in memory.
  std::filesystem::path work_dir;
  // Reuse an already trained stage-1 checkpoint instead of training one.
  const training::Checkpoint* intermediate_checkpoint = nullptr;
};

ExperimentReport run_matrix(const ExperimentPlan& plan, const RunOptions& options = {});

// Aligned text table, error rates in percent.
void write_table(std::ostream& os, const ExperimentReport& report);
// Grouped bar chart of WER per row, one bar per normalization.
void write_svg(std::ostream& os, const ExperimentReport& report);

// Reads an INI plan (sections base, intermediate, intermediate_train, target,
// target_train, experiment); relative paths resolve against the file.
ExperimentPlan read_plan(const std::filesystem::path& path);

}  // namespace lrasr::orchestrator
