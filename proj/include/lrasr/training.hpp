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

// Training loop, optimizer, checkpoints and checkpoint evaluation.
//
// A step draws batch_size utterances from a seeded per-pass shuffle, computes
// every utterance's gradient into its own buffer (concurrently when jobs > 1),
// sums the buffers in batch order and applies one Adam update. The result is
// therefore independent of the thread count.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lrasr/corpus.hpp"
#include "lrasr/features.hpp"
#include "lrasr/metrics.hpp"
#include "lrasr/model.hpp"
#include "lrasr/textnorm.hpp"

namespace lrasr::training {

enum class Schedule { kLinearDecay, kConstant };

struct TrainConfig {
  int batch_size = 32;
  int grad_accumulation = 1;
  double peak_lr = 1e-5;
  int warmup_steps = 500;
  int total_steps = 2000;
  int eval_every = 250;
  std::uint64_t seed = 0;
  Schedule schedule = Schedule::kLinearDecay;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.98;
  double adam_eps = 1e-9;
  // Global gradient-norm clip; 0 disables.
  double clip_norm = 0.0;
  textnorm::NormalizationConfig norm_for_eval = textnorm::NormalizationConfig::None();
  // Greedy-decoding cap during evaluation; 0 means the model's target table.
  int max_decode_tokens = 0;
  int jobs = 1;

  // batch 32, accumulation 1, lr 1e-5, warmup 500, 2000 steps, eval every 250.
  static TrainConfig Full();
  // Desk-scale overrides: batch 16, 1500 steps, eval every 100, lr 2e-3.
  static TrainConfig Toy();

  void check() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

// Learning rate for a 1-based step: linear warmup to peak_lr, then linear
// decay to 0 at total_steps (or constant).
double lr_schedule(int step, const TrainConfig& config);

struct AdamState {
  model::Parameters<float> m;
  model::Parameters<float> v;
  std::uint64_t t = 0;
};

AdamState zero_adam(const model::ModelConfig& config);

// One Adam step over trainable arrays.
void adam_update(model::Parameters<float>& params, const model::Parameters<float>& grads,
                 AdamState& state, double lr, const TrainConfig& config);

struct MetricPoint {
  int step = 0;
  double wer = 0;
  double cer = 0;
};

struct Checkpoint {
  model::ModelConfig config;
  model::Tokenizer tokenizer;
  model::Parameters<float> params;
  AdamState optimizer;
  int step = 0;
  std::vector<MetricPoint> history;
  // Free-form provenance (stage name, parent digest, ...).
  nlohmann::json meta = nlohmann::json::object();
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(std::ostream& out, const Checkpoint& ckpt);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// FNV-1a over every parameter array (names, shapes, bytes).
std::uint64_t parameter_digest(const model::Parameters<float>& params);
std::string digest_hex(std::uint64_t digest);

// Fresh model: random weights from `seed`.
Checkpoint fresh_checkpoint(const model::ModelConfig& config, const model::Tokenizer& tokenizer,
                            std::uint64_t seed);

// Utterances with model inputs precomputed.
struct Dataset {
  std::vector<std::string> ids;
  std::vector<Matrix<float>> inputs;
  std::vector<std::string> texts;
};

// Reads every audio file of `manifest` and computes model inputs. Throws
// Error(kEmptyCorpus) on an empty manifest.
Dataset load_dataset(const corpus::Manifest& manifest, const model::ModelConfig& config,
                     int jobs = 1);

struct TrainResult {
  Checkpoint best;
  Checkpoint final;
  std::vector<double> losses;  // one per step
  std::vector<MetricPoint> evals;
  std::size_t unknown_tokens = 0;
};

struct TrainOptions {
  // JSON-lines log; null disables.
  std::ostream* log = nullptr;
  // Fine-tuning from a checkpoint starts a fresh optimizer by default.
  bool reset_optimizer = true;
};

// Runs exactly total_steps Adam updates starting from `init`. Throws
// Error(kEmptyCorpus) if either dataset is empty and Error(kNonFiniteLoss) if
// the loss stops being finite.
TrainResult train(const Checkpoint& init, const Dataset& train_set, const Dataset& val_set,
                  const TrainConfig& config, const TrainOptions& options = {});

// Greedy transcriptions of every utterance, paired with references.
std::vector<metrics::UtterancePair> transcribe(const Checkpoint& ckpt, const Dataset& data,
                                               int max_tokens = 0, int jobs = 1);

metrics::EvalReport evaluate(const Checkpoint& ckpt, const Dataset& data,
                             const textnorm::NormalizationConfig& norm, int max_tokens = 0,
                             int jobs = 1);

}  // namespace lrasr::training
