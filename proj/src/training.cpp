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

#include "lrasr/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>

#include "lrasr/binary_io.hpp"
#include "lrasr/errors.hpp"
#include "lrasr/wav.hpp"

namespace lrasr::training {
namespace {

using model::Parameters;

struct Slot {
  std::string name;
  Matrix<float>* array;
  bool trainable;
};

std::vector<Slot> slots(Parameters<float>& p) {
  std::vector<Slot> out;
  p.visit([&](const std::string& name, Matrix<float>& m, bool trainable) {
    out.push_back({name, &m, trainable});
  });
  return out;
}

std::vector<const Matrix<float>*> arrays(const Parameters<float>& p) {
  std::vector<const Matrix<float>*> out;
  p.visit([&](const std::string&, const Matrix<float>& m, bool) { out.push_back(&m); });
  return out;
}

void zero(Parameters<float>& p) {
  p.visit([](const std::string&, Matrix<float>& m, bool) {
    std::fill(m.flat().begin(), m.flat().end(), 0.0f);
  });
}

void add_into(Parameters<float>& dst, const Parameters<float>& src) {
  const auto d = slots(dst);
  const auto s = arrays(src);
  for (std::size_t i = 0; i < d.size(); ++i) {
    float* x = d[i].array->data();
    const float* y = s[i]->data();
    const std::size_t n = d[i].array->size();
    for (std::size_t j = 0; j < n; ++j) x[j] += y[j];
  }
}

const char* schedule_name(Schedule s) {
  return s == Schedule::kConstant ? "constant" : "linear_decay";
}

Schedule parse_schedule(const std::string& s) {
  if (s == "linear_decay") return Schedule::kLinearDecay;
  if (s == "constant") return Schedule::kConstant;
  throw Error(ErrorKind::kParse, "unknown schedule '" + s + "'");
}

// Endless sequence of utterance indices: each pass is a fresh permutation
// drawn from (seed, pass).
class IndexStream {
 public:
  IndexStream(std::size_t n, std::uint64_t seed) : n_(n), seed_(seed) { refill(); }

  std::size_t next() {
    if (pos_ == order_.size()) {
      ++pass_;
      refill();
    }
    return order_[pos_++];
  }

 private:
  void refill() {
    order_.resize(n_);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                      static_cast<std::uint32_t>(pass_), 0x5eedu};
    std::mt19937_64 rng(seq);
    std::shuffle(order_.begin(), order_.end(), rng);
    pos_ = 0;
  }

  std::size_t n_;
  std::uint64_t seed_;
  std::uint64_t pass_ = 0;
  std::size_t pos_ = 0;
  std::vector<std::size_t> order_;
};

nlohmann::json history_json(const std::vector<MetricPoint>& h) {
  auto a = nlohmann::json::array();
  for (const auto& p : h) a.push_back({{"step", p.step}, {"wer", p.wer}, {"cer", p.cer}});
  return a;
}

void log_record(std::ostream* log, const nlohmann::json& j) {
  if (log) *log << j.dump() << '\n';
}

}  // namespace

TrainConfig TrainConfig::Full() { return TrainConfig{}; }

TrainConfig TrainConfig::Toy() {
  TrainConfig c;
  c.batch_size = 16;
  c.total_steps = 1500;
  c.eval_every = 100;
  c.peak_lr = 2e-3;
  return c;
}

void TrainConfig::check() const {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::kInvalidArgument, m); };
  if (batch_size < 1) fail("batch_size must be positive");
  if (grad_accumulation < 1) fail("grad_accumulation must be positive");
  if (!(peak_lr > 0) || !std::isfinite(peak_lr)) fail("peak_lr must be positive");
  if (total_steps < 0 || warmup_steps < 0) fail("step counts must be non-negative");
  if (total_steps > 0 && warmup_steps >= total_steps) fail("warmup_steps must be < total_steps");
  if (eval_every < 1) fail("eval_every must be positive");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1))
    fail("Adam betas must lie in [0, 1)");
  if (!(adam_eps > 0)) fail("adam_eps must be positive");
  if (clip_norm < 0) fail("clip_norm must be non-negative");
  if (max_decode_tokens < 0) fail("max_decode_tokens must be non-negative");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"batch_size", batch_size},
          {"grad_accumulation", grad_accumulation},
          {"peak_lr", peak_lr},
          {"warmup_steps", warmup_steps},
          {"total_steps", total_steps},
          {"eval_every", eval_every},
          {"seed", seed},
          {"schedule", schedule_name(schedule)},
          {"adam_beta1", adam_beta1},
          {"adam_beta2", adam_beta2},
          {"adam_eps", adam_eps},
          {"clip_norm", clip_norm},
          {"selection_metric", "wer"},
          {"norm_for_eval", norm_for_eval.ToString()},
          {"max_decode_tokens", max_decode_tokens}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  try {
    TrainConfig c;
    c.batch_size = j.value("batch_size", c.batch_size);
    c.grad_accumulation = j.value("grad_accumulation", c.grad_accumulation);
    c.peak_lr = j.value("peak_lr", c.peak_lr);
    c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
    c.total_steps = j.value("total_steps", c.total_steps);
    c.eval_every = j.value("eval_every", c.eval_every);
    c.seed = j.value("seed", c.seed);
    if (j.contains("schedule")) c.schedule = parse_schedule(j.at("schedule").get<std::string>());
    c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
    c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
    c.adam_eps = j.value("adam_eps", c.adam_eps);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
    if (j.contains("norm_for_eval"))
      c.norm_for_eval =
          textnorm::NormalizationConfig::Parse(j.at("norm_for_eval").get<std::string>());
    c.max_decode_tokens = j.value("max_decode_tokens", c.max_decode_tokens);
    c.check();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("train config: ") + e.what());
  }
}

double lr_schedule(int step, const TrainConfig& config) {
  if (step < 1 || step > config.total_steps)
    throw Error(ErrorKind::kInvalidArgument,
                "step " + std::to_string(step) + " outside [1, total_steps]");
  if (step <= config.warmup_steps)
    return config.peak_lr * static_cast<double>(step) / static_cast<double>(config.warmup_steps);
  if (config.schedule == Schedule::kConstant) return config.peak_lr;
  return config.peak_lr * static_cast<double>(config.total_steps - step) /
         static_cast<double>(config.total_steps - config.warmup_steps);
}

AdamState zero_adam(const model::ModelConfig& config) {
  AdamState s;
  s.m = model::zero_parameters<float>(config);
  s.v = model::zero_parameters<float>(config);
  return s;
}

void adam_update(Parameters<float>& params, const Parameters<float>& grads, AdamState& state,
                 double lr, const TrainConfig& config) {
  ++state.t;
  const double b1 = config.adam_beta1, b2 = config.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  const float fb1 = static_cast<float>(b1), fb2 = static_cast<float>(b2);
  const float step = static_cast<float>(lr / c1);
  const float inv_sqrt_c2 = static_cast<float>(1.0 / std::sqrt(c2));
  const float eps = static_cast<float>(config.adam_eps);

  const auto p = slots(params);
  const auto g = arrays(grads);
  const auto m = slots(state.m);
  const auto v = slots(state.v);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!p[i].trainable) continue;
    float* x = p[i].array->data();
    const float* d = g[i]->data();
    float* mm = m[i].array->data();
    float* vv = v[i].array->data();
    const std::size_t n = p[i].array->size();
    for (std::size_t j = 0; j < n; ++j) {
      mm[j] = fb1 * mm[j] + (1.0f - fb1) * d[j];
      vv[j] = fb2 * vv[j] + (1.0f - fb2) * d[j] * d[j];
      x[j] -= step * mm[j] / (std::sqrt(vv[j]) * inv_sqrt_c2 + eps);
    }
  }
}

// --- checkpoints -------------------------------------------------------

void save_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  const nlohmann::json header = {{"config", ckpt.config.to_json()},
                                 {"tokenizer", ckpt.tokenizer.to_json()},
                                 {"step", ckpt.step},
                                 {"adam_t", ckpt.optimizer.t},
                                 {"history", history_json(ckpt.history)},
                                 {"meta", ckpt.meta}};
  out.write("LRCK", 4);
  binary::put_u32(out, kCheckpointVersion);
  binary::put_string(out, header.dump());

  struct Entry {
    std::string name;
    const Matrix<float>* m;
  };
  std::vector<Entry> entries;
  ckpt.params.visit([&](const std::string& name, const Matrix<float>& m, bool) {
    entries.push_back({"param/" + name, &m});
  });
  ckpt.optimizer.m.visit([&](const std::string& name, const Matrix<float>& m, bool trainable) {
    if (trainable) entries.push_back({"adam_m/" + name, &m});
  });
  ckpt.optimizer.v.visit([&](const std::string& name, const Matrix<float>& m, bool trainable) {
    if (trainable) entries.push_back({"adam_v/" + name, &m});
  });
  binary::put_u32(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    binary::put_string(out, e.name);
    binary::put_u32(out, static_cast<std::uint32_t>(e.m->rows()));
    binary::put_u32(out, static_cast<std::uint32_t>(e.m->cols()));
    for (float f : e.m->flat()) binary::put_f32(out, f);
  }
  if (!out) throw Error(ErrorKind::kIo, "checkpoint write failed");
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  save_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(std::istream& in) {
  binary::expect_magic(in, "LRCK");
  const std::uint32_t version = binary::get_u32(in);
  if (version != kCheckpointVersion)
    throw Error(ErrorKind::kParse, "unsupported checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  try {
    const auto header = nlohmann::json::parse(binary::get_string(in));
    ckpt.config = model::ModelConfig::from_json(header.at("config"));
    ckpt.tokenizer = model::Tokenizer::from_json(header.at("tokenizer"));
    ckpt.step = header.at("step").get<int>();
    ckpt.optimizer.t = header.at("adam_t").get<std::uint64_t>();
    for (const auto& p : header.at("history"))
      ckpt.history.push_back(
          {p.at("step").get<int>(), p.at("wer").get<double>(), p.at("cer").get<double>()});
    ckpt.meta = header.value("meta", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("checkpoint header: ") + e.what());
  }

  ckpt.params = model::zero_parameters<float>(ckpt.config);
  ckpt.optimizer.m = model::zero_parameters<float>(ckpt.config);
  ckpt.optimizer.v = model::zero_parameters<float>(ckpt.config);
  std::map<std::string, Matrix<float>*> wanted;
  for (auto& s : slots(ckpt.params)) wanted["param/" + s.name] = s.array;
  for (auto& s : slots(ckpt.optimizer.m))
    if (s.trainable) wanted["adam_m/" + s.name] = s.array;
  for (auto& s : slots(ckpt.optimizer.v))
    if (s.trainable) wanted["adam_v/" + s.name] = s.array;

  const std::uint32_t count = binary::get_u32(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = binary::get_string(in, 1024);
    const std::uint32_t rows = binary::get_u32(in), cols = binary::get_u32(in);
    const auto it = wanted.find(name);
    if (it == wanted.end()) throw Error(ErrorKind::kParse, "unexpected array '" + name + "'");
    Matrix<float>& m = *it->second;
    if (m.rows() != rows || m.cols() != cols)
      throw Error(ErrorKind::kParse, "shape mismatch for '" + name + "'");
    for (auto& f : m.flat()) f = binary::get_f32(in);
    wanted.erase(it);
  }
  if (!wanted.empty())
    throw Error(ErrorKind::kParse, "missing array '" + wanted.begin()->first + "'");
  return ckpt;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return load_checkpoint(in);
}

std::uint64_t parameter_digest(const Parameters<float>& params) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&](const void* data, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ull;
    }
  };
  params.visit([&](const std::string& name, const Matrix<float>& m, bool) {
    mix(name.data(), name.size());
    const std::uint64_t shape[2] = {m.rows(), m.cols()};
    mix(shape, sizeof(shape));
    mix(m.data(), m.size() * sizeof(float));
  });
  return h;
}

std::string digest_hex(std::uint64_t digest) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(digest));
  return buf;
}

Checkpoint fresh_checkpoint(const model::ModelConfig& config, const model::Tokenizer& tokenizer,
                            std::uint64_t seed) {
  config.check();
  if (config.vocab_size != tokenizer.vocab_size())
    throw Error(ErrorKind::kInvalidArgument,
                "model vocab_size " + std::to_string(config.vocab_size) + " != tokenizer size " +
                    std::to_string(tokenizer.vocab_size()));
  Checkpoint c;
  c.config = config;
  c.tokenizer = tokenizer;
  c.params = model::init_parameters<float>(config, seed);
  c.optimizer = zero_adam(config);
  c.meta = {{"init", "random"}, {"seed", seed}};
  return c;
}

// --- data ----------------------------------------------------------------

Dataset load_dataset(const corpus::Manifest& manifest, const model::ModelConfig& config, int jobs) {
  if (manifest.records.empty()) throw Error(ErrorKind::kEmptyCorpus, "manifest has no utterances");
  const std::size_t n = manifest.records.size();
  Dataset d;
  d.ids.resize(n);
  d.texts.resize(n);
  d.inputs.resize(n);
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic, 4) num_threads(jobs > 0 ? jobs : 1) if (jobs > 1)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      const auto& r = manifest.records[i];
      const auto audio = wav::read(manifest.audio_path(r));
      if (audio.sample_rate != corpus::kSampleRate)
        throw Error(ErrorKind::kInvalidArgument,
                    r.id + ": sample rate " + std::to_string(audio.sample_rate));
      const auto samples = audio.to_float();
      d.inputs[i] = model::model_input<float>(features::log_mel(samples), config);
      d.ids[i] = r.id;
      d.texts[i] = r.text;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return d;
}

// --- training --------------------------------------------------------------

TrainResult train(const Checkpoint& init, const Dataset& train_set, const Dataset& val_set,
                  const TrainConfig& config, const TrainOptions& options) {
  config.check();
  if (train_set.inputs.empty()) throw Error(ErrorKind::kEmptyCorpus, "empty training set");
  if (val_set.inputs.empty()) throw Error(ErrorKind::kEmptyCorpus, "empty validation set");
  const auto& mc = init.config;

  TrainResult result;
  Checkpoint current = init;
  if (options.reset_optimizer) {
    current.optimizer = zero_adam(mc);
    current.step = 0;
    current.history.clear();
  }
  const int step_offset = current.step;

  std::vector<std::vector<int>> targets(train_set.texts.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    targets[i] = init.tokenizer.encode(train_set.texts[i]);
    result.unknown_tokens += init.tokenizer.unknown_count(train_set.texts[i]);
    if (static_cast<int>(targets[i].size()) + 1 > mc.max_target_positions)
      throw Error(ErrorKind::kSequenceTooLong,
                  train_set.ids[i] + ": transcript longer than the decoder table");
  }

  log_record(options.log, {{"type", "config"},
                           {"train", config.to_json()},
                           {"model", mc.to_json()},
                           {"train_utterances", train_set.inputs.size()},
                           {"val_utterances", val_set.inputs.size()}});
  if (result.unknown_tokens > 0)
    log_record(options.log, {{"type", "warning"},
                             {"message", "transcript graphemes outside the tokenizer alphabet"},
                             {"unknown_tokens", result.unknown_tokens}});

  const std::size_t per_update = static_cast<std::size_t>(config.batch_size) *
                                 static_cast<std::size_t>(config.grad_accumulation);
  std::vector<Parameters<float>> buffers;
  buffers.reserve(per_update);
  for (std::size_t i = 0; i < per_update; ++i) buffers.push_back(model::zero_parameters<float>(mc));
  Parameters<float> grads = model::zero_parameters<float>(mc);

  IndexStream stream(train_set.inputs.size(), config.seed);
  std::vector<std::size_t> batch(per_update);
  std::vector<model::LossStats> stats(per_update);
  std::vector<std::exception_ptr> errors(per_update);
  const int jobs = config.jobs > 0 ? config.jobs : 1;
  const int max_tokens = config.max_decode_tokens;

  bool have_best = false;
  double best_wer = 0;

  for (int step = 1; step <= config.total_steps; ++step) {
    std::size_t tokens = 0;
    for (auto& b : batch) {
      b = stream.next();
      tokens += targets[b].size() + 1;
    }
    const float scale = 1.0f / static_cast<float>(tokens);

#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs) if (jobs > 1)
    for (std::size_t k = 0; k < per_update; ++k) {
      try {
        zero(buffers[k]);
        model::DropoutContext drop;
        model::DropoutContext* dp = nullptr;
        if (mc.dropout > 0) {
          std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                            static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(k)};
          drop.rate = mc.dropout;
          drop.rng.seed(seq);
          dp = &drop;
        }
        stats[k] = model::accumulate_gradients<float>(train_set.inputs[batch[k]], targets[batch[k]],
                                                      current.params, mc, scale, buffers[k], dp);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
    for (auto& e : errors)
      if (e) {
        auto err = e;
        e = nullptr;
        try {
          std::rethrow_exception(err);
        } catch (const Error& x) {
          throw Error(x.kind(), "step " + std::to_string(step) + ": " + x.what());
        }
      }

    double sum_nll = 0;
    zero(grads);
    for (std::size_t k = 0; k < per_update; ++k) {
      add_into(grads, buffers[k]);
      sum_nll += stats[k].sum_nll;
    }
    const double loss = sum_nll / static_cast<double>(tokens);
    if (!std::isfinite(loss))
      throw Error(ErrorKind::kNonFiniteLoss,
                  "step " + std::to_string(step) + ": loss " + std::to_string(loss));

    if (config.clip_norm > 0) {
      double sq = 0;
      for (const auto* m : arrays(grads))
        for (float f : m->flat()) sq += static_cast<double>(f) * f;
      const double norm = std::sqrt(sq);
      if (norm > config.clip_norm) {
        const float c = static_cast<float>(config.clip_norm / norm);
        for (auto& s : slots(grads))
          for (auto& f : s.array->flat()) f *= c;
      }
    }

    const double lr = lr_schedule(step, config);
    adam_update(current.params, grads, current.optimizer, lr, config);
    current.step = step_offset + step;
    result.losses.push_back(loss);
    log_record(
        options.log,
        {{"type", "step"}, {"step", current.step}, {"loss", loss}, {"lr", lr}, {"tokens", tokens}});

    if (step % config.eval_every == 0 || step == config.total_steps) {
      if (!model::all_finite(current.params))
        throw Error(ErrorKind::kNonFiniteLoss,
                    "step " + std::to_string(step) + ": parameters are not finite");
      const auto report = evaluate(current, val_set, config.norm_for_eval, max_tokens, jobs);
      const MetricPoint point{current.step, report.pooled_wer, report.pooled_cer};
      current.history.push_back(point);
      result.evals.push_back(point);
      log_record(options.log, {{"type", "eval"},
                               {"step", point.step},
                               {"wer", point.wer},
                               {"cer", point.cer},
                               {"normalization", config.norm_for_eval.ToString()}});
      if (!have_best || point.wer < best_wer) {
        have_best = true;
        best_wer = point.wer;
        result.best = current;
      }
    }
  }

  result.final = current;
  if (!have_best) result.best = current;
  result.best.meta["selected_step"] = result.best.step;
  log_record(options.log, {{"type", "done"},
                           {"best_step", result.best.step},
                           {"final_step", result.final.step},
                           {"best_digest", digest_hex(parameter_digest(result.best.params))}});
  return result;
}

std::vector<metrics::UtterancePair> transcribe(const Checkpoint& ckpt, const Dataset& data,
                                               int max_tokens, int jobs) {
  const std::size_t n = data.inputs.size();
  const std::size_t cap =
      static_cast<std::size_t>(max_tokens > 0 ? max_tokens : ckpt.config.max_target_positions);
  std::vector<metrics::UtterancePair> out(n);
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs > 0 ? jobs : 1) if (jobs > 1)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      const auto states = model::encode<float>(data.inputs[i], ckpt.params, ckpt.config);
      const auto ids = model::greedy_decode<float>(states, ckpt.params, ckpt.config, cap);
      out[i] = {data.ids[i], data.texts[i], ckpt.tokenizer.decode(ids)};
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

metrics::EvalReport evaluate(const Checkpoint& ckpt, const Dataset& data,
                             const textnorm::NormalizationConfig& norm, int max_tokens, int jobs) {
  const auto pairs = transcribe(ckpt, data, max_tokens, jobs);
  return metrics::corpus_eval(pairs, norm, {}, jobs);
}

}  // namespace lrasr::training
