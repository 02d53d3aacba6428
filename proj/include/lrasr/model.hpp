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

// Encoder-decoder speech transformer.
//
// Encoder: conv(k3, same) + GELU -> conv(k3, stride 2) + GELU -> fixed
// sinusoidal positions -> pre-norm blocks (self-attention, FFN) -> layer norm.
// Decoder: token embedding + learned positions -> pre-norm blocks (causal
// self-attention, cross-attention, FFN) -> layer norm -> projection tied to the
// token embedding.
//
// Everything is templated on the scalar: training runs in float, the gradient
// check in double.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lrasr/features.hpp"
#include "lrasr/nn.hpp"
#include "lrasr/tensor.hpp"

namespace lrasr::model {

struct ModelConfig {
  int n_mels = 80;
  int d_model = 64;
  int enc_layers = 2;
  int dec_layers = 2;
  int heads = 4;
  int ffn_dim = 256;
  int vocab_size = 4;
  int max_source_positions = 1500;
  int max_target_positions = 128;
  int conv_kernel = 3;
  int conv_stride = 2;
  double dropout = 0.0;
  // Per-utterance zero-mean/unit-variance scaling of the log-mel input.
  bool standardize_input = true;

  // Working preset: 64 wide, 2+2 layers, 4 heads, FFN 256, character vocab.
  static ModelConfig Toy(int vocab_size);
  // Declarative reference sizes; far too large to train here.
  static ModelConfig Small();
  static ModelConfig Medium();
  static ModelConfig Preset(std::string_view name, int vocab_size);

  void check() const;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Number of trainable scalars; the fixed encoder position table is excluded.
std::size_t parameter_count(const ModelConfig& config);

// Character-level tokenizer over grapheme clusters.
class Tokenizer {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kSpecials = 4;

  Tokenizer() = default;
  // The alphabet is kept in the given order; duplicates are rejected.
  explicit Tokenizer(std::vector<std::string> alphabet);
  // Sorted union of every grapheme in `texts`.
  static Tokenizer FromTexts(std::span<const std::string> texts);

  int vocab_size() const { return kSpecials + static_cast<int>(alphabet_.size()); }
  const std::vector<std::string>& alphabet() const { return alphabet_; }

  std::vector<int> encode(std::string_view text) const;
  // Specials are dropped; UNK renders as U+FFFD.
  std::string decode(std::span<const int> ids) const;
  std::size_t unknown_count(std::string_view text) const;
  bool covers(const Tokenizer& other) const;

  nlohmann::json to_json() const;
  static Tokenizer from_json(const nlohmann::json& j);

  friend bool operator==(const Tokenizer& a, const Tokenizer& b) {
    return a.alphabet_ == b.alphabet_;
  }

 private:
  std::vector<std::string> alphabet_;
  std::vector<std::pair<std::string, int>> index_;  // sorted for lookup
};

template <typename T>
struct EncoderLayer {
  nn::LayerNorm<T> attn_norm;
  nn::Attention<T> attn;
  nn::LayerNorm<T> ffn_norm;
  nn::FeedForward<T> ffn;
};

template <typename T>
struct DecoderLayer {
  nn::LayerNorm<T> self_norm;
  nn::Attention<T> self_attn;
  nn::LayerNorm<T> cross_norm;
  nn::Attention<T> cross_attn;
  nn::LayerNorm<T> ffn_norm;
  nn::FeedForward<T> ffn;
};

template <typename T>
struct Parameters {
  nn::Linear<T> conv1;          // (3 * n_mels) x d
  nn::Linear<T> conv2;          // (3 * d) x d
  Matrix<T> encoder_positions;  // max_source_positions x d, sinusoidal, not trained
  std::vector<EncoderLayer<T>> encoder;
  nn::LayerNorm<T> encoder_norm;
  Matrix<T> token_embedding;    // vocab x d, also the output projection
  Matrix<T> decoder_positions;  // max_target_positions x d, learned
  std::vector<DecoderLayer<T>> decoder;
  nn::LayerNorm<T> decoder_norm;

  // fn(name, array, trainable) over every array in a fixed order.
  template <typename Fn>
  void visit(Fn&& fn);
  template <typename Fn>
  void visit(Fn&& fn) const;
};

// Zero-filled arrays with the shapes implied by `config`.
template <typename T>
Parameters<T> zero_parameters(const ModelConfig& config);

// Weights ~ N(0, 0.02), biases 0, layer-norm gain 1 / shift 0, encoder
// positions sinusoidal. Deterministic for a given seed.
template <typename T>
Parameters<T> init_parameters(const ModelConfig& config, std::uint64_t seed);

Matrix<double> sinusoids(std::size_t length, std::size_t channels);

template <typename To, typename From>
Parameters<To> convert(const Parameters<From>& p);

template <typename T>
bool all_finite(const Parameters<T>& p);

// Time-major model input (frames x n_mels) for a spectrogram.
template <typename T>
Matrix<T> model_input(const features::MelSpectrogram& mel, const ModelConfig& config);

template <typename T>
struct EncoderCache;
template <typename T>
struct DecoderCache;

// Per-call dropout source; rate 0 (or a null context) disables dropout.
struct DropoutContext {
  double rate = 0.0;
  std::mt19937_64 rng;
};

// Encoder over a time-major input. Throws Error(kShapeMismatch) on a wrong
// feature width or more than 2 * max_source_positions frames.
template <typename T>
Matrix<T> encode(const Matrix<T>& input, const Parameters<T>& params, const ModelConfig& config,
                 EncoderCache<T>* cache = nullptr, DropoutContext* dropout = nullptr);

template <typename T>
Matrix<T> encode(const features::MelSpectrogram& mel, const Parameters<T>& params,
                 const ModelConfig& config);

// Independent per-utterance encodings, computed concurrently.
template <typename T>
std::vector<Matrix<T>> encode_batch(std::span<const Matrix<T>> inputs, const Parameters<T>& params,
                                    const ModelConfig& config);

// Logits (L x vocab) for teacher-forced tokens. Throws
// Error(kSequenceTooLong) past max_target_positions.
template <typename T>
Matrix<T> decode(std::span<const int> tokens, const Matrix<T>& encoder_states,
                 const Parameters<T>& params, const ModelConfig& config,
                 DecoderCache<T>* cache = nullptr, DropoutContext* dropout = nullptr);

// Mean negative log-likelihood over unmasked positions (mask empty = all).
// Throws Error(kAllPositionsMasked).
template <typename T>
double loss(const Matrix<T>& logits, std::span<const int> targets,
            std::span<const std::uint8_t> mask = {});

// Starts from BOS, appends the arg-max token (lowest id on ties) until EOS
// or max_len tokens; the result has no BOS/EOS/PAD.
template <typename T>
std::vector<int> greedy_decode(const Matrix<T>& encoder_states, const Parameters<T>& params,
                               const ModelConfig& config, std::size_t max_len);

struct LossStats {
  double sum_nll = 0;
  std::size_t tokens = 0;
};

// One utterance of teacher-forced training: runs forward and backward and
// adds grad_scale * d(sum NLL)/d(params) into `grads`. `transcript` is the
// encoded text without specials.
template <typename T>
LossStats accumulate_gradients(const Matrix<T>& input, std::span<const int> transcript,
                               const Parameters<T>& params, const ModelConfig& config, T grad_scale,
                               Parameters<T>& grads, DropoutContext* dropout = nullptr);

// Same forward pass, loss only.
template <typename T>
LossStats transcript_loss(const Matrix<T>& input, std::span<const int> transcript,
                          const Parameters<T>& params, const ModelConfig& config);

// Teacher-forcing layout: input = BOS + transcript, target = transcript + EOS.
void teacher_forcing(std::span<const int> transcript, std::vector<int>& input,
                     std::vector<int>& target);

// --- caches (exposed for tests) ----------------------------------------

template <typename T>
struct EncoderLayerCache {
  nn::LayerNormCache<T> attn_norm;
  Matrix<T> attn_in;
  nn::AttentionCache<T> attn;
  Matrix<T> attn_mask;
  nn::LayerNormCache<T> ffn_norm;
  Matrix<T> ffn_in, hidden_pre, hidden;
  Matrix<T> ffn_mask;
};

template <typename T>
struct EncoderCache {
  Matrix<T> col1, pre1, col2, pre2;
  Matrix<T> input_mask;
  std::vector<EncoderLayerCache<T>> layers;
  nn::LayerNormCache<T> final_norm;
  std::size_t frames = 0;
};

template <typename T>
struct DecoderLayerCache {
  nn::LayerNormCache<T> self_norm;
  Matrix<T> self_in;
  nn::AttentionCache<T> self_attn;
  Matrix<T> self_mask;
  nn::LayerNormCache<T> cross_norm;
  Matrix<T> cross_in;
  nn::AttentionCache<T> cross_attn;
  Matrix<T> cross_mask;
  nn::LayerNormCache<T> ffn_norm;
  Matrix<T> ffn_in, hidden_pre, hidden;
  Matrix<T> ffn_mask;
};

template <typename T>
struct DecoderCache {
  std::vector<int> tokens;
  Matrix<T> embed_mask;
  std::vector<DecoderLayerCache<T>> layers;
  nn::LayerNormCache<T> final_norm;
  Matrix<T> final_out;
};

template <typename T>
void encode_backward(const EncoderCache<T>& cache, const Parameters<T>& params,
                     const ModelConfig& config, const Matrix<T>& d_states, Parameters<T>& grads);

template <typename T>
void decode_backward(const DecoderCache<T>& cache, const Matrix<T>& encoder_states,
                     const Parameters<T>& params, const ModelConfig& config,
                     const Matrix<T>& d_logits, Parameters<T>& grads, Matrix<T>& d_states);

// --- Parameters::visit ------------------------------------------------

namespace detail {
template <typename P, typename Fn>
void visit_params(P& p, Fn&& fn) {
  auto linear = [&](const std::string& name, auto& l) {
    fn(name + ".weight", l.weight, true);
    fn(name + ".bias", l.bias, true);
  };
  auto norm = [&](const std::string& name, auto& n) {
    fn(name + ".gamma", n.gamma, true);
    fn(name + ".beta", n.beta, true);
  };
  auto attention = [&](const std::string& name, auto& a) {
    linear(name + ".query", a.query);
    linear(name + ".key", a.key);
    linear(name + ".value", a.value);
    linear(name + ".output", a.output);
  };
  auto ffn = [&](const std::string& name, auto& f) {
    linear(name + ".up", f.up);
    linear(name + ".down", f.down);
  };
  linear("encoder.conv1", p.conv1);
  linear("encoder.conv2", p.conv2);
  fn(std::string("encoder.positions"), p.encoder_positions, false);
  for (std::size_t i = 0; i < p.encoder.size(); ++i) {
    const std::string base = "encoder.layers." + std::to_string(i);
    norm(base + ".attn_norm", p.encoder[i].attn_norm);
    attention(base + ".attn", p.encoder[i].attn);
    norm(base + ".ffn_norm", p.encoder[i].ffn_norm);
    ffn(base + ".ffn", p.encoder[i].ffn);
  }
  norm("encoder.norm", p.encoder_norm);
  fn(std::string("decoder.token_embedding"), p.token_embedding, true);
  fn(std::string("decoder.positions"), p.decoder_positions, true);
  for (std::size_t i = 0; i < p.decoder.size(); ++i) {
    const std::string base = "decoder.layers." + std::to_string(i);
    norm(base + ".self_norm", p.decoder[i].self_norm);
    attention(base + ".self_attn", p.decoder[i].self_attn);
    norm(base + ".cross_norm", p.decoder[i].cross_norm);
    attention(base + ".cross_attn", p.decoder[i].cross_attn);
    norm(base + ".ffn_norm", p.decoder[i].ffn_norm);
    ffn(base + ".ffn", p.decoder[i].ffn);
  }
  norm("decoder.norm", p.decoder_norm);
}
}  // namespace detail

template <typename T>
template <typename Fn>
void Parameters<T>::visit(Fn&& fn) {
  detail::visit_params(*this, fn);
}

template <typename T>
template <typename Fn>
void Parameters<T>::visit(Fn&& fn) const {
  detail::visit_params(*this, fn);
}

}  // namespace lrasr::model
