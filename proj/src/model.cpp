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

#include "lrasr/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "lrasr/errors.hpp"
#include "lrasr/kernels.hpp"
#include "lrasr/textnorm.hpp"

namespace lrasr::model {

using kernels::Op;

// --- configuration --------------------------------------------------------

ModelConfig ModelConfig::Toy(int vocab_size) {
  ModelConfig c;
  c.vocab_size = vocab_size;
  return c;
}

ModelConfig ModelConfig::Small() {
  ModelConfig c;
  c.d_model = 768;
  c.enc_layers = 12;
  c.dec_layers = 12;
  c.heads = 12;
  c.ffn_dim = 3072;
  c.vocab_size = 51865;
  c.max_source_positions = 1500;
  c.max_target_positions = 448;
  c.standardize_input = false;
  return c;
}

ModelConfig ModelConfig::Medium() {
  ModelConfig c = Small();
  c.d_model = 1024;
  c.enc_layers = 24;
  c.dec_layers = 24;
  c.heads = 16;
  c.ffn_dim = 4096;
  return c;
}

ModelConfig ModelConfig::Preset(std::string_view name, int vocab_size) {
  if (name == "toy") return Toy(vocab_size);
  if (name == "small") return Small();
  if (name == "medium") return Medium();
  throw Error(ErrorKind::kInvalidArgument, "unknown model preset: " + std::string(name));
}

void ModelConfig::check() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorKind::kInvalidArgument, std::string("model config: ") + what);
  };
  require(n_mels > 0, "n_mels must be positive");
  require(d_model > 0 && heads > 0, "d_model and heads must be positive");
  require(d_model % heads == 0, "d_model must be divisible by heads");
  require(enc_layers >= 0 && dec_layers >= 0, "layer counts must be non-negative");
  require(ffn_dim > 0, "ffn_dim must be positive");
  require(vocab_size > Tokenizer::kUnk, "vocab_size must include the four specials");
  require(max_source_positions > 0 && max_target_positions > 0,
          "position tables must be non-empty");
  require(conv_kernel == 3, "conv_kernel is fixed at 3");
  require(conv_stride == 2, "conv_stride is fixed at 2");
  require(dropout >= 0.0 && dropout < 1.0, "dropout must be in [0, 1)");
}

nlohmann::json ModelConfig::to_json() const {
  return {{"n_mels", n_mels},
          {"d_model", d_model},
          {"enc_layers", enc_layers},
          {"dec_layers", dec_layers},
          {"heads", heads},
          {"ffn_dim", ffn_dim},
          {"vocab_size", vocab_size},
          {"max_source_positions", max_source_positions},
          {"max_target_positions", max_target_positions},
          {"conv_kernel", conv_kernel},
          {"conv_stride", conv_stride},
          {"dropout", dropout},
          {"standardize_input", standardize_input}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  try {
    ModelConfig c;
    c.n_mels = j.at("n_mels").get<int>();
    c.d_model = j.at("d_model").get<int>();
    c.enc_layers = j.at("enc_layers").get<int>();
    c.dec_layers = j.at("dec_layers").get<int>();
    c.heads = j.at("heads").get<int>();
    c.ffn_dim = j.at("ffn_dim").get<int>();
    c.vocab_size = j.at("vocab_size").get<int>();
    c.max_source_positions = j.at("max_source_positions").get<int>();
    c.max_target_positions = j.at("max_target_positions").get<int>();
    c.conv_kernel = j.at("conv_kernel").get<int>();
    c.conv_stride = j.at("conv_stride").get<int>();
    c.dropout = j.at("dropout").get<double>();
    c.standardize_input = j.at("standardize_input").get<bool>();
    c.check();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("model config: ") + e.what());
  }
}

std::size_t parameter_count(const ModelConfig& c) {
  const std::size_t d = c.d_model, f = c.ffn_dim, m = c.n_mels;
  const std::size_t linear_dd = d * d + d;
  const std::size_t norm = 2 * d;
  const std::size_t attention = 4 * linear_dd;
  const std::size_t ffn = d * f + f + f * d + d;
  const std::size_t conv = (3 * m * d + d) + (3 * d * d + d);
  const std::size_t enc_layer = 2 * norm + attention + ffn;
  const std::size_t dec_layer = 3 * norm + 2 * attention + ffn;
  return conv + c.enc_layers * enc_layer + norm + static_cast<std::size_t>(c.vocab_size) * d +
         static_cast<std::size_t>(c.max_target_positions) * d + c.dec_layers * dec_layer + norm;
}

// --- tokenizer -----------------------------------------------------------

Tokenizer::Tokenizer(std::vector<std::string> alphabet) : alphabet_(std::move(alphabet)) {
  for (std::size_t i = 0; i < alphabet_.size(); ++i) {
    if (alphabet_[i].empty())
      throw Error(ErrorKind::kInvalidArgument, "empty grapheme in alphabet");
    index_.emplace_back(alphabet_[i], kSpecials + static_cast<int>(i));
  }
  std::sort(index_.begin(), index_.end());
  for (std::size_t i = 1; i < index_.size(); ++i)
    if (index_[i].first == index_[i - 1].first)
      throw Error(ErrorKind::kInvalidArgument,
                  "duplicate grapheme in alphabet: " + index_[i].first);
}

Tokenizer Tokenizer::FromTexts(std::span<const std::string> texts) {
  std::set<std::string> seen;
  for (const auto& t : texts)
    for (auto& g : textnorm::graphemes(t)) seen.insert(std::move(g));
  return Tokenizer(std::vector<std::string>(seen.begin(), seen.end()));
}

std::vector<int> Tokenizer::encode(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& g : textnorm::graphemes(text)) {
    auto it = std::lower_bound(index_.begin(), index_.end(), g,
                               [](const auto& e, const std::string& key) { return e.first < key; });
    ids.push_back(it != index_.end() && it->first == g ? it->second : kUnk);
  }
  return ids;
}

std::string Tokenizer::decode(std::span<const int> ids) const {
  std::string out;
  for (int id : ids) {
    if (id == kUnk) {
      out += "\xEF\xBF\xBD";
    } else if (id >= kSpecials && id < vocab_size()) {
      out += alphabet_[static_cast<std::size_t>(id - kSpecials)];
    }
  }
  return out;
}

std::size_t Tokenizer::unknown_count(std::string_view text) const {
  const auto ids = encode(text);
  return static_cast<std::size_t>(std::count(ids.begin(), ids.end(), kUnk));
}

bool Tokenizer::covers(const Tokenizer& other) const {
  for (const auto& g : other.alphabet_) {
    auto it = std::lower_bound(index_.begin(), index_.end(), g,
                               [](const auto& e, const std::string& key) { return e.first < key; });
    if (it == index_.end() || it->first != g) return false;
  }
  return true;
}

nlohmann::json Tokenizer::to_json() const {
  return {{"mode", "character"},
          {"specials", {"<pad>", "<bos>", "<eos>", "<unk>"}},
          {"alphabet", alphabet_}};
}

Tokenizer Tokenizer::from_json(const nlohmann::json& j) {
  try {
    if (j.at("mode").get<std::string>() != "character")
      throw Error(ErrorKind::kParse, "tokenizer: unsupported mode");
    return Tokenizer(j.at("alphabet").get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("tokenizer: ") + e.what());
  }
}

// --- parameters ------------------------------------------------------------

Matrix<double> sinusoids(std::size_t length, std::size_t channels) {
  const std::size_t half = channels / 2;
  Matrix<double> table(length, channels);
  const double step = half > 1 ? std::log(10000.0) / static_cast<double>(half - 1) : 0.0;
  for (std::size_t t = 0; t < length; ++t) {
    for (std::size_t i = 0; i < half; ++i) {
      const double angle = static_cast<double>(t) * std::exp(-step * static_cast<double>(i));
      table(t, i) = std::sin(angle);
      table(t, half + i) = std::cos(angle);
    }
  }
  return table;
}

namespace {

template <typename T>
nn::Linear<T> make_linear(std::size_t in, std::size_t out) {
  return {Matrix<T>(in, out), Matrix<T>(1, out)};
}

template <typename T>
nn::LayerNorm<T> make_norm(std::size_t d) {
  return {Matrix<T>(1, d), Matrix<T>(1, d)};
}

template <typename T>
nn::Attention<T> make_attention(std::size_t d) {
  return {make_linear<T>(d, d), make_linear<T>(d, d), make_linear<T>(d, d), make_linear<T>(d, d)};
}

template <typename T>
nn::FeedForward<T> make_ffn(std::size_t d, std::size_t f) {
  return {make_linear<T>(d, f), make_linear<T>(f, d)};
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

template <typename T>
Parameters<T> zero_parameters(const ModelConfig& config) {
  config.check();
  const std::size_t d = config.d_model, f = config.ffn_dim;
  Parameters<T> p;
  p.conv1 = make_linear<T>(3 * static_cast<std::size_t>(config.n_mels), d);
  p.conv2 = make_linear<T>(3 * d, d);
  p.encoder_positions.resize(config.max_source_positions, d);
  p.encoder.resize(config.enc_layers);
  for (auto& l : p.encoder) {
    l.attn_norm = make_norm<T>(d);
    l.attn = make_attention<T>(d);
    l.ffn_norm = make_norm<T>(d);
    l.ffn = make_ffn<T>(d, f);
  }
  p.encoder_norm = make_norm<T>(d);
  p.token_embedding.resize(config.vocab_size, d);
  p.decoder_positions.resize(config.max_target_positions, d);
  p.decoder.resize(config.dec_layers);
  for (auto& l : p.decoder) {
    l.self_norm = make_norm<T>(d);
    l.self_attn = make_attention<T>(d);
    l.cross_norm = make_norm<T>(d);
    l.cross_attn = make_attention<T>(d);
    l.ffn_norm = make_norm<T>(d);
    l.ffn = make_ffn<T>(d, f);
  }
  p.decoder_norm = make_norm<T>(d);
  return p;
}

template <typename T>
Parameters<T> init_parameters(const ModelConfig& config, std::uint64_t seed) {
  Parameters<T> p = zero_parameters<T>(config);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.02);
  p.visit([&](const std::string& name, Matrix<T>& m, bool trainable) {
    if (!trainable) {
      m = cast<T>(sinusoids(m.rows(), m.cols()));
    } else if (ends_with(name, ".gamma")) {
      m.fill(T(1));
    } else if (ends_with(name, ".bias") || ends_with(name, ".beta")) {
      m.fill(T(0));
    } else {
      for (auto& v : m.flat()) v = static_cast<T>(normal(rng));
    }
  });
  return p;
}

template <typename To, typename From>
Parameters<To> convert(const Parameters<From>& p) {
  Parameters<To> out;
  out.encoder.resize(p.encoder.size());
  out.decoder.resize(p.decoder.size());
  std::vector<const Matrix<From>*> src;
  p.visit([&](const std::string&, const Matrix<From>& m, bool) { src.push_back(&m); });
  std::size_t i = 0;
  out.visit([&](const std::string&, Matrix<To>& m, bool) { m = cast<To>(*src[i++]); });
  return out;
}

template <typename T>
bool all_finite(const Parameters<T>& p) {
  bool ok = true;
  p.visit([&](const std::string&, const Matrix<T>& m, bool) {
    for (T v : m.flat())
      if (!std::isfinite(v)) ok = false;
  });
  return ok;
}

template <typename T>
Matrix<T> model_input(const features::MelSpectrogram& mel, const ModelConfig& config) {
  if (mel.values.rows() != static_cast<std::size_t>(config.n_mels))
    throw Error(ErrorKind::kShapeMismatch, "spectrogram has " + std::to_string(mel.values.rows()) +
                                               " mel bands, model expects " +
                                               std::to_string(config.n_mels));
  if (config.standardize_input) return cast<T>(features::standardize(mel));
  return cast<T>(transpose(mel.values));
}

// --- encoder ---------------------------------------------------------------

namespace {

template <typename T>
void apply_dropout(Matrix<T>& y, DropoutContext* dropout, Matrix<T>& mask) {
  if (dropout && dropout->rate > 0.0) {
    nn::dropout(y, dropout->rate, dropout->rng, mask);
  } else {
    mask = Matrix<T>();
  }
}

template <typename T>
void check_input(const Matrix<T>& input, const ModelConfig& config) {
  if (input.cols() != static_cast<std::size_t>(config.n_mels))
    throw Error(ErrorKind::kShapeMismatch, "encoder input has " + std::to_string(input.cols()) +
                                               " features, expected " +
                                               std::to_string(config.n_mels));
  if (input.rows() == 0) throw Error(ErrorKind::kShapeMismatch, "encoder input has no frames");
  if (input.rows() > 2 * static_cast<std::size_t>(config.max_source_positions))
    throw Error(ErrorKind::kShapeMismatch, "encoder input has " + std::to_string(input.rows()) +
                                               " frames, limit is " +
                                               std::to_string(2 * config.max_source_positions));
}

}  // namespace

template <typename T>
Matrix<T> encode(const Matrix<T>& input, const Parameters<T>& params, const ModelConfig& config,
                 EncoderCache<T>* cache, DropoutContext* dropout) {
  check_input(input, config);
  EncoderCache<T> local;
  EncoderCache<T>& c = cache ? *cache : local;
  c.frames = input.rows();
  const int heads = config.heads;

  c.col1 = nn::im2col3(input, 1);
  nn::linear_forward(c.col1, params.conv1, c.pre1);
  Matrix<T> h1;
  nn::gelu_forward(c.pre1, h1);
  c.col2 = nn::im2col3(h1, config.conv_stride);
  nn::linear_forward(c.col2, params.conv2, c.pre2);
  Matrix<T> x;
  nn::gelu_forward(c.pre2, x);
  const std::size_t len = x.rows(), d = x.cols();
  for (std::size_t t = 0; t < len; ++t) {
    const T* pos = params.encoder_positions.data() + t * d;
    T* row = x.data() + t * d;
    for (std::size_t j = 0; j < d; ++j) row[j] += pos[j];
  }
  apply_dropout(x, dropout, c.input_mask);

  c.layers.resize(params.encoder.size());
  Matrix<T> branch;
  for (std::size_t i = 0; i < params.encoder.size(); ++i) {
    const auto& lp = params.encoder[i];
    auto& lc = c.layers[i];
    nn::layer_norm_forward<T>(x, lp.attn_norm, lc.attn_in, &lc.attn_norm);
    nn::attention_forward<T>(lc.attn_in, lc.attn_in, lp.attn, heads, false, branch,
                             cache ? &lc.attn : nullptr);
    apply_dropout(branch, dropout, lc.attn_mask);
    nn::add_inplace(x, branch);
    nn::layer_norm_forward<T>(x, lp.ffn_norm, lc.ffn_in, &lc.ffn_norm);
    nn::feed_forward(lc.ffn_in, lp.ffn, lc.hidden_pre, lc.hidden, branch);
    apply_dropout(branch, dropout, lc.ffn_mask);
    nn::add_inplace(x, branch);
  }
  Matrix<T> out;
  nn::layer_norm_forward<T>(x, params.encoder_norm, out, &c.final_norm);
  if (!cache) c = EncoderCache<T>();
  return out;
}

template <typename T>
void encode_backward(const EncoderCache<T>& c, const Parameters<T>& params,
                     const ModelConfig& config, const Matrix<T>& d_states, Parameters<T>& grads) {
  const int heads = config.heads;
  Matrix<T> dx(d_states.rows(), d_states.cols());
  nn::layer_norm_backward(c.final_norm, params.encoder_norm, d_states, grads.encoder_norm, dx);
  Matrix<T> dbranch, dnorm_in;
  for (std::size_t i = params.encoder.size(); i-- > 0;) {
    const auto& lp = params.encoder[i];
    auto& lg = grads.encoder[i];
    const auto& lc = c.layers[i];

    dbranch = dx;
    nn::dropout_backward(dbranch, lc.ffn_mask);
    dnorm_in.resize(dx.rows(), dx.cols());
    nn::feed_forward_backward(lc.ffn_in, lc.hidden_pre, lc.hidden, lp.ffn, dbranch, lg.ffn,
                              dnorm_in);
    nn::layer_norm_backward(lc.ffn_norm, lp.ffn_norm, dnorm_in, lg.ffn_norm, dx);

    dbranch = dx;
    nn::dropout_backward(dbranch, lc.attn_mask);
    dnorm_in.resize(dx.rows(), dx.cols());
    nn::attention_backward(lc.attn_in, lc.attn_in, lc.attn, lp.attn, heads, dbranch, lg.attn,
                           dnorm_in, dnorm_in);
    nn::layer_norm_backward(lc.attn_norm, lp.attn_norm, dnorm_in, lg.attn_norm, dx);
  }
  nn::dropout_backward(dx, c.input_mask);

  Matrix<T> dpre2(c.pre2.rows(), c.pre2.cols());
  nn::gelu_backward(c.pre2, dx, dpre2);
  Matrix<T> dcol2(c.col2.rows(), c.col2.cols());
  nn::linear_backward<T>(c.col2, params.conv2, dpre2, grads.conv2, &dcol2);
  Matrix<T> dh1(c.frames, static_cast<std::size_t>(config.d_model));
  nn::col2im3(dcol2, config.conv_stride, dh1);
  Matrix<T> dpre1(c.pre1.rows(), c.pre1.cols());
  nn::gelu_backward(c.pre1, dh1, dpre1);
  nn::linear_backward<T>(c.col1, params.conv1, dpre1, grads.conv1, nullptr);
}

template <typename T>
Matrix<T> encode(const features::MelSpectrogram& mel, const Parameters<T>& params,
                 const ModelConfig& config) {
  return encode(model_input<T>(mel, config), params, config);
}

template <typename T>
std::vector<Matrix<T>> encode_batch(std::span<const Matrix<T>> inputs, const Parameters<T>& params,
                                    const ModelConfig& config) {
  std::vector<Matrix<T>> out(inputs.size());
  for (const auto& in : inputs) check_input(in, config);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(inputs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] = encode(inputs[static_cast<std::size_t>(i)], params, config);
  return out;
}

// --- decoder ---------------------------------------------------------------

namespace {

template <typename T>
void check_tokens(std::span<const int> tokens, const ModelConfig& config) {
  if (tokens.size() > static_cast<std::size_t>(config.max_target_positions))
    throw Error(ErrorKind::kSequenceTooLong,
                "token sequence of length " + std::to_string(tokens.size()) + " exceeds " +
                    std::to_string(config.max_target_positions) + " positions");
  if (tokens.empty()) throw Error(ErrorKind::kShapeMismatch, "empty token sequence");
  for (int t : tokens)
    if (t < 0 || t >= config.vocab_size)
      throw Error(ErrorKind::kShapeMismatch, "token id " + std::to_string(t) + " out of range");
}

template <typename T>
void project_logits(const Matrix<T>& hidden, const Parameters<T>& params, Matrix<T>& logits) {
  logits.resize(hidden.rows(), params.token_embedding.rows());
  kernels::gemm(hidden, Op::kNone, params.token_embedding, Op::kTranspose, logits);
}

}  // namespace

template <typename T>
Matrix<T> decode(std::span<const int> tokens, const Matrix<T>& encoder_states,
                 const Parameters<T>& params, const ModelConfig& config, DecoderCache<T>* cache,
                 DropoutContext* dropout) {
  check_tokens<T>(tokens, config);
  const std::size_t d = static_cast<std::size_t>(config.d_model);
  if (encoder_states.cols() != d || encoder_states.rows() == 0)
    throw Error(ErrorKind::kShapeMismatch, "encoder states have the wrong width");
  DecoderCache<T> local;
  DecoderCache<T>& c = cache ? *cache : local;
  c.tokens.assign(tokens.begin(), tokens.end());
  const int heads = config.heads;

  const std::size_t len = tokens.size();
  Matrix<T> x(len, d);
  for (std::size_t t = 0; t < len; ++t) {
    const T* emb = params.token_embedding.data() + static_cast<std::size_t>(tokens[t]) * d;
    const T* pos = params.decoder_positions.data() + t * d;
    T* row = x.data() + t * d;
    for (std::size_t j = 0; j < d; ++j) row[j] = emb[j] + pos[j];
  }
  apply_dropout(x, dropout, c.embed_mask);

  c.layers.resize(params.decoder.size());
  Matrix<T> branch;
  for (std::size_t i = 0; i < params.decoder.size(); ++i) {
    const auto& lp = params.decoder[i];
    auto& lc = c.layers[i];
    nn::layer_norm_forward<T>(x, lp.self_norm, lc.self_in, &lc.self_norm);
    nn::attention_forward<T>(lc.self_in, lc.self_in, lp.self_attn, heads, true, branch,
                             cache ? &lc.self_attn : nullptr);
    apply_dropout(branch, dropout, lc.self_mask);
    nn::add_inplace(x, branch);
    nn::layer_norm_forward<T>(x, lp.cross_norm, lc.cross_in, &lc.cross_norm);
    nn::attention_forward<T>(lc.cross_in, encoder_states, lp.cross_attn, heads, false, branch,
                             cache ? &lc.cross_attn : nullptr);
    apply_dropout(branch, dropout, lc.cross_mask);
    nn::add_inplace(x, branch);
    nn::layer_norm_forward<T>(x, lp.ffn_norm, lc.ffn_in, &lc.ffn_norm);
    nn::feed_forward(lc.ffn_in, lp.ffn, lc.hidden_pre, lc.hidden, branch);
    apply_dropout(branch, dropout, lc.ffn_mask);
    nn::add_inplace(x, branch);
  }
  nn::layer_norm_forward<T>(x, params.decoder_norm, c.final_out, &c.final_norm);
  Matrix<T> logits;
  project_logits(c.final_out, params, logits);
  if (!cache) c = DecoderCache<T>();
  return logits;
}

template <typename T>
void decode_backward(const DecoderCache<T>& c, const Matrix<T>& encoder_states,
                     const Parameters<T>& params, const ModelConfig& config,
                     const Matrix<T>& d_logits, Parameters<T>& grads, Matrix<T>& d_states) {
  const int heads = config.heads;
  const std::size_t len = c.tokens.size(), d = static_cast<std::size_t>(config.d_model);
  // logits = H E^T: dH = dlogits E, dE += dlogits^T H.
  Matrix<T> dh(len, d);
  kernels::gemm(d_logits, Op::kNone, params.token_embedding, Op::kNone, dh);
  kernels::gemm(d_logits, Op::kTranspose, c.final_out, Op::kNone, grads.token_embedding, T(1));

  Matrix<T> dx(len, d);
  nn::layer_norm_backward(c.final_norm, params.decoder_norm, dh, grads.decoder_norm, dx);
  Matrix<T> dbranch, dnorm_in;
  for (std::size_t i = params.decoder.size(); i-- > 0;) {
    const auto& lp = params.decoder[i];
    auto& lg = grads.decoder[i];
    const auto& lc = c.layers[i];

    dbranch = dx;
    nn::dropout_backward(dbranch, lc.ffn_mask);
    dnorm_in.resize(len, d);
    nn::feed_forward_backward(lc.ffn_in, lc.hidden_pre, lc.hidden, lp.ffn, dbranch, lg.ffn,
                              dnorm_in);
    nn::layer_norm_backward(lc.ffn_norm, lp.ffn_norm, dnorm_in, lg.ffn_norm, dx);

    dbranch = dx;
    nn::dropout_backward(dbranch, lc.cross_mask);
    dnorm_in.resize(len, d);
    nn::attention_backward(lc.cross_in, encoder_states, lc.cross_attn, lp.cross_attn, heads,
                           dbranch, lg.cross_attn, dnorm_in, d_states);
    nn::layer_norm_backward(lc.cross_norm, lp.cross_norm, dnorm_in, lg.cross_norm, dx);

    dbranch = dx;
    nn::dropout_backward(dbranch, lc.self_mask);
    dnorm_in.resize(len, d);
    nn::attention_backward(lc.self_in, lc.self_in, lc.self_attn, lp.self_attn, heads, dbranch,
                           lg.self_attn, dnorm_in, dnorm_in);
    nn::layer_norm_backward(lc.self_norm, lp.self_norm, dnorm_in, lg.self_norm, dx);
  }
  nn::dropout_backward(dx, c.embed_mask);
  for (std::size_t t = 0; t < len; ++t) {
    const T* row = dx.data() + t * d;
    T* emb = grads.token_embedding.data() + static_cast<std::size_t>(c.tokens[t]) * d;
    T* pos = grads.decoder_positions.data() + t * d;
    for (std::size_t j = 0; j < d; ++j) {
      emb[j] += row[j];
      pos[j] += row[j];
    }
  }
}

template <typename T>
double loss(const Matrix<T>& logits, std::span<const int> targets,
            std::span<const std::uint8_t> mask) {
  std::size_t counted = 0;
  const double total = nn::cross_entropy<T>(logits, targets, mask, T(1), nullptr, &counted);
  if (counted == 0) throw Error(ErrorKind::kAllPositionsMasked, "every target position is masked");
  return total / static_cast<double>(counted);
}

void teacher_forcing(std::span<const int> transcript, std::vector<int>& input,
                     std::vector<int>& target) {
  input.clear();
  target.clear();
  input.push_back(Tokenizer::kBos);
  input.insert(input.end(), transcript.begin(), transcript.end());
  target.assign(transcript.begin(), transcript.end());
  target.push_back(Tokenizer::kEos);
}

template <typename T>
LossStats accumulate_gradients(const Matrix<T>& input, std::span<const int> transcript,
                               const Parameters<T>& params, const ModelConfig& config, T grad_scale,
                               Parameters<T>& grads, DropoutContext* dropout) {
  std::vector<int> tokens, targets;
  teacher_forcing(transcript, tokens, targets);
  EncoderCache<T> enc_cache;
  const Matrix<T> states = encode(input, params, config, &enc_cache, dropout);
  DecoderCache<T> dec_cache;
  const Matrix<T> logits = decode<T>(tokens, states, params, config, &dec_cache, dropout);
  Matrix<T> dlogits;
  LossStats stats;
  stats.sum_nll = nn::cross_entropy<T>(logits, targets, {}, grad_scale, &dlogits, &stats.tokens);
  if (!std::isfinite(stats.sum_nll))
    throw Error(ErrorKind::kNonFiniteLoss, "non-finite loss in forward pass");
  Matrix<T> d_states(states.rows(), states.cols());
  decode_backward(dec_cache, states, params, config, dlogits, grads, d_states);
  encode_backward(enc_cache, params, config, d_states, grads);
  return stats;
}

template <typename T>
LossStats transcript_loss(const Matrix<T>& input, std::span<const int> transcript,
                          const Parameters<T>& params, const ModelConfig& config) {
  std::vector<int> tokens, targets;
  teacher_forcing(transcript, tokens, targets);
  const Matrix<T> states = encode(input, params, config);
  const Matrix<T> logits = decode<T>(tokens, states, params, config);
  LossStats stats;
  stats.sum_nll = nn::cross_entropy<T>(logits, targets, {}, T(1), nullptr, &stats.tokens);
  return stats;
}

// --- incremental greedy decoding --------------------------------------------

namespace {

template <typename T>
struct LayerState {
  Matrix<T> self_k, self_v;    // grows one row per step
  Matrix<T> cross_k, cross_v;  // fixed for the utterance
};

template <typename T>
void append_row(Matrix<T>& m, const Matrix<T>& row, std::size_t used) {
  std::copy(row.data(), row.data() + row.cols(), m.data() + used * m.cols());
}

// Prefix view of the first `rows` rows.
template <typename T>
Matrix<T> prefix(const Matrix<T>& m, std::size_t rows) {
  Matrix<T> out(rows, m.cols());
  std::copy(m.data(), m.data() + rows * m.cols(), out.data());
  return out;
}

}  // namespace

template <typename T>
std::vector<int> greedy_decode(const Matrix<T>& encoder_states, const Parameters<T>& params,
                               const ModelConfig& config, std::size_t max_len) {
  std::vector<int> out;
  if (max_len == 0) return out;
  max_len = std::min(max_len, static_cast<std::size_t>(config.max_target_positions));
  const std::size_t d = static_cast<std::size_t>(config.d_model);
  const int heads = config.heads;

  std::vector<LayerState<T>> state(params.decoder.size());
  for (std::size_t i = 0; i < params.decoder.size(); ++i) {
    const auto& lp = params.decoder[i];
    nn::linear_forward(encoder_states, lp.cross_attn.key, state[i].cross_k);
    nn::linear_forward(encoder_states, lp.cross_attn.value, state[i].cross_v);
    state[i].self_k.resize(max_len, d);
    state[i].self_v.resize(max_len, d);
  }

  Matrix<T> x(1, d), normed, q, k, v, context, branch, hidden_pre, hidden, logits;
  int token = Tokenizer::kBos;
  for (std::size_t pos = 0; pos < max_len; ++pos) {
    const T* emb = params.token_embedding.data() + static_cast<std::size_t>(token) * d;
    const T* pe = params.decoder_positions.data() + pos * d;
    for (std::size_t j = 0; j < d; ++j) x(0, j) = emb[j] + pe[j];

    for (std::size_t i = 0; i < params.decoder.size(); ++i) {
      const auto& lp = params.decoder[i];
      auto& st = state[i];
      nn::layer_norm_forward<T>(x, lp.self_norm, normed, nullptr);
      nn::linear_forward(normed, lp.self_attn.query, q);
      nn::linear_forward(normed, lp.self_attn.key, k);
      nn::linear_forward(normed, lp.self_attn.value, v);
      append_row(st.self_k, k, pos);
      append_row(st.self_v, v, pos);
      nn::attend<T>(q, prefix(st.self_k, pos + 1), prefix(st.self_v, pos + 1), heads, false, 0,
                    context, nullptr);
      nn::linear_forward(context, lp.self_attn.output, branch);
      nn::add_inplace(x, branch);

      nn::layer_norm_forward<T>(x, lp.cross_norm, normed, nullptr);
      nn::linear_forward(normed, lp.cross_attn.query, q);
      nn::attend<T>(q, st.cross_k, st.cross_v, heads, false, 0, context, nullptr);
      nn::linear_forward(context, lp.cross_attn.output, branch);
      nn::add_inplace(x, branch);

      nn::layer_norm_forward<T>(x, lp.ffn_norm, normed, nullptr);
      nn::feed_forward(normed, lp.ffn, hidden_pre, hidden, branch);
      nn::add_inplace(x, branch);
    }
    nn::layer_norm_forward<T>(x, params.decoder_norm, normed, nullptr);
    project_logits(normed, params, logits);

    const T* row = logits.data();
    int best = 0;
    for (int c = 1; c < config.vocab_size; ++c)
      if (row[c] > row[best]) best = c;
    if (best == Tokenizer::kEos) break;
    if (best != Tokenizer::kPad && best != Tokenizer::kBos) out.push_back(best);
    token = best;
  }
  return out;
}

// --- explicit instantiations -------------------------------------------------

#define LRASR_INSTANTIATE_MODEL(T)                                                                 \
  template Parameters<T> zero_parameters<T>(const ModelConfig&);                                   \
  template Parameters<T> init_parameters<T>(const ModelConfig&, std::uint64_t);                    \
  template bool all_finite<T>(const Parameters<T>&);                                               \
  template Matrix<T> model_input<T>(const features::MelSpectrogram&, const ModelConfig&);          \
  template Matrix<T> encode<T>(const Matrix<T>&, const Parameters<T>&, const ModelConfig&,         \
                               EncoderCache<T>*, DropoutContext*);                                 \
  template Matrix<T> encode<T>(const features::MelSpectrogram&, const Parameters<T>&,              \
                               const ModelConfig&);                                                \
  template std::vector<Matrix<T>> encode_batch<T>(std::span<const Matrix<T>>,                      \
                                                  const Parameters<T>&, const ModelConfig&);       \
  template void encode_backward<T>(const EncoderCache<T>&, const Parameters<T>&,                   \
                                   const ModelConfig&, const Matrix<T>&, Parameters<T>&);          \
  template Matrix<T> decode<T>(std::span<const int>, const Matrix<T>&, const Parameters<T>&,       \
                               const ModelConfig&, DecoderCache<T>*, DropoutContext*);             \
  template void decode_backward<T>(const DecoderCache<T>&, const Matrix<T>&, const Parameters<T>&, \
                                   const ModelConfig&, const Matrix<T>&, Parameters<T>&,           \
                                   Matrix<T>&);                                                    \
  template double loss<T>(const Matrix<T>&, std::span<const int>, std::span<const std::uint8_t>);  \
  template std::vector<int> greedy_decode<T>(const Matrix<T>&, const Parameters<T>&,               \
                                             const ModelConfig&, std::size_t);                     \
  template LossStats accumulate_gradients<T>(const Matrix<T>&, std::span<const int>,               \
                                             const Parameters<T>&, const ModelConfig&, T,          \
                                             Parameters<T>&, DropoutContext*);                     \
  template LossStats transcript_loss<T>(const Matrix<T>&, std::span<const int>,                    \
                                        const Parameters<T>&, const ModelConfig&);

LRASR_INSTANTIATE_MODEL(float)
LRASR_INSTANTIATE_MODEL(double)

template Parameters<double> convert<double, float>(const Parameters<float>&);
template Parameters<float> convert<float, double>(const Parameters<double>&);
template Parameters<float> convert<float, float>(const Parameters<float>&);

}  // namespace lrasr::model
