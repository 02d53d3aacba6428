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

// Layer primitives with hand-written backward passes.
//
// Activations are time-major (rows = positions). Backward functions ADD their
// input gradients into the destination, so callers zero-initialise once and
// several branches can contribute (residuals, shared keys/values).

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "lrasr/tensor.hpp"

namespace lrasr::nn {

template <typename T>
struct Linear {
  Matrix<T> weight;  // in x out
  Matrix<T> bias;    // 1 x out
};

template <typename T>
struct LayerNorm {
  Matrix<T> gamma;  // 1 x d
  Matrix<T> beta;   // 1 x d
};

template <typename T>
struct Attention {
  Linear<T> query, key, value, output;
};

template <typename T>
struct FeedForward {
  Linear<T> up;    // d x ffn
  Linear<T> down;  // ffn x d
};

inline constexpr double kLayerNormEps = 1e-5;

// y = x W + b
template <typename T>
void linear_forward(const Matrix<T>& x, const Linear<T>& p, Matrix<T>& y);
// grad.weight += x^T dy, grad.bias += colsum(dy), *dx += dy W^T (if dx).
template <typename T>
void linear_backward(const Matrix<T>& x, const Linear<T>& p, const Matrix<T>& dy, Linear<T>& grad,
                     Matrix<T>* dx);

template <typename T>
struct LayerNormCache {
  Matrix<T> normalized;
  std::vector<T> inv_std;
};

template <typename T>
void layer_norm_forward(const Matrix<T>& x, const LayerNorm<T>& p, Matrix<T>& y,
                        LayerNormCache<T>* cache);
template <typename T>
void layer_norm_backward(const LayerNormCache<T>& cache, const LayerNorm<T>& p, const Matrix<T>& dy,
                         LayerNorm<T>& grad, Matrix<T>& dx);

// Exact (erf) GELU.
template <typename T>
void gelu_forward(const Matrix<T>& x, Matrix<T>& y);
template <typename T>
void gelu_backward(const Matrix<T>& x, const Matrix<T>& dy, Matrix<T>& dx);

// Scaled dot-product attention over already-projected q, k, v, split into
// `heads` column blocks. With `causal`, query row i (global position
// query_offset + i) sees key rows 0..query_offset + i.
template <typename T>
void attend(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v, int heads, bool causal,
            std::size_t query_offset, Matrix<T>& context, std::vector<Matrix<T>>* probs);

template <typename T>
struct AttentionCache {
  Matrix<T> q, k, v, context;
  std::vector<Matrix<T>> probs;  // one (Lq x Lk) matrix per head
};

template <typename T>
void attention_forward(const Matrix<T>& xq, const Matrix<T>& xkv, const Attention<T>& p, int heads,
                       bool causal, Matrix<T>& y, AttentionCache<T>* cache);
// dxq and dxkv may alias (self-attention).
template <typename T>
void attention_backward(const Matrix<T>& xq, const Matrix<T>& xkv, const AttentionCache<T>& cache,
                        const Attention<T>& p, int heads, const Matrix<T>& dy, Attention<T>& grad,
                        Matrix<T>& dxq, Matrix<T>& dxkv);

template <typename T>
void feed_forward(const Matrix<T>& x, const FeedForward<T>& p, Matrix<T>& hidden_pre,
                  Matrix<T>& hidden, Matrix<T>& y);
template <typename T>
void feed_forward_backward(const Matrix<T>& x, const Matrix<T>& hidden_pre, const Matrix<T>& hidden,
                           const FeedForward<T>& p, const Matrix<T>& dy, FeedForward<T>& grad,
                           Matrix<T>& dx);

// Inverted dropout; mask holds 0 or 1/(1-rate). rate == 0 leaves y and
// clears the mask.
template <typename T>
void dropout(Matrix<T>& y, double rate, std::mt19937_64& rng, Matrix<T>& mask);
template <typename T>
void dropout_backward(Matrix<T>& dy, const Matrix<T>& mask);

// Rows [0, n) of a window-3 patch matrix: row t holds input rows
// t*stride-1 .. t*stride+1 (zero outside the sequence) concatenated.
template <typename T>
Matrix<T> im2col3(const Matrix<T>& x, int stride);
// Adjoint of im2col3: scatters column gradients back onto dx (accumulating).
template <typename T>
void col2im3(const Matrix<T>& dcol, int stride, Matrix<T>& dx);

template <typename T>
void add_inplace(Matrix<T>& a, const Matrix<T>& b);

// Mean-free token-level cross entropy. Returns the summed negative
// log-likelihood over unmasked rows and, when dlogits is given, writes
// grad_scale * d(sum)/d(logits) (masked rows get zero).
template <typename T>
double cross_entropy(const Matrix<T>& logits, std::span<const int> targets,
                     std::span<const std::uint8_t> mask, T grad_scale, Matrix<T>* dlogits,
                     std::size_t* counted);

// Row-wise softmax in place.
template <typename T>
void softmax_rows(Matrix<T>& m);

}  // namespace lrasr::nn
