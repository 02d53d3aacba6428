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

#include "lrasr/nn.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "lrasr/errors.hpp"
#include "lrasr/kernels.hpp"

namespace lrasr::nn {

using kernels::Op;

template <typename T>
void add_inplace(Matrix<T>& a, const Matrix<T>& b) {
  if (!a.same_shape(b)) throw Error(ErrorKind::kShapeMismatch, "add_inplace");
  T* pa = a.data();
  const T* pb = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) pa[i] += pb[i];
}

template <typename T>
void linear_forward(const Matrix<T>& x, const Linear<T>& p, Matrix<T>& y) {
  y.resize(x.rows(), p.weight.cols());
  kernels::gemm(x, Op::kNone, p.weight, Op::kNone, y);
  const T* b = p.bias.data();
  for (std::size_t r = 0; r < y.rows(); ++r) {
    T* row = y.data() + r * y.cols();
    for (std::size_t c = 0; c < y.cols(); ++c) row[c] += b[c];
  }
}

template <typename T>
void linear_backward(const Matrix<T>& x, const Linear<T>& p, const Matrix<T>& dy, Linear<T>& grad,
                     Matrix<T>* dx) {
  kernels::gemm(x, Op::kTranspose, dy, Op::kNone, grad.weight, T(1));
  T* gb = grad.bias.data();
  for (std::size_t r = 0; r < dy.rows(); ++r) {
    const T* row = dy.data() + r * dy.cols();
    for (std::size_t c = 0; c < dy.cols(); ++c) gb[c] += row[c];
  }
  if (dx) kernels::gemm(dy, Op::kNone, p.weight, Op::kTranspose, *dx, T(1));
}

template <typename T>
void layer_norm_forward(const Matrix<T>& x, const LayerNorm<T>& p, Matrix<T>& y,
                        LayerNormCache<T>* cache) {
  const std::size_t n = x.rows(), d = x.cols();
  y.resize(n, d);
  if (cache) {
    cache->normalized.resize(n, d);
    cache->inv_std.assign(n, T(0));
  }
  const T* g = p.gamma.data();
  const T* b = p.beta.data();
  for (std::size_t r = 0; r < n; ++r) {
    const T* xr = x.data() + r * d;
    T mean = 0;
    for (std::size_t c = 0; c < d; ++c) mean += xr[c];
    mean /= static_cast<T>(d);
    T var = 0;
    for (std::size_t c = 0; c < d; ++c) var += (xr[c] - mean) * (xr[c] - mean);
    var /= static_cast<T>(d);
    const T inv = T(1) / std::sqrt(var + static_cast<T>(kLayerNormEps));
    T* yr = y.data() + r * d;
    for (std::size_t c = 0; c < d; ++c) {
      const T xhat = (xr[c] - mean) * inv;
      if (cache) cache->normalized(r, c) = xhat;
      yr[c] = xhat * g[c] + b[c];
    }
    if (cache) cache->inv_std[r] = inv;
  }
}

template <typename T>
void layer_norm_backward(const LayerNormCache<T>& cache, const LayerNorm<T>& p, const Matrix<T>& dy,
                         LayerNorm<T>& grad, Matrix<T>& dx) {
  const std::size_t n = dy.rows(), d = dy.cols();
  const T* g = p.gamma.data();
  T* gg = grad.gamma.data();
  T* gb = grad.beta.data();
  std::vector<T> dxhat(d);
  for (std::size_t r = 0; r < n; ++r) {
    const T* dyr = dy.data() + r * d;
    const T* xh = cache.normalized.data() + r * d;
    T mean_dxhat = 0, mean_dxhat_xhat = 0;
    for (std::size_t c = 0; c < d; ++c) {
      gg[c] += dyr[c] * xh[c];
      gb[c] += dyr[c];
      dxhat[c] = dyr[c] * g[c];
      mean_dxhat += dxhat[c];
      mean_dxhat_xhat += dxhat[c] * xh[c];
    }
    mean_dxhat /= static_cast<T>(d);
    mean_dxhat_xhat /= static_cast<T>(d);
    T* dxr = dx.data() + r * d;
    const T inv = cache.inv_std[r];
    for (std::size_t c = 0; c < d; ++c)
      dxr[c] += inv * (dxhat[c] - mean_dxhat - xh[c] * mean_dxhat_xhat);
  }
}

template <typename T>
void gelu_forward(const Matrix<T>& x, Matrix<T>& y) {
  y.resize(x.rows(), x.cols());
  const T k = static_cast<T>(1.0 / std::numbers::sqrt2);
  const T* px = x.data();
  T* py = y.data();
  for (std::size_t i = 0; i < x.size(); ++i) py[i] = T(0.5) * px[i] * (T(1) + std::erf(px[i] * k));
}

template <typename T>
void gelu_backward(const Matrix<T>& x, const Matrix<T>& dy, Matrix<T>& dx) {
  const T k = static_cast<T>(1.0 / std::numbers::sqrt2);
  const T density = static_cast<T>(1.0 / std::sqrt(2.0 * std::numbers::pi));
  const T* px = x.data();
  const T* pd = dy.data();
  T* out = dx.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T v = px[i];
    const T cdf = T(0.5) * (T(1) + std::erf(v * k));
    const T pdf = density * std::exp(T(-0.5) * v * v);
    out[i] += pd[i] * (cdf + v * pdf);
  }
}

template <typename T>
void softmax_rows(Matrix<T>& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    T* row = m.data() + r * m.cols();
    T mx = -std::numeric_limits<T>::infinity();
    for (std::size_t c = 0; c < m.cols(); ++c) mx = std::max(mx, row[c]);
    T sum = 0;
    for (std::size_t c = 0; c < m.cols(); ++c) {
      row[c] = std::exp(row[c] - mx);
      sum += row[c];
    }
    const T inv = T(1) / sum;
    for (std::size_t c = 0; c < m.cols(); ++c) row[c] *= inv;
  }
}

namespace {

template <typename T>
Matrix<T> head_slice(const Matrix<T>& m, std::size_t head, std::size_t dh) {
  Matrix<T> out(m.rows(), dh);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const T* src = m.data() + r * m.cols() + head * dh;
    std::copy(src, src + dh, out.data() + r * dh);
  }
  return out;
}

template <typename T>
void head_store(Matrix<T>& dst, const Matrix<T>& part, std::size_t head, std::size_t dh) {
  for (std::size_t r = 0; r < part.rows(); ++r) {
    const T* src = part.data() + r * dh;
    std::copy(src, src + dh, dst.data() + r * dst.cols() + head * dh);
  }
}

}  // namespace

template <typename T>
void attend(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v, int heads, bool causal,
            std::size_t query_offset, Matrix<T>& context, std::vector<Matrix<T>>* probs) {
  const std::size_t d = q.cols();
  const std::size_t h_count = static_cast<std::size_t>(heads);
  if (d % h_count != 0 || k.cols() != d || v.cols() != d || k.rows() != v.rows())
    throw Error(ErrorKind::kShapeMismatch, "attention operands");
  const std::size_t dh = d / h_count;
  const std::size_t lq = q.rows(), lk = k.rows();
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  context.resize(lq, d);
  if (probs) probs->resize(h_count);

  Matrix<T> scores(lq, lk), out(lq, dh);
  for (std::size_t h = 0; h < h_count; ++h) {
    const Matrix<T> qh = head_slice(q, h, dh);
    const Matrix<T> kh = head_slice(k, h, dh);
    const Matrix<T> vh = head_slice(v, h, dh);
    kernels::gemm(qh, Op::kNone, kh, Op::kTranspose, scores);
    for (std::size_t i = 0; i < lq; ++i) {
      T* row = scores.data() + i * lk;
      const std::size_t visible = causal ? std::min(lk, query_offset + i + 1) : lk;
      T mx = -std::numeric_limits<T>::infinity();
      for (std::size_t j = 0; j < visible; ++j) {
        row[j] *= scale;
        mx = std::max(mx, row[j]);
      }
      T sum = 0;
      for (std::size_t j = 0; j < visible; ++j) {
        row[j] = std::exp(row[j] - mx);
        sum += row[j];
      }
      const T inv = T(1) / sum;
      for (std::size_t j = 0; j < visible; ++j) row[j] *= inv;
      for (std::size_t j = visible; j < lk; ++j) row[j] = T(0);
    }
    kernels::gemm(scores, Op::kNone, vh, Op::kNone, out);
    head_store(context, out, h, dh);
    if (probs) (*probs)[h] = scores;
  }
}

template <typename T>
void attention_forward(const Matrix<T>& xq, const Matrix<T>& xkv, const Attention<T>& p, int heads,
                       bool causal, Matrix<T>& y, AttentionCache<T>* cache) {
  AttentionCache<T> local;
  AttentionCache<T>& c = cache ? *cache : local;
  linear_forward(xq, p.query, c.q);
  linear_forward(xkv, p.key, c.k);
  linear_forward(xkv, p.value, c.v);
  attend(c.q, c.k, c.v, heads, causal, 0, c.context, cache ? &c.probs : nullptr);
  linear_forward(c.context, p.output, y);
}

template <typename T>
void attention_backward(const Matrix<T>& xq, const Matrix<T>& xkv, const AttentionCache<T>& c,
                        const Attention<T>& p, int heads, const Matrix<T>& dy, Attention<T>& grad,
                        Matrix<T>& dxq, Matrix<T>& dxkv) {
  const std::size_t d = c.q.cols();
  const std::size_t h_count = static_cast<std::size_t>(heads);
  const std::size_t dh = d / h_count;
  const std::size_t lq = c.q.rows(), lk = c.k.rows();
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));

  Matrix<T> dcontext(lq, d);
  linear_backward(c.context, p.output, dy, grad.output, &dcontext);

  Matrix<T> dq(lq, d), dk(lk, d), dv(lk, d);
  Matrix<T> dprobs(lq, lk), dpart_q(lq, dh), dpart_kv(lk, dh);
  for (std::size_t h = 0; h < h_count; ++h) {
    const Matrix<T>& probs = c.probs[h];
    const Matrix<T> qh = head_slice(c.q, h, dh);
    const Matrix<T> kh = head_slice(c.k, h, dh);
    const Matrix<T> vh = head_slice(c.v, h, dh);
    const Matrix<T> doh = head_slice(dcontext, h, dh);

    kernels::gemm(probs, Op::kTranspose, doh, Op::kNone, dpart_kv);
    head_store(dv, dpart_kv, h, dh);

    kernels::gemm(doh, Op::kNone, vh, Op::kTranspose, dprobs);
    // Softmax Jacobian, folded with the 1/sqrt(dh) score scale.
    for (std::size_t i = 0; i < lq; ++i) {
      const T* pr = probs.data() + i * lk;
      T* dr = dprobs.data() + i * lk;
      T dot = 0;
      for (std::size_t j = 0; j < lk; ++j) dot += pr[j] * dr[j];
      for (std::size_t j = 0; j < lk; ++j) dr[j] = pr[j] * (dr[j] - dot) * scale;
    }
    kernels::gemm(dprobs, Op::kNone, kh, Op::kNone, dpart_q);
    head_store(dq, dpart_q, h, dh);
    kernels::gemm(dprobs, Op::kTranspose, qh, Op::kNone, dpart_kv);
    head_store(dk, dpart_kv, h, dh);
  }
  linear_backward(xq, p.query, dq, grad.query, &dxq);
  linear_backward(xkv, p.key, dk, grad.key, &dxkv);
  linear_backward(xkv, p.value, dv, grad.value, &dxkv);
}

template <typename T>
void feed_forward(const Matrix<T>& x, const FeedForward<T>& p, Matrix<T>& hidden_pre,
                  Matrix<T>& hidden, Matrix<T>& y) {
  linear_forward(x, p.up, hidden_pre);
  gelu_forward(hidden_pre, hidden);
  linear_forward(hidden, p.down, y);
}

template <typename T>
void feed_forward_backward(const Matrix<T>& x, const Matrix<T>& hidden_pre, const Matrix<T>& hidden,
                           const FeedForward<T>& p, const Matrix<T>& dy, FeedForward<T>& grad,
                           Matrix<T>& dx) {
  Matrix<T> dhidden(hidden.rows(), hidden.cols());
  linear_backward(hidden, p.down, dy, grad.down, &dhidden);
  Matrix<T> dpre(hidden.rows(), hidden.cols());
  gelu_backward(hidden_pre, dhidden, dpre);
  linear_backward(x, p.up, dpre, grad.up, &dx);
}

template <typename T>
void dropout(Matrix<T>& y, double rate, std::mt19937_64& rng, Matrix<T>& mask) {
  if (rate <= 0.0) {
    mask = Matrix<T>();
    return;
  }
  mask.resize(y.rows(), y.cols());
  const T keep = static_cast<T>(1.0 / (1.0 - rate));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    mask.data()[i] = u(rng) < rate ? T(0) : keep;
    y.data()[i] *= mask.data()[i];
  }
}

template <typename T>
void dropout_backward(Matrix<T>& dy, const Matrix<T>& mask) {
  if (mask.empty()) return;
  for (std::size_t i = 0; i < dy.size(); ++i) dy.data()[i] *= mask.data()[i];
}

template <typename T>
Matrix<T> im2col3(const Matrix<T>& x, int stride) {
  const std::size_t len = x.rows(), ch = x.cols();
  const std::size_t s = static_cast<std::size_t>(stride);
  const std::size_t out_len = len == 0 ? 0 : (len - 1) / s + 1;
  Matrix<T> col(out_len, 3 * ch);
  for (std::size_t t = 0; t < out_len; ++t) {
    for (std::size_t k = 0; k < 3; ++k) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t * s + k) - 1;
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
      const T* from = x.data() + static_cast<std::size_t>(src) * ch;
      std::copy(from, from + ch, col.data() + t * 3 * ch + k * ch);
    }
  }
  return col;
}

template <typename T>
void col2im3(const Matrix<T>& dcol, int stride, Matrix<T>& dx) {
  const std::size_t len = dx.rows(), ch = dx.cols();
  const std::size_t s = static_cast<std::size_t>(stride);
  for (std::size_t t = 0; t < dcol.rows(); ++t) {
    for (std::size_t k = 0; k < 3; ++k) {
      const std::ptrdiff_t dst = static_cast<std::ptrdiff_t>(t * s + k) - 1;
      if (dst < 0 || dst >= static_cast<std::ptrdiff_t>(len)) continue;
      const T* from = dcol.data() + t * 3 * ch + k * ch;
      T* to = dx.data() + static_cast<std::size_t>(dst) * ch;
      for (std::size_t c = 0; c < ch; ++c) to[c] += from[c];
    }
  }
}

template <typename T>
double cross_entropy(const Matrix<T>& logits, std::span<const int> targets,
                     std::span<const std::uint8_t> mask, T grad_scale, Matrix<T>* dlogits,
                     std::size_t* counted) {
  const std::size_t n = logits.rows(), v = logits.cols();
  if (targets.size() != n || (!mask.empty() && mask.size() != n))
    throw Error(ErrorKind::kShapeMismatch, "cross_entropy targets/mask length");
  if (dlogits) dlogits->resize(n, v);
  double total = 0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (!mask.empty() && !mask[r]) continue;
    const int target = targets[r];
    if (target < 0 || static_cast<std::size_t>(target) >= v)
      throw Error(ErrorKind::kShapeMismatch, "target id out of range");
    const T* row = logits.data() + r * v;
    T mx = row[0];
    for (std::size_t c = 1; c < v; ++c) mx = std::max(mx, row[c]);
    double sum = 0;
    for (std::size_t c = 0; c < v; ++c) sum += std::exp(static_cast<double>(row[c] - mx));
    const double lse = static_cast<double>(mx) + std::log(sum);
    total += lse - static_cast<double>(row[target]);
    ++count;
    if (dlogits) {
      T* dr = dlogits->data() + r * v;
      for (std::size_t c = 0; c < v; ++c)
        dr[c] = grad_scale * static_cast<T>(std::exp(static_cast<double>(row[c]) - lse));
      dr[target] -= grad_scale;
    }
  }
  if (counted) *counted = count;
  return total;
}

#define LRASR_INSTANTIATE_NN(T)                                                                    \
  template void add_inplace<T>(Matrix<T>&, const Matrix<T>&);                                      \
  template void linear_forward<T>(const Matrix<T>&, const Linear<T>&, Matrix<T>&);                 \
  template void linear_backward<T>(const Matrix<T>&, const Linear<T>&, const Matrix<T>&,           \
                                   Linear<T>&, Matrix<T>*);                                        \
  template void layer_norm_forward<T>(const Matrix<T>&, const LayerNorm<T>&, Matrix<T>&,           \
                                      LayerNormCache<T>*);                                         \
  template void layer_norm_backward<T>(const LayerNormCache<T>&, const LayerNorm<T>&,              \
                                       const Matrix<T>&, LayerNorm<T>&, Matrix<T>&);               \
  template void gelu_forward<T>(const Matrix<T>&, Matrix<T>&);                                     \
  template void gelu_backward<T>(const Matrix<T>&, const Matrix<T>&, Matrix<T>&);                  \
  template void softmax_rows<T>(Matrix<T>&);                                                       \
  template void attend<T>(const Matrix<T>&, const Matrix<T>&, const Matrix<T>&, int, bool,         \
                          std::size_t, Matrix<T>&, std::vector<Matrix<T>>*);                       \
  template void attention_forward<T>(const Matrix<T>&, const Matrix<T>&, const Attention<T>&, int, \
                                     bool, Matrix<T>&, AttentionCache<T>*);                        \
  template void attention_backward<T>(const Matrix<T>&, const Matrix<T>&,                          \
                                      const AttentionCache<T>&, const Attention<T>&, int,          \
                                      const Matrix<T>&, Attention<T>&, Matrix<T>&, Matrix<T>&);    \
  template void feed_forward<T>(const Matrix<T>&, const FeedForward<T>&, Matrix<T>&, Matrix<T>&,   \
                                Matrix<T>&);                                                       \
  template void feed_forward_backward<T>(const Matrix<T>&, const Matrix<T>&, const Matrix<T>&,     \
                                         const FeedForward<T>&, const Matrix<T>&, FeedForward<T>&, \
                                         Matrix<T>&);                                              \
  template void dropout<T>(Matrix<T>&, double, std::mt19937_64&, Matrix<T>&);                      \
  template void dropout_backward<T>(Matrix<T>&, const Matrix<T>&);                                 \
  template Matrix<T> im2col3<T>(const Matrix<T>&, int);                                            \
  template void col2im3<T>(const Matrix<T>&, int, Matrix<T>&);                                     \
  template double cross_entropy<T>(const Matrix<T>&, std::span<const int>,                         \
                                   std::span<const std::uint8_t>, T, Matrix<T>*, std::size_t*);

LRASR_INSTANTIATE_NN(float)
LRASR_INSTANTIATE_NN(double)

}  // namespace lrasr::nn
