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

#include "lrasr/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <vector>

#include "lrasr/errors.hpp"

namespace lrasr::kernels {
namespace {

template <typename T>
void check_shapes(const Matrix<T>& a, Op op_a, const Matrix<T>& b, Op op_b, const Matrix<T>& c,
                  std::size_t* m, std::size_t* n, std::size_t* k) {
  *m = op_a == Op::kNone ? a.rows() : a.cols();
  *k = op_a == Op::kNone ? a.cols() : a.rows();
  const std::size_t kb = op_b == Op::kNone ? b.rows() : b.cols();
  *n = op_b == Op::kNone ? b.cols() : b.rows();
  if (*k != kb || c.rows() != *m || c.cols() != *n)
    throw Error(ErrorKind::kShapeMismatch, "gemm operand shapes disagree");
}

// Above this many multiply-adds the row loop is split across threads.
constexpr std::size_t kParallelWork = 1u << 18;

}  // namespace

namespace serial {

template <typename T>
void gemm(const Matrix<T>& a, Op op_a, const Matrix<T>& b, Op op_b, Matrix<T>& c, T beta) {
  std::size_t m, n, k;
  check_shapes(a, op_a, b, op_b, c, &m, &n, &k);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      T sum = T(0);
      for (std::size_t p = 0; p < k; ++p) {
        const T av = op_a == Op::kNone ? a(i, p) : a(p, i);
        const T bv = op_b == Op::kNone ? b(p, j) : b(j, p);
        sum += av * bv;
      }
      c(i, j) = (beta == T(0) ? T(0) : beta * c(i, j)) + sum;
    }
  }
}

template void gemm<float>(const Matrix<float>&, Op, const Matrix<float>&, Op, Matrix<float>&,
                          float);
template void gemm<double>(const Matrix<double>&, Op, const Matrix<double>&, Op, Matrix<double>&,
                           double);

}  // namespace serial

namespace parallel {
namespace {

// C[rows r0..r1) += A * B for row-major A (m x k), B (k x n), C (m x n).
// An R x W tile of C stays in registers for the whole k loop.
template <typename T, std::size_t R, std::size_t W>
void gemm_tile(const T* __restrict a, const T* __restrict b, T* __restrict c, std::size_t n,
               std::size_t k) {
  T acc[R][W] = {};
  for (std::size_t p = 0; p < k; ++p) {
    const T* __restrict bp = b + p * n;
    for (std::size_t r = 0; r < R; ++r) {
      const T x = a[r * k + p];
#pragma omp simd
      for (std::size_t j = 0; j < W; ++j) acc[r][j] += x * bp[j];
    }
  }
  for (std::size_t r = 0; r < R; ++r)
#pragma omp simd
    for (std::size_t j = 0; j < W; ++j) c[r * n + j] += acc[r][j];
}

template <typename T, std::size_t R>
void gemm_panel(const T* a, const T* b, T* c, std::size_t n, std::size_t k) {
  std::size_t j = 0;
  for (; j + 32 <= n; j += 32) gemm_tile<T, R, 32>(a, b + j, c + j, n, k);
  if (j + 16 <= n) {
    gemm_tile<T, R, 16>(a, b + j, c + j, n, k);
    j += 16;
  }
  if (j + 8 <= n) {
    gemm_tile<T, R, 8>(a, b + j, c + j, n, k);
    j += 8;
  }
  for (; j < n; ++j) gemm_tile<T, R, 1>(a, b + j, c + j, n, k);
}

template <typename T>
void gemm_rows(const T* a, const T* b, T* c, std::size_t r0, std::size_t r1, std::size_t n,
               std::size_t k) {
  std::size_t i = r0;
  for (; i + 4 <= r1; i += 4) gemm_panel<T, 4>(a + i * k, b, c + i * n, n, k);
  for (; i < r1; ++i) gemm_panel<T, 1>(a + i * k, b, c + i * n, n, k);
}

template <typename T>
const T* materialize(const Matrix<T>& m, Op op, std::vector<T>& scratch) {
  if (op == Op::kNone) return m.data();
  const std::size_t rows = m.rows(), cols = m.cols();
  scratch.resize(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* src = m.data() + r * cols;
    for (std::size_t col = 0; col < cols; ++col) scratch[col * rows + r] = src[col];
  }
  return scratch.data();
}

}  // namespace

template <typename T>
void gemm(const Matrix<T>& a, Op op_a, const Matrix<T>& b, Op op_b, Matrix<T>& c, T beta) {
  std::size_t m, n, k;
  check_shapes(a, op_a, b, op_b, c, &m, &n, &k);
  if (beta == T(0)) {
    c.fill(T(0));
  } else if (beta != T(1)) {
    for (auto& v : c.flat()) v *= beta;
  }
  if (m == 0 || n == 0 || k == 0) return;

  thread_local std::vector<T> scratch_a, scratch_b;
  const T* pa = materialize(a, op_a, scratch_a);
  const T* pb = materialize(b, op_b, scratch_b);
  T* pc = c.data();

  const bool split =
      m * n * k >= kParallelWork && m >= 8 && !omp_in_parallel() && omp_get_max_threads() > 1;
  if (!split) {
    gemm_rows(pa, pb, pc, 0, m, n, k);
    return;
  }
  const std::size_t blocks = (m + 3) / 4;
#pragma omp parallel for schedule(static)
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    const std::size_t r0 = blk * 4;
    const std::size_t r1 = std::min(m, r0 + 4);
    gemm_rows(pa, pb, pc, r0, r1, n, k);
  }
}

template void gemm<float>(const Matrix<float>&, Op, const Matrix<float>&, Op, Matrix<float>&,
                          float);
template void gemm<double>(const Matrix<double>&, Op, const Matrix<double>&, Op, Matrix<double>&,
                           double);

}  // namespace parallel

int max_threads() { return omp_get_max_threads(); }

void set_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

}  // namespace lrasr::kernels
