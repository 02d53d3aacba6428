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

// Dense linear-algebra kernels used by the model.
//
// Two implementations share one signature:
//   serial::   straightforward triple loops, kept as the reference that the
//              tests compare against;
//   parallel:: cache-friendly row-blocked loops, OpenMP-parallel over output
//              rows when the problem is large enough and we are not already
//              inside a parallel region.
// `gemm` computes C = op(A) * op(B) + beta * C where op is identity or
// transpose. C must already have the result shape.

#pragma once

#include <cstddef>

#include "lrasr/tensor.hpp"

namespace lrasr::kernels {

enum class Op { kNone, kTranspose };

namespace serial {

template <typename T>
void gemm(const Matrix<T>& a, Op op_a, const Matrix<T>& b, Op op_b, Matrix<T>& c, T beta = T(0));

}  // namespace serial

namespace parallel {

template <typename T>
void gemm(const Matrix<T>& a, Op op_a, const Matrix<T>& b, Op op_b, Matrix<T>& c, T beta = T(0));

}  // namespace parallel

// Dispatch used by model code.
template <typename T>
inline void gemm(const Matrix<T>& a, Op op_a, const Matrix<T>& b, Op op_b, Matrix<T>& c,
                 T beta = T(0)) {
  parallel::gemm(a, op_a, b, op_b, c, beta);
}

// Number of OpenMP worker threads currently configured (1 without OpenMP).
int max_threads();
void set_threads(int n);

}  // namespace lrasr::kernels
