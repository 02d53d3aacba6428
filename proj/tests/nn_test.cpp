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
#include <random>

#include "doctest.h"
#include "lrasr/kernels.hpp"
#include "test_util.hpp"

using lrasr::Matrix;
namespace k = lrasr::kernels;
namespace nn = lrasr::nn;

namespace {

template <typename T>
Matrix<T> random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  Matrix<T> m(r, c);
  for (auto& v : m.flat()) v = static_cast<T>(n(rng));
  return m;
}

// Plain triple loop written against the definition, independent of both
// kernel implementations.
Matrix<double> reference_product(const Matrix<double>& a, bool ta, const Matrix<double>& b,
                                 bool tb) {
  const std::size_t m = ta ? a.cols() : a.rows();
  const std::size_t kk = ta ? a.rows() : a.cols();
  const std::size_t n = tb ? b.rows() : b.cols();
  Matrix<double> c(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0;
      for (std::size_t p = 0; p < kk; ++p) s += (ta ? a(p, i) : a(i, p)) * (tb ? b(j, p) : b(p, j));
      c(i, j) = s;
    }
  return c;
}

double dot(const Matrix<double>& a, const Matrix<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
  return s;
}

}  // namespace

TEST_CASE("gemm: serial and parallel agree with the definition for every transpose") {
  std::mt19937_64 rng(5);
  for (const auto [m, kk, n] : {std::array<std::size_t, 3>{1, 1, 1},
                                {3, 5, 7},
                                {17, 9, 33},
                                {64, 64, 64},
                                {130, 70, 90},
                                {5, 300, 2}}) {
    for (int mode = 0; mode < 4; ++mode) {
      const bool ta = mode & 1, tb = mode & 2;
      const auto a = random_matrix<double>(ta ? kk : m, ta ? m : kk, rng);
      const auto b = random_matrix<double>(tb ? n : kk, tb ? kk : n, rng);
      const auto ref = reference_product(a, ta, b, tb);
      const auto opa = ta ? k::Op::kTranspose : k::Op::kNone;
      const auto opb = tb ? k::Op::kTranspose : k::Op::kNone;
      Matrix<double> cs(m, n), cp(m, n);
      k::serial::gemm(a, opa, b, opb, cs);
      k::parallel::gemm(a, opa, b, opb, cp);
      for (std::size_t i = 0; i < ref.size(); ++i) {
        CHECK(cs.data()[i] == doctest::Approx(ref.data()[i]).epsilon(1e-12));
        CHECK(cp.data()[i] == doctest::Approx(ref.data()[i]).epsilon(1e-12));
      }
      // beta accumulates.
      Matrix<double> acc = ref;
      k::parallel::gemm(a, opa, b, opb, acc, 2.0);
      for (std::size_t i = 0; i < ref.size(); ++i)
        CHECK(acc.data()[i] == doctest::Approx(3.0 * ref.data()[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("gemm float paths agree") {
  std::mt19937_64 rng(6);
  const auto a = random_matrix<float>(200, 150, rng);
  const auto b = random_matrix<float>(150, 180, rng);
  Matrix<float> cs(200, 180), cp(200, 180);
  k::serial::gemm(a, k::Op::kNone, b, k::Op::kNone, cs);
  k::parallel::gemm(a, k::Op::kNone, b, k::Op::kNone, cp);
  for (std::size_t i = 0; i < cs.size(); ++i)
    CHECK(cp.data()[i] == doctest::Approx(cs.data()[i]).epsilon(1e-4));
}

TEST_CASE("im2col3 and col2im3 are adjoint") {
  std::mt19937_64 rng(8);
  for (int stride : {1, 2}) {
    for (std::size_t len : {1u, 2u, 5u, 8u, 11u}) {
      const auto x = random_matrix<double>(len, 4, rng);
      const auto col = nn::im2col3(x, stride);
      CHECK(col.rows() == (len - 1) / stride + 1);
      const auto y = random_matrix<double>(col.rows(), col.cols(), rng);
      Matrix<double> back(len, 4);
      nn::col2im3(y, stride, back);
      CHECK(dot(col, y) == doctest::Approx(dot(x, back)).epsilon(1e-12));
    }
  }
}

TEST_CASE("attention probabilities are normalised and causal") {
  std::mt19937_64 rng(9);
  const auto q = random_matrix<double>(7, 8, rng, 3.0);
  const auto kk = random_matrix<double>(7, 8, rng, 3.0);
  const auto v = random_matrix<double>(7, 8, rng);
  Matrix<double> ctx;
  std::vector<Matrix<double>> probs;
  nn::attend(q, kk, v, 2, true, 0, ctx, &probs);
  REQUIRE(probs.size() == 2);
  for (const auto& p : probs)
    for (std::size_t i = 0; i < p.rows(); ++i) {
      double s = 0;
      for (std::size_t j = 0; j < p.cols(); ++j) {
        s += p(i, j);
        if (j > i) CHECK(p(i, j) == 0.0);
      }
      CHECK(std::abs(s - 1.0) <= 1e-6);
    }
}

TEST_CASE("layer primitives: backward matches central differences") {
  std::mt19937_64 rng(10);
  const double eps = 1e-6;
  // Scalar objective: <y, w> with a fixed random w.
  SUBCASE("layer norm") {
    const auto x = random_matrix<double>(3, 6, rng);
    nn::LayerNorm<double> p{random_matrix<double>(1, 6, rng), random_matrix<double>(1, 6, rng)};
    const auto w = random_matrix<double>(3, 6, rng);
    auto f = [&](const Matrix<double>& in) {
      Matrix<double> y;
      nn::layer_norm_forward<double>(in, p, y, nullptr);
      return dot(y, w);
    };
    Matrix<double> y;
    nn::LayerNormCache<double> cache;
    nn::layer_norm_forward(x, p, y, &cache);
    nn::LayerNorm<double> g{Matrix<double>(1, 6), Matrix<double>(1, 6)};
    Matrix<double> dx(3, 6);
    nn::layer_norm_backward(cache, p, w, g, dx);
    for (std::size_t i = 0; i < x.size(); ++i) {
      Matrix<double> xp = x, xm = x;
      xp.data()[i] += eps;
      xm.data()[i] -= eps;
      CHECK(dx.data()[i] == doctest::Approx((f(xp) - f(xm)) / (2 * eps)).epsilon(1e-6));
    }
  }
  SUBCASE("gelu") {
    const auto x = random_matrix<double>(2, 5, rng, 2.0);
    const auto w = random_matrix<double>(2, 5, rng);
    Matrix<double> dx(2, 5);
    nn::gelu_backward(x, w, dx);
    for (std::size_t i = 0; i < x.size(); ++i) {
      Matrix<double> xp = x, xm = x, yp, ym;
      xp.data()[i] += eps;
      xm.data()[i] -= eps;
      nn::gelu_forward(xp, yp);
      nn::gelu_forward(xm, ym);
      CHECK(dx.data()[i] == doctest::Approx((dot(yp, w) - dot(ym, w)) / (2 * eps)).epsilon(1e-6));
    }
  }
  SUBCASE("cross attention inputs") {
    const std::size_t d = 8;
    nn::Attention<double> p;
    for (auto* l : {&p.query, &p.key, &p.value, &p.output})
      *l = {random_matrix<double>(d, d, rng, 0.5), random_matrix<double>(1, d, rng, 0.1)};
    const auto xq = random_matrix<double>(3, d, rng);
    const auto xkv = random_matrix<double>(5, d, rng);
    const auto w = random_matrix<double>(3, d, rng);
    auto f = [&](const Matrix<double>& a, const Matrix<double>& b) {
      Matrix<double> y;
      nn::attention_forward<double>(a, b, p, 2, false, y, nullptr);
      return dot(y, w);
    };
    Matrix<double> y;
    nn::AttentionCache<double> cache;
    nn::attention_forward(xq, xkv, p, 2, false, y, &cache);
    nn::Attention<double> g;
    for (auto* l : {&g.query, &g.key, &g.value, &g.output})
      *l = {Matrix<double>(d, d), Matrix<double>(1, d)};
    Matrix<double> dxq(3, d), dxkv(5, d);
    nn::attention_backward(xq, xkv, cache, p, 2, w, g, dxq, dxkv);
    for (std::size_t i = 0; i < xq.size(); ++i) {
      Matrix<double> a = xq, b = xq;
      a.data()[i] += eps;
      b.data()[i] -= eps;
      CHECK(dxq.data()[i] == doctest::Approx((f(a, xkv) - f(b, xkv)) / (2 * eps)).epsilon(1e-6));
    }
    for (std::size_t i = 0; i < xkv.size(); ++i) {
      Matrix<double> a = xkv, b = xkv;
      a.data()[i] += eps;
      b.data()[i] -= eps;
      CHECK(dxkv.data()[i] == doctest::Approx((f(xq, a) - f(xq, b)) / (2 * eps)).epsilon(1e-6));
    }
  }
}

TEST_CASE("cross entropy") {
  Matrix<double> uniform(4, 10, 0.5);
  const std::vector<int> t{1, 2, 3, 4};
  std::size_t counted = 0;
  CHECK(nn::cross_entropy<double>(uniform, t, {}, 1.0, nullptr, &counted) ==
        doctest::Approx(4 * std::log(10.0)));
  CHECK(counted == 4);
  const std::vector<std::uint8_t> mask{1, 0, 0, 1};
  CHECK(nn::cross_entropy<double>(uniform, t, mask, 1.0, nullptr, &counted) ==
        doctest::Approx(2 * std::log(10.0)));
  CHECK(counted == 2);
}

TEST_CASE("dropout is inverted and zero rate is a no-op") {
  std::mt19937_64 rng(3);
  Matrix<double> y(100, 100, 1.0), mask;
  nn::dropout(y, 0.0, rng, mask);
  CHECK(mask.empty());
  CHECK(y(5, 5) == 1.0);
  nn::dropout(y, 0.25, rng, mask);
  double mean = 0;
  for (double v : y.flat()) {
    CHECK((v == 0.0 || std::abs(v - 1.0 / 0.75) < 1e-12));
    mean += v;
  }
  CHECK(mean / double(y.size()) == doctest::Approx(1.0).epsilon(0.03));
}
