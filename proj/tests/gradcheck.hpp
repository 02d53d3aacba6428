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

// Central finite-difference check of the model's analytic gradients.

#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "lrasr/model.hpp"

namespace lrasr::testing {

struct GroupCheck {
  std::string name;
  double relative_error = 0;  // ||numeric - analytic|| / max(||numeric||, ||analytic||)
  double analytic_norm = 0;
  double numeric_norm = 0;
  // Key biases shift every attention score of a row equally, which softmax
  // ignores: their exact gradient is zero and only the norms are meaningful.
  bool zero_gradient = false;
};

// Re-draws every array so that gradients are not dominated by a near-identity
// network: larger weights, non-trivial gains and shifts.
inline model::Parameters<double> perturbed_parameters(const model::ModelConfig& cfg,
                                                      std::uint64_t seed) {
  auto p = model::init_parameters<double>(cfg, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::normal_distribution<double> n(0.0, 1.0);
  p.visit([&](const std::string& name, Matrix<double>& m, bool trainable) {
    if (!trainable) return;
    const bool gain = name.ends_with(".gamma");
    const bool vec = m.rows() == 1;
    const double sd = gain ? 0.3 : vec ? 0.1 : 1.0 / std::sqrt(double(m.rows()));
    for (auto& v : m.flat()) v = (gain ? 1.0 : 0.0) + sd * n(rng);
  });
  return p;
}

// Compares the analytic gradient of the mean token loss with central
// differences on up to `samples` entries per trainable array, always including
// the entry with the largest analytic gradient.
inline std::vector<GroupCheck> gradient_check(const model::ModelConfig& cfg, std::uint64_t seed,
                                              double eps = 1e-4, int samples = 6,
                                              std::size_t frames = 9, std::size_t tokens = 4) {
  const auto p = perturbed_parameters(cfg, seed);
  std::mt19937_64 rng(seed + 100);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix<double> x(frames, static_cast<std::size_t>(cfg.n_mels));
  for (auto& v : x.flat()) v = n(rng);
  std::uniform_int_distribution<int> tok(model::Tokenizer::kSpecials, cfg.vocab_size - 1);
  std::vector<int> transcript(tokens);
  for (auto& t : transcript) t = tok(rng);

  const double count = static_cast<double>(tokens + 1);
  auto grads = model::zero_parameters<double>(cfg);
  model::accumulate_gradients<double>(x, transcript, p, cfg, 1.0 / count, grads);
  auto mean_loss = [&](const model::Parameters<double>& q) {
    const auto s = model::transcript_loss<double>(x, transcript, q, cfg);
    return s.sum_nll / double(s.tokens);
  };

  std::vector<const Matrix<double>*> grad_arrays;
  grads.visit([&](const std::string&, Matrix<double>& m, bool trainable) {
    if (trainable) grad_arrays.push_back(&m);
  });

  std::vector<GroupCheck> out;
  auto q = p;
  std::size_t group = 0;
  q.visit([&](const std::string& name, Matrix<double>& m, bool trainable) {
    if (!trainable) return;
    const Matrix<double>& g = *grad_arrays[group++];
    std::vector<std::size_t> picks;
    std::size_t largest = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (std::abs(g.data()[i]) > std::abs(g.data()[largest])) largest = i;
    picks.push_back(largest);
    for (int s = 1; s < samples; ++s) picks.push_back(rng() % m.size());
    double diff = 0, norm_a = 0, norm_n = 0;
    for (std::size_t i : picks) {
      const double saved = m.data()[i];
      m.data()[i] = saved + eps;
      const double up = mean_loss(q);
      m.data()[i] = saved - eps;
      const double down = mean_loss(q);
      m.data()[i] = saved;
      const double numeric = (up - down) / (2 * eps);
      const double analytic = g.data()[i];
      diff += (numeric - analytic) * (numeric - analytic);
      norm_a += analytic * analytic;
      norm_n += numeric * numeric;
    }
    GroupCheck c;
    c.name = name;
    c.analytic_norm = std::sqrt(norm_a);
    c.numeric_norm = std::sqrt(norm_n);
    c.zero_gradient = name.ends_with(".key.bias");
    const double scale = std::max(c.analytic_norm, c.numeric_norm);
    c.relative_error = scale > 0 ? std::sqrt(diff) / scale : 0.0;
    out.push_back(c);
  });
  return out;
}

}  // namespace lrasr::testing
