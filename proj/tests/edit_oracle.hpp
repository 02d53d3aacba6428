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

#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

namespace lrasr::testing {

// Exhaustive recursion over every edit script, no memoisation.
inline std::size_t brute_distance(const std::vector<int>& a, std::size_t i,
                                  const std::vector<int>& b, std::size_t j) {
  if (i == a.size()) return b.size() - j;
  if (j == b.size()) return a.size() - i;
  const std::size_t diag = brute_distance(a, i + 1, b, j + 1) + (a[i] == b[j] ? 0 : 1);
  const std::size_t del = brute_distance(a, i + 1, b, j) + 1;
  const std::size_t ins = brute_distance(a, i, b, j + 1) + 1;
  return std::min({diag, del, ins});
}

inline std::size_t brute_distance(const std::vector<std::string>& a,
                                  const std::vector<std::string>& b) {
  std::vector<std::string> all(a);
  all.insert(all.end(), b.begin(), b.end());
  std::sort(all.begin(), all.end());
  auto id = [&](const std::string& s) {
    return static_cast<int>(std::lower_bound(all.begin(), all.end(), s) - all.begin());
  };
  std::vector<int> x, y;
  for (const auto& s : a) x.push_back(id(s));
  for (const auto& s : b) y.push_back(id(s));
  return brute_distance(x, 0, y, 0);
}

}  // namespace lrasr::testing
