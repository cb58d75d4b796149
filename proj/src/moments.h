//
// Copyright 2026 The surveydp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Per-cell weighted bivariate moments shared by the two synthesizers.

#ifndef SURVEYDP_SRC_MOMENTS_H_
#define SURVEYDP_SRC_MOMENTS_H_

#include <vector>

namespace surveydp::internal {

struct CellMoments {
  double s0 = 0.0;  // sum of weights
  double mean_a = 0.0;
  double mean_b = 0.0;
  double saa = 0.0;  // centered weighted scatter
  double sbb = 0.0;
  double sab = 0.0;
};

// Records with zero weight are skipped outright, so dropping them leaves
// every sum bit-identical.
inline std::vector<CellMoments> WeightedMoments(const std::vector<int>& cell,
                                                const std::vector<double>& a,
                                                const std::vector<double>& b,
                                                const std::vector<double>& weight,
                                                int num_cells) {
  std::vector<CellMoments> m(num_cells);
  for (std::size_t i = 0; i < cell.size(); ++i) {
    if (weight[i] == 0.0) continue;
    auto& c = m[cell[i]];
    c.s0 += weight[i];
    c.mean_a += weight[i] * a[i];
    c.mean_b += weight[i] * b[i];
  }
  for (auto& c : m) {
    if (c.s0 > 0.0) {
      c.mean_a /= c.s0;
      c.mean_b /= c.s0;
    }
  }
  for (std::size_t i = 0; i < cell.size(); ++i) {
    if (weight[i] == 0.0) continue;
    auto& c = m[cell[i]];
    const double da = a[i] - c.mean_a;
    const double db = b[i] - c.mean_b;
    c.saa += weight[i] * da * da;
    c.sbb += weight[i] * db * db;
    c.sab += weight[i] * da * db;
  }
  return m;
}

}  // namespace surveydp::internal

#endif  // SURVEYDP_SRC_MOMENTS_H_
