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

#ifndef SURVEYDP_RELEASE_H_
#define SURVEYDP_RELEASE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "surveydp/data.h"
#include "surveydp/riskweights.h"

namespace surveydp {

struct SyntheticSample {
  // Synthetic y* and raw w*; design cells and strata as observed.
  SurveyDataset data;
  std::vector<double> smoothed_weights;
  int draw_index = 0;
};

struct SyntheticRelease {
  std::string mechanism;
  std::vector<SyntheticSample> samples;
  PrivacyAccount account;
  double c1 = 1.0;
  double c2 = 0.0;
  std::uint64_t seed = 0;

  int m() const { return static_cast<int>(samples.size()); }
};

// m indices spread evenly over [0, num_draws), centred in each block.
std::vector<int> SelectDrawIndices(int num_draws, int m);

// Writes <prefix>_<l>.csv for l = 1..m (y, field, gender, stratum, weight,
// smoothed_weight) and <prefix>.json with the privacy account.
void WriteRelease(const SyntheticRelease& release, const std::string& dir,
                  const std::string& prefix);

}  // namespace surveydp

#endif  // SURVEYDP_RELEASE_H_
