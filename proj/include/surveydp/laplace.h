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

#ifndef SURVEYDP_LAPLACE_H_
#define SURVEYDP_LAPLACE_H_

#include <cstdint>
#include <vector>

#include "surveydp/data.h"
#include "surveydp/rng.h"
#include "surveydp/tabulate.h"

namespace surveydp {

// max w - min w over the cell.
double SensitivityCount(const std::vector<double>& w);
// (max wy - min wy) / (sum w - (max w - min w)).
double SensitivityMean(const std::vector<double>& y, const std::vector<double>& w);

struct SensitivityProfile {
  std::vector<CellId> cells;  // cells with records, AllCells order
  std::vector<double> delta_count;
  std::vector<double> delta_mean;
  double delta_count_star = 0.0;  // max over interior cells
  double delta_mean_star = 0.0;

  // Max over cells of the same kind; interior gives the starred values.
  double CountStar(CellKind kind) const;
  double MeanStar(CellKind kind) const;
};

SensitivityProfile ComputeSensitivities(const SurveyDataset& data);

struct BudgetAllocation {
  double epsilon_total = 0.0;
  double epsilon_pc = 0.0;
  double epsilon_vc = 0.0;
  double epsilon_rep = 0.0;
  int replicates = 10;
};

BudgetAllocation AllocateBudget(double epsilon_total, int replicates = 10);

double AddLaplace(double value, double delta, double eps, Rng& rng);
double AddLaplace(double value, double delta, double eps, std::uint64_t seed);

// R x n replicate weights: in each stratum floor(n_h/2) random units are
// zeroed and the rest scaled by n_h / (n_h - floor(n_h/2)).
std::vector<std::vector<double>> ReplicateWeights(const SurveyDataset& data, int replicates,
                                                  std::uint64_t seed);

enum class Quantity { kCount, kMean };

struct ReplicateVarianceResult {
  double variance = 0.0;
  std::vector<double> estimates;  // noised replicate estimates
};

// (1/R) sum_r (q_r + noise_r - center)^2 for the cell's estimate under each
// replicate weight set. Pass delta = 0 for the un-noised variance.
ReplicateVarianceResult ReplicateVariance(const SurveyDataset& data, const CellId& cell,
                                          const std::vector<std::vector<double>>& rep_weights,
                                          Quantity quantity, double center, double delta,
                                          double eps_rep, Rng& rng);

// Noised count and mean tables over every populated cell, with
// replicate-based SEs; mechanism "laplace".
TablePair LaplaceRelease(const SurveyDataset& data, double epsilon_total, int replicates,
                         std::uint64_t seed);

}  // namespace surveydp

#endif  // SURVEYDP_LAPLACE_H_
