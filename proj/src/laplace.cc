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

#include "surveydp/laplace.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>

namespace surveydp {

double SensitivityCount(const std::vector<double>& w) {
  if (w.empty()) throw std::invalid_argument("empty cell");
  const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
  return *hi - *lo;
}

double SensitivityMean(const std::vector<double>& y, const std::vector<double>& w) {
  if (w.empty()) throw std::invalid_argument("empty cell");
  if (y.size() != w.size()) throw std::invalid_argument("y and w differ in length");
  double wy_max = -std::numeric_limits<double>::infinity();
  double wy_min = std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    wy_max = std::max(wy_max, w[i] * y[i]);
    wy_min = std::min(wy_min, w[i] * y[i]);
    total += w[i];
  }
  const double denom = total - SensitivityCount(w);
  if (!(denom > 0.0)) {
    throw std::invalid_argument("mean sensitivity denominator is not positive");
  }
  return (wy_max - wy_min) / denom;
}

double SensitivityProfile::CountStar(CellKind kind) const {
  double m = 0.0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (cells[c].kind == kind) m = std::max(m, delta_count[c]);
  }
  return m;
}

double SensitivityProfile::MeanStar(CellKind kind) const {
  double m = 0.0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (cells[c].kind == kind) m = std::max(m, delta_mean[c]);
  }
  return m;
}

SensitivityProfile ComputeSensitivities(const SurveyDataset& data) {
  SensitivityProfile p;
  for (const CellId& cell : AllCells(data.layout().num_fields, data.layout().num_genders)) {
    std::vector<double> y, w;
    for (const auto& r : data.records()) {
      if (cell.Contains(r.field, r.gender)) {
        y.push_back(r.y);
        w.push_back(r.weight);
      }
    }
    if (w.empty()) continue;
    p.cells.push_back(cell);
    p.delta_count.push_back(SensitivityCount(w));
    p.delta_mean.push_back(SensitivityMean(y, w));
  }
  p.delta_count_star = p.CountStar(CellKind::kInterior);
  p.delta_mean_star = p.MeanStar(CellKind::kInterior);
  return p;
}

BudgetAllocation AllocateBudget(double epsilon_total, int replicates) {
  if (!(epsilon_total > 0.0) || !std::isfinite(epsilon_total)) {
    throw std::invalid_argument("epsilon must be positive");
  }
  if (replicates < 1) throw std::invalid_argument("replicate count must be >= 1");
  BudgetAllocation b;
  b.epsilon_total = epsilon_total;
  b.replicates = replicates;
  b.epsilon_pc = epsilon_total / 16.0;
  b.epsilon_rep = epsilon_total / (16.0 * replicates);
  b.epsilon_vc = replicates * b.epsilon_rep;
  return b;
}

double AddLaplace(double value, double delta, double eps, Rng& rng) {
  if (!(eps > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (!(delta >= 0.0)) throw std::invalid_argument("sensitivity must be >= 0");
  return value + rng.Laplace(delta / eps);
}

double AddLaplace(double value, double delta, double eps, std::uint64_t seed) {
  Rng rng(seed, "laplace.add");
  return AddLaplace(value, delta, eps, rng);
}

std::vector<std::vector<double>> ReplicateWeights(const SurveyDataset& data, int replicates,
                                                  std::uint64_t seed) {
  if (replicates < 1) throw std::invalid_argument("replicate count must be >= 1");
  std::map<int, std::vector<std::size_t>> units;
  for (std::size_t i = 0; i < data.size(); ++i) units[data[i].stratum].push_back(i);
  for (const auto& [h, idx] : units) {
    if (idx.size() < 2) {
      throw std::invalid_argument("stratum " + std::to_string(h + 1) + " has a single unit");
    }
  }
  std::vector<std::vector<double>> out(replicates);
  for (int r = 0; r < replicates; ++r) {
    Rng rng(seed, "laplace.replicate", static_cast<std::uint64_t>(r));
    std::vector<double> w = data.Weights();
    for (auto [h, idx] : units) {
      std::shuffle(idx.begin(), idx.end(), rng.engine());
      const std::size_t n = idx.size();
      const std::size_t half = n / 2;
      const double scale = static_cast<double>(n) / static_cast<double>(n - half);
      for (std::size_t k = 0; k < n; ++k) w[idx[k]] = k < half ? 0.0 : w[idx[k]] * scale;
    }
    out[r] = std::move(w);
  }
  return out;
}

namespace {

// Count or mean for a cell under weights w; nullopt if the cell has no mass.
std::optional<double> Estimate(const SurveyDataset& data, const CellId& cell,
                               const std::vector<double>& w, Quantity q) {
  double mass = 0.0, total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!cell.Contains(data[i].field, data[i].gender)) continue;
    mass += w[i];
    total += w[i] * data[i].y;
  }
  if (q == Quantity::kCount) return mass;
  if (!(mass > 0.0)) return std::nullopt;
  return total / mass;
}

}  // namespace

ReplicateVarianceResult ReplicateVariance(const SurveyDataset& data, const CellId& cell,
                                          const std::vector<std::vector<double>>& rep_weights,
                                          Quantity quantity, double center, double delta,
                                          double eps_rep, Rng& rng) {
  if (rep_weights.size() < 2) throw std::invalid_argument("need at least 2 replicates");
  const auto full = Estimate(data, cell, data.Weights(), quantity);
  if (!full) throw std::invalid_argument("cell has no records");
  ReplicateVarianceResult out;
  for (const auto& w : rep_weights) {
    // A replicate that drops every member of a small cell falls back to the
    // full-sample estimate.
    const double q = Estimate(data, cell, w, quantity).value_or(*full);
    const double noised = delta == 0.0 ? q : AddLaplace(q, delta, eps_rep, rng);
    out.estimates.push_back(noised);
    out.variance += (noised - center) * (noised - center);
  }
  out.variance /= static_cast<double>(rep_weights.size());
  return out;
}

TablePair LaplaceRelease(const SurveyDataset& data, double epsilon_total, int replicates,
                         std::uint64_t seed) {
  const BudgetAllocation budget = AllocateBudget(epsilon_total, replicates);
  const SensitivityProfile sens = ComputeSensitivities(data);
  const auto rep = ReplicateWeights(data, replicates, seed);
  const TablePair direct = ConfidentialTables(data, "laplace");

  TablePair t;
  t.counts.quantity = "count";
  t.means.quantity = "mean";
  for (CellTable* table : {&t.counts, &t.means}) {
    table->mechanism = "laplace";
    table->m = 1;
    table->epsilon = epsilon_total;
    table->within_only = true;
  }
  const double z = Quantile975(std::numeric_limits<double>::infinity());
  for (std::size_t c = 0; c < sens.cells.size(); ++c) {
    const CellId& cell = sens.cells[c];
    const double dc = sens.CountStar(cell.kind);
    const double da = sens.MeanStar(cell.kind);
    Rng rng(seed, "laplace.cell", c);
    const double count = AddLaplace(direct.counts.Find(cell)->estimate, dc, budget.epsilon_pc, rng);
    const double mean = AddLaplace(direct.means.Find(cell)->estimate, da, budget.epsilon_pc, rng);
    const double var_c =
        ReplicateVariance(data, cell, rep, Quantity::kCount, count, dc, budget.epsilon_rep, rng)
            .variance;
    const double var_m =
        ReplicateVariance(data, cell, rep, Quantity::kMean, mean, da, budget.epsilon_rep, rng)
            .variance;
    const double se_c = std::sqrt(var_c);
    const double se_m = std::sqrt(var_m);
    t.counts.rows.push_back({cell, count, se_c, count - z * se_c, count + z * se_c});
    t.means.rows.push_back({cell, mean, se_m, mean - z * se_m, mean + z * se_m});
  }
  return t;
}

}  // namespace surveydp
