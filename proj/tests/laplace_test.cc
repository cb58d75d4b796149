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
#include <map>
#include <numeric>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "surveydp/rng.h"
#include "surveydp/simharness.h"
#include "surveydp/tabulate.h"
#include "test_support.h"

namespace surveydp {
namespace {

using ::testing::HasSubstr;

TEST(SensitivityTest, Examples) {
  EXPECT_EQ(SensitivityCount({2, 2, 2}), 0.0);
  EXPECT_EQ(SensitivityCount({1, 5, 3}), 4.0);
  EXPECT_EQ(SensitivityMean({10, 20}, {1, 2}), 15.0);
  EXPECT_EQ(SensitivityMean({7, 7, 7}, {3, 3, 3}), 0.0);
  EXPECT_EQ(SensitivityMean({10}, {5}), 0.0);
  EXPECT_THROW(SensitivityCount({}), std::invalid_argument);
  // A single weight carries the whole cell: 5 - (5 - 0) = 0.
  EXPECT_THROW(SensitivityMean({1, 1}, {0.0, 5.0}), std::invalid_argument);
}

TEST(SensitivityTest, CountMatchesSwapEnumeration) {
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> w(50);
    for (double& v : w) v = std::exp(rng.Normal(4, 1));
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    double brute = 0.0;
    // Replace one record by a copy of another.
    for (std::size_t i = 0; i < w.size(); ++i) {
      for (std::size_t j = 0; j < w.size(); ++j) {
        const double neighbour = total - w[i] + w[j];
        brute = std::max(brute, std::abs(neighbour - total));
      }
    }
    EXPECT_NEAR(SensitivityCount(w), brute, 1e-9 * total);
  }
}

TEST(SensitivityTest, OrderInvariance) {
  Rng rng(2);
  std::vector<double> y(40), w(40);
  for (int i = 0; i < 40; ++i) {
    y[i] = std::exp(rng.Normal(10, 0.5));
    w[i] = 50 + 100 * rng.Uniform();
  }
  const double c = SensitivityCount(w), a = SensitivityMean(y, w);
  std::vector<int> order(40);
  std::iota(order.begin(), order.end(), 0);
  for (int t = 0; t < 10; ++t) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    std::vector<double> ys, ws;
    for (int i : order) {
      ys.push_back(y[i]);
      ws.push_back(w[i]);
    }
    EXPECT_EQ(SensitivityCount(ws), c);
    EXPECT_NEAR(SensitivityMean(ys, ws), a, 1e-12 * a);
  }
}

TEST(SensitivityTest, StarredValuesBoundEveryInteriorCell) {
  const SurveyDataset d = testing::SimulatedSample(3, 1000);
  const SensitivityProfile p = ComputeSensitivities(d);
  ASSERT_EQ(p.cells.size(), 27u);
  double max_c = 0.0, max_a = 0.0;
  for (std::size_t c = 0; c < p.cells.size(); ++c) {
    EXPECT_GE(p.delta_count[c], 0.0);
    EXPECT_GE(p.delta_mean[c], 0.0);
    if (p.cells[c].kind != CellKind::kInterior) continue;
    EXPECT_GE(p.delta_count_star, p.delta_count[c]);
    EXPECT_GE(p.delta_mean_star, p.delta_mean[c]);
    max_c = std::max(max_c, p.delta_count[c]);
    max_a = std::max(max_a, p.delta_mean[c]);
  }
  EXPECT_EQ(p.delta_count_star, max_c);
  EXPECT_EQ(p.delta_mean_star, max_a);
}

TEST(AllocateBudgetTest, Examples) {
  BudgetAllocation b = AllocateBudget(8.0);
  EXPECT_EQ(b.epsilon_pc, 0.5);
  EXPECT_NEAR(b.epsilon_rep, 0.05, 1e-15);
  b = AllocateBudget(16.0, 10);
  EXPECT_EQ(b.epsilon_pc, 1.0);
  EXPECT_NEAR(b.epsilon_rep, 0.1, 1e-15);
  b = AllocateBudget(5.0, 1);
  EXPECT_EQ(b.epsilon_vc, b.epsilon_rep);
  EXPECT_EQ(b.epsilon_vc, 5.0 / 16.0);
  EXPECT_THROW(AllocateBudget(0.0), std::invalid_argument);
  EXPECT_THROW(AllocateBudget(1.0, 0), std::invalid_argument);
}

TEST(AllocateBudgetTest, BudgetIdentity) {
  for (double eps : {0.1, 1.0, 3.7, 8.0, 10.8, 25.0}) {
    for (int r : {1, 2, 5, 10, 40}) {
      const BudgetAllocation b = AllocateBudget(eps, r);
      EXPECT_NEAR(8 * b.epsilon_pc + 8 * b.epsilon_vc, eps, 1e-12 * eps);
      EXPECT_NEAR(b.epsilon_vc, r * b.epsilon_rep, 1e-12 * eps);
    }
  }
}

TEST(AddLaplaceTest, ZeroSensitivityIsExact) {
  EXPECT_EQ(AddLaplace(123.25, 0.0, 0.5, 1), 123.25);
  EXPECT_EQ(AddLaplace(3.0, 2.0, 1.0, 7), AddLaplace(3.0, 2.0, 1.0, 7));
  EXPECT_NE(AddLaplace(3.0, 2.0, 1.0, 7), AddLaplace(3.0, 2.0, 1.0, 8));
  EXPECT_THROW(AddLaplace(1.0, 1.0, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(AddLaplace(1.0, -1.0, 1.0, 1), std::invalid_argument);
}

TEST(AddLaplaceTest, MillionDrawMoments) {
  Rng rng(4);
  const int n = 1000000;
  const double value = 5.0;
  double sum = 0.0, abs_dev = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = AddLaplace(value, 2.0, 1.0, rng);
    sum += x;
    abs_dev += std::abs(x - value);
  }
  // Laplace(0, b): sd sqrt(2) b, E|X| = b.
  EXPECT_NEAR(sum / n, value, 3.0 * std::sqrt(2.0) * 2.0 / std::sqrt(n));
  EXPECT_NEAR(abs_dev / n, 2.0, 0.04);
}

SurveyDataset EqualWeights(const std::vector<int>& stratum_sizes) {
  std::vector<SurveyRecord> rows;
  for (std::size_t h = 0; h < stratum_sizes.size(); ++h) {
    for (int i = 0; i < stratum_sizes[h]; ++i) {
      SurveyRecord r;
      r.y = 1.0 + i;
      r.weight = 3.0;
      r.pi = 1.0 / 3.0;
      r.stratum = static_cast<int>(h);
      rows.push_back(r);
    }
  }
  DesignLayout l;
  l.num_fields = 1;
  l.num_genders = 1;
  return SurveyDataset(rows, l);
}

TEST(ReplicateWeightsTest, HalvingExample) {
  std::vector<SurveyRecord> rows(4);
  for (auto& r : rows) r.y = 1.0;
  DesignLayout l;
  l.num_fields = 1;
  l.num_genders = 1;
  const SurveyDataset d(rows, l);
  for (const auto& w : ReplicateWeights(d, 10, 5)) {
    std::vector<double> sorted = w;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(sorted, (std::vector<double>{0, 0, 2, 2}));
  }
}

TEST(ReplicateWeightsTest, OddStrataPreserveTotals) {
  const SurveyDataset d = EqualWeights({3, 5, 7, 2});
  for (const auto& w : ReplicateWeights(d, 20, 6)) {
    std::map<int, double> total, rep;
    for (std::size_t i = 0; i < d.size(); ++i) {
      total[d[i].stratum] += d[i].weight;
      rep[d[i].stratum] += w[i];
    }
    for (const auto& [h, t] : total) EXPECT_NEAR(rep[h] / t, 1.0, 1e-9);
  }
}

TEST(ReplicateWeightsTest, SingleUnitStratumIsAnError) {
  const SurveyDataset d = EqualWeights({3, 1});
  try {
    ReplicateWeights(d, 10, 1);
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    EXPECT_THAT(e.what(), HasSubstr("has a single unit"));
  }
}

TEST(ReplicateVarianceTest, ConstantOutcomeHasNoSpread) {
  std::vector<SurveyRecord> rows(6);
  for (auto& r : rows) r.y = 4.0;
  DesignLayout l;
  l.num_fields = 1;
  l.num_genders = 1;
  const SurveyDataset d(rows, l);
  Rng rng(7);
  const auto rep = ReplicateWeights(d, 10, 8);
  const auto r = ReplicateVariance(d, AllCells(1, 1).front(), rep, Quantity::kMean, 4.0, 0.0, 1.0, rng);
  EXPECT_EQ(r.variance, 0.0);
  EXPECT_EQ(r.estimates.size(), 10u);
}

TEST(ReplicateVarianceTest, AgreesWithTaylorOnSrs) {
  const SurveyDataset pop = GenPopulation(PopulationSpec::Default(), 9);
  const CellId grand = AllCells(8, 2).back();
  ASSERT_EQ(grand.kind, CellKind::kGrand);
  Rng rng(10);
  double rep_sum = 0.0, taylor_sum = 0.0;
  for (int t = 0; t < 100; ++t) {
    std::vector<SurveyRecord> rows;
    for (int i = 0; i < 200; ++i) {
      SurveyRecord r = pop[rng.Index(pop.size())];
      r.stratum = 0;
      r.weight = static_cast<double>(pop.size()) / 200.0;
      r.pi = 1.0 / r.weight;
      rows.push_back(r);
    }
    const SurveyDataset d(rows, pop.layout());
    const auto e = CellEstimates(d, d.Weights(), TableMode::kWeighted).back();
    const auto rep = ReplicateWeights(d, 10, DeriveSeed(11, "rep", t));
    rep_sum += ReplicateVariance(d, grand, rep, Quantity::kMean, e->mu_hat, 0.0, 1.0, rng).variance;
    taylor_sum += e->var_mu;
  }
  const double ratio = rep_sum / taylor_sum;
  EXPECT_GT(ratio, 0.5);
  EXPECT_LT(ratio, 2.0);
}

TEST(LaplaceReleaseTest, NoisedTablesOverAllCells) {
  const SurveyDataset d = testing::SimulatedSample(12, 1000);
  const TablePair a = LaplaceRelease(d, 10.8, 10, 13);
  const TablePair b = LaplaceRelease(d, 10.8, 10, 13);
  const TablePair conf = ConfidentialTables(d);
  ASSERT_EQ(a.counts.rows.size(), 27u);
  ASSERT_EQ(a.means.rows.size(), 27u);
  EXPECT_EQ(a.counts.mechanism, "laplace");
  EXPECT_EQ(a.counts.epsilon, 10.8);
  int moved = 0;
  for (std::size_t c = 0; c < 27; ++c) {
    EXPECT_EQ(a.counts.rows[c].estimate, b.counts.rows[c].estimate);
    EXPECT_EQ(a.means.rows[c].se, b.means.rows[c].se);
    EXPECT_GT(a.counts.rows[c].se, 0.0);
    moved += a.counts.rows[c].estimate != conf.counts.rows[c].estimate;
  }
  EXPECT_EQ(moved, 27);
}

}  // namespace
}  // namespace surveydp
