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

#include "surveydp/fbp.h"

#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <vector>

#include "gtest/gtest.h"
#include "surveydp/rng.h"
#include "surveydp/simharness.h"
#include "test_support.h"

namespace surveydp {
namespace {

using testing::Column;
using testing::Mean;
using testing::PerChain;
using testing::Variance;

Eigen::VectorXd Vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(v.size());
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

FbpParams Params(Eigen::VectorXd beta, double sy, double ky, Eigen::VectorXd kx, double sp) {
  FbpParams p;
  p.beta = std::move(beta);
  p.sigma_y = sy;
  p.kappa_y = ky;
  p.kappa_x = std::move(kx);
  p.sigma_pi = sp;
  return p;
}

SurveyRecord Record(double y, double pi) {
  SurveyRecord r;
  r.y = y;
  r.pi = pi;
  r.weight = 1.0 / pi;
  return r;
}

double LogNormalPdf(double x, double mu, double sd) {
  return -0.5 * std::log(2 * std::numbers::pi) - std::log(sd) - 0.5 * std::pow((x - mu) / sd, 2);
}

TEST(FbpSampleLogDensityTest, DecoupledCase) {
  const FbpParams p = Params(Vec({2.0}), 0.5, 0.0, Vec({0.0}), 1.0);
  const SurveyRecord r = Record(std::exp(2.3), 0.2);
  const double expected = LogNormalPdf(std::log(0.2), 0, 1) - 0.5 + LogNormalPdf(2.3, 2.0, 0.5);
  EXPECT_NEAR(FbpSampleLogDensity(r, Vec({1}), p), expected, 1e-12);
}

TEST(FbpSampleLogDensityTest, Errors) {
  const FbpParams p = Params(Vec({0.0}), 1, 0, Vec({-3.0}), 1);
  EXPECT_THROW(FbpSampleLogDensity(Record(1, 0.5), Vec({1}), Params(Vec({0.0}), 0, 0, Vec({0.0}), 1)),
               std::invalid_argument);
  SurveyRecord bad = Record(1, 0.5);
  bad.pi = 1.5;
  EXPECT_THROW(FbpSampleLogDensity(bad, Vec({1}), p), std::invalid_argument);
  bad.pi = 0.0;
  EXPECT_THROW(FbpSampleLogDensity(bad, Vec({1}), p), std::invalid_argument);
  // Vanishing selection scale off the mean.
  FbpParams tiny = p;
  tiny.sigma_pi = std::numeric_limits<double>::denorm_min();
  EXPECT_THROW(FbpSampleLogDensity(Record(1, 0.5), Vec({1}), tiny), std::domain_error);
}

// The sample density is a density in (log y, pi); over (log y, u = log pi)
// it picks up e^u.
TEST(FbpSampleLogDensityTest, IntegratesToOne) {
  Rng rng(1);
  for (int t = 0; t < 10; ++t) {
    const FbpParams p = Params(Vec({rng.Normal(1.0, 0.5)}), 0.2 + 0.6 * rng.Uniform(),
                               0.8 * rng.Uniform(), Vec({-6.0 + 0.5 * rng.Normal()}),
                               0.2 + 0.6 * rng.Uniform());
    const double centre = p.beta(0) + p.kappa_y * p.sigma_y * p.sigma_y;
    const double h = 0.01;
    double total = 0.0;
    for (double ly = centre - 12 * p.sigma_y; ly <= centre + 12 * p.sigma_y; ly += h) {
      for (double u = -25.0; u < 0.0; u += h) {
        total += std::exp(FbpSampleLogDensity(Record(std::exp(ly), std::exp(u)), Vec({1}), p) + u);
      }
    }
    EXPECT_NEAR(total * h * h, 1.0, 1e-3) << "parameter set " << t;
  }
}

TEST(FbpLogPriorTest, NormalAndHalfCauchyKernels) {
  const FbpPriorSpec prior;
  const FbpParams a = Params(Vec({0.0, 0.0}), 1, 0, Vec({0.0, 0.0}), 1);
  const FbpParams b = Params(Vec({10.0, 0.0}), 2, 1, Vec({0.0, -5.0}), 1);
  const double expected = -0.5 * (100.0 + 1.0 + 25.0) / 100.0 - std::log(5.0) + std::log(2.0);
  EXPECT_NEAR(FbpLogPrior(b, prior) - FbpLogPrior(a, prior), expected, 1e-12);
}

TEST(FbpModelTest, ZeroWeightRecordsDropOutExactly) {
  const SurveyDataset data = testing::GridDataset(3, 2, 10, 2);
  Rng rng(3);
  std::vector<double> alpha(data.size());
  std::vector<SurveyRecord> kept;
  std::vector<double> kept_alpha;
  for (std::size_t i = 0; i < data.size(); ++i) {
    alpha[i] = rng.Uniform() < 0.3 ? 0.0 : rng.Uniform();
    if (alpha[i] > 0.0) {
      kept.push_back(data[i]);
      kept_alpha.push_back(alpha[i]);
    }
  }
  const FbpModel full(data);
  const FbpModel reduced(SurveyDataset(kept, data.layout()));
  const Eigen::VectorXd u = full.InitialPoint();
  EXPECT_EQ(full.LogDensity(u, alpha), reduced.LogDensity(u, kept_alpha));
}

TEST(FbpModelTest, UnitWeightsSumRecordDensities) {
  const SurveyDataset data = testing::GridDataset(3, 2, 10, 4);
  const FbpModel model(data);
  const int k = data.layout().num_predictors();
  Rng rng(5);
  for (int t = 0; t < 5; ++t) {
    Eigen::VectorXd u = model.InitialPoint();
    for (int j = 0; j < u.size(); ++j) u(j) += rng.Normal(0, 0.1);
    const FbpParams p = FbpParams::FromVector(model.ToNatural(u), k);
    double expected = FbpLogPrior(p, FbpPriorSpec{}) + std::log(p.sigma_y) + std::log(p.sigma_pi);
    for (std::size_t i = 0; i < data.size(); ++i) {
      expected += FbpSampleLogDensity(data[i], data.DesignRow(i), p);
    }
    EXPECT_NEAR(model.LogDensity(u, std::vector<double>(data.size(), 1.0)), expected,
                1e-9 * std::abs(expected));
  }
}

TEST(FbpModelTest, RiskLikelihoodIsDensityInLogPi) {
  const SurveyDataset data = testing::GridDataset(2, 2, 3, 6);
  const int k = data.layout().num_predictors();
  PosteriorDraws d;
  d.chains = 1;
  d.draws = Params(Vec({10, 0.1, 0.2}), 0.4, 0.3, Vec({-7, 0.1, 0.0}), 0.5)
                .ToVector()
                .transpose()
                .replicate(2, 1);
  ASSERT_EQ(d.dim(), 2 * k + 3);
  FbpOptions plain;
  plain.log_pi_risk = false;
  const Eigen::MatrixXd with = FbpModel(data).LogLikMatrix(d);
  const Eigen::MatrixXd without = FbpModel(data, {}, plain).LogLikMatrix(d);
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_NEAR(with(0, i) - without(0, i), std::log(data[i].pi), 1e-12);
    EXPECT_NEAR(without(0, i),
                FbpSampleLogDensity(data[i], data.DesignRow(i), FbpParams::FromVector(d.draws.row(0).transpose(), k)),
                1e-10);
  }
}

SamplerConfig Config(std::uint64_t seed, int keep) {
  SamplerConfig c;
  c.warmup = 4000;
  c.keep = keep;
  c.seed = seed;
  return c;
}

TEST(FbpFitTest, ZeroWeightsRecoverCoefficientPrior) {
  const SurveyDataset data = testing::GridDataset(2, 1, 20, 7);
  const FbpModel model(data);
  SamplerConfig c = Config(8, 10000);
  c.init = Eigen::VectorXd::Zero(model.num_params());
  const PosteriorDraws d = model.Fit(std::vector<double>(data.size(), 0.0), c);
  for (int j : {0, 1, 3, 4, 5}) {
    const auto x = Column(d, j);
    EXPECT_NEAR(Mean(x), 0.0, 3.0 * std::sqrt(Variance(x) / EffectiveSampleSize(d, j))) << j;
    auto sq = PerChain(d, j, [](double v) { return v * v; });
    std::vector<double> flat;
    for (const auto& ch : sq) flat.insert(flat.end(), ch.begin(), ch.end());
    EXPECT_NEAR(Mean(flat), 100.0, 3.0 * std::sqrt(Variance(flat) / EffectiveSampleSize(sq))) << j;
  }
}

// Poisson sampling from a population drawn under the outcome and selection
// models gives exactly the sample density being fitted.
TEST(FbpFitTest, RecoversKnownTruth) {
  const FbpParams truth = Params(Vec({1.0, 0.5}), 0.5, 0.8, Vec({-6.0, 0.3}), 0.4);
  DesignLayout layout;
  layout.num_fields = 2;
  layout.num_genders = 1;
  Rng rng(9);
  std::vector<SurveyRecord> rows;
  for (int i = 0; i < 250000; ++i) {
    SurveyRecord r;
    r.field = i % 2;
    const Eigen::VectorXd x = layout.Row(r.field, 0);
    const double ly = x.dot(truth.beta) + truth.sigma_y * rng.Normal();
    const double pi = std::exp(truth.kappa_y * ly + x.dot(truth.kappa_x) + truth.sigma_pi * rng.Normal());
    ASSERT_LT(pi, 1.0);
    if (rng.Uniform() < pi) {
      r.y = std::exp(ly);
      r.pi = pi;
      r.weight = 1.0 / pi;
      rows.push_back(r);
    }
  }
  ASSERT_GT(rows.size(), 1000u);
  const FbpModel model(SurveyDataset(rows, layout));
  const PosteriorDraws d = model.Fit(std::vector<double>(rows.size(), 1.0), Config(10, 4000));
  const Eigen::VectorXd t = truth.ToVector();
  for (int j = 0; j < d.dim(); ++j) {
    const auto col = Column(d, j);
    EXPECT_NEAR(Mean(col), t(j), 3.0 * std::sqrt(Variance(col))) << "coordinate " << j;
  }
}

PosteriorDraws FixedDraws(const FbpParams& p, int copies) {
  PosteriorDraws d;
  d.draws = p.ToVector().transpose().replicate(copies, 1);
  d.chains = 1;
  return d;
}

TEST(FbpSynthesizeTest, WeightsMatchStratumTotals) {
  const SurveyDataset data = testing::GridDataset(4, 2, 7, 11);
  const FbpParams p = Params(Vec({10, 0.1, 0.2, 0.3, -0.1}), 0.4, 0.5, Vec({-7, 0.1, 0, 0.2, 0.1}), 0.6);
  const SyntheticRelease rel = FbpSynthesize(FixedDraws(p, 6), data, 3, 12);
  std::map<int, double> observed;
  for (const auto& r : data.records()) observed[r.stratum] += r.weight;
  for (const auto& s : rel.samples) {
    std::map<int, double> raw, smooth;
    for (std::size_t i = 0; i < data.size(); ++i) {
      raw[data[i].stratum] += s.data[i].weight;
      smooth[data[i].stratum] += s.smoothed_weights[i];
      EXPECT_EQ(s.data[i].field, data[i].field);
      EXPECT_EQ(s.data[i].gender, data[i].gender);
      EXPECT_EQ(s.data[i].stratum, data[i].stratum);
    }
    for (const auto& [h, total] : observed) {
      EXPECT_NEAR(raw[h] / total, 1.0, 1e-9);
      EXPECT_NEAR(smooth[h] / total, 1.0, 1e-9);
    }
  }
  const SyntheticRelease again = FbpSynthesize(FixedDraws(p, 6), data, 3, 12);
  for (int l = 0; l < 3; ++l) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      EXPECT_EQ(again.samples[l].data[i].y, rel.samples[l].data[i].y);
      EXPECT_EQ(again.samples[l].data[i].weight, rel.samples[l].data[i].weight);
    }
  }
}

TEST(FbpSynthesizeTest, DegenerateNoiseLimit) {
  const SurveyDataset data = testing::GridDataset(3, 2, 4, 13);
  const FbpParams p = Params(Vec({10, 0.1, 0.2, 0.3}), 1e-12, 0.5, Vec({-7, 0.1, 0, 0.2}), 1e-12);
  const SyntheticRelease rel = FbpSynthesize(FixedDraws(p, 1), data, 1, 14);
  std::vector<double> log_pi(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Eigen::VectorXd x = data.DesignRow(i);
    const double ly = x.dot(p.beta);
    EXPECT_NEAR(std::log(rel.samples[0].data[i].y), ly, 1e-9);
    log_pi[i] = p.kappa_y * ly + x.dot(p.kappa_x);
  }
  const auto w = NormalizeWeights(log_pi, data, WeightNormalization::kStratum);
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_NEAR(rel.samples[0].data[i].weight / w[i], 1.0, 1e-9);
  }
}

TEST(FbpSynthesizeTest, LengthMismatchIsAnError) {
  const SurveyDataset data = testing::GridDataset(2, 1, 2, 15);
  std::vector<double> log_pi(data.size(), -1.0);
  EXPECT_NO_THROW(NormalizeWeights(log_pi, data, WeightNormalization::kGrand));
  std::vector<double> short_pi(1, -1.0);
  EXPECT_THROW(NormalizeWeights(short_pi, data, WeightNormalization::kStratum), std::invalid_argument);
}

TEST(FbpSmoothedWeightsTest, ConstantWhenSelectionIgnoresY) {
  const SurveyDataset data = testing::GridDataset(3, 2, 5, 16);
  const FbpParams p = Params(Vec({10, 0, 0, 0}), 0.4, 0.0, Vec({-7, 0, 0, 0}), 0.5);
  std::vector<double> y;
  for (const auto& r : data.records()) y.push_back(r.y);
  const auto w = FbpSmoothedWeights(y, p, data);
  std::map<int, std::vector<double>> by;
  for (std::size_t i = 0; i < data.size(); ++i) by[data[i].stratum].push_back(w[i]);
  for (const auto& [h, ws] : by) {
    for (double v : ws) EXPECT_NEAR(v / ws[0], 1.0, 1e-12);
  }
}

TEST(FbpSmoothedWeightsTest, DecreasingInYAndMatchesRecomputation) {
  const SurveyDataset data = testing::GridDataset(3, 2, 5, 17);
  const double ky = 0.7;
  const FbpParams p = Params(Vec({10, 0, 0, 0}), 0.4, ky, Vec({-7, 0, 0, 0}), 0.5);
  std::vector<double> y;
  for (const auto& r : data.records()) y.push_back(r.y);
  for (double scale : {1.0, 2.0}) {
    std::vector<double> ys = y;
    for (double& v : ys) v *= scale;
    const auto w = FbpSmoothedWeights(ys, p, data);
    std::map<int, double> total, mass;
    for (std::size_t i = 0; i < data.size(); ++i) {
      total[data[i].stratum] += data[i].weight;
      mass[data[i].stratum] += std::pow(ys[i], -ky);
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      const int h = data[i].stratum;
      EXPECT_NEAR(w[i] / (total[h] * std::pow(ys[i], -ky) / mass[h]), 1.0, 1e-12);
      for (std::size_t j = 0; j < data.size(); ++j) {
        if (data[j].stratum == h && ys[j] > ys[i]) EXPECT_LT(w[j], w[i]);
      }
    }
  }
}

TEST(FbpSynthesizeTest, CorrectsPopulationBiasInCellMeans) {
  const std::uint64_t seed = 18;
  const SurveyDataset pop = GenPopulation(PopulationSpec::Default(), DeriveSeed(seed, "pop"));
  std::vector<int> sizes;
  for (const auto& [h, count] : pop.strata()) sizes.push_back(count);
  const SurveyDataset sample = PpsSample(pop, ProportionalAllocation(sizes, 1000), DeriveSeed(seed, "sample"));
  const TablePair truth = PopulationTruth(pop);

  const FbpModel model(sample);
  const PosteriorDraws d = model.Fit(std::vector<double>(sample.size(), 1.0), Config(19, 2000));
  const SyntheticRelease rel = FbpSynthesize(d, sample, 5, 20);

  int closer = 0;
  for (const CellId& cell : AllCells(8, 2)) {
    if (cell.kind != CellKind::kInterior) continue;
    double obs = 0.0, syn = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
      if (!cell.Contains(sample[i].field, sample[i].gender)) continue;
      obs += sample[i].y;
      for (const auto& s : rel.samples) syn += s.data[i].y / rel.m();
      ++n;
    }
    const double target = truth.means.Find(cell)->estimate;
    if (std::abs(syn / n - target) < std::abs(obs / n - target)) ++closer;
  }
  EXPECT_GE(closer, 12);
}

}  // namespace
}  // namespace surveydp
