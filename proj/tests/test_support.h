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

#ifndef SURVEYDP_TESTS_TEST_SUPPORT_H_
#define SURVEYDP_TESTS_TEST_SUPPORT_H_

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <string>
#include <vector>

#include "surveydp/data.h"
#include "surveydp/mcmc.h"
#include "surveydp/rng.h"
#include "surveydp/simharness.h"

namespace surveydp::testing {

// Informative PPS sample of `n` from the default simulated population.
inline SurveyDataset SimulatedSample(std::uint64_t seed, int n = 1000) {
  const SurveyDataset pop = GenPopulation(PopulationSpec::Default(), DeriveSeed(seed, "pop"));
  std::vector<int> sizes;
  for (const auto& [h, count] : pop.strata()) sizes.push_back(count);
  return PpsSample(pop, ProportionalAllocation(sizes, n), DeriveSeed(seed, "sample"));
}

// n records spread round-robin over an F x G grid, one stratum per field.
inline SurveyDataset GridDataset(int f, int g, int per_cell, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SurveyRecord> rows;
  for (int rep = 0; rep < per_cell; ++rep) {
    for (int a = 0; a < f; ++a) {
      for (int b = 0; b < g; ++b) {
        SurveyRecord r;
        r.field = a;
        r.gender = b;
        r.stratum = a;
        r.y = std::exp(10.0 + 0.1 * a + 0.2 * b + 0.4 * rng.Normal());
        r.weight = 50.0 + 100.0 * rng.Uniform();
        r.pi = 1.0 / r.weight;
        rows.push_back(r);
      }
    }
  }
  DesignLayout layout;
  layout.num_fields = f;
  layout.num_genders = g;
  return SurveyDataset(std::move(rows), layout);
}

inline double Mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double Variance(const std::vector<double>& v) {
  const double m = Mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

inline std::vector<double> Column(const PosteriorDraws& d, int j) {
  std::vector<double> out(d.num_draws());
  for (int s = 0; s < d.num_draws(); ++s) out[s] = d.draws(s, j);
  return out;
}

// Per-chain split of f(draw) for ESS-based standard errors.
template <typename F>
std::vector<std::vector<double>> PerChain(const PosteriorDraws& d, int j, F f) {
  std::vector<std::vector<double>> out(d.chains);
  for (int s = 0; s < d.num_draws(); ++s) out[s / d.per_chain()].push_back(f(d.draws(s, j)));
  return out;
}

inline std::string ReadFile(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path TempDir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("surveydp_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace surveydp::testing

#endif  // SURVEYDP_TESTS_TEST_SUPPORT_H_
