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

#ifndef SURVEYDP_SIMHARNESS_H_
#define SURVEYDP_SIMHARNESS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "surveydp/data.h"
#include "surveydp/pipeline.h"
#include "surveydp/tabulate.h"

namespace surveydp {

struct PopulationSpec {
  int N = 100000;
  std::vector<double> field_props;
  std::vector<std::vector<double>> gender_props_by_field;
  std::vector<std::vector<double>> cell_log_means;
  double outcome_scale = 0.4;
  double selection_noise_scale = 0.4;

  int num_fields() const { return static_cast<int>(field_props.size()); }
  int num_genders() const {
    return gender_props_by_field.empty() ? 0 : static_cast<int>(gender_props_by_field[0].size());
  }
  void Validate() const;

  // Eight fields by two genders: shares and salary levels of a large
  // graduate workforce survey.
  static PopulationSpec Default();
};

// Population units with pi scaled into (0, 1] (max pi = 1) and weight 1/pi.
// Strata are the fields.
SurveyDataset GenPopulation(const PopulationSpec& spec, std::uint64_t seed);

// Largest-remainder proportional allocation of n over strata sizes.
std::vector<int> ProportionalAllocation(const std::vector<int>& sizes, int n);

// Stratified PPS with replacement on pi, duplicates collapsed until n_h
// distinct units. pi* = 1 - (1 - pi/sum_h pi)^{n_h}; w = 1/pi*.
SurveyDataset PpsSample(const SurveyDataset& population, const std::vector<int>& n_per_stratum,
                        std::uint64_t seed);

// Population cell counts and means (each unit counts once).
TablePair PopulationTruth(const SurveyDataset& population);

double Rmse(double estimate, double variance, double truth);

double Correlation(const std::vector<double>& a, const std::vector<double>& b);

struct MetricRow {
  std::string mechanism;
  std::string quantity;
  CellId cell;
  double rmse = 0.0;
  double rmse_ratio = 0.0;
  double coverage = 0.0;
  double cv = 0.0;
  double ci_length = 0.0;
  int replicates = 0;
};

// Per-cell RMSE and ratio against the confidential sample for one set of
// tables.
std::vector<MetricRow> UtilityRows(const std::string& mechanism, const TablePair& tables,
                                   const TablePair& confidential, const TablePair& truth);

double MedianRmseRatio(const std::vector<MetricRow>& rows, const std::string& quantity);

struct MonteCarloConfig {
  PopulationSpec population = PopulationSpec::Default();
  int replicates = 20;
  int sample_size = 1000;
  std::vector<Mechanism> mechanisms = {Mechanism::kFbs, Mechanism::kFbp};
  MechanismConfig mechanism;
  std::uint64_t seed = 0;
};

struct MonteCarloResult {
  std::vector<MetricRow> rows;  // interior and field-margin cells
  int completed = 0;
  std::vector<std::string> failures;
  // Mean over cells of (mean FBP CI length / mean FBS CI length).
  double ci_ratio_count = 0.0;
  double ci_ratio_mean = 0.0;
};

// Repeated sampling from one fixed population. Replicates that fail are
// counted and reported, never silently dropped.
MonteCarloResult MonteCarlo(const MonteCarloConfig& config);

void WriteMetricsCsv(const std::vector<MetricRow>& rows, const std::string& path);
// coverage, cv and CI-length ratio to FBS per mechanism and cell.
void WriteFrontierCsv(const MonteCarloResult& result, const std::string& path);

}  // namespace surveydp

#endif  // SURVEYDP_SIMHARNESS_H_
