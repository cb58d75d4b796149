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

#ifndef SURVEYDP_TABULATE_H_
#define SURVEYDP_TABULATE_H_

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "surveydp/data.h"
#include "surveydp/release.h"

namespace surveydp {

struct CellEstimate {
  CellId cell;
  int n_records = 0;
  double n_hat = 0.0;
  double mu_hat = 0.0;
  double var_n = 0.0;
  double var_mu = 0.0;
};

enum class TableMode {
  kWeighted,  // every estimate uses the supplied weights
  kFbp,       // interior means unweighted; margins and counts weighted
};

// Point estimates and Taylor variances for all cells of AllCells(F, G).
// Cells without records come back empty.
std::vector<std::optional<CellEstimate>> CellEstimates(const SurveyDataset& data,
                                                       const std::vector<double>& weights,
                                                       TableMode mode);

// Stratified with-replacement variance of the linearized totals of z:
// sum_h n_h/(n_h-1) sum_{i in h} (z_i - zbar_h)^2.
double StratifiedVariance(const SurveyDataset& data, const std::vector<double>& z);

// Variances of N-hat and mu-hat for `cell` given its point estimates.
std::pair<double, double> TaylorVariance(const SurveyDataset& data,
                                         const std::vector<double>& weights, const CellId& cell,
                                         double n_hat, double mu_hat);

struct CombinedEstimate {
  double q_bar = 0.0;
  double b = 0.0;
  double u_bar = 0.0;
  double total = 0.0;  // T
  double df = 0.0;     // +inf when b == 0
  double lower = 0.0;
  double upper = 0.0;
};

CombinedEstimate CombinePartial(const std::vector<double>& points,
                                const std::vector<double>& withins);

// Two-sided 95% critical value; normal when df is infinite.
double Quantile975(double df);

struct TableRow {
  CellId cell;
  double estimate = 0.0;
  double se = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct CellTable {
  std::string quantity;  // "count" or "mean"
  std::string mechanism;
  int m = 1;
  double epsilon = 0.0;
  bool within_only = false;  // m == 1: no between-release component
  std::vector<TableRow> rows;

  const TableRow* Find(const CellId& cell) const;
};

struct TablePair {
  CellTable counts;
  CellTable means;
};

// Tables from the confidential sample with its own weights (m = 1).
TablePair ConfidentialTables(const SurveyDataset& data, const std::string& mechanism = "direct");

// Per-release estimates combined across the m datasets.
TablePair BuildReleaseTables(const SyntheticRelease& release, TableMode mode,
                             bool use_smoothed = true);

void WriteTableCsv(const CellTable& table, const std::string& path);
void WriteTableJson(const CellTable& table, const std::string& path);

}  // namespace surveydp

#endif  // SURVEYDP_TABULATE_H_
