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

#ifndef SURVEYDP_DATA_H_
#define SURVEYDP_DATA_H_

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace surveydp {

// Raised for malformed inputs: bad CSV rows, domain violations, missing
// columns. Messages are single-line so the CLI can print them verbatim.
class DataError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// One respondent. Field and gender codes are zero-based internally; the CSV
// format uses one-based codes.
struct SurveyRecord {
  double y = 0.0;
  int field = 0;
  int gender = 0;
  int stratum = 0;
  double weight = 1.0;
  double pi = 1.0;
};

// Outcome and weight on the log scale.
struct TransformedRecord {
  double log_y = 0.0;
  double log_w = 0.0;
};

TransformedRecord Transform(const SurveyRecord& record);
// Inverse of Transform for the (y, weight) pair; all other fields of
// `like` are copied through.
SurveyRecord BackTransform(const TransformedRecord& t, const SurveyRecord& like);

enum class CellKind { kInterior, kRowMargin, kColumnMargin, kGrand };

// A table cell. Row margins sum over genders within a field; column margins
// sum over fields within a gender.
struct CellId {
  CellKind kind = CellKind::kGrand;
  int field = -1;
  int gender = -1;

  bool Contains(int f, int g) const;
  std::string KindName() const;
  friend bool operator==(const CellId&, const CellId&) = default;
};

// Interior cells (field-major), then field margins, gender margins and the
// grand cell: F*G + F + G + 1 cells.
std::vector<CellId> AllCells(int num_fields, int num_genders);

// Encoding of a record's cell into its predictor row x_i: intercept plus
// dummy coding with the first field and first gender as reference levels,
// and optionally field-by-gender interactions.
struct DesignLayout {
  int num_fields = 8;
  int num_genders = 2;
  bool interactions = false;

  int num_cells() const { return num_fields * num_genders; }
  int num_predictors() const;
  int CellIndex(int field, int gender) const { return field * num_genders + gender; }
  Eigen::VectorXd Row(int field, int gender) const;
  // num_cells() x num_predictors() matrix of all possible rows.
  Eigen::MatrixXd CellDesign() const;
};

class SurveyDataset {
 public:
  SurveyDataset() = default;
  // Validates every record and the design rank; throws DataError.
  SurveyDataset(std::vector<SurveyRecord> records, DesignLayout layout);

  std::size_t size() const { return records_.size(); }
  const std::vector<SurveyRecord>& records() const { return records_; }
  const SurveyRecord& operator[](std::size_t i) const { return records_[i]; }
  const DesignLayout& layout() const { return layout_; }
  const Eigen::MatrixXd& cell_design() const { return cell_design_; }

  int CellOf(std::size_t i) const {
    return layout_.CellIndex(records_[i].field, records_[i].gender);
  }
  Eigen::VectorXd DesignRow(std::size_t i) const {
    return cell_design_.row(CellOf(i)).transpose();
  }

  // Sorted distinct stratum codes and their record counts.
  const std::map<int, int>& strata() const { return strata_; }

  std::vector<double> Outcomes() const;
  std::vector<double> Weights() const;

  // Same X, strata and layout with new outcome and weight columns.
  SurveyDataset WithOutcomesAndWeights(const std::vector<double>& y,
                                       const std::vector<double>& w) const;

 private:
  std::vector<SurveyRecord> records_;
  DesignLayout layout_;
  Eigen::MatrixXd cell_design_;
  std::map<int, int> strata_;
};

// Maps CSV header names onto roles. An empty `stratum` means the stratum is
// the field code; an empty `weight` or `pi` marks that column as absent.
struct CsvSchema {
  std::string y = "y";
  std::string field = "field";
  std::string gender = "gender";
  std::string weight = "weight";
  std::string pi = "pi";
  std::string stratum;
};

struct LoadOptions {
  CsvSchema schema;
  // Zero means infer from the largest code present.
  int num_fields = 0;
  int num_genders = 0;
  bool interactions = false;
};

// Loads a UTF-8 CSV with a header row. If only pi is present, weight = 1/pi;
// if only weight is present, pi = min(1, 1/weight).
SurveyDataset LoadCsv(const std::string& path, const LoadOptions& options = {});
SurveyDataset ParseCsv(const std::string& text, const LoadOptions& options = {});

// Writes y, field, gender, stratum, weight, pi with one-based codes.
void WriteCsv(const SurveyDataset& data, const std::string& path);

}  // namespace surveydp

#endif  // SURVEYDP_DATA_H_
