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

#include "surveydp/data.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include "surveydp/format.h"

namespace surveydp {
namespace {

std::string Trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(Trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<double> ParseDouble(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

std::optional<int> ParseInt(const std::string& s) {
  auto d = ParseDouble(s);
  if (!d || *d != std::floor(*d)) return std::nullopt;
  return static_cast<int>(*d);
}

std::string RowError(std::size_t row, const std::string& what) {
  return "row " + std::to_string(row) + ": " + what;
}

void ValidateRecord(const SurveyRecord& r, const DesignLayout& layout,
                    std::size_t row) {
  if (!(r.y > 0.0) || !std::isfinite(r.y)) {
    throw DataError(RowError(row, "outcome y must be positive, got " +
                                      FormatDouble(r.y)));
  }
  if (!(r.weight > 0.0) || !std::isfinite(r.weight)) {
    throw DataError(RowError(row, "weight must be positive, got " +
                                      FormatDouble(r.weight)));
  }
  if (!(r.pi > 0.0 && r.pi <= 1.0)) {
    throw DataError(RowError(row, "pi must lie in (0, 1], got " +
                                      FormatDouble(r.pi)));
  }
  if (r.field < 0 || r.field >= layout.num_fields) {
    throw DataError(RowError(row, "field code out of range"));
  }
  if (r.gender < 0 || r.gender >= layout.num_genders) {
    throw DataError(RowError(row, "gender code out of range"));
  }
}

}  // namespace

TransformedRecord Transform(const SurveyRecord& record) {
  if (!(record.y > 0.0) || !(record.weight > 0.0)) {
    throw DataError("transform requires positive y and weight");
  }
  return {std::log(record.y), std::log(record.weight)};
}

SurveyRecord BackTransform(const TransformedRecord& t, const SurveyRecord& like) {
  SurveyRecord out = like;
  out.y = std::exp(t.log_y);
  out.weight = std::exp(t.log_w);
  return out;
}

bool CellId::Contains(int f, int g) const {
  switch (kind) {
    case CellKind::kInterior:
      return f == field && g == gender;
    case CellKind::kRowMargin:
      return f == field;
    case CellKind::kColumnMargin:
      return g == gender;
    case CellKind::kGrand:
      return true;
  }
  return false;
}

std::string CellId::KindName() const {
  switch (kind) {
    case CellKind::kInterior:
      return "interior";
    case CellKind::kRowMargin:
      return "field";
    case CellKind::kColumnMargin:
      return "gender";
    case CellKind::kGrand:
      return "grand";
  }
  return "unknown";
}

std::vector<CellId> AllCells(int num_fields, int num_genders) {
  std::vector<CellId> cells;
  for (int f = 0; f < num_fields; ++f) {
    for (int g = 0; g < num_genders; ++g) {
      cells.push_back({CellKind::kInterior, f, g});
    }
  }
  for (int f = 0; f < num_fields; ++f) cells.push_back({CellKind::kRowMargin, f, -1});
  for (int g = 0; g < num_genders; ++g) {
    cells.push_back({CellKind::kColumnMargin, -1, g});
  }
  cells.push_back({CellKind::kGrand, -1, -1});
  return cells;
}

int DesignLayout::num_predictors() const {
  int k = 1 + (num_fields - 1) + (num_genders - 1);
  if (interactions) k += (num_fields - 1) * (num_genders - 1);
  return k;
}

Eigen::VectorXd DesignLayout::Row(int field, int gender) const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(num_predictors());
  x(0) = 1.0;
  int col = 1;
  if (field > 0) x(col + field - 1) = 1.0;
  col += num_fields - 1;
  if (gender > 0) x(col + gender - 1) = 1.0;
  col += num_genders - 1;
  if (interactions && field > 0 && gender > 0) {
    x(col + (field - 1) * (num_genders - 1) + (gender - 1)) = 1.0;
  }
  return x;
}

Eigen::MatrixXd DesignLayout::CellDesign() const {
  Eigen::MatrixXd m(num_cells(), num_predictors());
  for (int f = 0; f < num_fields; ++f) {
    for (int g = 0; g < num_genders; ++g) {
      m.row(CellIndex(f, g)) = Row(f, g).transpose();
    }
  }
  return m;
}

SurveyDataset::SurveyDataset(std::vector<SurveyRecord> records,
                             DesignLayout layout)
    : records_(std::move(records)), layout_(layout) {
  if (records_.empty()) throw DataError("dataset must contain at least one record");
  if (layout_.num_fields < 1 || layout_.num_genders < 1) {
    throw DataError("layout needs at least one field and one gender");
  }
  for (std::size_t i = 0; i < records_.size(); ++i) {
    ValidateRecord(records_[i], layout_, i + 1);
    ++strata_[records_[i].stratum];
  }
  cell_design_ = layout_.CellDesign();

  // Rank of the design restricted to the cells actually observed.
  std::vector<int> present(layout_.num_cells(), 0);
  for (std::size_t i = 0; i < records_.size(); ++i) present[CellOf(i)] = 1;
  Eigen::MatrixXd observed(0, layout_.num_predictors());
  for (int c = 0; c < layout_.num_cells(); ++c) {
    if (!present[c]) continue;
    observed.conservativeResize(observed.rows() + 1, Eigen::NoChange);
    observed.row(observed.rows() - 1) = cell_design_.row(c);
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(observed);
  if (lu.rank() < layout_.num_predictors()) {
    throw DataError("design matrix is rank deficient: rank " +
                    std::to_string(lu.rank()) + " < " +
                    std::to_string(layout_.num_predictors()) +
                    " (some field or gender level has no records)");
  }
}

std::vector<double> SurveyDataset::Outcomes() const {
  std::vector<double> y;
  y.reserve(records_.size());
  for (const auto& r : records_) y.push_back(r.y);
  return y;
}

std::vector<double> SurveyDataset::Weights() const {
  std::vector<double> w;
  w.reserve(records_.size());
  for (const auto& r : records_) w.push_back(r.weight);
  return w;
}

SurveyDataset SurveyDataset::WithOutcomesAndWeights(
    const std::vector<double>& y, const std::vector<double>& w) const {
  if (y.size() != records_.size() || w.size() != records_.size()) {
    throw DataError("outcome/weight length does not match dataset size");
  }
  std::vector<SurveyRecord> out = records_;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].y = y[i];
    out[i].weight = w[i];
    out[i].pi = std::min(1.0, 1.0 / w[i]);
  }
  return SurveyDataset(std::move(out), layout_);
}

SurveyDataset ParseCsv(const std::string& text, const LoadOptions& options) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty CSV: header row required");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
      static_cast<unsigned char>(line[1]) == 0xBB &&
      static_cast<unsigned char>(line[2]) == 0xBF) {
    line.erase(0, 3);
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = SplitCsvLine(line);
  const auto column = [&](const std::string& name) -> int {
    if (name.empty()) return -1;
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  const CsvSchema& s = options.schema;
  const int c_y = column(s.y);
  const int c_field = column(s.field);
  const int c_gender = column(s.gender);
  const int c_w = column(s.weight);
  const int c_pi = column(s.pi);
  const int c_stratum = column(s.stratum);
  if (c_y < 0) throw DataError("missing column '" + s.y + "'");
  if (c_field < 0) throw DataError("missing column '" + s.field + "'");
  if (c_gender < 0) throw DataError("missing column '" + s.gender + "'");
  if (c_w < 0 && c_pi < 0) {
    throw DataError("missing column: need '" + s.weight + "' or '" + s.pi + "'");
  }
  if (!s.stratum.empty() && c_stratum < 0) {
    throw DataError("missing column '" + s.stratum + "'");
  }

  std::vector<SurveyRecord> records;
  int max_field = 0;
  int max_gender = 0;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (Trim(line).empty()) continue;
    ++row;
    const std::vector<std::string> cells = SplitCsvLine(line);
    if (cells.size() != header.size()) {
      throw DataError(RowError(row, "expected " + std::to_string(header.size()) +
                                        " columns, got " +
                                        std::to_string(cells.size())));
    }
    SurveyRecord r;
    auto y = ParseDouble(cells[c_y]);
    auto f = ParseInt(cells[c_field]);
    auto g = ParseInt(cells[c_gender]);
    if (!y) throw DataError(RowError(row, "unparseable y '" + cells[c_y] + "'"));
    if (!f || *f < 1) throw DataError(RowError(row, "bad field code '" + cells[c_field] + "'"));
    if (!g || *g < 1) throw DataError(RowError(row, "bad gender code '" + cells[c_gender] + "'"));
    r.y = *y;
    r.field = *f - 1;
    r.gender = *g - 1;
    const bool has_w = c_w >= 0;
    const bool has_pi = c_pi >= 0;
    double w = 0.0, pi = 0.0;
    if (has_w) {
      auto v = ParseDouble(cells[c_w]);
      if (!v) throw DataError(RowError(row, "unparseable weight '" + cells[c_w] + "'"));
      w = *v;
      if (!(w > 0.0)) throw DataError(RowError(row, "weight must be positive, got " + cells[c_w]));
    }
    if (has_pi) {
      auto v = ParseDouble(cells[c_pi]);
      if (!v) throw DataError(RowError(row, "unparseable pi '" + cells[c_pi] + "'"));
      pi = *v;
      if (!(pi > 0.0 && pi <= 1.0)) {
        throw DataError(RowError(row, "pi must lie in (0, 1], got " + cells[c_pi]));
      }
    }
    r.weight = has_w ? w : 1.0 / pi;
    r.pi = has_pi ? pi : std::min(1.0, 1.0 / w);
    if (c_stratum >= 0) {
      auto h = ParseInt(cells[c_stratum]);
      if (!h) throw DataError(RowError(row, "bad stratum code '" + cells[c_stratum] + "'"));
      r.stratum = *h - 1;
    } else {
      r.stratum = r.field;
    }
    if (!(r.y > 0.0)) {
      throw DataError(RowError(row, "outcome y must be positive, got " + cells[c_y]));
    }
    max_field = std::max(max_field, r.field + 1);
    max_gender = std::max(max_gender, r.gender + 1);
    records.push_back(r);
  }
  if (records.empty()) throw DataError("CSV has a header but no data rows");

  DesignLayout layout;
  layout.num_fields = options.num_fields > 0 ? options.num_fields : max_field;
  layout.num_genders = options.num_genders > 0 ? options.num_genders : max_gender;
  layout.interactions = options.interactions;
  return SurveyDataset(std::move(records), layout);
}

SurveyDataset LoadCsv(const std::string& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParseCsv(buf.str(), options);
}

void WriteCsv(const SurveyDataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "y,field,gender,stratum,weight,pi\n";
  for (const auto& r : data.records()) {
    out << FormatDouble(r.y) << ',' << r.field + 1 << ',' << r.gender + 1 << ','
        << r.stratum + 1 << ',' << FormatDouble(r.weight) << ','
        << FormatDouble(r.pi) << '\n';
  }
}

}  // namespace surveydp
