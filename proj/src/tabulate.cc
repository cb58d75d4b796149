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

#include "surveydp/tabulate.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "surveydp/format.h"

namespace surveydp {

namespace {

std::vector<std::size_t> Members(const SurveyDataset& data, const CellId& cell) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (cell.Contains(data[i].field, data[i].gender)) idx.push_back(i);
  }
  return idx;
}

void CheckStrata(const SurveyDataset& data, const std::vector<std::size_t>& members) {
  for (std::size_t i : members) {
    if (data.strata().at(data[i].stratum) < 2) {
      throw std::invalid_argument("stratum " + std::to_string(data[i].stratum + 1) +
                                  " has fewer than 2 units");
    }
  }
}

std::string FieldText(int v) { return v < 0 ? std::string() : std::to_string(v + 1); }

}  // namespace

double StratifiedVariance(const SurveyDataset& data, const std::vector<double>& z) {
  std::map<int, double> sum;
  for (std::size_t i = 0; i < data.size(); ++i) sum[data[i].stratum] += z[i];
  std::map<int, double> ss;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int h = data[i].stratum;
    const double d = z[i] - sum[h] / data.strata().at(h);
    ss[h] += d * d;
  }
  double var = 0.0;
  for (const auto& [h, n] : data.strata()) {
    if (n < 2) continue;  // only reachable with z == 0 there; CheckStrata guards the rest
    var += static_cast<double>(n) / (n - 1.0) * ss[h];
  }
  return var;
}

std::pair<double, double> TaylorVariance(const SurveyDataset& data,
                                         const std::vector<double>& weights, const CellId& cell,
                                         double n_hat, double mu_hat) {
  if (weights.size() != data.size()) throw std::invalid_argument("weights length != n");
  const auto members = Members(data, cell);
  CheckStrata(data, members);
  std::vector<double> zc(data.size(), 0.0), zm(data.size(), 0.0);
  for (std::size_t i : members) {
    zc[i] = weights[i];
    zm[i] = weights[i] * (data[i].y - mu_hat) / n_hat;
  }
  return {StratifiedVariance(data, zc), StratifiedVariance(data, zm)};
}

std::vector<std::optional<CellEstimate>> CellEstimates(const SurveyDataset& data,
                                                       const std::vector<double>& weights,
                                                       TableMode mode) {
  if (weights.size() != data.size()) throw std::invalid_argument("weights length != n");
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("weights must be positive");
  }
  const std::vector<double> ones(data.size(), 1.0);
  std::vector<std::optional<CellEstimate>> out;
  for (const CellId& cell : AllCells(data.layout().num_fields, data.layout().num_genders)) {
    const auto members = Members(data, cell);
    if (members.empty()) {
      out.emplace_back();
      continue;
    }
    CellEstimate e;
    e.cell = cell;
    e.n_records = static_cast<int>(members.size());
    for (std::size_t i : members) e.n_hat += weights[i];
    const bool unweighted_mean = mode == TableMode::kFbp && cell.kind == CellKind::kInterior;
    const std::vector<double>& mw = unweighted_mean ? ones : weights;
    double mass = 0.0, total = 0.0;
    for (std::size_t i : members) {
      mass += mw[i];
      total += mw[i] * data[i].y;
    }
    e.mu_hat = total / mass;
    e.var_n = TaylorVariance(data, weights, cell, e.n_hat, e.mu_hat).first;
    e.var_mu = TaylorVariance(data, mw, cell, mass, e.mu_hat).second;
    out.push_back(e);
  }
  return out;
}

double Quantile975(double df) {
  if (std::isinf(df)) return boost::math::quantile(boost::math::normal_distribution<>(), 0.975);
  if (!(df > 0.0)) throw std::invalid_argument("degrees of freedom must be positive");
  return boost::math::quantile(boost::math::students_t_distribution<>(df), 0.975);
}

CombinedEstimate CombinePartial(const std::vector<double>& points,
                                const std::vector<double>& withins) {
  const std::size_t m = points.size();
  if (m < 2) throw std::invalid_argument("combining needs m >= 2");
  if (withins.size() != m) throw std::invalid_argument("points and withins differ in length");
  CombinedEstimate c;
  for (std::size_t l = 0; l < m; ++l) {
    if (!(withins[l] >= 0.0)) throw std::invalid_argument("within variances must be >= 0");
    c.q_bar += points[l];
    c.u_bar += withins[l];
  }
  c.q_bar /= m;
  c.u_bar /= m;
  for (double q : points) c.b += (q - c.q_bar) * (q - c.q_bar);
  c.b /= (m - 1.0);
  const double bm = c.b / m;
  c.total = bm + c.u_bar;
  if (bm > 0.0) {
    const double r = 1.0 + c.u_bar / bm;
    c.df = (m - 1.0) * r * r;
  } else {
    c.df = std::numeric_limits<double>::infinity();
  }
  const double half = Quantile975(c.df) * std::sqrt(c.total);
  c.lower = c.q_bar - half;
  c.upper = c.q_bar + half;
  return c;
}

const TableRow* CellTable::Find(const CellId& cell) const {
  for (const auto& r : rows) {
    if (r.cell == cell) return &r;
  }
  return nullptr;
}

namespace {

TableRow WithinRow(const CellId& cell, double est, double var) {
  const double se = std::sqrt(var);
  const double z = Quantile975(std::numeric_limits<double>::infinity());
  return {cell, est, se, est - z * se, est + z * se};
}

TableRow CombinedRow(const CellId& cell, const std::vector<double>& q,
                     const std::vector<double>& u) {
  const CombinedEstimate c = CombinePartial(q, u);
  return {cell, c.q_bar, std::sqrt(c.total), c.lower, c.upper};
}

}  // namespace

TablePair ConfidentialTables(const SurveyDataset& data, const std::string& mechanism) {
  TablePair t;
  t.counts.quantity = "count";
  t.means.quantity = "mean";
  for (CellTable* table : {&t.counts, &t.means}) {
    table->mechanism = mechanism;
    table->m = 1;
    table->within_only = true;
  }
  for (const auto& e : CellEstimates(data, data.Weights(), TableMode::kWeighted)) {
    if (!e) continue;
    t.counts.rows.push_back(WithinRow(e->cell, e->n_hat, e->var_n));
    t.means.rows.push_back(WithinRow(e->cell, e->mu_hat, e->var_mu));
  }
  return t;
}

TablePair BuildReleaseTables(const SyntheticRelease& release, TableMode mode, bool use_smoothed) {
  const int m = release.m();
  if (m < 1) throw std::invalid_argument("release has no datasets");
  std::vector<std::vector<std::optional<CellEstimate>>> per;
  for (const auto& s : release.samples) {
    per.push_back(CellEstimates(s.data, use_smoothed ? s.smoothed_weights : s.data.Weights(), mode));
  }
  TablePair t;
  t.counts.quantity = "count";
  t.means.quantity = "mean";
  for (CellTable* table : {&t.counts, &t.means}) {
    table->mechanism = release.mechanism;
    table->m = m;
    table->epsilon = release.account.epsilon;
    table->within_only = m == 1;
  }
  for (std::size_t c = 0; c < per.front().size(); ++c) {
    if (!per.front()[c]) continue;
    const CellId cell = per.front()[c]->cell;
    if (m == 1) {
      const auto& e = *per.front()[c];
      t.counts.rows.push_back(WithinRow(cell, e.n_hat, e.var_n));
      t.means.rows.push_back(WithinRow(cell, e.mu_hat, e.var_mu));
      continue;
    }
    std::vector<double> qn, un, qm, um;
    for (const auto& p : per) {
      if (!p[c]) throw std::logic_error("cell presence differs across releases");
      qn.push_back(p[c]->n_hat);
      un.push_back(p[c]->var_n);
      qm.push_back(p[c]->mu_hat);
      um.push_back(p[c]->var_mu);
    }
    t.counts.rows.push_back(CombinedRow(cell, qn, un));
    t.means.rows.push_back(CombinedRow(cell, qm, um));
  }
  return t;
}

void WriteTableCsv(const CellTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "cell_kind,field,gender,estimate,se,mechanism,m,epsilon\n";
  for (const auto& r : table.rows) {
    out << r.cell.KindName() << ',' << FieldText(r.cell.field) << ',' << FieldText(r.cell.gender)
        << ',' << FormatDouble(r.estimate) << ',' << FormatDouble(r.se) << ',' << table.mechanism
        << ',' << table.m << ',' << FormatDouble(table.epsilon) << '\n';
  }
}

void WriteTableJson(const CellTable& table, const std::string& path) {
  nlohmann::ordered_json j;
  j["quantity"] = table.quantity;
  j["mechanism"] = table.mechanism;
  j["m"] = table.m;
  j["epsilon"] = table.epsilon;
  j["within_only"] = table.within_only;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : table.rows) {
    nlohmann::ordered_json row;
    row["cell_kind"] = r.cell.KindName();
    row["field"] = r.cell.field < 0 ? nlohmann::ordered_json() : nlohmann::ordered_json(r.cell.field + 1);
    row["gender"] = r.cell.gender < 0 ? nlohmann::ordered_json() : nlohmann::ordered_json(r.cell.gender + 1);
    row["estimate"] = r.estimate;
    row["se"] = r.se;
    row["lower"] = r.lower;
    row["upper"] = r.upper;
    j["rows"].push_back(row);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace surveydp
