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

#include "surveydp/simharness.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <tuple>

#include "surveydp/format.h"
#include "surveydp/rng.h"

namespace surveydp {

void PopulationSpec::Validate() const {
  const int f = num_fields();
  const int g = num_genders();
  if (N < 1 || f < 1 || g < 1) throw std::invalid_argument("empty population spec");
  auto sums_to_one = [](const std::vector<double>& p) {
    double s = 0.0;
    for (double v : p) {
      if (!(v >= 0.0)) return false;
      s += v;
    }
    return std::abs(s - 1.0) < 1e-9;
  };
  if (!sums_to_one(field_props)) throw std::invalid_argument("field proportions must sum to 1");
  if (static_cast<int>(gender_props_by_field.size()) != f ||
      static_cast<int>(cell_log_means.size()) != f) {
    throw std::invalid_argument("per-field tables must have one row per field");
  }
  for (int i = 0; i < f; ++i) {
    if (static_cast<int>(gender_props_by_field[i].size()) != g ||
        static_cast<int>(cell_log_means[i].size()) != g) {
      throw std::invalid_argument("per-field rows must have one entry per gender");
    }
    if (!sums_to_one(gender_props_by_field[i])) {
      throw std::invalid_argument("gender proportions must sum to 1 within each field");
    }
  }
  if (!(outcome_scale > 0.0) || !(selection_noise_scale > 0.0)) {
    throw std::invalid_argument("scales must be positive");
  }
}

PopulationSpec PopulationSpec::Default() {
  const std::vector<std::vector<double>> counts = {
      {14599, 13364}, {1951, 783}, {2918, 1117}, {12381, 5728},
      {3861, 7336},   {6433, 6409}, {14358, 3773}, {2033, 2956}};
  const std::vector<std::vector<double>> means = {
      {121125, 99226}, {146916, 125358}, {118338, 105081}, {122601, 100618},
      {120531, 98060}, {122676, 97595},  {136370, 116566}, {137349, 106388}};
  PopulationSpec s;
  double total = 0.0;
  for (const auto& row : counts) total += row[0] + row[1];
  for (std::size_t f = 0; f < counts.size(); ++f) {
    const double field_total = counts[f][0] + counts[f][1];
    s.field_props.push_back(field_total / total);
    s.gender_props_by_field.push_back({counts[f][0] / field_total, counts[f][1] / field_total});
    // Log-scale location so the lognormal mean matches the cell salary.
    s.cell_log_means.push_back({std::log(means[f][0]) - 0.08, std::log(means[f][1]) - 0.08});
  }
  return s;
}

namespace {

std::vector<int> LargestRemainder(const std::vector<double>& shares, int total) {
  std::vector<int> out(shares.size());
  std::vector<std::pair<double, std::size_t>> rem;
  int used = 0;
  for (std::size_t i = 0; i < shares.size(); ++i) {
    const double exact = shares[i] * total;
    out[i] = static_cast<int>(std::floor(exact));
    used += out[i];
    rem.push_back({exact - out[i], i});
  }
  std::stable_sort(rem.begin(), rem.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int k = 0; k < total - used; ++k) ++out[rem[k % rem.size()].second];
  return out;
}

}  // namespace

std::vector<int> ProportionalAllocation(const std::vector<int>& sizes, int n) {
  double total = 0.0;
  for (int s : sizes) total += s;
  if (!(total > 0.0)) throw std::invalid_argument("strata are empty");
  std::vector<double> shares;
  for (int s : sizes) shares.push_back(s / total);
  return LargestRemainder(shares, n);
}

SurveyDataset GenPopulation(const PopulationSpec& spec, std::uint64_t seed) {
  spec.Validate();
  const int f_count = spec.num_fields();
  const int g_count = spec.num_genders();
  std::vector<double> shares;
  for (int f = 0; f < f_count; ++f) {
    for (int g = 0; g < g_count; ++g) {
      shares.push_back(spec.field_props[f] * spec.gender_props_by_field[f][g]);
    }
  }
  const std::vector<int> cell_n = LargestRemainder(shares, spec.N);
  Rng rng(seed, "sim.population");
  std::vector<SurveyRecord> units;
  units.reserve(spec.N);
  std::vector<double> log_pi;
  log_pi.reserve(spec.N);
  for (int f = 0; f < f_count; ++f) {
    for (int g = 0; g < g_count; ++g) {
      for (int k = 0; k < cell_n[f * g_count + g]; ++k) {
        SurveyRecord r;
        r.field = f;
        r.gender = g;
        r.stratum = f;
        const double ly = spec.cell_log_means[f][g] + spec.outcome_scale * rng.Normal();
        r.y = std::exp(ly);
        log_pi.push_back(ly + spec.selection_noise_scale * rng.Normal());
        units.push_back(r);
      }
    }
  }
  const double top = *std::max_element(log_pi.begin(), log_pi.end());
  for (std::size_t i = 0; i < units.size(); ++i) {
    // Floored so 1/pi stays finite (and squarable) under very noisy selection.
    units[i].pi = std::max(std::exp(log_pi[i] - top), 1e-150);
    units[i].weight = 1.0 / units[i].pi;
  }
  DesignLayout layout;
  layout.num_fields = f_count;
  layout.num_genders = g_count;
  return SurveyDataset(std::move(units), layout);
}

SurveyDataset PpsSample(const SurveyDataset& population, const std::vector<int>& n_per_stratum,
                        std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < population.size(); ++i) strata[population[i].stratum].push_back(i);
  if (n_per_stratum.size() != strata.size()) {
    throw std::invalid_argument("need one sample size per stratum");
  }
  std::vector<SurveyRecord> sample;
  std::size_t h_index = 0;
  for (const auto& [h, units] : strata) {
    const int n_h = n_per_stratum[h_index++];
    if (n_h < 2) throw std::invalid_argument("each stratum needs n_h >= 2");
    if (n_h > static_cast<int>(units.size())) {
      throw std::invalid_argument("n_h exceeds stratum population");
    }
    std::vector<double> cum(units.size());
    double total = 0.0;
    for (std::size_t k = 0; k < units.size(); ++k) {
      total += population[units[k]].pi;
      cum[k] = total;
    }
    Rng rng(seed, "sim.pps", static_cast<std::uint64_t>(h));
    std::set<std::size_t> seen;
    std::vector<std::size_t> order;
    const long budget = 100L * n_h;
    long draws = 0;
    while (static_cast<int>(order.size()) < n_h) {
      if (++draws > budget) {
        throw std::runtime_error("PPS draw budget exhausted in stratum " + std::to_string(h + 1));
      }
      const double u = rng.Uniform() * total;
      std::size_t k = std::upper_bound(cum.begin(), cum.end(), u) - cum.begin();
      k = std::min(k, units.size() - 1);
      if (seen.insert(k).second) order.push_back(k);
    }
    for (std::size_t k : order) {
      SurveyRecord r = population[units[k]];
      const double p = r.pi / total;
      r.pi = -std::expm1(n_h * std::log1p(-p));
      r.weight = 1.0 / r.pi;
      sample.push_back(r);
    }
  }
  return SurveyDataset(std::move(sample), population.layout());
}

TablePair PopulationTruth(const SurveyDataset& population) {
  const std::vector<double> ones(population.size(), 1.0);
  TablePair t;
  t.counts.quantity = "count";
  t.means.quantity = "mean";
  t.counts.mechanism = t.means.mechanism = "population";
  for (const CellId& cell :
       AllCells(population.layout().num_fields, population.layout().num_genders)) {
    double n = 0.0, total = 0.0;
    for (const auto& r : population.records()) {
      if (!cell.Contains(r.field, r.gender)) continue;
      n += 1.0;
      total += r.y;
    }
    if (n == 0.0) continue;
    t.counts.rows.push_back({cell, n, 0.0, n, n});
    t.means.rows.push_back({cell, total / n, 0.0, total / n, total / n});
  }
  return t;
}

double Rmse(double estimate, double variance, double truth) {
  if (!(variance >= 0.0)) throw std::invalid_argument("variance must be >= 0");
  const double bias = estimate - truth;
  return std::sqrt(bias * bias + variance);
}

double Correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

std::vector<MetricRow> UtilityRows(const std::string& mechanism, const TablePair& tables,
                                   const TablePair& confidential, const TablePair& truth) {
  std::vector<MetricRow> rows;
  const std::pair<const CellTable*, std::pair<const CellTable*, const CellTable*>> sets[] = {
      {&tables.counts, {&confidential.counts, &truth.counts}},
      {&tables.means, {&confidential.means, &truth.means}}};
  for (const auto& [table, ref] : sets) {
    for (const auto& r : table->rows) {
      const TableRow* c = ref.first->Find(r.cell);
      const TableRow* t = ref.second->Find(r.cell);
      if (!c || !t) continue;
      MetricRow m;
      m.mechanism = mechanism;
      m.quantity = table->quantity;
      m.cell = r.cell;
      m.rmse = Rmse(r.estimate, r.se * r.se, t->estimate);
      m.rmse_ratio = m.rmse / Rmse(c->estimate, c->se * c->se, t->estimate);
      m.coverage = (t->estimate >= r.lower && t->estimate <= r.upper) ? 1.0 : 0.0;
      m.cv = r.se / r.estimate;
      m.ci_length = r.upper - r.lower;
      m.replicates = 1;
      rows.push_back(m);
    }
  }
  return rows;
}

double MedianRmseRatio(const std::vector<MetricRow>& rows, const std::string& quantity) {
  std::vector<double> v;
  for (const auto& r : rows) {
    if (r.quantity == quantity) v.push_back(r.rmse_ratio);
  }
  if (v.empty()) throw std::invalid_argument("no rows for " + quantity);
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

namespace {

bool InMonteCarloSet(const CellId& c) {
  return c.kind == CellKind::kInterior || c.kind == CellKind::kRowMargin;
}

struct Accumulator {
  double rmse = 0.0;
  double rmse_ref = 0.0;
  double hits = 0.0;
  double cv = 0.0;
  double length = 0.0;
  int n = 0;
};

int CellOrder(const CellId& c) {
  return static_cast<int>(c.kind) * 10000 + (c.field + 1) * 100 + (c.gender + 1);
}

}  // namespace

MonteCarloResult MonteCarlo(const MonteCarloConfig& config) {
  if (config.replicates < 2) throw std::invalid_argument("need at least 2 replicates");
  const SurveyDataset population = GenPopulation(config.population, DeriveSeed(config.seed, "mc.population"));
  const TablePair truth = PopulationTruth(population);
  std::vector<int> sizes;
  for (const auto& [h, n] : population.strata()) sizes.push_back(n);
  const std::vector<int> alloc = ProportionalAllocation(sizes, config.sample_size);

  std::vector<std::string> names = {"direct"};
  for (Mechanism m : config.mechanisms) names.push_back(MechanismName(m));
  // (mechanism, quantity, cell order) -> accumulator
  std::map<std::tuple<std::string, std::string, int>, Accumulator> acc;
  std::map<int, CellId> cells;

  MonteCarloResult result;
  for (int r = 0; r < config.replicates; ++r) {
    try {
      const SurveyDataset sample =
          PpsSample(population, alloc, DeriveSeed(config.seed, "mc.sample", r));
      const TablePair direct = ConfidentialTables(sample);
      std::vector<std::pair<std::string, TablePair>> outputs = {{"direct", direct}};
      for (Mechanism m : config.mechanisms) {
        const std::uint64_t s = DeriveSeed(config.seed, "mc." + MechanismName(m), r);
        outputs.push_back({MechanismName(m), RunMechanism(m, sample, config.mechanism, s).tables});
      }
      for (const auto& [name, tables] : outputs) {
        for (const auto& row : UtilityRows(name, tables, direct, truth)) {
          if (!InMonteCarloSet(row.cell)) continue;
          const TableRow* c = (row.quantity == "count" ? direct.counts : direct.means).Find(row.cell);
          const TableRow* t = (row.quantity == "count" ? truth.counts : truth.means).Find(row.cell);
          auto& a = acc[{name, row.quantity, CellOrder(row.cell)}];
          cells[CellOrder(row.cell)] = row.cell;
          a.rmse += row.rmse;
          a.rmse_ref += Rmse(c->estimate, c->se * c->se, t->estimate);
          a.hits += row.coverage;
          a.cv += row.cv;
          a.length += row.ci_length;
          ++a.n;
        }
      }
      ++result.completed;
    } catch (const std::exception& e) {
      result.failures.push_back("replicate " + std::to_string(r + 1) + ": " + e.what());
    }
  }

  for (const auto& name : names) {
    for (const char* q : {"count", "mean"}) {
      for (const auto& [order, cell] : cells) {
        auto it = acc.find({name, q, order});
        if (it == acc.end() || it->second.n == 0) continue;
        const Accumulator& a = it->second;
        MetricRow m;
        m.mechanism = name;
        m.quantity = q;
        m.cell = cell;
        m.rmse = a.rmse / a.n;
        m.rmse_ratio = a.rmse / a.rmse_ref;
        m.coverage = a.hits / a.n;
        m.cv = a.cv / a.n;
        m.ci_length = a.length / a.n;
        m.replicates = a.n;
        result.rows.push_back(m);
      }
    }
  }

  auto ratio = [&](const char* q) {
    double sum = 0.0;
    int count = 0;
    for (const auto& [order, cell] : cells) {
      auto p = acc.find({"fbp", q, order});
      auto s = acc.find({"fbs", q, order});
      if (p == acc.end() || s == acc.end() || s->second.length == 0.0) continue;
      sum += (p->second.length / p->second.n) / (s->second.length / s->second.n);
      ++count;
    }
    return count ? sum / count : std::nan("");
  };
  result.ci_ratio_count = ratio("count");
  result.ci_ratio_mean = ratio("mean");
  return result;
}

namespace {

std::string CellFields(const CellId& c) {
  auto text = [](int v) { return v < 0 ? std::string() : std::to_string(v + 1); };
  return c.KindName() + "," + text(c.field) + "," + text(c.gender);
}

}  // namespace

void WriteMetricsCsv(const std::vector<MetricRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "mechanism,quantity,cell_kind,field,gender,rmse,rmse_ratio,coverage,cv,ci_length,"
         "replicates\n";
  for (const auto& r : rows) {
    out << r.mechanism << ',' << r.quantity << ',' << CellFields(r.cell) << ','
        << FormatDouble(r.rmse) << ',' << FormatDouble(r.rmse_ratio) << ','
        << FormatDouble(r.coverage) << ',' << FormatDouble(r.cv) << ','
        << FormatDouble(r.ci_length) << ',' << r.replicates << '\n';
  }
}

void WriteFrontierCsv(const MonteCarloResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "mechanism,quantity,cell_kind,field,gender,coverage,cv,ci_ratio_to_fbs\n";
  std::map<std::pair<std::string, int>, double> fbs_length;
  for (const auto& r : result.rows) {
    if (r.mechanism == "fbs") fbs_length[{r.quantity, CellOrder(r.cell)}] = r.ci_length;
  }
  for (const auto& r : result.rows) {
    auto it = fbs_length.find({r.quantity, CellOrder(r.cell)});
    const double ratio =
        it == fbs_length.end() || it->second == 0.0 ? std::nan("") : r.ci_length / it->second;
    out << r.mechanism << ',' << r.quantity << ',' << CellFields(r.cell) << ','
        << FormatDouble(r.coverage) << ',' << FormatDouble(r.cv) << ',' << FormatDouble(ratio)
        << '\n';
  }
}

}  // namespace surveydp
