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

#include "surveydp/cli.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "surveydp/data.h"
#include "surveydp/format.h"
#include "surveydp/laplace.h"
#include "surveydp/pipeline.h"
#include "surveydp/release.h"
#include "surveydp/riskweights.h"
#include "surveydp/simharness.h"
#include "surveydp/tabulate.h"

namespace surveydp {

namespace fs = std::filesystem;
using Json = nlohmann::json;

std::string Fnv1aHex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Json Defaults() {
  const PopulationSpec pop = PopulationSpec::Default();
  Json j;
  j["input"] = nullptr;
  j["release"] = nullptr;
  j["mechanism"] = "fbs";
  j["m"] = 3;
  j["target_delta"] = nullptr;
  j["epsilon"] = nullptr;
  j["replicates"] = 20;
  j["schema"] = {{"y", "y"}, {"field", "field"}, {"gender", "gender"},
                 {"weight", "weight"}, {"pi", "pi"}, {"stratum", ""}};
  j["design"] = {{"interactions", false}, {"num_fields", 0}, {"num_genders", 0}};
  j["mcmc"] = {{"chains", 2}, {"warmup", 5000}, {"keep", 2000}, {"thin", 1},
               {"parallel_chains", false}};
  j["tuning"] = {{"tolerance", 0.05}, {"c2", 0.0}, {"max_evaluations", 60}};
  j["fbs"] = {{"include_jacobian", false}, {"smoothed_weight_mean", true}, {"coef_df", 3.0}, {"coef_scale", 10.0},
              {"lkj_eta", 6.0}, {"sigma_df", 3.0}, {"sigma_scale", 10.0}};
  j["fbp"] = {{"normalization", "stratum"}, {"log_pi_risk", true}, {"coef_variance", 100.0},
              {"sigma_y_scale", 1.0}, {"sigma_pi_scale", 1.0}};
  j["tables"] = {{"smoothed", true}};
  j["laplace"] = {{"replicates", 10}};
  Json means = Json::array();
  for (const auto& row : pop.cell_log_means) {
    means.push_back({std::exp(row[0] + 0.08), std::exp(row[1] + 0.08)});
  }
  j["simulation"] = {{"N", pop.N},
                     {"sample_size", 1000},
                     {"field_props", pop.field_props},
                     {"gender_props_by_field", pop.gender_props_by_field},
                     {"cell_means", means},
                     {"outcome_scale", pop.outcome_scale},
                     {"selection_noise_scale", pop.selection_noise_scale},
                     {"mechanisms", {"fbs", "fbp", "laplace"}}};
  return j;
}

Json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw UsageError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

LoadOptions LoadOptionsFrom(const Json& c) {
  LoadOptions o;
  o.schema.y = c["schema"]["y"].get<std::string>();
  o.schema.field = c["schema"]["field"].get<std::string>();
  o.schema.gender = c["schema"]["gender"].get<std::string>();
  o.schema.weight = c["schema"]["weight"].get<std::string>();
  o.schema.pi = c["schema"]["pi"].get<std::string>();
  o.schema.stratum = c["schema"]["stratum"].get<std::string>();
  o.num_fields = c["design"]["num_fields"].get<int>();
  o.num_genders = c["design"]["num_genders"].get<int>();
  o.interactions = c["design"]["interactions"].get<bool>();
  return o;
}

MechanismConfig MechanismConfigFrom(const Json& c, std::uint64_t seed) {
  MechanismConfig m;
  m.m = c["m"].get<int>();
  if (!c["target_delta"].is_null()) m.target_delta = c["target_delta"].get<double>();
  if (!c["epsilon"].is_null()) m.epsilon = c["epsilon"].get<double>();
  m.tolerance = c["tuning"]["tolerance"].get<double>();
  m.c2 = c["tuning"]["c2"].get<double>();
  m.max_tune_evaluations = c["tuning"]["max_evaluations"].get<int>();
  m.sampler.chains = c["mcmc"]["chains"].get<int>();
  m.sampler.warmup = c["mcmc"]["warmup"].get<int>();
  m.sampler.keep = c["mcmc"]["keep"].get<int>();
  m.sampler.thin = c["mcmc"]["thin"].get<int>();
  m.sampler.parallel_chains = c["mcmc"]["parallel_chains"].get<bool>();
  m.sampler.seed = seed;
  m.fbs.include_jacobian = c["fbs"]["include_jacobian"].get<bool>();
  m.fbs.smoothed_weight_mean = c["fbs"]["smoothed_weight_mean"].get<bool>();
  m.fbs_prior.coef_df = c["fbs"]["coef_df"].get<double>();
  m.fbs_prior.coef_scale = c["fbs"]["coef_scale"].get<double>();
  m.fbs_prior.lkj_eta = c["fbs"]["lkj_eta"].get<double>();
  m.fbs_prior.sigma_df = c["fbs"]["sigma_df"].get<double>();
  m.fbs_prior.sigma_scale = c["fbs"]["sigma_scale"].get<double>();
  const std::string norm = c["fbp"]["normalization"].get<std::string>();
  if (norm == "stratum") {
    m.fbp_normalization = WeightNormalization::kStratum;
  } else if (norm == "grand") {
    m.fbp_normalization = WeightNormalization::kGrand;
  } else {
    throw UsageError("fbp.normalization must be 'stratum' or 'grand'");
  }
  m.fbp.log_pi_risk = c["fbp"]["log_pi_risk"].get<bool>();
  m.fbp_prior.coef_variance = c["fbp"]["coef_variance"].get<double>();
  m.fbp_prior.sigma_y_scale = c["fbp"]["sigma_y_scale"].get<double>();
  m.fbp_prior.sigma_pi_scale = c["fbp"]["sigma_pi_scale"].get<double>();
  m.smoothed_tables = c["tables"]["smoothed"].get<bool>();
  m.laplace_replicates = c["laplace"]["replicates"].get<int>();
  return m;
}

PopulationSpec PopulationFrom(const Json& c) {
  const Json& s = c["simulation"];
  PopulationSpec p;
  p.N = s["N"].get<int>();
  p.field_props = s["field_props"].get<std::vector<double>>();
  p.gender_props_by_field = s["gender_props_by_field"].get<std::vector<std::vector<double>>>();
  p.outcome_scale = s["outcome_scale"].get<double>();
  p.selection_noise_scale = s["selection_noise_scale"].get<double>();
  const auto means = s["cell_means"].get<std::vector<std::vector<double>>>();
  for (const auto& row : means) {
    std::vector<double> logs;
    for (double v : row) {
      if (!(v > 0.0)) throw UsageError("simulation.cell_means must be positive");
      logs.push_back(std::log(v) - 0.5 * p.outcome_scale * p.outcome_scale);
    }
    p.cell_log_means.push_back(logs);
  }
  return p;
}

std::string RequireInput(const Json& c) {
  if (c["input"].is_null()) throw UsageError("--input is required for this command");
  return c["input"].get<std::string>();
}

void RequireExactlyOne(const Json& c) {
  const bool d = !c["target_delta"].is_null();
  const bool e = !c["epsilon"].is_null();
  if (d && e) throw UsageError("conflicting privacy targets: give --target-delta or --epsilon, not both");
  if (!d && !e) throw UsageError("one of --target-delta or --epsilon is required");
}

void WriteJson(const Json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

Json AccountJson(const PrivacyAccount& a) {
  return {{"mechanism_kind", "pseudo_posterior"},
          {"delta", a.delta_alpha},
          {"m", a.m},
          {"epsilon", a.epsilon}};
}

Json BudgetJson(const BudgetAllocation& b) {
  return {{"mechanism_kind", "laplace"},       {"epsilon", b.epsilon_total},
          {"epsilon_pc", b.epsilon_pc},        {"epsilon_vc", b.epsilon_vc},
          {"epsilon_rep", b.epsilon_rep},      {"replicates", b.replicates}};
}

void WriteTables(const TablePair& t, const fs::path& dir, const std::string& prefix,
                 std::vector<std::string>& files) {
  for (const CellTable* table : {&t.counts, &t.means}) {
    const std::string stem = prefix + (table == &t.counts ? "counts" : "means");
    WriteTableCsv(*table, (dir / (stem + ".csv")).string());
    WriteTableJson(*table, (dir / (stem + ".json")).string());
    files.push_back(stem + ".csv");
    files.push_back(stem + ".json");
  }
}

struct Run {
  std::string command;
  Json config;
  std::uint64_t seed = 0;
  fs::path dir;
  std::vector<std::string> files;
  Json result = Json::object();
};

void WriteManifest(Run& run) {
  Json m;
  m["command"] = run.command;
  m["seed"] = run.seed;
  m["config_hash"] = Fnv1aHex(run.config.dump());
  m["config"] = run.config;
  for (auto& [k, v] : run.result.items()) m[k] = v;
  m["outputs"] = run.files;
  WriteJson(m, run.dir / "manifest.json");
}

void DoSynthesize(Run& run, std::ostream& out) {
  RequireExactlyOne(run.config);
  const Mechanism mech = ParseMechanism(run.config["mechanism"].get<std::string>());
  if (mech == Mechanism::kLaplace) throw UsageError("synthesize needs --mechanism fbs or fbp");
  const SurveyDataset data = LoadCsv(RequireInput(run.config), LoadOptionsFrom(run.config));
  const MechanismConfig mc = MechanismConfigFrom(run.config, run.seed);
  MechanismOutput o = RunMechanism(mech, data, mc, run.seed);
  WriteRelease(*o.release, run.dir.string(), "synthetic");
  for (int l = 1; l <= o.release->m(); ++l) run.files.push_back("synthetic_" + std::to_string(l) + ".csv");
  run.files.push_back("synthetic.json");
  WriteRiskProfileCsv(o.tune->profile, (run.dir / "risk_profile.csv").string());
  run.files.push_back("risk_profile.csv");
  WriteDiagnosticsCsv(o.tune->draws, (run.dir / "mcmc_diagnostics.csv").string());
  run.files.push_back("mcmc_diagnostics.csv");
  WriteTables(o.tables, run.dir, "table_", run.files);
  Json account = AccountJson(o.account);
  account["c1"] = o.tune->profile.c1;
  account["c2"] = o.tune->profile.c2;
  account["unweighted_delta"] = o.tune->profile.overall_unweighted;
  WriteJson(account, run.dir / "privacy_account.json");
  run.files.push_back("privacy_account.json");
  run.result["delta"] = o.account.delta_alpha;
  run.result["m"] = o.account.m;
  run.result["epsilon"] = o.account.epsilon;
  out << MechanismName(mech) << ": delta=" << FormatDouble(o.account.delta_alpha)
      << " m=" << o.account.m << " epsilon=" << FormatDouble(o.account.epsilon) << '\n';
}

void DoRiskProfile(Run& run, std::ostream& out) {
  RequireExactlyOne(run.config);
  const Mechanism mech = ParseMechanism(run.config["mechanism"].get<std::string>());
  if (mech == Mechanism::kLaplace) throw UsageError("riskprofile needs --mechanism fbs or fbp");
  const SurveyDataset data = LoadCsv(RequireInput(run.config), LoadOptionsFrom(run.config));
  const MechanismConfig mc = MechanismConfigFrom(run.config, run.seed);
  const TuneResult t = RunRiskProfile(mech, data, mc, run.seed);
  const PrivacyAccount a = Epsilon(t.profile.overall_lipschitz, mc.m);
  WriteRiskProfileCsv(t.profile, (run.dir / "risk_profile.csv").string());
  run.files.push_back("risk_profile.csv");
  Json account = AccountJson(a);
  account["c1"] = t.profile.c1;
  account["c2"] = t.profile.c2;
  account["unweighted_delta"] = t.profile.overall_unweighted;
  WriteJson(account, run.dir / "privacy_account.json");
  run.files.push_back("privacy_account.json");
  run.result["delta"] = a.delta_alpha;
  run.result["m"] = a.m;
  run.result["epsilon"] = a.epsilon;
  out << "weighted delta=" << FormatDouble(a.delta_alpha)
      << " unweighted delta=" << FormatDouble(t.profile.overall_unweighted) << '\n';
}

SyntheticRelease LoadRelease(const std::string& sidecar) {
  const Json j = ReadJsonFile(sidecar);
  const fs::path base = fs::path(sidecar).parent_path();
  SyntheticRelease r;
  r.mechanism = j.at("mechanism").get<std::string>();
  r.account.m = j.at("m").get<int>();
  r.account.delta_alpha = j.at("delta").get<double>();
  r.account.epsilon = j.at("epsilon").get<double>();
  r.c1 = j.value("c1", 1.0);
  r.c2 = j.value("c2", 0.0);
  r.seed = j.value("seed", std::uint64_t{0});
  LoadOptions o;
  o.num_fields = j.value("num_fields", 0);
  o.num_genders = j.value("num_genders", 0);
  o.interactions = j.value("interactions", false);
  o.schema.pi = "";
  o.schema.stratum = "stratum";
  for (const auto& entry : j.at("datasets")) {
    const std::string path = (base / entry.at("file").get<std::string>()).string();
    SyntheticSample s;
    s.data = LoadCsv(path, o);
    LoadOptions smooth = o;
    smooth.schema.weight = "smoothed_weight";
    s.smoothed_weights = LoadCsv(path, smooth).Weights();
    s.draw_index = entry.value("draw_index", 0);
    r.samples.push_back(std::move(s));
  }
  return r;
}

void DoTabulate(Run& run, std::ostream& out) {
  if (!run.config["release"].is_null()) {
    const SyntheticRelease r = LoadRelease(run.config["release"].get<std::string>());
    const TableMode mode = r.mechanism == "fbp" ? TableMode::kFbp : TableMode::kWeighted;
    WriteTables(BuildReleaseTables(r, mode, run.config["tables"]["smoothed"].get<bool>()), run.dir,
                "table_", run.files);
    run.result["delta"] = r.account.delta_alpha;
    run.result["m"] = r.account.m;
    run.result["epsilon"] = r.account.epsilon;
    out << "tabulated " << r.m() << " " << r.mechanism << " datasets\n";
    return;
  }
  const SurveyDataset data = LoadCsv(RequireInput(run.config), LoadOptionsFrom(run.config));
  WriteTables(ConfidentialTables(data), run.dir, "table_", run.files);
  out << "tabulated " << data.size() << " records\n";
}

void DoNoise(Run& run, std::ostream& out) {
  RequireExactlyOne(run.config);
  const SurveyDataset data = LoadCsv(RequireInput(run.config), LoadOptionsFrom(run.config));
  const MechanismConfig mc = MechanismConfigFrom(run.config, run.seed);
  const double eps = mc.ResolvedEpsilon();
  const BudgetAllocation budget = AllocateBudget(eps, mc.laplace_replicates);
  MechanismOutput o = RunMechanism(Mechanism::kLaplace, data, mc, run.seed);
  WriteTables(o.tables, run.dir, "table_", run.files);
  WriteJson(BudgetJson(budget), run.dir / "privacy_account.json");
  run.files.push_back("privacy_account.json");
  run.result["epsilon"] = eps;
  run.result["budget"] = BudgetJson(budget);
  out << "laplace: epsilon=" << FormatDouble(eps) << " cells=" << o.tables.counts.rows.size()
      << '\n';
}

void DoSimulate(Run& run, std::ostream& out, bool utility) {
  const PopulationSpec spec = PopulationFrom(run.config);
  const SurveyDataset pop = GenPopulation(spec, DeriveSeed(run.seed, "cli.population"));
  std::vector<int> sizes;
  for (const auto& [h, n] : pop.strata()) sizes.push_back(n);
  const auto alloc =
      ProportionalAllocation(sizes, run.config["simulation"]["sample_size"].get<int>());
  const SurveyDataset sample = PpsSample(pop, alloc, DeriveSeed(run.seed, "cli.sample"));
  WriteCsv(sample, (run.dir / "sample.csv").string());
  run.files.push_back("sample.csv");
  const TablePair truth = PopulationTruth(pop);
  WriteTables(truth, run.dir, "truth_", run.files);
  const double pop_corr = Correlation(pop.Outcomes(), pop.Weights());
  const double sample_corr = Correlation(sample.Outcomes(), sample.Weights());
  run.result["population_corr_y_w"] = pop_corr;
  run.result["sample_corr_y_w"] = sample_corr;
  run.result["allocation"] = alloc;
  out << "population corr(y,w)=" << FormatDouble(pop_corr)
      << " sample corr(y,w)=" << FormatDouble(sample_corr) << '\n';
  if (!utility) return;

  RequireExactlyOne(run.config);
  const MechanismConfig mc = MechanismConfigFrom(run.config, run.seed);
  const TablePair direct = ConfidentialTables(sample);
  std::vector<MetricRow> rows = UtilityRows("direct", direct, direct, truth);
  Json medians;
  for (const auto& name : run.config["simulation"]["mechanisms"]) {
    const Mechanism mech = ParseMechanism(name.get<std::string>());
    const MechanismOutput o =
        RunMechanism(mech, sample, mc, DeriveSeed(run.seed, "cli." + MechanismName(mech)));
    const auto r = UtilityRows(MechanismName(mech), o.tables, direct, truth);
    rows.insert(rows.end(), r.begin(), r.end());
    medians[MechanismName(mech)] = {{"count", MedianRmseRatio(r, "count")},
                                    {"mean", MedianRmseRatio(r, "mean")},
                                    {"epsilon", o.account.epsilon},
                                    {"delta", o.account.delta_alpha}};
  }
  WriteMetricsCsv(rows, (run.dir / "metrics.csv").string());
  run.files.push_back("metrics.csv");
  run.result["median_rmse_ratio"] = medians;
  run.result["m"] = mc.m;
  run.result["epsilon"] = mc.ResolvedEpsilon();
  run.result["delta"] = mc.ResolvedDelta();
}

void DoMonteCarlo(Run& run, std::ostream& out) {
  RequireExactlyOne(run.config);
  MonteCarloConfig mc;
  mc.population = PopulationFrom(run.config);
  mc.replicates = run.config["replicates"].get<int>();
  mc.sample_size = run.config["simulation"]["sample_size"].get<int>();
  mc.mechanism = MechanismConfigFrom(run.config, run.seed);
  mc.seed = run.seed;
  mc.mechanisms.clear();
  for (const auto& name : run.config["simulation"]["mechanisms"]) {
    mc.mechanisms.push_back(ParseMechanism(name.get<std::string>()));
  }
  const MonteCarloResult r = MonteCarlo(mc);
  WriteMetricsCsv(r.rows, (run.dir / "metrics.csv").string());
  WriteFrontierCsv(r, (run.dir / "frontier.csv").string());
  run.files.push_back("metrics.csv");
  run.files.push_back("frontier.csv");
  run.result["completed"] = r.completed;
  run.result["failures"] = r.failures;
  run.result["ci_ratio_count"] = r.ci_ratio_count;
  run.result["ci_ratio_mean"] = r.ci_ratio_mean;
  run.result["m"] = mc.mechanism.m;
  run.result["delta"] = mc.mechanism.ResolvedDelta();
  run.result["epsilon"] = mc.mechanism.ResolvedEpsilon();
  out << "replicates completed=" << r.completed << " failed=" << r.failures.size()
      << " ci_ratio_count=" << FormatDouble(r.ci_ratio_count)
      << " ci_ratio_mean=" << FormatDouble(r.ci_ratio_mean) << '\n';
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Differentially private survey tables via risk-weighted synthesis", "surveydp"};
  app.require_subcommand(1);

  struct Flags {
    std::string config_path, input, release, mechanism, output_dir;
    std::optional<int> m, replicates;
    std::optional<double> target_delta, epsilon;
    std::optional<std::uint64_t> seed;
    bool utility = false;
  } f;

  const std::vector<std::string> names = {"synthesize", "tabulate", "noise",
                                          "simulate",   "montecarlo", "riskprofile"};
  const std::vector<std::string> help = {
      "fit, tune and release m synthetic datasets",
      "build count and mean tables from a sample or a synthetic release",
      "Laplace-noised tables from a confidential sample",
      "generate the simulation population and one informative sample",
      "repeated-sampling coverage and CI-length study",
      "per-record risk weights and Lipschitz bounds"};
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < names.size(); ++i) {
    CLI::App* s = app.add_subcommand(names[i], help[i]);
    s->add_option("--config", f.config_path, "JSON config file");
    s->add_option("--seed", f.seed, "root random seed")->required();
    s->add_option("--output-dir", f.output_dir, "artifact directory");
    s->add_option("--input", f.input, "input CSV");
    s->add_option("--mechanism", f.mechanism, "fbs, fbp or laplace");
    s->add_option("--m", f.m, "number of synthetic datasets");
    s->add_option("--target-delta", f.target_delta, "target overall Lipschitz bound");
    s->add_option("--epsilon", f.epsilon, "total privacy budget");
    s->add_option("--replicates", f.replicates, "Monte Carlo replicates");
    if (names[i] == "tabulate") s->add_option("--release", f.release, "release sidecar JSON");
    if (names[i] == "simulate") s->add_flag("--utility", f.utility, "also compare mechanisms");
    subs.push_back(s);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    for (char& c : msg) {
      if (c == '\n') c = ' ';
    }
    err << "surveydp: error: " << msg << '\n';
    return e.get_exit_code() != 0 ? e.get_exit_code() : 2;
  }

  Run run;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (subs[i]->parsed()) run.command = names[i];
  }
  try {
    Json config = Defaults();
    if (!f.config_path.empty()) config.merge_patch(ReadJsonFile(f.config_path));
    if (!f.input.empty()) config["input"] = f.input;
    if (!f.release.empty()) config["release"] = f.release;
    if (!f.mechanism.empty()) config["mechanism"] = f.mechanism;
    if (f.m) config["m"] = *f.m;
    if (f.replicates) config["replicates"] = *f.replicates;
    if (f.target_delta) config["target_delta"] = *f.target_delta;
    if (f.epsilon) config["epsilon"] = *f.epsilon;
    if (f.utility) config["utility"] = true;
    run.config = config;
    run.seed = *f.seed;

    std::string dir = "surveydp_out";
    if (config.contains("output_dir") && config["output_dir"].is_string()) {
      dir = config["output_dir"].get<std::string>();
    }
    if (const char* env = std::getenv("SURVEYDP_OUTPUT_DIR"); env && *env) dir = env;
    if (!f.output_dir.empty()) dir = f.output_dir;
    run.config.erase("output_dir");
    run.dir = dir;
    fs::create_directories(run.dir);

    if (run.command == "synthesize") {
      DoSynthesize(run, out);
    } else if (run.command == "riskprofile") {
      DoRiskProfile(run, out);
    } else if (run.command == "tabulate") {
      DoTabulate(run, out);
    } else if (run.command == "noise") {
      DoNoise(run, out);
    } else if (run.command == "simulate") {
      DoSimulate(run, out, f.utility);
    } else if (run.command == "montecarlo") {
      DoMonteCarlo(run, out);
    }
    WriteManifest(run);
  } catch (const Json::exception& e) {
    err << "surveydp: error: bad config value: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& c : msg) {
      if (c == '\n') c = ' ';
    }
    err << "surveydp: error: " << msg << '\n';
    return 1;
  }
  return 0;
}

}  // namespace surveydp
