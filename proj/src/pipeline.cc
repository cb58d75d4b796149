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

#include "surveydp/pipeline.h"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "surveydp/laplace.h"
#include "surveydp/rng.h"

namespace surveydp {

Mechanism ParseMechanism(const std::string& name) {
  if (name == "fbs") return Mechanism::kFbs;
  if (name == "fbp") return Mechanism::kFbp;
  if (name == "laplace") return Mechanism::kLaplace;
  throw std::invalid_argument("unknown mechanism '" + name + "' (expected fbs, fbp or laplace)");
}

std::string MechanismName(Mechanism mechanism) {
  switch (mechanism) {
    case Mechanism::kFbs:
      return "fbs";
    case Mechanism::kFbp:
      return "fbp";
    case Mechanism::kLaplace:
      return "laplace";
  }
  return "unknown";
}

double MechanismConfig::ResolvedDelta() const {
  if (target_delta.has_value() == epsilon.has_value()) {
    throw std::invalid_argument("give exactly one of target_delta and epsilon");
  }
  if (m < 1) throw std::invalid_argument("m must be >= 1");
  return target_delta ? *target_delta : *epsilon / (2.0 * m);
}

double MechanismConfig::ResolvedEpsilon() const {
  if (target_delta.has_value() == epsilon.has_value()) {
    throw std::invalid_argument("give exactly one of target_delta and epsilon");
  }
  return epsilon ? *epsilon : 2.0 * *target_delta * m;
}

namespace {

std::unique_ptr<PseudoPosteriorModel> MakeModel(Mechanism mechanism, const SurveyDataset& data,
                                                const MechanismConfig& config) {
  if (mechanism == Mechanism::kFbs) {
    return std::make_unique<FbsModel>(data, config.fbs_prior, config.fbs);
  }
  if (mechanism == Mechanism::kFbp) return std::make_unique<FbpModel>(data, config.fbp_prior, config.fbp);
  throw std::invalid_argument("laplace has no pseudo posterior model");
}

}  // namespace

TuneResult RunRiskProfile(Mechanism mechanism, const SurveyDataset& data,
                          const MechanismConfig& config, std::uint64_t seed) {
  auto model = MakeModel(mechanism, data, config);
  TuneOptions opts;
  opts.c2 = config.c2;
  opts.max_evaluations = config.max_tune_evaluations;
  opts.sampler = config.sampler;
  opts.sampler.seed = DeriveSeed(seed, "pipeline.mcmc", static_cast<std::uint64_t>(mechanism));
  return TuneToTarget(*model, config.ResolvedDelta(), config.tolerance, opts);
}

MechanismOutput RunMechanism(Mechanism mechanism, const SurveyDataset& data,
                             const MechanismConfig& config, std::uint64_t seed) {
  MechanismOutput out;
  out.mechanism = mechanism;
  if (mechanism == Mechanism::kLaplace) {
    const double eps = config.ResolvedEpsilon();
    out.tables = LaplaceRelease(data, eps, config.laplace_replicates,
                                DeriveSeed(seed, "pipeline.laplace"));
    out.account.epsilon = eps;
    out.account.m = 1;
    out.account.delta_alpha = 0.0;
    return out;
  }
  TuneResult tune = RunRiskProfile(mechanism, data, config, seed);
  out.account = Epsilon(tune.profile.overall_lipschitz, config.m);
  const std::uint64_t synth_seed = DeriveSeed(seed, "pipeline.synthesize");
  SyntheticRelease release =
      mechanism == Mechanism::kFbs
          ? FbsSynthesize(tune.draws, data, config.m, synth_seed, config.fbs.smoothed_weight_mean)
          : FbpSynthesize(tune.draws, data, config.m, synth_seed, config.fbp_normalization);
  release.account = out.account;
  release.c1 = tune.profile.c1;
  release.c2 = tune.profile.c2;
  out.tables = BuildReleaseTables(
      release, mechanism == Mechanism::kFbs ? TableMode::kWeighted : TableMode::kFbp,
      config.smoothed_tables);
  out.tune = std::move(tune);
  out.release = std::move(release);
  return out;
}

}  // namespace surveydp
