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

#ifndef SURVEYDP_PIPELINE_H_
#define SURVEYDP_PIPELINE_H_

#include <cstdint>
#include <optional>
#include <string>

#include "surveydp/data.h"
#include "surveydp/fbp.h"
#include "surveydp/fbs.h"
#include "surveydp/mcmc.h"
#include "surveydp/release.h"
#include "surveydp/riskweights.h"
#include "surveydp/tabulate.h"

namespace surveydp {

enum class Mechanism { kFbs, kFbp, kLaplace };

Mechanism ParseMechanism(const std::string& name);
std::string MechanismName(Mechanism mechanism);

struct MechanismConfig {
  int m = 3;
  // Exactly one of these; the other follows from epsilon = 2 delta m.
  std::optional<double> target_delta;
  std::optional<double> epsilon;
  double tolerance = 0.05;
  double c2 = 0.0;
  int max_tune_evaluations = 60;
  SamplerConfig sampler;
  FbsPriorSpec fbs_prior;
  FbsOptions fbs;
  FbpPriorSpec fbp_prior;
  FbpOptions fbp;
  WeightNormalization fbp_normalization = WeightNormalization::kStratum;
  bool smoothed_tables = true;
  int laplace_replicates = 10;

  // Resolves the (delta, epsilon) pair; throws if both or neither are set.
  double ResolvedDelta() const;
  double ResolvedEpsilon() const;
};

struct MechanismOutput {
  Mechanism mechanism = Mechanism::kFbs;
  TablePair tables;
  PrivacyAccount account;
  std::optional<TuneResult> tune;
  std::optional<SyntheticRelease> release;
};

// Tune, synthesize and tabulate (synthesizers) or noise (Laplace). Every
// random stream is derived from `seed`.
MechanismOutput RunMechanism(Mechanism mechanism, const SurveyDataset& data,
                             const MechanismConfig& config, std::uint64_t seed);

// Tuned risk profile only, no synthesis.
TuneResult RunRiskProfile(Mechanism mechanism, const SurveyDataset& data,
                          const MechanismConfig& config, std::uint64_t seed);

}  // namespace surveydp

#endif  // SURVEYDP_PIPELINE_H_
