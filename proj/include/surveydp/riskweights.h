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

#ifndef SURVEYDP_RISKWEIGHTS_H_
#define SURVEYDP_RISKWEIGHTS_H_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "surveydp/mcmc.h"

namespace surveydp {

// Per-record max over draws of |log p(y_i | theta_s)|. Any -inf entry makes
// the record's bound +inf. `loglik` is S x n.
std::vector<double> RecordLipschitz(const Eigen::MatrixXd& loglik);

// alpha_i = (1/delta_i) / max_j (1/delta_j); zero where delta is infinite.
std::vector<double> ComputeAlpha(const std::vector<double>& delta);

// clamp(c1*alpha + c2, 0, 1), keeping alpha == 0 records at zero.
std::vector<double> ScaleShift(const std::vector<double>& alpha, double c1, double c2);

// max_s |alpha_i * loglik(s, i)| per record; zero-weight records give 0 even
// when their likelihood is unbounded.
std::vector<double> WeightedLipschitz(const std::vector<double>& alpha,
                                      const Eigen::MatrixXd& loglik);

struct PrivacyAccount {
  double delta_alpha = 0.0;
  int m = 1;
  double epsilon = 0.0;
};

PrivacyAccount Epsilon(double delta, int m);

struct RiskProfile {
  std::vector<double> alpha;       // inverse-risk weights before scaling
  std::vector<double> alpha_star;  // after scale/shift; these are used
  std::vector<double> record_lipschitz_unweighted;
  std::vector<double> record_lipschitz_weighted;
  double overall_lipschitz = 0.0;
  // Max of the finite unweighted record bounds.
  double overall_unweighted = 0.0;
  double c1 = 1.0;
  double c2 = 0.0;
};

// Columns: record, delta_unweighted, alpha, alpha_star, delta_weighted.
void WriteRiskProfileCsv(const RiskProfile& profile, const std::string& path);

// Anything that can fit an alpha-weighted pseudo posterior and report the
// per-record log-likelihoods the weights are built from.
class PseudoPosteriorModel {
 public:
  virtual ~PseudoPosteriorModel() = default;
  virtual std::size_t num_records() const = 0;
  virtual PosteriorDraws Fit(const std::vector<double>& alpha,
                             const SamplerConfig& config) const = 0;
  // S x n unweighted log-likelihood matrix.
  virtual Eigen::MatrixXd LogLikMatrix(const PosteriorDraws& draws) const = 0;
};

struct TuneOptions {
  double c2 = 0.0;
  int max_evaluations = 60;
  SamplerConfig sampler;
};

struct TuneResult {
  RiskProfile profile;
  PosteriorDraws unweighted_draws;
  PosteriorDraws draws;  // pseudo posterior at the returned (c1, c2)
  int evaluations = 0;
};

class TuningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unweighted fit, inverse-risk alpha, then a bracketed search on c1 (c2 fixed) until
// the overall weighted Lipschitz bound lands in [target - tol, target].
TuneResult TuneToTarget(const PseudoPosteriorModel& model, double target_delta, double tol,
                        const TuneOptions& options);

// One pass at fixed (c1, c2): the profile the pipeline uses when the caller
// supplies the scaling directly.
TuneResult ProfileAt(const PseudoPosteriorModel& model, double c1, double c2,
                     const SamplerConfig& sampler);

}  // namespace surveydp

#endif  // SURVEYDP_RISKWEIGHTS_H_
