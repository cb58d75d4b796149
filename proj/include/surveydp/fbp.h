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

#ifndef SURVEYDP_FBP_H_
#define SURVEYDP_FBP_H_

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "surveydp/data.h"
#include "surveydp/mcmc.h"
#include "surveydp/release.h"
#include "surveydp/riskweights.h"

namespace surveydp {

namespace internal {
struct CellMoments;
}

struct FbpParams {
  Eigen::VectorXd beta;
  double sigma_y = 1.0;
  double kappa_y = 0.0;
  Eigen::VectorXd kappa_x;
  double sigma_pi = 1.0;

  // Natural vector layout: [beta, sigma_y, kappa_y, kappa_x, sigma_pi].
  static FbpParams FromVector(const Eigen::VectorXd& v, int k);
  Eigen::VectorXd ToVector() const;
};

struct FbpPriorSpec {
  double coef_variance = 100.0;
  double sigma_y_scale = 1.0;   // half-Cauchy
  double sigma_pi_scale = 1.0;  // half-Cauchy
};

// Log density of the observed (log y, pi) pair under the population model
// corrected for selection: a density in (log y, pi), not (log y, log pi).
double FbpSampleLogDensity(const SurveyRecord& record, const Eigen::VectorXd& x,
                           const FbpParams& params);

double FbpLogPrior(const FbpParams& params, const FbpPriorSpec& prior);

// How synthetic weights c/pi are scaled.
enum class WeightNormalization {
  kStratum,  // match each stratum's observed weight total
  kGrand,    // match the overall observed weight total
};

struct FbpOptions {
  // Per-record log-likelihoods handed to the risk computation are densities
  // in (log y, log pi), i.e. FbpSampleLogDensity + log pi. The (log y, pi)
  // form shifts by -log c when pi is rescaled by c, so alpha would depend on
  // the arbitrary units of pi. Off gives the (log y, pi) form.
  bool log_pi_risk = true;
};

class FbpModel : public PseudoPosteriorModel {
 public:
  explicit FbpModel(const SurveyDataset& data, FbpPriorSpec prior = {}, FbpOptions options = {});

  std::size_t num_records() const override { return cell_.size(); }
  int num_params() const { return 2 * k_ + 3; }

  double LogDensity(const Eigen::VectorXd& u, const std::vector<double>& alpha) const;
  double LogDensity(const Eigen::VectorXd& u,
                    const std::vector<internal::CellMoments>& moments) const;
  // alpha-weighted per-cell moments of (log pi, log y).
  std::vector<internal::CellMoments> Moments(const std::vector<double>& alpha) const;
  Eigen::VectorXd ToNatural(const Eigen::VectorXd& u) const;
  Eigen::VectorXd ToUnconstrained(const Eigen::VectorXd& natural) const;
  Eigen::VectorXd InitialPoint() const;

  PosteriorDraws Fit(const std::vector<double>& alpha,
                     const SamplerConfig& config) const override;
  Eigen::MatrixXd LogLikMatrix(const PosteriorDraws& draws) const override;

  const SurveyDataset& data() const { return data_; }

 private:
  SurveyDataset data_;
  FbpPriorSpec prior_;
  FbpOptions options_;
  int k_;
  std::vector<int> cell_;
  std::vector<double> log_y_;
  std::vector<double> log_pi_;
};

// Scales w_i = 1/pi_i (given as log pi) to the observed totals.
std::vector<double> NormalizeWeights(const std::vector<double>& log_pi,
                                     const SurveyDataset& data, WeightNormalization rule);

// pi~ = exp(kappa_y log y*), normalized like the synthetic weights.
std::vector<double> FbpSmoothedWeights(const std::vector<double>& y_star,
                                       const FbpParams& params, const SurveyDataset& data,
                                       WeightNormalization rule = WeightNormalization::kStratum);

SyntheticRelease FbpSynthesize(const PosteriorDraws& draws, const SurveyDataset& data, int m,
                               std::uint64_t seed,
                               WeightNormalization rule = WeightNormalization::kStratum);

}  // namespace surveydp

#endif  // SURVEYDP_FBP_H_
