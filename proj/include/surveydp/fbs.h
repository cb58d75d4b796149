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

#ifndef SURVEYDP_FBS_H_
#define SURVEYDP_FBS_H_

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

struct FbsParams {
  Eigen::VectorXd beta_y;
  Eigen::VectorXd beta_w;
  double sigma_y = 1.0;
  double sigma_w = 1.0;
  double rho = 0.0;

  // Natural vector layout: [beta_y, beta_w, sigma_y, sigma_w, rho].
  static FbsParams FromVector(const Eigen::VectorXd& v, int k);
  Eigen::VectorXd ToVector() const;
};

struct FbsPriorSpec {
  // Coefficients: zero-mean normal whose scale carries a half-t(df, scale)
  // hyperprior; the scale is integrated out.
  double coef_df = 3.0;
  double coef_scale = 10.0;
  // Correlation-matrix shape.
  double lkj_eta = 6.0;
  double sigma_df = 3.0;
  double sigma_scale = 10.0;
};

// Bivariate normal log density of (log y, log w). With include_jacobian the
// density refers to (y, w) on the original scale.
double FbsLogLikelihood(const TransformedRecord& record, const Eigen::VectorXd& x,
                        const FbsParams& params, bool include_jacobian = true);

// log of the marginal coefficient prior, int N(b | 0, s^2) halfT(s) ds, up
// to an additive constant.
double FbsCoefficientLogPrior(double b, double df, double scale);

double FbsLogPrior(const FbsParams& params, const FbsPriorSpec& prior);

struct FbsOptions {
  // Whether risk and the pseudo likelihood use the original-scale density.
  bool include_jacobian = false;
  // Smoothed weights as the lognormal conditional mean E[w | y*] rather than
  // exp(E[log w | y*]); the latter runs low by exp(sigma_w^2 (1 - rho^2) / 2)
  // and biases every weighted count by the same factor.
  bool smoothed_weight_mean = true;
};

class FbsModel : public PseudoPosteriorModel {
 public:
  FbsModel(const SurveyDataset& data, FbsPriorSpec prior = {}, FbsOptions options = {});

  std::size_t num_records() const override { return cell_.size(); }
  int num_params() const { return 2 * k_ + 3; }

  // Log pseudo-posterior on the unconstrained scale (log-Jacobians included).
  double LogDensity(const Eigen::VectorXd& u, const std::vector<double>& alpha) const;
  double LogDensity(const Eigen::VectorXd& u,
                    const std::vector<internal::CellMoments>& moments) const;
  // alpha-weighted per-cell moments of (log y, log w).
  std::vector<internal::CellMoments> Moments(const std::vector<double>& alpha) const;
  Eigen::VectorXd ToNatural(const Eigen::VectorXd& u) const;
  Eigen::VectorXd ToUnconstrained(const Eigen::VectorXd& natural) const;
  // Least-squares start on the unconstrained scale.
  Eigen::VectorXd InitialPoint() const;

  PosteriorDraws Fit(const std::vector<double>& alpha,
                     const SamplerConfig& config) const override;
  Eigen::MatrixXd LogLikMatrix(const PosteriorDraws& draws) const override;

  const SurveyDataset& data() const { return data_; }
  const FbsPriorSpec& prior() const { return prior_; }

 private:
  SurveyDataset data_;
  FbsPriorSpec prior_;
  FbsOptions options_;
  int k_;
  std::vector<int> cell_;
  std::vector<double> log_y_;
  std::vector<double> log_w_;
};

// w~* = x beta_w + rho (y~* - x beta_y) sigma_w / sigma_y, returned as exp,
// plus sigma_w^2 (1 - rho^2) / 2 on the log scale when `mean` is set.
std::vector<double> FbsSmoothedWeights(const std::vector<double>& y_star,
                                       const FbsParams& params, const SurveyDataset& data,
                                       bool mean = true);

// One synthetic dataset per selected draw; X is copied through.
SyntheticRelease FbsSynthesize(const PosteriorDraws& draws, const SurveyDataset& data, int m,
                               std::uint64_t seed, bool smoothed_weight_mean = true);

}  // namespace surveydp

#endif  // SURVEYDP_FBS_H_
