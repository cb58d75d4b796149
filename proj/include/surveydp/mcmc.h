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

#ifndef SURVEYDP_MCMC_H_
#define SURVEYDP_MCMC_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace surveydp {

// A log density on an unconstrained space. LogDensity must include the
// log-Jacobian of ToNatural. Targets built from per-record likelihoods also
// expose those contributions at natural parameters.
class LogDensityTarget {
 public:
  virtual ~LogDensityTarget() = default;

  virtual int dim() const = 0;
  virtual double LogDensity(const Eigen::VectorXd& u) const = 0;

  virtual Eigen::VectorXd ToNatural(const Eigen::VectorXd& u) const { return u; }
  virtual Eigen::VectorXd ToUnconstrained(const Eigen::VectorXd& natural) const {
    return natural;
  }

  virtual std::size_t num_records() const { return 0; }
  // Unweighted log p(y_i | theta) for every record; `out` has num_records().
  virtual void RecordLogLik(const Eigen::VectorXd& natural, Eigen::VectorXd& out) const;
};

// Wraps a lambda; identity constraint map, no records.
class FunctionTarget : public LogDensityTarget {
 public:
  FunctionTarget(int dim, std::function<double(const Eigen::VectorXd&)> f)
      : dim_(dim), f_(std::move(f)) {}
  int dim() const override { return dim_; }
  double LogDensity(const Eigen::VectorXd& u) const override { return f_(u); }

 private:
  int dim_;
  std::function<double(const Eigen::VectorXd&)> f_;
};

struct SamplerConfig {
  int chains = 2;
  int warmup = 5000;
  int keep = 2000;
  int thin = 1;
  std::uint64_t seed = 0;
  // Unconstrained starting point; defaults to zeros.
  std::optional<Eigen::VectorXd> init;
  // Starting proposal covariance; defaults to identity, or the inverse
  // negative Hessian at the mode when find_mode is set.
  std::optional<Eigen::MatrixXd> init_cov;
  // Multiplier on the proposal; 2.38/sqrt(dim) when unset.
  std::optional<double> proposal_scale;
  // Start from a damped-Newton mode search instead of `init` directly.
  bool find_mode = false;
  double target_accept = 0.234;
  bool parallel_chains = false;
};

struct PosteriorDraws {
  // (chains*keep) x dim, chain-major, natural parameterization.
  Eigen::MatrixXd draws;
  // Same rows on the unconstrained scale.
  Eigen::MatrixXd unconstrained;
  double acceptance_rate = 0.0;
  std::uint64_t seed = 0;
  int warmup = 0;
  int thin = 1;
  int chains = 1;

  int num_draws() const { return static_cast<int>(draws.rows()); }
  int per_chain() const { return chains > 0 ? num_draws() / chains : 0; }
  int dim() const { return static_cast<int>(draws.cols()); }
};

class SamplerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

PosteriorDraws Sample(const LogDensityTarget& target, const SamplerConfig& config);

struct Mode {
  Eigen::VectorXd u;
  double log_density = 0.0;
  // Inverse of the negative Hessian when it is positive definite.
  std::optional<Eigen::MatrixXd> covariance;
};

// Damped Newton with finite-difference derivatives.
Mode FindMode(const LogDensityTarget& target, const Eigen::VectorXd& init,
              int max_iter = 100);

// Central-difference Hessian.
Eigen::MatrixXd NumericHessian(const LogDensityTarget& target, const Eigen::VectorXd& u);

// Initial positive sequence estimator on per-chain autocovariances averaged
// across chains. Capped at the total draw count. Throws on zero variance.
double EffectiveSampleSize(const std::vector<std::vector<double>>& chains);
double EffectiveSampleSize(const PosteriorDraws& draws, int coordinate);
// Monte Carlo standard error of the posterior mean.
double Mcse(const PosteriorDraws& draws, int coordinate);

// Diagnostics CSV: coordinate, mean, sd, ess, mcse.
void WriteDiagnosticsCsv(const PosteriorDraws& draws, const std::string& path);

}  // namespace surveydp

#endif  // SURVEYDP_MCMC_H_
