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

#include "surveydp/fbp.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "moments.h"
#include "surveydp/rng.h"

namespace surveydp {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274;

void CheckParams(const FbpParams& p) {
  if (!(p.sigma_y > 0.0) || !(p.sigma_pi > 0.0)) {
    throw std::invalid_argument("FBP scales must be positive");
  }
}

// Log of E(pi | x) under the population model.
double LogMeanPi(double a, double b, const FbpParams& p) {
  return a + 0.5 * p.sigma_pi * p.sigma_pi + p.kappa_y * b +
         0.5 * p.kappa_y * p.kappa_y * p.sigma_y * p.sigma_y;
}

double HalfCauchyLogKernel(double x, double scale) {
  const double t = x / scale;
  return -std::log1p(t * t);
}

class FbpTarget : public LogDensityTarget {
 public:
  FbpTarget(const FbpModel& model, const std::vector<double>& alpha)
      : model_(model), moments_(model.Moments(alpha)) {}
  int dim() const override { return model_.num_params(); }
  double LogDensity(const Eigen::VectorXd& u) const override {
    return model_.LogDensity(u, moments_);
  }
  Eigen::VectorXd ToNatural(const Eigen::VectorXd& u) const override {
    return model_.ToNatural(u);
  }
  Eigen::VectorXd ToUnconstrained(const Eigen::VectorXd& v) const override {
    return model_.ToUnconstrained(v);
  }

 private:
  const FbpModel& model_;
  std::vector<internal::CellMoments> moments_;
};

}  // namespace

FbpParams FbpParams::FromVector(const Eigen::VectorXd& v, int k) {
  if (v.size() != 2 * k + 3) throw std::invalid_argument("FBP parameter vector has wrong size");
  FbpParams p;
  p.beta = v.head(k);
  p.sigma_y = v(k);
  p.kappa_y = v(k + 1);
  p.kappa_x = v.segment(k + 2, k);
  p.sigma_pi = v(2 * k + 2);
  return p;
}

Eigen::VectorXd FbpParams::ToVector() const {
  const Eigen::Index k = beta.size();
  Eigen::VectorXd v(2 * k + 3);
  v << beta, sigma_y, kappa_y, kappa_x, sigma_pi;
  return v;
}

double FbpSampleLogDensity(const SurveyRecord& r, const Eigen::VectorXd& x, const FbpParams& p) {
  if (!(r.pi > 0.0 && r.pi <= 1.0)) throw std::invalid_argument("pi must lie in (0, 1]");
  if (!(r.y > 0.0)) throw std::invalid_argument("y must be positive");
  CheckParams(p);
  const double ly = std::log(r.y);
  const double lpi = std::log(r.pi);
  const double a = x.dot(p.kappa_x);
  const double b = x.dot(p.beta);
  const double zp = (lpi - p.kappa_y * ly - a) / p.sigma_pi;
  const double zy = (ly - b) / p.sigma_y;
  const double v = -kLogSqrt2Pi - std::log(p.sigma_pi) - 0.5 * zp * zp - LogMeanPi(a, b, p) -
                   kLogSqrt2Pi - std::log(p.sigma_y) - 0.5 * zy * zy;
  if (!std::isfinite(v)) throw std::domain_error("non-finite sample log density");
  return v;
}

double FbpLogPrior(const FbpParams& p, const FbpPriorSpec& prior) {
  CheckParams(p);
  const double inv = 0.5 / prior.coef_variance;
  double lp = -inv * (p.beta.squaredNorm() + p.kappa_x.squaredNorm() + p.kappa_y * p.kappa_y);
  lp += HalfCauchyLogKernel(p.sigma_y, prior.sigma_y_scale);
  lp += HalfCauchyLogKernel(p.sigma_pi, prior.sigma_pi_scale);
  return lp;
}

FbpModel::FbpModel(const SurveyDataset& data, FbpPriorSpec prior, FbpOptions options)
    : data_(data), prior_(prior), options_(options), k_(data.layout().num_predictors()) {
  if (!(prior.coef_variance > 0 && prior.sigma_y_scale > 0 && prior.sigma_pi_scale > 0)) {
    throw std::invalid_argument("FBP prior hyperparameters must be positive");
  }
  cell_.resize(data.size());
  log_y_.resize(data.size());
  log_pi_.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    cell_[i] = data.CellOf(i);
    log_y_[i] = std::log(data[i].y);
    log_pi_[i] = std::log(data[i].pi);
  }
}

std::vector<internal::CellMoments> FbpModel::Moments(const std::vector<double>& alpha) const {
  if (alpha.size() != cell_.size()) throw std::invalid_argument("alpha length != n");
  return internal::WeightedMoments(cell_, log_pi_, log_y_, alpha, data_.layout().num_cells());
}

Eigen::VectorXd FbpModel::ToNatural(const Eigen::VectorXd& u) const {
  Eigen::VectorXd v = u;
  v(k_) = std::exp(u(k_));
  v(2 * k_ + 2) = std::exp(u(2 * k_ + 2));
  return v;
}

Eigen::VectorXd FbpModel::ToUnconstrained(const Eigen::VectorXd& v) const {
  Eigen::VectorXd u = v;
  u(k_) = std::log(v(k_));
  u(2 * k_ + 2) = std::log(v(2 * k_ + 2));
  return u;
}

double FbpModel::LogDensity(const Eigen::VectorXd& u, const std::vector<double>& alpha) const {
  return LogDensity(u, Moments(alpha));
}

double FbpModel::LogDensity(const Eigen::VectorXd& u,
                            const std::vector<internal::CellMoments>& moments) const {
  const double log_sy = u(k_);
  const double log_sp = u(2 * k_ + 2);
  const double sy = std::exp(log_sy);
  const double sp = std::exp(log_sp);
  if (!(sy > 0.0) || !(sp > 0.0) || !std::isfinite(sy) || !std::isfinite(sp)) {
    return -std::numeric_limits<double>::infinity();
  }
  FbpParams p;
  p.sigma_y = sy;
  p.sigma_pi = sp;
  p.kappa_y = u(k_ + 1);
  const auto beta = u.head(k_);
  const auto kappa_x = u.segment(k_ + 2, k_);
  const Eigen::MatrixXd& design = data_.cell_design();

  double ll = 0.0;
  double total = 0.0;
  for (int c = 0; c < static_cast<int>(moments.size()); ++c) {
    const auto& m = moments[c];  // a = log pi, b = log y
    if (m.s0 == 0.0) continue;
    const double a = design.row(c).dot(kappa_x);
    const double b = design.row(c).dot(beta);
    const double kp = p.kappa_y;
    const double rp = m.mean_a - kp * m.mean_b - a;
    const double sel = m.saa - 2.0 * kp * m.sab + kp * kp * m.sbb + m.s0 * rp * rp;
    const double ry = m.mean_b - b;
    const double out = m.sbb + m.s0 * ry * ry;
    ll -= 0.5 * sel / (sp * sp) + 0.5 * out / (sy * sy) + m.s0 * LogMeanPi(a, b, p);
    total += m.s0;
  }
  ll -= total * (2.0 * kLogSqrt2Pi + log_sy + log_sp);

  const double inv = 0.5 / prior_.coef_variance;
  double lp = -inv * (beta.squaredNorm() + kappa_x.squaredNorm() + p.kappa_y * p.kappa_y);
  lp += HalfCauchyLogKernel(sy, prior_.sigma_y_scale) + log_sy;
  lp += HalfCauchyLogKernel(sp, prior_.sigma_pi_scale) + log_sp;
  return ll + lp;
}

Eigen::VectorXd FbpModel::InitialPoint() const {
  // Outcome regression, then log pi on (log y, x).
  const int n = static_cast<int>(cell_.size());
  Eigen::MatrixXd x(n, k_);
  Eigen::MatrixXd xz(n, k_ + 1);
  Eigen::VectorXd ly(n), lp(n);
  for (int i = 0; i < n; ++i) {
    x.row(i) = data_.cell_design().row(cell_[i]);
    xz(i, 0) = log_y_[i];
    xz.row(i).tail(k_) = x.row(i);
    ly(i) = log_y_[i];
    lp(i) = log_pi_[i];
  }
  const Eigen::VectorXd beta = x.colPivHouseholderQr().solve(ly);
  const Eigen::VectorXd gamma = xz.colPivHouseholderQr().solve(lp);
  const double sy = std::max(1e-3, std::sqrt((ly - x * beta).squaredNorm() / std::max(1, n - k_)));
  const double sp =
      std::max(1e-3, std::sqrt((lp - xz * gamma).squaredNorm() / std::max(1, n - k_ - 1)));
  Eigen::VectorXd u(2 * k_ + 3);
  u << beta, std::log(sy), gamma(0), gamma.tail(k_), std::log(sp);
  if (!u.allFinite()) u.setZero();
  return u;
}

PosteriorDraws FbpModel::Fit(const std::vector<double>& alpha, const SamplerConfig& config) const {
  if (alpha.size() != cell_.size()) throw std::invalid_argument("alpha length != n");
  for (double a : alpha) {
    if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
  }
  FbpTarget target(*this, alpha);
  SamplerConfig c = config;
  if (!c.init) {
    c.init = InitialPoint();
    c.find_mode = true;
  }
  return Sample(target, c);
}

Eigen::MatrixXd FbpModel::LogLikMatrix(const PosteriorDraws& draws) const {
  const int s_count = draws.num_draws();
  const int n = static_cast<int>(cell_.size());
  Eigen::MatrixXd out(s_count, n);
  for (int s = 0; s < s_count; ++s) {
    const FbpParams p = FbpParams::FromVector(draws.draws.row(s).transpose(), k_);
    CheckParams(p);
    const Eigen::VectorXd a = data_.cell_design() * p.kappa_x;
    const Eigen::VectorXd b = data_.cell_design() * p.beta;
    const double c0 = -2.0 * kLogSqrt2Pi - std::log(p.sigma_pi) - std::log(p.sigma_y);
    for (int i = 0; i < n; ++i) {
      const int c = cell_[i];
      const double zp = (log_pi_[i] - p.kappa_y * log_y_[i] - a(c)) / p.sigma_pi;
      const double zy = (log_y_[i] - b(c)) / p.sigma_y;
      out(s, i) = c0 - 0.5 * zp * zp - 0.5 * zy * zy - LogMeanPi(a(c), b(c), p);
      if (options_.log_pi_risk) out(s, i) += log_pi_[i];
    }
  }
  return out;
}

std::vector<double> NormalizeWeights(const std::vector<double>& log_pi, const SurveyDataset& data,
                                     WeightNormalization rule) {
  if (log_pi.size() != data.size()) throw std::invalid_argument("length != n");
  auto group = [&](std::size_t i) {
    return rule == WeightNormalization::kStratum ? data[i].stratum : 0;
  };
  // Work with -log pi relative to a per-group max to avoid overflow.
  std::map<int, double> peak, target, mass;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int h = group(i);
    auto it = peak.find(h);
    if (it == peak.end()) {
      peak[h] = -log_pi[i];
    } else {
      it->second = std::max(it->second, -log_pi[i]);
    }
    target[h] += data[i].weight;
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int h = group(i);
    mass[h] += std::exp(-log_pi[i] - peak[h]);
  }
  std::vector<double> w(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int h = group(i);
    if (!(target[h] > 0.0)) throw std::invalid_argument("stratum with zero observed weight total");
    w[i] = target[h] * std::exp(-log_pi[i] - peak[h]) / mass[h];
  }
  return w;
}

std::vector<double> FbpSmoothedWeights(const std::vector<double>& y_star, const FbpParams& p,
                                       const SurveyDataset& data, WeightNormalization rule) {
  CheckParams(p);
  if (y_star.size() != data.size()) throw std::invalid_argument("y* length != n");
  std::vector<double> log_pi(y_star.size());
  for (std::size_t i = 0; i < y_star.size(); ++i) log_pi[i] = p.kappa_y * std::log(y_star[i]);
  return NormalizeWeights(log_pi, data, rule);
}

SyntheticRelease FbpSynthesize(const PosteriorDraws& draws, const SurveyDataset& data, int m,
                               std::uint64_t seed, WeightNormalization rule) {
  const int k = data.layout().num_predictors();
  const std::vector<int> idx = SelectDrawIndices(draws.num_draws(), m);
  SyntheticRelease release;
  release.mechanism = "fbp";
  release.seed = seed;
  for (int l = 0; l < m; ++l) {
    const FbpParams p = FbpParams::FromVector(draws.draws.row(idx[l]).transpose(), k);
    CheckParams(p);
    Rng rng(seed, "fbp.synthesize", static_cast<std::uint64_t>(l));
    const Eigen::VectorXd a = data.cell_design() * p.kappa_x;
    const Eigen::VectorXd b = data.cell_design() * p.beta;
    std::vector<double> y(data.size()), log_pi(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      const int c = data.CellOf(i);
      const double ly = b(c) + p.sigma_y * rng.Normal();
      y[i] = std::exp(ly);
      log_pi[i] = p.kappa_y * ly + a(c) + p.sigma_pi * rng.Normal();
    }
    SyntheticSample sample;
    sample.smoothed_weights = FbpSmoothedWeights(y, p, data, rule);
    sample.data = data.WithOutcomesAndWeights(y, NormalizeWeights(log_pi, data, rule));
    sample.draw_index = idx[l];
    release.samples.push_back(std::move(sample));
  }
  return release;
}

}  // namespace surveydp
