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

#include "surveydp/fbs.h"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "moments.h"
#include "surveydp/rng.h"

namespace surveydp {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

void CheckParams(const FbsParams& p) {
  if (!(p.sigma_y > 0.0) || !(p.sigma_w > 0.0) || !(std::abs(p.rho) < 1.0)) {
    throw std::invalid_argument("covariance is not positive definite");
  }
}

// log(1 - tanh(z)^2), stable for large |z|.
double LogSech2(double z) {
  const double a = std::abs(z);
  return -2.0 * (a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2);
}

double HalfTLogKernel(double x, double df, double scale) {
  const double t = x / scale;
  return -0.5 * (df + 1.0) * std::log1p(t * t / df);
}

// Marginal coefficient prior tabulated on t = log|b|. Built by trapezoid
// over v = log s of N(b | 0, e^{2v}) halfT(e^v) e^v.
class CoefPriorTable {
 public:
  static constexpr double kLo = -20.0;
  static constexpr double kHi = 20.0;
  static constexpr double kStep = 0.01;

  CoefPriorTable(double df, double scale) : df_(df), scale_(scale) {
    const int n = static_cast<int>(std::lround((kHi - kLo) / kStep)) + 1;
    values_.resize(n);
    for (int i = 0; i < n; ++i) values_[i] = Integrate(kLo + i * kStep);
  }

  double operator()(double b) const {
    const double t = std::log(std::abs(b));
    const int n = static_cast<int>(values_.size());
    if (!(t > kLo)) return values_.front();
    double pos = (t - kLo) / kStep;
    int i = static_cast<int>(pos);
    if (i >= n - 1) i = n - 2;  // linear extrapolation past the top
    const double f = pos - i;
    return values_[i] + f * (values_[i + 1] - values_[i]);
  }

 private:
  double Integrate(double t) const {
    const double log_scale = std::log(scale_);
    const double v_lo = std::min(t, log_scale) - 8.0;
    const double v_hi = std::max(t, log_scale) + 25.0;
    constexpr double h = 0.05;
    const int steps = static_cast<int>(std::ceil((v_hi - v_lo) / h));
    // log integrand; accumulate with a running max for stability.
    std::vector<double> logs(steps + 1);
    double peak = -std::numeric_limits<double>::infinity();
    for (int k = 0; k <= steps; ++k) {
      const double v = v_lo + k * (v_hi - v_lo) / steps;
      const double z = std::exp(t - v);
      logs[k] = -0.5 * kLog2Pi - v - 0.5 * z * z + HalfTLogKernel(std::exp(v), df_, scale_) + v;
      peak = std::max(peak, logs[k]);
    }
    double sum = 0.0;
    for (int k = 0; k <= steps; ++k) {
      const double w = (k == 0 || k == steps) ? 0.5 : 1.0;
      sum += w * std::exp(logs[k] - peak);
    }
    return peak + std::log(sum * (v_hi - v_lo) / steps);
  }

  double df_;
  double scale_;
  std::vector<double> values_;
};

const CoefPriorTable& PriorTable(double df, double scale) {
  static std::mutex mu;
  static std::map<std::pair<double, double>, std::unique_ptr<CoefPriorTable>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{df, scale}];
  if (!slot) slot = std::make_unique<CoefPriorTable>(df, scale);
  return *slot;
}

// Pseudo-posterior target over [beta_y, beta_w, log sigma_y, log sigma_w,
// atanh rho].
class FbsTarget : public LogDensityTarget {
 public:
  FbsTarget(const FbsModel& model, const std::vector<double>& alpha)
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
  const FbsModel& model_;
  std::vector<internal::CellMoments> moments_;
};

}  // namespace

FbsParams FbsParams::FromVector(const Eigen::VectorXd& v, int k) {
  if (v.size() != 2 * k + 3) throw std::invalid_argument("FBS parameter vector has wrong size");
  FbsParams p;
  p.beta_y = v.head(k);
  p.beta_w = v.segment(k, k);
  p.sigma_y = v(2 * k);
  p.sigma_w = v(2 * k + 1);
  p.rho = v(2 * k + 2);
  return p;
}

Eigen::VectorXd FbsParams::ToVector() const {
  const Eigen::Index k = beta_y.size();
  Eigen::VectorXd v(2 * k + 3);
  v << beta_y, beta_w, sigma_y, sigma_w, rho;
  return v;
}

double FbsLogLikelihood(const TransformedRecord& r, const Eigen::VectorXd& x,
                        const FbsParams& p, bool include_jacobian) {
  CheckParams(p);
  const double zy = (r.log_y - x.dot(p.beta_y)) / p.sigma_y;
  const double zw = (r.log_w - x.dot(p.beta_w)) / p.sigma_w;
  const double one_m = 1.0 - p.rho * p.rho;
  double ll = -kLog2Pi - std::log(p.sigma_y) - std::log(p.sigma_w) - 0.5 * std::log(one_m) -
              0.5 * (zy * zy - 2.0 * p.rho * zy * zw + zw * zw) / one_m;
  if (include_jacobian) ll -= r.log_y + r.log_w;
  return ll;
}

double FbsCoefficientLogPrior(double b, double df, double scale) {
  return PriorTable(df, scale)(b);
}

double FbsLogPrior(const FbsParams& p, const FbsPriorSpec& prior) {
  CheckParams(p);
  const auto& table = PriorTable(prior.coef_df, prior.coef_scale);
  double lp = 0.0;
  for (Eigen::Index j = 0; j < p.beta_y.size(); ++j) lp += table(p.beta_y(j)) + table(p.beta_w(j));
  lp += HalfTLogKernel(p.sigma_y, prior.sigma_df, prior.sigma_scale);
  lp += HalfTLogKernel(p.sigma_w, prior.sigma_df, prior.sigma_scale);
  // LKJ on a 2x2 correlation: (1 - rho^2)^(eta - 1).
  lp += (prior.lkj_eta - 1.0) * std::log1p(-p.rho * p.rho);
  return lp;
}

FbsModel::FbsModel(const SurveyDataset& data, FbsPriorSpec prior, FbsOptions options)
    : data_(data), prior_(prior), options_(options), k_(data.layout().num_predictors()) {
  if (!(prior.coef_df > 0 && prior.coef_scale > 0 && prior.lkj_eta > 0 && prior.sigma_df > 0 &&
        prior.sigma_scale > 0)) {
    throw std::invalid_argument("FBS prior hyperparameters must be positive");
  }
  cell_.resize(data.size());
  log_y_.resize(data.size());
  log_w_.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const TransformedRecord t = Transform(data[i]);
    cell_[i] = data.CellOf(i);
    log_y_[i] = t.log_y;
    log_w_[i] = t.log_w;
  }
  PriorTable(prior.coef_df, prior.coef_scale);
}

Eigen::VectorXd FbsModel::ToNatural(const Eigen::VectorXd& u) const {
  Eigen::VectorXd v = u;
  v(2 * k_) = std::exp(u(2 * k_));
  v(2 * k_ + 1) = std::exp(u(2 * k_ + 1));
  v(2 * k_ + 2) = std::tanh(u(2 * k_ + 2));
  return v;
}

Eigen::VectorXd FbsModel::ToUnconstrained(const Eigen::VectorXd& v) const {
  Eigen::VectorXd u = v;
  u(2 * k_) = std::log(v(2 * k_));
  u(2 * k_ + 1) = std::log(v(2 * k_ + 1));
  u(2 * k_ + 2) = std::atanh(v(2 * k_ + 2));
  return u;
}

std::vector<internal::CellMoments> FbsModel::Moments(const std::vector<double>& alpha) const {
  if (alpha.size() != cell_.size()) throw std::invalid_argument("alpha length != n");
  return internal::WeightedMoments(cell_, log_y_, log_w_, alpha, data_.layout().num_cells());
}

double FbsModel::LogDensity(const Eigen::VectorXd& u, const std::vector<double>& alpha) const {
  return LogDensity(u, Moments(alpha));
}

double FbsModel::LogDensity(const Eigen::VectorXd& u,
                            const std::vector<internal::CellMoments>& moments) const {
  const double log_sy = u(2 * k_);
  const double log_sw = u(2 * k_ + 1);
  const double z = u(2 * k_ + 2);
  const double sy = std::exp(log_sy);
  const double sw = std::exp(log_sw);
  const double rho = std::tanh(z);
  const double log_one_m = LogSech2(z);
  const double one_m = std::exp(log_one_m);
  if (!(sy > 0.0) || !(sw > 0.0) || !std::isfinite(sy) || !std::isfinite(sw) || !(one_m > 0.0)) {
    return -std::numeric_limits<double>::infinity();
  }
  const auto beta_y = u.head(k_);
  const auto beta_w = u.segment(k_, k_);

  // Likelihood through per-cell moments; x depends only on the cell.
  const Eigen::MatrixXd& design = data_.cell_design();
  double ll = 0.0;
  double total = 0.0;
  for (int c = 0; c < static_cast<int>(moments.size()); ++c) {
    const auto& m = moments[c];
    if (m.s0 == 0.0) continue;
    const double dy = m.mean_a - design.row(c).dot(beta_y);
    const double dw = m.mean_b - design.row(c).dot(beta_w);
    const double qyy = (m.saa + m.s0 * dy * dy) / (sy * sy);
    const double qww = (m.sbb + m.s0 * dw * dw) / (sw * sw);
    const double qyw = (m.sab + m.s0 * dy * dw) / (sy * sw);
    ll -= 0.5 * (qyy - 2.0 * rho * qyw + qww) / one_m;
    if (options_.include_jacobian) ll -= m.s0 * (m.mean_a + m.mean_b);
    total += m.s0;
  }
  ll -= total * (kLog2Pi + log_sy + log_sw + 0.5 * log_one_m);

  const auto& table = PriorTable(prior_.coef_df, prior_.coef_scale);
  double lp = 0.0;
  for (int j = 0; j < k_; ++j) lp += table(beta_y(j)) + table(beta_w(j));
  lp += HalfTLogKernel(sy, prior_.sigma_df, prior_.sigma_scale) + log_sy;
  lp += HalfTLogKernel(sw, prior_.sigma_df, prior_.sigma_scale) + log_sw;
  // LKJ kernel plus the tanh Jacobian.
  lp += prior_.lkj_eta * log_one_m;
  return ll + lp;
}

Eigen::VectorXd FbsModel::InitialPoint() const {
  // Least squares on the observed cells for both equations.
  const int n = static_cast<int>(cell_.size());
  Eigen::MatrixXd x(n, k_);
  Eigen::VectorXd ly(n), lw(n);
  for (int i = 0; i < n; ++i) {
    x.row(i) = data_.cell_design().row(cell_[i]);
    ly(i) = log_y_[i];
    lw(i) = log_w_[i];
  }
  const auto qr = x.colPivHouseholderQr();
  const Eigen::VectorXd by = qr.solve(ly);
  const Eigen::VectorXd bw = qr.solve(lw);
  const Eigen::VectorXd ry = ly - x * by;
  const Eigen::VectorXd rw = lw - x * bw;
  const double dof = std::max(1, n - k_);
  const double sy = std::max(1e-3, std::sqrt(ry.squaredNorm() / dof));
  const double sw = std::max(1e-3, std::sqrt(rw.squaredNorm() / dof));
  double rho = n > 1 ? ry.dot(rw) / std::sqrt(ry.squaredNorm() * rw.squaredNorm()) : 0.0;
  if (!std::isfinite(rho)) rho = 0.0;
  rho = std::clamp(rho, -0.95, 0.95);
  Eigen::VectorXd u(2 * k_ + 3);
  u << by, bw, std::log(sy), std::log(sw), std::atanh(rho);
  return u;
}

PosteriorDraws FbsModel::Fit(const std::vector<double>& alpha, const SamplerConfig& config) const {
  if (alpha.size() != cell_.size()) throw std::invalid_argument("alpha length != n");
  for (double a : alpha) {
    if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
  }
  FbsTarget target(*this, alpha);
  SamplerConfig c = config;
  bool any = false;
  for (double a : alpha) any = any || a > 0.0;
  if (!c.init) {
    if (any) {
      c.init = InitialPoint();
      c.find_mode = true;
    } else {
      // Prior only: start at a unit-scale point away from the coefficient spike.
      Eigen::VectorXd u = Eigen::VectorXd::Constant(num_params(), 1.0);
      u.tail(3).setZero();
      c.init = u;
    }
  }
  return Sample(target, c);
}

Eigen::MatrixXd FbsModel::LogLikMatrix(const PosteriorDraws& draws) const {
  const int s_count = draws.num_draws();
  const int n = static_cast<int>(cell_.size());
  const int cells = data_.layout().num_cells();
  Eigen::MatrixXd out(s_count, n);
  Eigen::VectorXd mu_y(cells), mu_w(cells);
  for (int s = 0; s < s_count; ++s) {
    const FbsParams p = FbsParams::FromVector(draws.draws.row(s).transpose(), k_);
    CheckParams(p);
    mu_y = data_.cell_design() * p.beta_y;
    mu_w = data_.cell_design() * p.beta_w;
    const double one_m = 1.0 - p.rho * p.rho;
    const double c0 =
        -kLog2Pi - std::log(p.sigma_y) - std::log(p.sigma_w) - 0.5 * std::log(one_m);
    for (int i = 0; i < n; ++i) {
      const double zy = (log_y_[i] - mu_y(cell_[i])) / p.sigma_y;
      const double zw = (log_w_[i] - mu_w(cell_[i])) / p.sigma_w;
      double ll = c0 - 0.5 * (zy * zy - 2.0 * p.rho * zy * zw + zw * zw) / one_m;
      if (options_.include_jacobian) ll -= log_y_[i] + log_w_[i];
      out(s, i) = ll;
    }
  }
  return out;
}

std::vector<double> FbsSmoothedWeights(const std::vector<double>& y_star, const FbsParams& p,
                                       const SurveyDataset& data, bool mean) {
  if (!(p.sigma_y > 0.0)) throw std::invalid_argument("sigma_y must be positive");
  if (!(std::abs(p.rho) < 1.0)) throw std::invalid_argument("|rho| must be below 1");
  if (y_star.size() != data.size()) throw std::invalid_argument("y* length != n");
  const Eigen::VectorXd mu_y = data.cell_design() * p.beta_y;
  const Eigen::VectorXd mu_w = data.cell_design() * p.beta_w;
  const double shift = mean ? 0.5 * p.sigma_w * p.sigma_w * (1.0 - p.rho * p.rho) : 0.0;
  std::vector<double> w(y_star.size());
  for (std::size_t i = 0; i < y_star.size(); ++i) {
    const int c = data.CellOf(i);
    const double lw = mu_w(c) + p.rho * (std::log(y_star[i]) - mu_y(c)) * p.sigma_w / p.sigma_y;
    w[i] = std::exp(lw + shift);
  }
  return w;
}

SyntheticRelease FbsSynthesize(const PosteriorDraws& draws, const SurveyDataset& data, int m,
                               std::uint64_t seed, bool smoothed_weight_mean) {
  const int k = data.layout().num_predictors();
  const std::vector<int> idx = SelectDrawIndices(draws.num_draws(), m);
  SyntheticRelease release;
  release.mechanism = "fbs";
  release.seed = seed;
  for (int l = 0; l < m; ++l) {
    const FbsParams p = FbsParams::FromVector(draws.draws.row(idx[l]).transpose(), k);
    CheckParams(p);
    Rng rng(seed, "fbs.synthesize", static_cast<std::uint64_t>(l));
    const Eigen::VectorXd mu_y = data.cell_design() * p.beta_y;
    const Eigen::VectorXd mu_w = data.cell_design() * p.beta_w;
    const double cond = std::sqrt(1.0 - p.rho * p.rho);
    std::vector<double> y(data.size()), w(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      const int c = data.CellOf(i);
      const double z1 = rng.Normal();
      const double z2 = rng.Normal();
      y[i] = std::exp(mu_y(c) + p.sigma_y * z1);
      w[i] = std::exp(mu_w(c) + p.sigma_w * (p.rho * z1 + cond * z2));
    }
    SyntheticSample sample;
    sample.smoothed_weights = FbsSmoothedWeights(y, p, data, smoothed_weight_mean);
    sample.data = data.WithOutcomesAndWeights(y, w);
    sample.draw_index = idx[l];
    release.samples.push_back(std::move(sample));
  }
  return release;
}

}  // namespace surveydp
