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

#include "surveydp/mcmc.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>

#include "surveydp/format.h"
#include "surveydp/rng.h"

namespace surveydp {

void LogDensityTarget::RecordLogLik(const Eigen::VectorXd&, Eigen::VectorXd& out) const {
  out.resize(0);
}

namespace {

constexpr int kWindows = 4;

struct ChainResult {
  Eigen::MatrixXd kept;  // keep x dim, unconstrained
  long accepted = 0;
  long proposed = 0;
};

Eigen::MatrixXd Cholesky(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("proposal covariance is not positive definite");
  }
  return llt.matrixL();
}

// Empirical covariance of a warmup window, regularized toward a small
// multiple of the identity so a short window cannot collapse the proposal.
Eigen::MatrixXd WindowCovariance(const std::vector<Eigen::VectorXd>& xs, bool diagonal) {
  const int d = static_cast<int>(xs.front().size());
  const double n = static_cast<double>(xs.size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (const auto& x : xs) mean += x;
  mean /= n;
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d, d);
  for (const auto& x : xs) {
    const Eigen::VectorXd dx = x - mean;
    c.noalias() += dx * dx.transpose();
  }
  c /= (n - 1.0);
  if (diagonal) c = Eigen::MatrixXd(c.diagonal().asDiagonal());
  c = (n / (n + 5.0)) * c;
  c.diagonal().array() += 1e-3 * 5.0 / (n + 5.0);
  return c;
}

ChainResult RunChain(const LogDensityTarget& target, const SamplerConfig& config, int chain,
                     const Eigen::VectorXd& init, const Eigen::MatrixXd& init_cov,
                     double scale) {
  const int d = target.dim();
  Rng rng(config.seed, "mcmc.chain", static_cast<std::uint64_t>(chain));
  Eigen::VectorXd u = init;
  double lp = target.LogDensity(u);
  Eigen::MatrixXd chol = Cholesky(init_cov);
  const double base_log_scale = std::log(scale);
  double log_scale = base_log_scale;

  Eigen::VectorXd z(d), proposal(d);
  auto step = [&](bool adapt, long t, long& accepted) {
    for (int k = 0; k < d; ++k) z(k) = rng.Normal();
    proposal.noalias() = u + std::exp(log_scale) * (chol * z);
    const double lp_new = target.LogDensity(proposal);
    double accept_prob = 0.0;
    if (std::isfinite(lp_new)) accept_prob = std::min(1.0, std::exp(lp_new - lp));
    if (rng.Uniform() < accept_prob) {
      u = proposal;
      lp = lp_new;
      ++accepted;
    }
    if (adapt) {
      // Robbins-Monro on the log scale toward the target acceptance.
      const double gamma = std::pow(static_cast<double>(t + 1), -0.6);
      log_scale += gamma * (accept_prob - config.target_accept);
      log_scale = std::clamp(log_scale, base_log_scale - 15.0, base_log_scale + 15.0);
    }
  };

  ChainResult result;
  if (config.warmup > 0) {
    std::vector<long> bounds(kWindows + 1);
    for (int w = 0; w <= kWindows; ++w) {
      bounds[w] = static_cast<long>(config.warmup) * w / kWindows;
    }
    std::vector<Eigen::VectorXd> window;
    for (int w = 0; w < kWindows; ++w) {
      const long len = bounds[w + 1] - bounds[w];
      if (len == 0) continue;
      window.clear();
      window.reserve(len);
      long accepted = 0;
      for (long t = 0; t < len; ++t) {
        step(true, t, accepted);
        window.push_back(u);
      }
      result.accepted += accepted;
      result.proposed += len;
      if (accepted == 0) {
        throw SamplerError("all proposals rejected in warmup window " + std::to_string(w + 1) +
                           " of chain " + std::to_string(chain) + "; check init and scale");
      }
      // Covariance learned from windows 1-3; the last window tunes the scale
      // against the final shape.
      if (w + 1 < kWindows && accepted >= std::max<long>(10, 2 * d) && len > d + 1) {
        Eigen::MatrixXd cov = WindowCovariance(window, w == 0);
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() == Eigen::Success && cov.allFinite()) {
          chol = llt.matrixL();
          log_scale = base_log_scale;
        }
      }
    }
  }

  result.kept.resize(config.keep, d);
  long accepted = 0;
  const long total = static_cast<long>(config.keep) * config.thin;
  for (long t = 0; t < total; ++t) {
    step(false, t, accepted);
    if ((t + 1) % config.thin == 0) result.kept.row((t + 1) / config.thin - 1) = u.transpose();
  }
  result.accepted += accepted;
  result.proposed += total;
  return result;
}

double Eval(const LogDensityTarget& target, const Eigen::VectorXd& u) {
  const double v = target.LogDensity(u);
  return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
}

Eigen::VectorXd NumericGradient(const LogDensityTarget& target, const Eigen::VectorXd& u) {
  const int d = static_cast<int>(u.size());
  Eigen::VectorXd g(d);
  Eigen::VectorXd x = u;
  for (int i = 0; i < d; ++i) {
    const double h = 1e-5 * std::max(1.0, std::abs(u(i)));
    x(i) = u(i) + h;
    const double fp = Eval(target, x);
    x(i) = u(i) - h;
    const double fm = Eval(target, x);
    x(i) = u(i);
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace

Eigen::MatrixXd NumericHessian(const LogDensityTarget& target, const Eigen::VectorXd& u) {
  const int d = static_cast<int>(u.size());
  Eigen::MatrixXd hess(d, d);
  Eigen::VectorXd h(d);
  for (int i = 0; i < d; ++i) h(i) = 1e-4 * std::max(1.0, std::abs(u(i)));
  const double f0 = Eval(target, u);
  Eigen::VectorXd x = u;
  for (int i = 0; i < d; ++i) {
    x(i) = u(i) + h(i);
    const double fp = Eval(target, x);
    x(i) = u(i) - h(i);
    const double fm = Eval(target, x);
    x(i) = u(i);
    hess(i, i) = (fp - 2.0 * f0 + fm) / (h(i) * h(i));
    for (int j = 0; j < i; ++j) {
      double f[4];
      const int si[4] = {1, 1, -1, -1};
      const int sj[4] = {1, -1, 1, -1};
      for (int k = 0; k < 4; ++k) {
        x(i) = u(i) + si[k] * h(i);
        x(j) = u(j) + sj[k] * h(j);
        f[k] = Eval(target, x);
      }
      x(i) = u(i);
      x(j) = u(j);
      hess(i, j) = hess(j, i) = (f[0] - f[1] - f[2] + f[3]) / (4.0 * h(i) * h(j));
    }
  }
  return hess;
}

namespace {

// Proposal covariance at a point where the negative Hessian is not positive
// definite (e.g. a mode search that ended on a prior cusp). Curved directions
// keep their inverse curvature; flat or convex ones get unit variance.
Eigen::MatrixXd RepairedCovariance(const LogDensityTarget& target, const Eigen::VectorXd& u) {
  const int d = static_cast<int>(u.size());
  Eigen::MatrixXd neg_h = -NumericHessian(target, u);
  if (!neg_h.allFinite()) return Eigen::MatrixXd::Identity(d, d);
  neg_h = 0.5 * (neg_h + neg_h.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(neg_h);
  Eigen::VectorXd var(d);
  for (int i = 0; i < d; ++i) {
    const double l = es.eigenvalues()(i);
    var(i) = l > 0.0 ? std::min(1.0 / l, 1.0) : 1.0;
  }
  return es.eigenvectors() * var.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

Mode FindMode(const LogDensityTarget& target, const Eigen::VectorXd& init, int max_iter) {
  Mode mode;
  mode.u = init;
  mode.log_density = Eval(target, init);
  if (!std::isfinite(mode.log_density)) {
    throw SamplerError("non-finite log density at mode-search start");
  }
  const int d = static_cast<int>(init.size());
  for (int iter = 0; iter < max_iter; ++iter) {
    const Eigen::VectorXd g = NumericGradient(target, mode.u);
    const Eigen::MatrixXd neg_h = -NumericHessian(target, mode.u);
    if (!g.allFinite() || !neg_h.allFinite()) break;
    // Levenberg damping until the system is positive definite.
    double ridge = 0.0;
    Eigen::LLT<Eigen::MatrixXd> llt;
    for (int k = 0; k < 40; ++k) {
      Eigen::MatrixXd a = neg_h;
      a.diagonal().array() += ridge;
      llt.compute(a);
      if (llt.info() == Eigen::Success) break;
      ridge = ridge == 0.0 ? 1e-6 * std::max(1.0, neg_h.diagonal().cwiseAbs().maxCoeff())
                           : ridge * 10.0;
    }
    if (llt.info() != Eigen::Success) break;
    const Eigen::VectorXd dir = llt.solve(g);
    double t = 1.0;
    bool improved = false;
    for (int k = 0; k < 40; ++k, t *= 0.5) {
      const Eigen::VectorXd cand = mode.u + t * dir;
      const double f = Eval(target, cand);
      if (f > mode.log_density) {
        const double gain = f - mode.log_density;
        mode.u = cand;
        mode.log_density = f;
        improved = gain > 1e-10 * (1.0 + std::abs(f));
        break;
      }
    }
    if (!improved) break;
  }
  Eigen::MatrixXd neg_h = -NumericHessian(target, mode.u);
  neg_h = 0.5 * (neg_h + neg_h.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(neg_h);
  if (neg_h.allFinite() && llt.info() == Eigen::Success) {
    Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(d, d));
    if (cov.allFinite() && Eigen::LLT<Eigen::MatrixXd>(cov).info() == Eigen::Success) {
      mode.covariance = cov;
    }
  }
  return mode;
}

PosteriorDraws Sample(const LogDensityTarget& target, const SamplerConfig& config) {
  const int d = target.dim();
  if (d < 1) throw std::invalid_argument("target dimension must be positive");
  if (config.chains < 1) throw std::invalid_argument("chains must be >= 1");
  if (config.keep < 1) throw std::invalid_argument("keep must be >= 1");
  if (config.warmup < 0) throw std::invalid_argument("warmup must be >= 0");
  if (config.thin < 1) throw std::invalid_argument("thin must be >= 1");
  const double scale = config.proposal_scale.value_or(2.38 / std::sqrt(static_cast<double>(d)));
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw std::invalid_argument("proposal scale must be positive and finite");
  }

  Eigen::VectorXd init = config.init.value_or(Eigen::VectorXd::Zero(d));
  if (init.size() != d) throw std::invalid_argument("init has wrong dimension");
  if (!init.allFinite() || !std::isfinite(target.LogDensity(init))) {
    throw SamplerError("non-finite log density at init");
  }
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(d, d);
  if (config.find_mode) {
    Mode mode = FindMode(target, init);
    init = mode.u;
    cov = mode.covariance ? *mode.covariance : RepairedCovariance(target, mode.u);
  }
  if (config.init_cov) {
    if (config.init_cov->rows() != d || config.init_cov->cols() != d) {
      throw std::invalid_argument("init_cov has wrong dimension");
    }
    cov = *config.init_cov;
  }
  Cholesky(cov);  // validates

  std::vector<ChainResult> results(config.chains);
  std::vector<std::exception_ptr> errors(config.chains);
  auto run = [&](int c) {
    try {
      results[c] = RunChain(target, config, c, init, cov, scale);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  if (config.parallel_chains && config.chains > 1) {
    std::vector<std::thread> threads;
    for (int c = 0; c < config.chains; ++c) threads.emplace_back(run, c);
    for (auto& t : threads) t.join();
  } else {
    for (int c = 0; c < config.chains; ++c) run(c);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  PosteriorDraws out;
  out.seed = config.seed;
  out.warmup = config.warmup;
  out.thin = config.thin;
  out.chains = config.chains;
  out.unconstrained.resize(static_cast<Eigen::Index>(config.chains) * config.keep, d);
  long accepted = 0, proposed = 0;
  for (int c = 0; c < config.chains; ++c) {
    out.unconstrained.middleRows(static_cast<Eigen::Index>(c) * config.keep, config.keep) =
        results[c].kept;
    accepted += results[c].accepted;
    proposed += results[c].proposed;
  }
  out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(proposed);
  out.draws.resize(out.unconstrained.rows(), d);
  for (Eigen::Index s = 0; s < out.unconstrained.rows(); ++s) {
    out.draws.row(s) = target.ToNatural(out.unconstrained.row(s).transpose()).transpose();
  }
  if (!out.draws.allFinite()) throw SamplerError("non-finite draw produced");
  return out;
}

double EffectiveSampleSize(const std::vector<std::vector<double>>& chains) {
  if (chains.empty()) throw std::invalid_argument("no chains");
  const std::size_t n = chains.front().size();
  for (const auto& c : chains) {
    if (c.size() != n) throw std::invalid_argument("chains differ in length");
  }
  if (n < 10) throw std::invalid_argument("need at least 10 draws per chain");
  const double m = static_cast<double>(chains.size());
  const double nd = static_cast<double>(n);

  std::vector<double> means;
  for (const auto& c : chains) {
    double s = 0.0;
    for (double v : c) s += v;
    means.push_back(s / nd);
  }
  auto mean_acov = [&](std::size_t lag) {
    double total = 0.0;
    for (std::size_t k = 0; k < chains.size(); ++k) {
      const auto& c = chains[k];
      double s = 0.0;
      for (std::size_t i = 0; i + lag < n; ++i) s += (c[i] - means[k]) * (c[i + lag] - means[k]);
      total += s / nd;
    }
    return total / m;
  };

  const double acov0 = mean_acov(0);
  const double w = acov0 * nd / (nd - 1.0);
  double grand = 0.0;
  for (double mu : means) grand += mu;
  grand /= m;
  double b_over_n = 0.0;
  if (chains.size() > 1) {
    for (double mu : means) b_over_n += (mu - grand) * (mu - grand);
    b_over_n /= (m - 1.0);
  }
  const double var_plus = (nd - 1.0) / nd * w + b_over_n;
  if (!(w > 0.0) || !(var_plus > 0.0)) throw SamplerError("zero variance");

  auto rho = [&](std::size_t lag) { return 1.0 - (w - mean_acov(lag)) / var_plus; };
  double sum = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double pair = (k == 0 ? 1.0 : rho(2 * k)) + rho(2 * k + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev);
    prev = pair;
    sum += pair;
  }
  const double tau = -1.0 + 2.0 * sum;
  const double cap = m * nd;
  if (tau <= 0.0) return cap;
  return std::min(cap, cap / tau);
}

double EffectiveSampleSize(const PosteriorDraws& draws, int coordinate) {
  if (coordinate < 0 || coordinate >= draws.dim()) throw std::out_of_range("coordinate");
  const int per = draws.per_chain();
  std::vector<std::vector<double>> chains(draws.chains, std::vector<double>(per));
  for (int c = 0; c < draws.chains; ++c) {
    for (int s = 0; s < per; ++s) chains[c][s] = draws.draws(c * per + s, coordinate);
  }
  return EffectiveSampleSize(chains);
}

double Mcse(const PosteriorDraws& draws, int coordinate) {
  const auto col = draws.draws.col(coordinate);
  const double mean = col.mean();
  const double var = (col.array() - mean).square().sum() / (col.size() - 1.0);
  return std::sqrt(var / EffectiveSampleSize(draws, coordinate));
}

void WriteDiagnosticsCsv(const PosteriorDraws& draws, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "coordinate,mean,sd,ess,mcse\n";
  for (int j = 0; j < draws.dim(); ++j) {
    const auto col = draws.draws.col(j);
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().sum() / (col.size() - 1.0));
    double ess = 0.0;
    try {
      ess = EffectiveSampleSize(draws, j);
    } catch (const SamplerError&) {
      ess = 0.0;
    }
    const double mcse = ess > 0.0 ? sd / std::sqrt(ess) : 0.0;
    out << j << ',' << FormatDouble(mean) << ',' << FormatDouble(sd) << ',' << FormatDouble(ess)
        << ',' << FormatDouble(mcse) << '\n';
  }
}

}  // namespace surveydp
