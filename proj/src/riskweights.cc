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

#include "surveydp/riskweights.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "surveydp/format.h"
#include "surveydp/rng.h"

namespace surveydp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double MaxOf(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

}  // namespace

std::vector<double> RecordLipschitz(const Eigen::MatrixXd& loglik) {
  if (loglik.rows() == 0) throw std::invalid_argument("empty draw set");
  std::vector<double> delta(loglik.cols(), 0.0);
  for (Eigen::Index i = 0; i < loglik.cols(); ++i) {
    double m = 0.0;
    for (Eigen::Index s = 0; s < loglik.rows(); ++s) {
      const double v = loglik(s, i);
      if (std::isnan(v)) throw std::invalid_argument("NaN log-likelihood entry");
      m = std::max(m, std::abs(v));
    }
    delta[i] = m;
  }
  return delta;
}

std::vector<double> ComputeAlpha(const std::vector<double>& delta) {
  if (delta.empty()) throw std::invalid_argument("no records");
  double max_inv = 0.0;
  bool any_finite = false;
  for (double d : delta) {
    if (std::isnan(d) || d < 0.0) throw std::invalid_argument("invalid record bound");
    if (std::isinf(d)) continue;
    any_finite = true;
    max_inv = std::max(max_inv, d == 0.0 ? kInf : 1.0 / d);
  }
  if (!any_finite) throw std::invalid_argument("all record bounds are infinite");
  std::vector<double> alpha(delta.size(), 0.0);
  for (std::size_t i = 0; i < delta.size(); ++i) {
    const double d = delta[i];
    if (std::isinf(d)) continue;
    if (std::isinf(max_inv)) {
      // Some record carries zero risk; it alone sets the scale.
      alpha[i] = d == 0.0 ? 1.0 : 0.0;
    } else {
      alpha[i] = (1.0 / d) / max_inv;
    }
  }
  return alpha;
}

std::vector<double> ScaleShift(const std::vector<double>& alpha, double c1, double c2) {
  std::vector<double> out(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    out[i] = alpha[i] == 0.0 ? 0.0 : std::clamp(c1 * alpha[i] + c2, 0.0, 1.0);
  }
  return out;
}

std::vector<double> WeightedLipschitz(const std::vector<double>& alpha,
                                      const Eigen::MatrixXd& loglik) {
  if (static_cast<Eigen::Index>(alpha.size()) != loglik.cols()) {
    throw std::invalid_argument("alpha length does not match log-likelihood columns");
  }
  std::vector<double> out(alpha.size(), 0.0);
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (alpha[i] == 0.0) continue;
    double m = 0.0;
    for (Eigen::Index s = 0; s < loglik.rows(); ++s) {
      m = std::max(m, std::abs(alpha[i] * loglik(s, static_cast<Eigen::Index>(i))));
    }
    out[i] = m;
  }
  return out;
}

PrivacyAccount Epsilon(double delta, int m) {
  if (m <= 0) throw std::invalid_argument("m must be positive");
  if (!(delta >= 0.0) || std::isinf(delta)) {
    throw std::invalid_argument("Lipschitz bound must be finite and non-negative");
  }
  return {delta, m, 2.0 * delta * m};
}

void WriteRiskProfileCsv(const RiskProfile& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "record,delta_unweighted,alpha,alpha_star,delta_weighted\n";
  for (std::size_t i = 0; i < p.alpha.size(); ++i) {
    out << i << ',' << FormatDouble(p.record_lipschitz_unweighted[i]) << ','
        << FormatDouble(p.alpha[i]) << ',' << FormatDouble(p.alpha_star[i]) << ','
        << FormatDouble(p.record_lipschitz_weighted[i]) << '\n';
  }
}

namespace {

struct Base {
  PosteriorDraws draws;
  std::vector<double> delta;
  std::vector<double> alpha;
  double overall = 0.0;
};

Base UnweightedPass(const PseudoPosteriorModel& model, const SamplerConfig& sampler) {
  Base b;
  b.draws = model.Fit(std::vector<double>(model.num_records(), 1.0), sampler);
  b.delta = RecordLipschitz(model.LogLikMatrix(b.draws));
  b.alpha = ComputeAlpha(b.delta);
  for (double d : b.delta) {
    if (std::isfinite(d)) b.overall = std::max(b.overall, d);
  }
  return b;
}

struct Candidate {
  double c1 = 0.0;
  double delta = 0.0;
  std::vector<double> alpha_star;
  std::vector<double> weighted;
  PosteriorDraws draws;
};

Candidate Evaluate(const PseudoPosteriorModel& model, const Base& base, double c1, double c2,
                   const SamplerConfig& sampler) {
  Candidate c;
  c.c1 = c1;
  c.alpha_star = ScaleShift(base.alpha, c1, c2);
  // Same seed for every candidate keeps the search on common random numbers.
  c.draws = model.Fit(c.alpha_star, sampler);
  c.weighted = WeightedLipschitz(c.alpha_star, model.LogLikMatrix(c.draws));
  c.delta = MaxOf(c.weighted);
  return c;
}

TuneResult Finish(const Base& base, Candidate&& c, double c2, int evaluations) {
  TuneResult r;
  r.profile.alpha = base.alpha;
  r.profile.alpha_star = std::move(c.alpha_star);
  r.profile.record_lipschitz_unweighted = base.delta;
  r.profile.record_lipschitz_weighted = std::move(c.weighted);
  r.profile.overall_lipschitz = c.delta;
  r.profile.overall_unweighted = base.overall;
  r.profile.c1 = c.c1;
  r.profile.c2 = c2;
  r.unweighted_draws = base.draws;
  r.draws = std::move(c.draws);
  r.evaluations = evaluations;
  return r;
}

}  // namespace

TuneResult ProfileAt(const PseudoPosteriorModel& model, double c1, double c2,
                     const SamplerConfig& sampler) {
  Base base = UnweightedPass(model, sampler);
  Candidate c = Evaluate(model, base, c1, c2, sampler);
  return Finish(base, std::move(c), c2, 1);
}

TuneResult TuneToTarget(const PseudoPosteriorModel& model, double target_delta, double tol,
                        const TuneOptions& options) {
  if (!(target_delta > 0.0) || !std::isfinite(target_delta)) {
    throw std::invalid_argument("target Lipschitz bound must be positive");
  }
  if (!(tol >= 0.0) || tol >= target_delta) {
    throw std::invalid_argument("tolerance must lie in [0, target)");
  }
  const double lower = target_delta - tol;
  const double center = target_delta - 0.5 * tol;
  Base base = UnweightedPass(model, options.sampler);
  int evals = 0;
  // The bound is a max over posterior draws, so it carries Monte Carlo noise
  // comparable to the window. Each evaluation gets its own chain seed: a
  // collapsed bracket then re-samples instead of repeating the same miss.
  auto eval = [&](double c1) {
    SamplerConfig sampler = options.sampler;
    sampler.seed = DeriveSeed(options.sampler.seed, "riskweights.tune",
                              static_cast<std::uint64_t>(evals));
    ++evals;
    return Evaluate(model, base, c1, options.c2, sampler);
  };
  auto in_window = [&](const Candidate& c) { return c.delta >= lower && c.delta <= target_delta; };

  double min_alpha = 1.0;
  for (double a : base.alpha) {
    if (a > 0.0) min_alpha = std::min(min_alpha, a);
  }
  auto saturated = [&](double c1) { return c1 * min_alpha + options.c2 >= 1.0; };

  // Bracket: lo has delta below the window, hi above it.
  double lo = 0.0;
  double hi = 1.0;
  double lo_delta = 0.0;
  double hi_delta = 0.0;
  for (;;) {
    if (evals >= options.max_evaluations) {
      throw TuningError("search budget exhausted while bracketing the target");
    }
    Candidate c = eval(hi);
    if (in_window(c)) return Finish(base, std::move(c), options.c2, evals);
    if (c.delta > target_delta) {
      hi_delta = c.delta;
      break;
    }
    if (saturated(hi)) {
      throw TuningError("target unattainable: all weights saturate at 1 with bound " +
                        FormatDouble(c.delta));
    }
    lo = hi;
    lo_delta = c.delta;
    hi *= 2.0;
  }

  // Bisection in log c1, accelerated by a log-log secant step when the
  // bracket allows one.
  while (evals < options.max_evaluations) {
    double next = lo > 0.0 ? std::sqrt(lo * hi) : 0.5 * hi;
    if (lo > 0.0 && lo_delta > 0.0 && hi_delta > lo_delta) {
      const double slope = std::log(hi_delta / lo_delta) / std::log(hi / lo);
      const double guess = lo * std::exp(std::log(center / lo_delta) / slope);
      if (guess > lo && guess < hi) next = guess;
    }
    Candidate c = eval(next);
    if (in_window(c)) return Finish(base, std::move(c), options.c2, evals);
    if (c.delta > target_delta) {
      hi = next;
      hi_delta = c.delta;
    } else {
      lo = next;
      lo_delta = c.delta;
    }
    // Noise can invert the ends; reopen a collapsed or inconsistent bracket.
    if (lo > 0.0 && (hi / lo < 1.02 || hi_delta <= lo_delta)) {
      lo /= 1.1;
      hi *= 1.1;
      if (hi_delta <= lo_delta) {
        lo_delta = lower * 0.95;
        hi_delta = target_delta * 1.05;
      }
    }
  }
  throw TuningError("search budget exhausted before reaching the target window");
}

}  // namespace surveydp
