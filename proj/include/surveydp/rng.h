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

#ifndef SURVEYDP_RNG_H_
#define SURVEYDP_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace surveydp {

// Derives an independent stream seed from a root seed, a component name and
// an index (chain, replicate, release). All randomness in the library flows
// through this so that a single seed replays a whole run.
std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view component,
                         std::uint64_t index = 0);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, std::string_view component, std::uint64_t index = 0)
      : engine_(DeriveSeed(seed, component, index)) {}

  // Uniform on [0, 1).
  double Uniform() { return std::generate_canonical<double, 53>(engine_); }
  double Normal() { return normal_(engine_); }
  double Normal(double mean, double sd) { return mean + sd * normal_(engine_); }
  // Laplace(0, scale); scale == 0 returns exactly 0.
  double Laplace(double scale);
  // Uniform integer in [0, n).
  std::uint64_t Index(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace surveydp

#endif  // SURVEYDP_RNG_H_
