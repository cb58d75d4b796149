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

#include "surveydp/rng.h"

#include <cmath>

namespace surveydp {
namespace {

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view component,
                         std::uint64_t index) {
  // FNV-1a over the component name.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : component) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return SplitMix64(SplitMix64(seed ^ h) + SplitMix64(index + 0x632be59bd9b4e019ULL));
}

double Rng::Laplace(double scale) {
  if (scale == 0.0) return 0.0;
  // Inverse CDF on a uniform in (-1/2, 1/2).
  double u = Uniform() - 0.5;
  while (u == -0.5) u = Uniform() - 0.5;
  const double mag = -scale * std::log1p(-2.0 * std::abs(u));
  return u < 0 ? -mag : mag;
}

}  // namespace surveydp
