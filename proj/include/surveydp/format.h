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

#ifndef SURVEYDP_FORMAT_H_
#define SURVEYDP_FORMAT_H_

#include <charconv>
#include <cmath>
#include <string>

namespace surveydp {

// Shortest decimal text that parses back to exactly `v`. Artifacts written
// with it are byte-stable across runs.
inline std::string FormatDouble(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace surveydp

#endif  // SURVEYDP_FORMAT_H_
