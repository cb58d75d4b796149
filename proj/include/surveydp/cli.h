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

#ifndef SURVEYDP_CLI_H_
#define SURVEYDP_CLI_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace surveydp {

// Entry point behind the `surveydp` binary. Returns the process exit code;
// failures print one diagnostic line to `err`.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// FNV-1a 64 over a string, as 16 lowercase hex digits.
std::string Fnv1aHex(const std::string& text);

}  // namespace surveydp

#endif  // SURVEYDP_CLI_H_
