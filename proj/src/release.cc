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

#include "surveydp/release.h"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "surveydp/format.h"

namespace surveydp {

std::vector<int> SelectDrawIndices(int num_draws, int m) {
  if (m < 1) throw std::invalid_argument("m must be >= 1");
  if (num_draws < 1) throw std::invalid_argument("no posterior draws");
  if (m > num_draws) throw std::invalid_argument("m exceeds the number of available draws");
  std::vector<int> idx(m);
  for (int l = 0; l < m; ++l) {
    idx[l] = static_cast<int>((static_cast<long long>(2 * l + 1) * num_draws) / (2LL * m));
  }
  return idx;
}

void WriteRelease(const SyntheticRelease& release, const std::string& dir,
                  const std::string& prefix) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (int l = 0; l < release.m(); ++l) {
    const auto& s = release.samples[l];
    const std::string name = prefix + "_" + std::to_string(l + 1) + ".csv";
    std::ofstream out(fs::path(dir) / name);
    if (!out) throw std::runtime_error("cannot write " + name);
    out << "y,field,gender,stratum,weight,smoothed_weight\n";
    for (std::size_t i = 0; i < s.data.size(); ++i) {
      const auto& r = s.data[i];
      out << FormatDouble(r.y) << ',' << r.field + 1 << ',' << r.gender + 1 << ','
          << r.stratum + 1 << ',' << FormatDouble(r.weight) << ','
          << FormatDouble(s.smoothed_weights[i]) << '\n';
    }
    files.push_back({{"file", name}, {"draw_index", s.draw_index}});
  }
  nlohmann::ordered_json j;
  j["mechanism"] = release.mechanism;
  j["m"] = release.account.m;
  j["delta"] = release.account.delta_alpha;
  j["epsilon"] = release.account.epsilon;
  j["c1"] = release.c1;
  j["c2"] = release.c2;
  j["seed"] = release.seed;
  if (!release.samples.empty()) {
    const auto& layout = release.samples.front().data.layout();
    j["num_fields"] = layout.num_fields;
    j["num_genders"] = layout.num_genders;
    j["interactions"] = layout.interactions;
  }
  j["datasets"] = files;
  std::ofstream out(fs::path(dir) / (prefix + ".json"));
  if (!out) throw std::runtime_error("cannot write release sidecar");
  out << j.dump(2) << '\n';
}

}  // namespace surveydp
