// Copyright 2026 The jacnet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "jacnet/types.hpp"

#include <string>

namespace jacnet {

Mode parse_mode(std::string_view name) {
  if (name == "region") return Mode::Region;
  if (name == "tracking") return Mode::Tracking;
  throw std::invalid_argument("unknown mode '" + std::string(name) +
                              "' (expected region|tracking)");
}

std::string to_string(Mode mode) {
  return mode == Mode::Region ? "region" : "tracking";
}

void require_size(const Vec& v, Eigen::Index n, std::string_view what) {
  if (v.size() != n) {
    throw DimensionError(std::string(what) + ": expected length " +
                         std::to_string(n) + ", got " +
                         std::to_string(v.size()));
  }
}

}  // namespace jacnet
