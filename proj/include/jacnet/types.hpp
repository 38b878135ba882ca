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

#ifndef JACNET_TYPES_HPP_
#define JACNET_TYPES_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace jacnet {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Error handling mode of the controller and of the learning laws.
///   Region:   errors enter through the region error and the smooth saturation.
///   Tracking: errors enter directly and the saturation becomes sgn().
enum class Mode { Region, Tracking };

Mode parse_mode(std::string_view name);
std::string to_string(Mode mode);

/// Thrown when two objects that must agree on a dimension do not.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a NaN or infinity shows up where only finite numbers are allowed.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }

void require_size(const Vec& v, Eigen::Index n, std::string_view what);

}  // namespace jacnet

#endif  // JACNET_TYPES_HPP_
