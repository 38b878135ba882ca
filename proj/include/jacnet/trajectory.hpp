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

#ifndef JACNET_TRAJECTORY_HPP_
#define JACNET_TRAJECTORY_HPP_

#include <cstdint>

#include "jacnet/kinematics.hpp"
#include "jacnet/learning.hpp"
#include "jacnet/types.hpp"

namespace jacnet {

/// 3s^2 - 2s^3 for s in [0, 1], clamped outside.
double smoothstep(double s);
double smoothstep_rate(double s);  // d/ds

struct LemniscateSpec {
  Vec center;
  Vec r1;
  Vec r2;
  double period = 20.0;  // T, seconds
  /// Restart the figure every period instead of holding the end point.
  bool repeat = false;

  void validate() const;
  static LemniscateSpec standard();
};

struct Phase {
  double theta = 0.0;
  double theta_dot = 0.0;
};

/// theta = 2 pi smoothstep(t / T), held at 2 pi for t >= T.
Phase theta(double t, double period);

struct Waypoint {
  Vec x;
  Vec xdot;
};

/// x_d = c + cos(theta) / (1 + sin^2(theta)) (r1 + sin(theta) r2) and its
/// analytic time derivative.
Waypoint lemniscate(const LemniscateSpec& lem, double t);

/// Smoothstep interpolation from start to goal; zero velocity at both ends.
Waypoint approach_trajectory(const Vec& start, const Vec& goal, double duration,
                             double t);

struct DatasetOptions {
  int samples = 5000;
  double amplitude = 0.3;   // rad, per joint around home
  double qdot_range = 1.0;  // rad/s
  std::uint64_t seed = 42;
};

/// Uniform joint samples around home with x = FK(q), xdot = J(q) qdot from
/// the ground-truth plant. Teacher plants have no forward kinematics; their
/// samples carry x = 0. Random draws are serial; the kinematics run in an
/// OpenMP loop, so the result does not depend on the thread count.
Dataset gen_dataset(const Plant& plant, const Vec& home_q,
                    const DatasetOptions& options);

}  // namespace jacnet

#endif  // JACNET_TRAJECTORY_HPP_
