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

#ifndef JACNET_KINEMATICS_HPP_
#define JACNET_KINEMATICS_HPP_

#include <cstdint>
#include <variant>
#include <vector>

#include "jacnet/network.hpp"
#include "jacnet/types.hpp"

namespace jacnet {

/// Standard DH parameters of one revolute joint:
/// T = Rz(q + theta_offset) Tz(d) Tx(a) Rx(alpha).
struct DHLink {
  double a = 0.0;
  double alpha = 0.0;
  double d = 0.0;
  double theta_offset = 0.0;
};

struct DHChain {
  std::vector<DHLink> links;
  /// Number of leading Cartesian coordinates reported as the task position
  /// (3 for a spatial arm, 2 for a planar one).
  int task_dims = 3;

  int joints() const { return static_cast<int>(links.size()); }
  void validate() const;

  /// Three-joint articulated arm: base yaw with a 0.1 m column, then two
  /// 0.4 m links on parallel shoulder and elbow axes.
  static DHChain default_arm();
  static DHChain planar(const std::vector<double>& lengths);
};

Vec forward_kinematics(const DHChain& chain, const Vec& q);
Mat analytic_jacobian(const DHChain& chain, const Vec& q);

/// Synthetic plant whose Jacobian is exactly a network with known weights.
struct TeacherPlant {
  JacNet ideal;
};

/// Sum over columns of W[n-1] sigmoid(... sigmoid(W[0] q)) * qdot_k.
Vec teacher_velocity(const TeacherPlant& plant, const Vec& q, const Vec& qdot);

/// Builds a teacher whose every modular system reproduces the plant velocity
/// exactly (zero approximation error at every depth). The first layer is zero,
/// so all hidden states are constant and the Jacobian is the constant matrix
/// `jacobian`; deeper layers and the null-space parts of the output weights
/// are random with the given scale.
TeacherPlant make_exact_teacher(const NetConfig& config, const Mat& jacobian,
                                std::uint64_t seed, double scale);

/// Seeded well-conditioned p x m matrix used as the default teacher Jacobian.
Mat default_teacher_jacobian(int rows, int cols, std::uint64_t seed);

using Plant = std::variant<DHChain, TeacherPlant>;

/// q in radians; x is only integrated for teacher plants (a DH plant derives
/// its position from q).
struct PlantState {
  Vec q;
  Vec x;
  double t = 0.0;
};

int plant_joints(const Plant& plant);
int plant_task_dims(const Plant& plant);

/// Ground-truth task velocity J(q) qdot.
Vec plant_velocity(const Plant& plant, const Vec& q, const Vec& qdot);
Mat plant_jacobian(const Plant& plant, const Vec& q);

/// Initial state at q0. The teacher position starts at x0.
PlantState initial_state(const Plant& plant, const Vec& q0, const Vec& x0);

/// Explicit Euler: q' = q + dt qdot, t' = t + dt. A teacher plant also
/// advances x by dt * teacher_velocity(q, qdot) evaluated at the old q.
PlantState plant_step(const Plant& plant, const PlantState& state,
                      const Vec& qdot_cmd, double dt);

}  // namespace jacnet

#endif  // JACNET_KINEMATICS_HPP_
