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

#ifndef JACNET_CONTROLLER_HPP_
#define JACNET_CONTROLLER_HPP_

#include "jacnet/network.hpp"
#include "jacnet/types.hpp"

namespace jacnet {

/// Smoothstep ramp from k0 to kT over [0, ramp], constant kT afterwards.
struct GainSchedule {
  double k0 = 0.01;
  double kT = 10.0;
  double ramp = 20.0;

  double at(double t) const;
};

double gain_schedule(double t, double ramp, double k0, double kT);

/// Gains for the kinematic control law. The region schedule is used in
/// region mode; tracking mode holds kp_tracking constant.
struct ControllerConfig {
  Mode mode = Mode::Region;
  GainSchedule region_kp;
  double kp_tracking = 10.0;
  double ks = 0.001;
  Vec bound;      // b_i, meters
  Vec sat_width;  // a_i, meters
  int exponent = 2;  // N
  /// Infinity-norm clamp on the joint command in rad/s; <= 0 disables it.
  double max_joint_speed = 0.0;

  GainSchedule active_schedule() const;

  /// Throws std::invalid_argument naming the violated invariant.
  void validate() const;

  /// Parameter values of the reference experiments for a task of `dims`.
  static ControllerConfig standard(int dims = 3);
};

/// max(0, dx_i^2 / b_i^2 - 1)^(N-1) dx_i, componentwise.
Vec region_error(const Vec& dx, const Vec& bound, int exponent);

/// sin(pi dx_i / (2 a_i)) inside |dx_i| < a_i, sgn(dx_i) outside.
Vec smooth_sat(const Vec& dx, const Vec& width);

/// Componentwise sign with sgn(0) = 0.
Vec sgn_vec(const Vec& v);

/// Region: sum_i max(0, dx_i^2/b_i^2 - 1)^N / (2N). Tracking: |dx|^2 / 2.
double potential(const Vec& dx, const Vec& bound, int exponent, Mode mode);

/// The error that drives the feedback and the tracking-layer updates:
/// region_error(dx) in region mode, dx itself in tracking mode.
Vec feedback_error(const Vec& dx, const Vec& bound, int exponent, Mode mode);

/// sat(dx) in region mode, sgn(dx) in tracking mode.
Vec robust_term(const Vec& dx, const Vec& width, Mode mode);

struct ControlCommand {
  Vec qdot;
  bool clamped = false;
};

/// qdot = J^+ xdot_d - kp J^T e - ks J^+ s, where (e, s) are
/// (region error, sat) in region mode and (dx, sgn) in tracking mode.
ControlCommand control_law(const Mat& J_hat, const Vec& xdot_d, const Vec& dx,
                           const ControllerConfig& config, double kp);

/// Same, assembling J_hat from the network and reading kp from the schedule.
ControlCommand control_law(const JacNet& net, const Vec& q, const Vec& xdot_d,
                           const Vec& dx, const ControllerConfig& config,
                           double t);

}  // namespace jacnet

#endif  // JACNET_CONTROLLER_HPP_
