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

#include "jacnet/controller.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace jacnet {

namespace {

double ipow(double base, int exponent) {
  double r = 1.0;
  for (int i = 0; i < exponent; ++i) r *= base;
  return r;
}

void check_bound(const Vec& dx, const Vec& bound, const char* what) {
  require_size(bound, dx.size(), what);
  if ((bound.array() <= 0.0).any())
    throw std::invalid_argument(std::string(what) + " must be positive");
}

}  // namespace

double gain_schedule(double t, double ramp, double k0, double kT) {
  if (!(ramp > 0.0)) throw std::invalid_argument("gain ramp must be > 0");
  if (t >= ramp) return kT;
  const double s = std::max(t, 0.0) / ramp;
  return (kT - k0) * (-2.0 * s * s * s + 3.0 * s * s) + k0;
}

double GainSchedule::at(double t) const { return gain_schedule(t, ramp, k0, kT); }

GainSchedule ControllerConfig::active_schedule() const {
  if (mode == Mode::Tracking) return {kp_tracking, kp_tracking, region_kp.ramp};
  return region_kp;
}

void ControllerConfig::validate() const {
  if (bound.size() == 0) throw std::invalid_argument("region bounds b_i are empty");
  if (sat_width.size() != bound.size()) {
    throw std::invalid_argument("saturation widths a_i and bounds b_i differ in length");
  }
  for (Eigen::Index i = 0; i < bound.size(); ++i) {
    if (!(sat_width(i) > 0.0))
      throw std::invalid_argument("saturation width a_" + std::to_string(i + 1) + " must be > 0");
    if (!(sat_width(i) <= bound(i))) {
      throw std::invalid_argument("invariant a_i ≤ b_i violated at i=" + std::to_string(i + 1) +
                                  " (a=" + std::to_string(sat_width(i)) +
                                  ", b=" + std::to_string(bound(i)) + ")");
    }
  }
  if (exponent < 2) throw std::invalid_argument("region exponent N must be >= 2");
  if (!(region_kp.k0 > 0.0) || !(region_kp.kT > 0.0))
    throw std::invalid_argument("gains k_0 and k_T must be > 0");
  if (!(region_kp.ramp > 0.0)) throw std::invalid_argument("gain ramp T must be > 0");
  if (!(kp_tracking > 0.0)) throw std::invalid_argument("tracking gain must be > 0");
  if (!(ks >= 0.0)) throw std::invalid_argument("k_s must be >= 0");
}

ControllerConfig ControllerConfig::standard(int dims) {
  ControllerConfig c;
  c.mode = Mode::Region;
  c.region_kp = {0.01, 10.0, 20.0};
  c.kp_tracking = 10.0;
  c.ks = 0.001;
  c.bound = Vec::Constant(dims, 0.001);
  c.sat_width = Vec::Constant(dims, 0.001);
  c.exponent = 2;
  return c;
}

Vec region_error(const Vec& dx, const Vec& bound, int exponent) {
  check_bound(dx, bound, "region bound");
  Vec out(dx.size());
  for (Eigen::Index i = 0; i < dx.size(); ++i) {
    const double excess = std::max(0.0, dx(i) * dx(i) / (bound(i) * bound(i)) - 1.0);
    out(i) = ipow(excess, exponent - 1) * dx(i);
  }
  return out;
}

Vec smooth_sat(const Vec& dx, const Vec& width) {
  check_bound(dx, width, "saturation width");
  Vec out(dx.size());
  for (Eigen::Index i = 0; i < dx.size(); ++i) {
    if (std::abs(dx(i)) < width(i))
      out(i) = std::sin(std::numbers::pi * dx(i) / (2.0 * width(i)));
    else
      out(i) = dx(i) > 0.0 ? 1.0 : -1.0;
  }
  return out;
}

Vec sgn_vec(const Vec& v) {
  return v.unaryExpr([](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

// The region potential carries a b_i^2 factor so that its gradient is exactly
// region_error(); without it the two differ by 1/b_i^2.
double potential(const Vec& dx, const Vec& bound, int exponent, Mode mode) {
  if (mode == Mode::Tracking) return 0.5 * dx.squaredNorm();
  check_bound(dx, bound, "region bound");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < dx.size(); ++i) {
    const double b2 = bound(i) * bound(i);
    const double excess = std::max(0.0, dx(i) * dx(i) / b2 - 1.0);
    sum += b2 * ipow(excess, exponent) / (2.0 * exponent);
  }
  return sum;
}

Vec feedback_error(const Vec& dx, const Vec& bound, int exponent, Mode mode) {
  return mode == Mode::Region ? region_error(dx, bound, exponent) : dx;
}

Vec robust_term(const Vec& dx, const Vec& width, Mode mode) {
  return mode == Mode::Region ? smooth_sat(dx, width) : sgn_vec(dx);
}

ControlCommand control_law(const Mat& J_hat, const Vec& xdot_d, const Vec& dx,
                           const ControllerConfig& config, double kp) {
  require_size(xdot_d, J_hat.rows(), "control_law: desired velocity");
  require_size(dx, J_hat.rows(), "control_law: tracking error");
  if (!xdot_d.allFinite() || !dx.allFinite() || !std::isfinite(kp))
    throw NonFiniteError("control_law: non-finite input");
  const Mat J_pinv = pseudoinverse(J_hat);
  const Vec e = feedback_error(dx, config.bound, config.exponent, config.mode);
  const Vec r = robust_term(dx, config.sat_width, config.mode);
  ControlCommand cmd;
  cmd.qdot = J_pinv * xdot_d - kp * (J_hat.transpose() * e) - config.ks * (J_pinv * r);
  if (config.max_joint_speed > 0.0) {
    const double peak = cmd.qdot.cwiseAbs().maxCoeff();
    if (peak > config.max_joint_speed) {
      cmd.qdot *= config.max_joint_speed / peak;
      cmd.clamped = true;
    }
  }
  return cmd;
}

ControlCommand control_law(const JacNet& net, const Vec& q, const Vec& xdot_d,
                           const Vec& dx, const ControllerConfig& config, double t) {
  return control_law(assemble_jacobian(net, q), xdot_d, dx, config,
                     config.active_schedule().at(t));
}

}  // namespace jacnet
