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

#include "jacnet/kinematics.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <type_traits>

#include <Eigen/Geometry>

namespace jacnet {

namespace {

Eigen::Isometry3d link_transform(const DHLink& link, double q) {
  const double th = q + link.theta_offset;
  Eigen::Isometry3d T = Eigen::Isometry3d::Identity();
  T.rotate(Eigen::AngleAxisd(th, Eigen::Vector3d::UnitZ()));
  T.translate(Eigen::Vector3d(link.a, 0.0, link.d));
  T.rotate(Eigen::AngleAxisd(link.alpha, Eigen::Vector3d::UnitX()));
  return T;
}

void check_joints(const DHChain& chain, const Vec& q) {
  require_size(q, chain.joints(), "joint vector");
}

}  // namespace

void DHChain::validate() const {
  if (links.empty()) throw std::invalid_argument("DH chain needs >= 1 link");
  if (task_dims < 1 || task_dims > 3) {
    throw std::invalid_argument("DH chain task_dims must be 1, 2 or 3");
  }
  for (std::size_t i = 0; i < links.size(); ++i) {
    const DHLink& l = links[i];
    if (!std::isfinite(l.a) || !std::isfinite(l.alpha) ||
        !std::isfinite(l.d) || !std::isfinite(l.theta_offset)) {
      throw std::invalid_argument("DH link " + std::to_string(i + 1) +
                                  " has a non-finite parameter");
    }
  }
}

DHChain DHChain::default_arm() {
  DHChain chain;
  chain.links = {
      {0.0, std::numbers::pi / 2.0, 0.1, 0.0},
      {0.4, 0.0, 0.0, 0.0},
      {0.4, 0.0, 0.0, 0.0},
  };
  chain.task_dims = 3;
  return chain;
}

DHChain DHChain::planar(const std::vector<double>& lengths) {
  DHChain chain;
  for (double len : lengths) chain.links.push_back({len, 0.0, 0.0, 0.0});
  chain.task_dims = 2;
  return chain;
}

Vec forward_kinematics(const DHChain& chain, const Vec& q) {
  check_joints(chain, q);
  Eigen::Isometry3d T = Eigen::Isometry3d::Identity();
  for (int i = 0; i < chain.joints(); ++i) T = T * link_transform(chain.links[i], q(i));
  return T.translation().head(chain.task_dims);
}

Mat analytic_jacobian(const DHChain& chain, const Vec& q) {
  check_joints(chain, q);
  const int m = chain.joints();
  // Joint i turns about the z axis of frame i-1.
  std::vector<Eigen::Vector3d> axis(m), origin(m);
  Eigen::Isometry3d T = Eigen::Isometry3d::Identity();
  for (int i = 0; i < m; ++i) {
    axis[i] = T.linear().col(2);
    origin[i] = T.translation();
    T = T * link_transform(chain.links[i], q(i));
  }
  const Eigen::Vector3d tip = T.translation();
  Mat J(chain.task_dims, m);
  for (int i = 0; i < m; ++i)
    J.col(i) = axis[i].cross(tip - origin[i]).head(chain.task_dims);
  return J;
}

Vec teacher_velocity(const TeacherPlant& plant, const Vec& q, const Vec& qdot) {
  const JacNet& net = plant.ideal;
  require_size(q, net.config.input_dim(), "teacher_velocity: q");
  require_size(qdot, net.config.columns, "teacher_velocity: qdot");
  const int n = net.config.layers();
  Vec xdot = Vec::Zero(net.config.output_dim());
  for (int k = 0; k < net.config.columns; ++k) {
    const ColumnStack& col = net.columns[k];
    Vec z = q;
    for (int i = 0; i < n - 1; ++i) z = sigmoid(col.W[i] * z);
    xdot += (col.W[n - 1] * z) * qdot(k);
  }
  return xdot;
}

Mat default_teacher_jacobian(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Mat J = Mat::Zero(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      J(r, c) = 0.3 * (2.0 * u - 1.0);
    }
  }
  for (int i = 0; i < std::min(rows, cols); ++i) J(i, i) += 0.5;
  return J;
}

TeacherPlant make_exact_teacher(const NetConfig& config, const Mat& jacobian,
                                std::uint64_t seed, double scale) {
  config.validate();
  if (jacobian.rows() != config.output_dim() ||
      jacobian.cols() != config.columns) {
    throw DimensionError("teacher Jacobian must be " +
                         std::to_string(config.output_dim()) + "x" +
                         std::to_string(config.columns));
  }
  std::mt19937_64 rng(seed);
  auto uniform = [&](Mat& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        m(r, c) = scale * (2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0);
  };
  // Output weights W_out with W_out f = column exactly, plus a random part
  // that is orthogonal to f.
  auto solve_output = [&](const Vec& f, const Vec& column) {
    Mat R(column.size(), f.size());
    uniform(R);
    const double ff = f.squaredNorm();
    const Mat projector = Mat::Identity(f.size(), f.size()) - f * f.transpose() / ff;
    return Mat(column * f.transpose() / ff + R * projector);
  };

  const int n = config.layers();
  TeacherPlant plant{JacNet{config, {}}};
  plant.ideal.columns.resize(config.columns);
  for (int k = 0; k < config.columns; ++k) {
    ColumnStack& col = plant.ideal.columns[k];
    col.W.resize(n);
    col.Wo.resize(n - 2);
    col.W[0] = Mat::Zero(config.layer_sizes[1], config.layer_sizes[0]);
    for (int i = 1; i < n - 1; ++i) {
      col.W[i] = Mat(config.layer_sizes[i + 1], config.layer_sizes[i]);
      uniform(col.W[i]);
    }
    // Hidden activations are constant because the first layer is zero.
    std::vector<Vec> act;
    Vec z = Vec::Zero(config.input_dim());
    for (int i = 0; i < n - 1; ++i) {
      z = sigmoid(col.W[i] * z);
      act.push_back(z);
    }
    const Vec column = jacobian.col(k);
    for (int s = 0; s < n - 2; ++s) col.Wo[s] = solve_output(act[s], column);
    col.W[n - 1] = solve_output(act[n - 2], column);
  }
  return plant;
}

int plant_joints(const Plant& plant) {
  return std::visit(
      [](const auto& p) -> int {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, DHChain>)
          return p.joints();
        else
          return p.ideal.config.columns;
      },
      plant);
}

int plant_task_dims(const Plant& plant) {
  return std::visit(
      [](const auto& p) -> int {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, DHChain>)
          return p.task_dims;
        else
          return p.ideal.config.output_dim();
      },
      plant);
}

Vec plant_velocity(const Plant& plant, const Vec& q, const Vec& qdot) {
  if (const auto* chain = std::get_if<DHChain>(&plant)) {
    require_size(qdot, chain->joints(), "plant_velocity: qdot");
    return analytic_jacobian(*chain, q) * qdot;
  }
  return teacher_velocity(std::get<TeacherPlant>(plant), q, qdot);
}

Mat plant_jacobian(const Plant& plant, const Vec& q) {
  if (const auto* chain = std::get_if<DHChain>(&plant))
    return analytic_jacobian(*chain, q);
  return assemble_jacobian(std::get<TeacherPlant>(plant).ideal, q);
}

PlantState initial_state(const Plant& plant, const Vec& q0, const Vec& x0) {
  require_size(q0, plant_joints(plant), "initial joint vector");
  if (!q0.allFinite()) throw NonFiniteError("initial joint vector not finite");
  PlantState state;
  state.q = q0;
  if (const auto* chain = std::get_if<DHChain>(&plant)) {
    state.x = forward_kinematics(*chain, q0);
  } else {
    require_size(x0, plant_task_dims(plant), "teacher start position");
    state.x = x0;
  }
  return state;
}

PlantState plant_step(const Plant& plant, const PlantState& state,
                      const Vec& qdot_cmd, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("plant_step: dt must be > 0");
  require_size(qdot_cmd, state.q.size(), "plant_step: command");
  if (!qdot_cmd.allFinite())
    throw NonFiniteError("plant_step: non-finite joint command");
  PlantState next;
  next.q = state.q + dt * qdot_cmd;
  next.t = state.t + dt;
  if (const auto* chain = std::get_if<DHChain>(&plant)) {
    next.x = forward_kinematics(*chain, next.q);
  } else {
    next.x = state.x +
             dt * teacher_velocity(std::get<TeacherPlant>(plant), state.q, qdot_cmd);
  }
  return next;
}

}  // namespace jacnet
