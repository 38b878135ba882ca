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

#include "jacnet/trajectory.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <variant>

namespace jacnet {

double smoothstep(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  return s * s * (3.0 - 2.0 * s);
}

double smoothstep_rate(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  return 6.0 * s * (1.0 - s);
}

void LemniscateSpec::validate() const {
  if (center.size() == 0) throw std::invalid_argument("lemniscate center is empty");
  require_size(r1, center.size(), "lemniscate r1");
  require_size(r2, center.size(), "lemniscate r2");
  if (!(period > 0.0)) throw std::invalid_argument("lemniscate period must be > 0");
}

LemniscateSpec LemniscateSpec::standard() {
  LemniscateSpec s;
  s.center = Vec{{-0.5, -0.3, -0.1}};
  s.r1 = Vec{{0.1, 0.01, 0.05}};
  s.r2 = Vec{{0.01, 0.05, 0.1}};
  return s;
}

Phase theta(double t, double period) {
  if (!(period > 0.0)) throw std::invalid_argument("theta: period must be > 0");
  const double s = t / period;
  return Phase{2.0 * std::numbers::pi * smoothstep(s),
               2.0 * std::numbers::pi * smoothstep_rate(s) / period};
}

Waypoint lemniscate(const LemniscateSpec& lem, double t) {
  lem.validate();
  double local = t;
  if (lem.repeat && t > 0.0) local = std::fmod(t, lem.period);
  const Phase ph = theta(local, lem.period);
  const double s = std::sin(ph.theta);
  const double c = std::cos(ph.theta);
  const double den = 1.0 + s * s;
  const double f = c / den;
  const double df = -s * (3.0 - s * s) / (den * den);
  Waypoint w;
  w.x = lem.center + f * (lem.r1 + s * lem.r2);
  w.xdot = ph.theta_dot * (df * (lem.r1 + s * lem.r2) + f * c * lem.r2);
  return w;
}

Waypoint approach_trajectory(const Vec& start, const Vec& goal, double duration,
                             double t) {
  require_size(goal, start.size(), "approach goal");
  if (!(duration > 0.0)) return Waypoint{goal, Vec::Zero(goal.size())};
  const double s = t / duration;
  return Waypoint{start + smoothstep(s) * (goal - start),
                  (smoothstep_rate(s) / duration) * (goal - start)};
}

Dataset gen_dataset(const Plant& plant, const Vec& home_q,
                    const DatasetOptions& options) {
  const int m = plant_joints(plant);
  require_size(home_q, m, "home joint vector");
  if (options.samples <= 0) throw std::invalid_argument("dataset samples must be > 0");
  if (!(options.amplitude >= 0.0) || !(options.qdot_range >= 0.0))
    throw std::invalid_argument("dataset ranges must be >= 0");

  std::mt19937_64 rng(options.seed);
  auto uniform = [&rng](double half) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return half * (2.0 * u - 1.0);
  };
  const int n = options.samples;
  Dataset data(n);
  for (int i = 0; i < n; ++i) {
    Sample& s = data[i];
    s.t = i;
    s.q = home_q;
    for (int j = 0; j < m; ++j) s.q(j) += uniform(options.amplitude);
    s.qdot.resize(m);
    for (int j = 0; j < m; ++j) s.qdot(j) = uniform(options.qdot_range);
  }
  const int p = plant_task_dims(plant);
  const DHChain* chain = std::get_if<DHChain>(&plant);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    Sample& s = data[i];
    s.x = chain ? forward_kinematics(*chain, s.q) : Vec::Zero(p);
    s.xdot = plant_velocity(plant, s.q, s.qdot);
  }
  return data;
}

}  // namespace jacnet
