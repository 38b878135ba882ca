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

#ifndef JACNET_HARNESS_HPP_
#define JACNET_HARNESS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "jacnet/controller.hpp"
#include "jacnet/kinematics.hpp"
#include "jacnet/learning.hpp"
#include "jacnet/network.hpp"
#include "jacnet/trajectory.hpp"

namespace jacnet {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TrajectoryShape { Lemniscate, Hold };

struct TrajectoryConfig {
  TrajectoryShape shape = TrajectoryShape::Lemniscate;
  LemniscateSpec lemniscate = LemniscateSpec::standard();
  /// Hold target; empty means "stay at the start position".
  Vec hold_x;
  /// Approach goal reached before the main trajectory starts; empty or a
  /// zero duration skips the approach phase.
  Vec approach_goal;
  double approach_duration = 5.0;
};

/// Where the estimated network starts when no weight file is given.
enum class NetInit { Random, Teacher };

struct ExperimentConfig {
  Plant plant = DHChain::default_arm();
  Vec home_q;
  /// Teacher plants integrate their own position starting here; empty means
  /// the first desired position.
  Vec teacher_start_x;
  /// Teacher generation, used when no teacher weight file is given.
  std::uint64_t teacher_seed = 7;
  double teacher_scale = 0.5;

  NetConfig net = NetConfig::standard();
  NetInit init = NetInit::Random;
  double init_scale = 1.0;
  /// Uniform perturbation added to the teacher weights for NetInit::Teacher.
  double teacher_perturbation = 0.0;

  ControllerConfig controller = ControllerConfig::standard();
  LearnParams learn;
  TrajectoryConfig trajectory;
  DatasetOptions dataset;
  PretrainOptions pretrain;

  double dt = 0.002;
  double duration = 25.0;  // seconds, approach phase included
  std::uint64_t seed = 42;
  /// Uniform noise of this half-width (m) on every measured position.
  double disturbance = 0.0;
  int log_every = 1;
  bool teacher_monitor = false;
  Backend backend = Backend::Serial;

  std::filesystem::path weights_in;
  std::filesystem::path weights_out;
  std::filesystem::path log_path;

  Mode mode() const { return controller.mode; }
  void set_mode(Mode mode);
  bool teacher_plant() const;
  const TeacherPlant& teacher() const;

  /// Cross-module consistency; throws ConfigError naming the first failure.
  void validate() const;

  static ExperimentConfig standard();
};

/// Parses the sectioned text format; relative paths resolve against
/// `base_dir`.
ExperimentConfig parse_config(const std::string& text,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Weight file, teacher weights (+ perturbation) or seeded random weights.
JacNet initial_network(const ExperimentConfig& config);

Dataset make_dataset(const ExperimentConfig& config);
PretrainReport pretrain_network(JacNet& net, const ExperimentConfig& config,
                                const Dataset& data);

struct LyapunovValue {
  double measured = 0.0;
  std::optional<double> full;
};

/// Measured part: sum of observer potentials plus the tracking potential.
/// With ideal weights the trace terms |W_ideal - W_hat|_F^2 / (2 eta alpha)
/// of every layer and column are added.
LyapunovValue lyapunov_monitor(const Vec& dx, const ObserverBank& bank,
                               const Vec& x, const ControllerConfig& controller,
                               const JacNet& estimate,
                               const LearnParams& params,
                               const JacNet* ideal = nullptr);

struct ExperimentLog {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t column(std::string_view name) const;
  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
};

std::vector<std::string> log_columns(int joints, int task_dims, int systems);

class ExperimentAborted : public std::runtime_error {
 public:
  ExperimentAborted(std::size_t step, const std::string& what);
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

struct ExperimentResult {
  ExperimentLog log;
  JacNet final_net;
  double max_weight_norm = 0.0;
  std::size_t steps = 0;
  std::size_t clamped_steps = 0;
};

/// Sense, control, learn, actuate at a fixed dt: approach phase, then the
/// main trajectory. Deterministic in the config. Throws ExperimentAborted on
/// the first non-finite state.
ExperimentResult run_experiment(const ExperimentConfig& config, JacNet net);

}  // namespace jacnet

#endif  // JACNET_HARNESS_HPP_
