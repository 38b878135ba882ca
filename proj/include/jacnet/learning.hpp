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

#ifndef JACNET_LEARNING_HPP_
#define JACNET_LEARNING_HPP_

#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "jacnet/controller.hpp"
#include "jacnet/network.hpp"
#include "jacnet/types.hpp"

namespace jacnet {

// Layer pairs
// -----------
// Learning operates on pairs of consecutive layers (input weights, output
// weights). Pair s < n-2 is modular system s: (W[s], Wo[s]). Pair n-2 is the
// tracking pair (W[n-2], W[n-1]). Every pair sees the input z = input[s] of
// its first layer.

int pair_count(const NetConfig& config);
const Mat& pair_input_weights(const ColumnStack& column, int pair);
const Mat& pair_output_weights(const ColumnStack& column, int pair);
Mat& pair_input_weights(ColumnStack& column, int pair);
Mat& pair_output_weights(ColumnStack& column, int pair);

struct PairGains {
  double alpha_in = 1.0;
  double beta_in = 1.0;
  double alpha_out = 1.0;
  double beta_out = 1.0;
};

/// Update gains per layer pair plus the global step multiplier eta:
/// each discrete weight step is eta * dt * (continuous-time law).
struct LearnParams {
  std::vector<PairGains> pairs;
  double eta = 0.01;

  static LearnParams uniform(const NetConfig& config, double alpha,
                             double beta, double eta);
  void validate(const NetConfig& config) const;
};

struct Observer {
  Vec x_hat;
  double kp = 10.0;
  double ks = 0.0;
  Vec bound;
  Vec sat_width;
};

/// Velocity observers of the modular systems. Online control uses n-2
/// observers; pre-training appends one more that trains the tracking pair.
struct ObserverBank {
  std::vector<Observer> systems;
  int exponent = 2;

  /// `count` observers starting at x with bounds and gains of `config`.
  static ObserverBank start_at(const Vec& x, int count,
                               const ControllerConfig& config, double kp);
  void reset(const Vec& x);
  void set_gains(double kp, double ks);
};

// Update-law kernels. They return the continuous-time rate; `slope` holds the
// diagonal of Phi' = sigmoid'(W_in z) * qdot_k and `phi` = sigmoid(W_in z) * qdot_k.

/// alpha Phi'^T W_out^T e z^T - alpha beta |e| W_in
Mat inner_weight_rate(const Vec& slope, const Mat& w_out, const Vec& err,
                      const Vec& z, const Mat& w_in, double alpha, double beta);

/// alpha e (Phi^T - z^T W_in^T Phi'^T) - alpha beta |e| W_out
Mat output_weight_rate(const Vec& phi, const Vec& slope, const Vec& z,
                       const Mat& w_in, const Vec& err, const Mat& w_out,
                       double alpha, double beta);

/// Estimated task velocity of observer `system`:
/// sum_k W_out Phi + kp e + ks r, with (e, r) = (region error, sat) of x - x_hat
/// in region mode and (x - x_hat, sgn) in tracking mode.
Vec observer_velocity(const JacNet& net, const ObserverBank& bank, int system,
                      const Vec& q, const Vec& qdot, const Vec& x, Mode mode);

/// x_hat += dt * xdot_hat.
void observer_integrate(ObserverBank& bank, int system, const Vec& xdot_hat,
                        double dt);

/// Error that drives the weights of observer `system` (estimated region error
/// or estimated error, depending on mode).
Vec observer_error(const ObserverBank& bank, int system, const Vec& x,
                   Mode mode);

// Single-law updates on the live network. Each returns the applied delta
// eta * dt * rate.

Mat update_inner_estimated(JacNet& net, int system, int k, const Vec& q,
                           const Vec& qdot, const Vec& err, double dt,
                           const LearnParams& params);
Mat update_output_estimated(JacNet& net, int system, int k, const Vec& q,
                            const Vec& qdot, const Vec& err, double dt,
                            const LearnParams& params);
Mat update_inner_tracking(JacNet& net, int k, const Vec& q, const Vec& qdot,
                          const Vec& err, double dt, const LearnParams& params);
Mat update_output_tracking(JacNet& net, int k, const Vec& q, const Vec& qdot,
                           const Vec& err, double dt, const LearnParams& params);

struct LearningInput {
  Vec q;
  Vec qdot;
  Vec x;  // measured task position
  /// Error for the tracking pair (region error or tracking error). When
  /// empty the bank must carry an observer for the tracking pair.
  std::optional<Vec> tracking_error;
};

/// Everything one learning step changes, computed from a single snapshot.
struct LearningDeltas {
  std::vector<ColumnStack> weights;
  std::vector<Vec> observer_velocity;
};

enum class Backend { Serial, OpenMP };
Backend parse_backend(std::string_view name);

/// Serial reference. `column_order` permutes the processing order of columns
/// (empty = natural order); the result does not depend on it.
LearningDeltas learning_deltas_serial(const JacNet& net,
                                      const ObserverBank& bank,
                                      const LearningInput& in, double dt,
                                      const LearnParams& params, Mode mode,
                                      std::span<const int> column_order = {});

/// OpenMP kernel over (pair, column) tasks; bit-identical to the serial one.
LearningDeltas learning_deltas_parallel(const JacNet& net,
                                        const ObserverBank& bank,
                                        const LearningInput& in, double dt,
                                        const LearnParams& params, Mode mode);

void apply_deltas(JacNet& net, ObserverBank& bank,
                  const LearningDeltas& deltas, double dt);

/// Observers and all weight laws advanced one step from the same snapshot.
void learning_step(JacNet& net, ObserverBank& bank, const LearningInput& in,
                   double dt, const LearnParams& params, Mode mode,
                   Backend backend = Backend::Serial);

struct Sample {
  double t = 0.0;
  Vec q;
  Vec qdot;
  Vec x;
  Vec xdot;  // measured task velocity
};
using Dataset = std::vector<Sample>;

/// CSV: t,q1..qm,qd1..qdm,x1..xp,xd1..xdp with xd the measured velocity.
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);
Dataset read_dataset_csv(const std::filesystem::path& path);

struct PretrainOptions {
  int epochs = 50;
  double dt = 0.002;
  LearnParams params;
  Mode mode = Mode::Tracking;
  double kp = 10.0;
  double ks = 0.0;
  Vec bound;
  Vec sat_width;
  int exponent = 2;
  /// Learning steps per sample. The first step after the per-sample observer
  /// reset sees zero error; later steps see the accumulated prediction error.
  int hold_steps = 2;
  Backend backend = Backend::Serial;
};

struct PretrainReport {
  /// mean |xdot - J_hat qdot| before training (entry 0) and after each epoch.
  std::vector<double> mean_error;
};

double mean_prediction_error(const JacNet& net, const Dataset& data);

/// Replays the dataset in order, once per epoch, through every modular
/// observer plus an observer on the tracking pair. Each sample is held for
/// `hold_steps` steps; the observed "position" is the integral of the
/// recorded velocity over the hold, and the observers restart at it for every
/// sample, so consecutive samples need not be contiguous.
PretrainReport pretrain(JacNet& net, const Dataset& data,
                        const PretrainOptions& options);

}  // namespace jacnet

#endif  // JACNET_LEARNING_HPP_
