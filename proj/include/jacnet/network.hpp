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

#ifndef JACNET_NETWORK_HPP_
#define JACNET_NETWORK_HPP_

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "jacnet/types.hpp"

namespace jacnet {

enum class Activation { Sigmoid };

/// Shape of the per-column Jacobian network.
///
/// layer_sizes = {input, hidden_1, ..., hidden_{n-1}, output} describes n
/// weight layers. The first n-2 layers each belong to an observer-trained
/// modular system; the last two layers are trained from the tracking error.
struct NetConfig {
  std::vector<int> layer_sizes;
  Activation activation = Activation::Sigmoid;
  int columns = 0;  // joint count m

  int layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
  int estimated_systems() const { return layers() - 2; }
  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }

  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const;

  /// 3-24-24-24-3 with sigmoid activations and three columns.
  static NetConfig standard();

  bool operator==(const NetConfig&) const = default;
};

/// All estimated weights of one Jacobian column.
///
/// W[i] is the input weight matrix of layer i (0-based, i < n), sized
/// layer_sizes[i+1] x layer_sizes[i]. Wo[s] is the output weight matrix of
/// modular system s (s < n-2), sized output x layer_sizes[s+1]. Wo is used for
/// training only and never enters the assembled Jacobian.
struct ColumnStack {
  std::vector<Mat> W;
  std::vector<Mat> Wo;
};

struct JacNet {
  NetConfig config;
  std::vector<ColumnStack> columns;

  /// Checks every matrix against the config; throws DimensionError.
  void validate() const;

  /// Frobenius norm over every weight matrix, Wo included.
  double weight_norm() const;
  bool all_finite() const;
};

/// Exact bitwise equality of configs and every weight.
bool identical(const JacNet& a, const JacNet& b);

Vec sigmoid(const Vec& v);
/// Diagonal entries sigma(v) * (1 - sigma(v)).
Vec sigmoid_slope(const Vec& v);
Eigen::DiagonalMatrix<double, Eigen::Dynamic> sigmoid_prime_diag(const Vec& v);

/// Forward pass of one column, cached for the learning laws.
///   input[i]  : input of layer i (input[0] = q), i < n
///   pre[i]    : W[i] * input[i], i < n-1
///   act[i]    : sigmoid(pre[i]) = input[i+1]
struct ColumnForward {
  std::vector<Vec> input;
  std::vector<Vec> pre;
  std::vector<Vec> act;
};

ColumnForward forward_column(const ColumnStack& column, const Vec& q);

/// Input of layer `layer` for column k: q for layer 0, otherwise the nested
/// sigmoid chain through layers 0..layer-1. Valid for 0 <= layer <= n-2.
Vec hidden_state(const JacNet& net, int k, int layer, const Vec& q);

/// Estimated Jacobian, column k = W[n-1] sigmoid(W[n-2] z_{n-2}).
Mat assemble_jacobian(const JacNet& net, const Vec& q);
Vec jacobian_velocity(const JacNet& net, const Vec& q, const Vec& qdot);

/// Relative singular-value cutoff used by pseudoinverse().
inline constexpr double kPinvCutoff = 1e-8;

/// Moore-Penrose pseudoinverse via SVD. Singular values below
/// cutoff * sigma_max are treated as zero. Throws NonFiniteError.
Mat pseudoinverse(const Mat& J, double cutoff = kPinvCutoff);

/// Weights i.i.d. uniform in [-scale, scale] from a seeded mt19937_64.
/// Draw order: column, then W layers, then Wo layers, each row-major.
JacNet init_weights(const NetConfig& config, std::uint64_t seed, double scale);

class WeightFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void save_weights(const JacNet& net, const std::filesystem::path& path);
JacNet load_weights(const std::filesystem::path& path);

std::string serialize_weights(const JacNet& net);
JacNet parse_weights(const std::string& text);

}  // namespace jacnet

#endif  // JACNET_NETWORK_HPP_
