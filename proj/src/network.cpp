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

#include "jacnet/network.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/SVD>

namespace jacnet {

namespace {

std::string dims(Eigen::Index r, Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

// 53 random bits mapped onto [0, 1). Unlike std::uniform_real_distribution
// this is fixed by the standard's definition of mt19937_64.
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void fill_uniform(Mat& m, std::mt19937_64& rng, double scale) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = scale * (2.0 * unit_uniform(rng) - 1.0);
}

}  // namespace

void NetConfig::validate() const {
  if (layer_sizes.size() < 4) {
    throw std::invalid_argument(
        "network needs at least 3 weight layers (4 layer sizes), got " +
        std::to_string(layer_sizes.size()) + " sizes");
  }
  for (std::size_t i = 0; i < layer_sizes.size(); ++i) {
    if (layer_sizes[i] <= 0) {
      throw std::invalid_argument("layer size " + std::to_string(i) +
                                  " must be positive");
    }
  }
  if (columns < 1) throw std::invalid_argument("column count must be >= 1");
  if (activation != Activation::Sigmoid) {
    throw std::invalid_argument("only sigmoid activations are supported");
  }
}

NetConfig NetConfig::standard() {
  return NetConfig{{3, 24, 24, 24, 3}, Activation::Sigmoid, 3};
}

void JacNet::validate() const {
  config.validate();
  const int n = config.layers();
  if (static_cast<int>(columns.size()) != config.columns) {
    throw DimensionError("network has " + std::to_string(columns.size()) +
                         " columns, config says " +
                         std::to_string(config.columns));
  }
  for (std::size_t k = 0; k < columns.size(); ++k) {
    const ColumnStack& col = columns[k];
    if (static_cast<int>(col.W.size()) != n ||
        static_cast<int>(col.Wo.size()) != n - 2) {
      throw DimensionError("column " + std::to_string(k + 1) +
                           " has the wrong number of layers");
    }
    for (int i = 0; i < n; ++i) {
      const Mat& w = col.W[i];
      if (w.rows() != config.layer_sizes[i + 1] ||
          w.cols() != config.layer_sizes[i]) {
        throw DimensionError(
            "W[" + std::to_string(i + 1) + "][" + std::to_string(k + 1) +
            "] is " + dims(w.rows(), w.cols()) + ", expected " +
            dims(config.layer_sizes[i + 1], config.layer_sizes[i]));
      }
    }
    for (int s = 0; s < n - 2; ++s) {
      const Mat& w = col.Wo[s];
      if (w.rows() != config.output_dim() ||
          w.cols() != config.layer_sizes[s + 1]) {
        throw DimensionError(
            "Wo[" + std::to_string(s + 1) + "][" + std::to_string(k + 1) +
            "] is " + dims(w.rows(), w.cols()) + ", expected " +
            dims(config.output_dim(), config.layer_sizes[s + 1]));
      }
    }
  }
}

double JacNet::weight_norm() const {
  double sq = 0.0;
  for (const ColumnStack& col : columns) {
    for (const Mat& w : col.W) sq += w.squaredNorm();
    for (const Mat& w : col.Wo) sq += w.squaredNorm();
  }
  return std::sqrt(sq);
}

bool JacNet::all_finite() const {
  for (const ColumnStack& col : columns) {
    for (const Mat& w : col.W)
      if (!w.allFinite()) return false;
    for (const Mat& w : col.Wo)
      if (!w.allFinite()) return false;
  }
  return true;
}

bool identical(const JacNet& a, const JacNet& b) {
  if (!(a.config == b.config) || a.columns.size() != b.columns.size())
    return false;
  auto same = [](const std::vector<Mat>& x, const std::vector<Mat>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i].rows() != y[i].rows() || x[i].cols() != y[i].cols())
        return false;
      // Bitwise: memcmp semantics, so -0.0 != 0.0 and NaN payloads count.
      if (std::memcmp(x[i].data(), y[i].data(),
                      sizeof(double) * static_cast<std::size_t>(x[i].size())) != 0)
        return false;
    }
    return true;
  };
  for (std::size_t k = 0; k < a.columns.size(); ++k) {
    if (!same(a.columns[k].W, b.columns[k].W) ||
        !same(a.columns[k].Wo, b.columns[k].Wo))
      return false;
  }
  return true;
}

Vec sigmoid(const Vec& v) {
  return v.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
}

Vec sigmoid_slope(const Vec& v) {
  return v.unaryExpr([](double x) {
    const double s = 1.0 / (1.0 + std::exp(-x));
    return s * (1.0 - s);
  });
}

Eigen::DiagonalMatrix<double, Eigen::Dynamic> sigmoid_prime_diag(const Vec& v) {
  return sigmoid_slope(v).asDiagonal();
}

ColumnForward forward_column(const ColumnStack& column, const Vec& q) {
  const int n = static_cast<int>(column.W.size());
  ColumnForward f;
  f.input.reserve(n);
  f.pre.reserve(n - 1);
  f.act.reserve(n - 1);
  f.input.push_back(q);
  for (int i = 0; i < n - 1; ++i) {
    f.pre.push_back(column.W[i] * f.input.back());
    f.act.push_back(sigmoid(f.pre.back()));
    f.input.push_back(f.act.back());
  }
  return f;
}

Vec hidden_state(const JacNet& net, int k, int layer, const Vec& q) {
  const int n = net.config.layers();
  if (k < 0 || k >= net.config.columns) {
    throw std::out_of_range("column index " + std::to_string(k) +
                            " out of range");
  }
  if (layer < 0 || layer > n - 2) {
    throw std::out_of_range("layer index " + std::to_string(layer) +
                            " out of range [0, " + std::to_string(n - 2) + "]");
  }
  require_size(q, net.config.input_dim(), "hidden_state: q");
  Vec z = q;
  for (int i = 0; i < layer; ++i) z = sigmoid(net.columns[k].W[i] * z);
  return z;
}

Mat assemble_jacobian(const JacNet& net, const Vec& q) {
  require_size(q, net.config.input_dim(), "assemble_jacobian: q");
  const int n = net.config.layers();
  Mat J(net.config.output_dim(), net.config.columns);
  for (int k = 0; k < net.config.columns; ++k) {
    const ColumnStack& col = net.columns[k];
    Vec z = q;
    for (int i = 0; i < n - 1; ++i) z = sigmoid(col.W[i] * z);
    J.col(k) = col.W[n - 1] * z;
  }
  return J;
}

Vec jacobian_velocity(const JacNet& net, const Vec& q, const Vec& qdot) {
  require_size(qdot, net.config.columns, "jacobian_velocity: qdot");
  return assemble_jacobian(net, q) * qdot;
}

Mat pseudoinverse(const Mat& J, double cutoff) {
  if (!J.allFinite()) throw NonFiniteError("pseudoinverse: non-finite input");
  if (J.size() == 0) return Mat::Zero(J.cols(), J.rows());
  Eigen::JacobiSVD<Mat> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  const double threshold = cutoff * sv(0);
  Vec inv = Vec::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > threshold) inv(i) = 1.0 / sv(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

JacNet init_weights(const NetConfig& config, std::uint64_t seed, double scale) {
  config.validate();
  if (!(scale >= 0.0)) throw std::invalid_argument("init scale must be >= 0");
  std::mt19937_64 rng(seed);
  const int n = config.layers();
  JacNet net{config, {}};
  net.columns.resize(config.columns);
  for (ColumnStack& col : net.columns) {
    for (int i = 0; i < n; ++i) {
      Mat w(config.layer_sizes[i + 1], config.layer_sizes[i]);
      fill_uniform(w, rng, scale);
      col.W.push_back(std::move(w));
    }
    for (int s = 0; s < n - 2; ++s) {
      Mat w(config.output_dim(), config.layer_sizes[s + 1]);
      fill_uniform(w, rng, scale);
      col.Wo.push_back(std::move(w));
    }
  }
  return net;
}

// Weight file
// -----------
//   jacnet v1
//   n <layers>
//   m <columns>
//   layer_sizes <s0> ... <sn>
//   activation sigmoid
//   W[l][k] <rows> <cols>      (l = 1..n, k = 1..m)
//   <row-major values, one matrix row per line>
//   Wo[l][k] <rows> <cols>     (l = 1..n-2)
//   ...
//   end
// Columns are written in order; within a column all W then all Wo.

namespace {

void write_matrix(std::ostringstream& os, const std::string& name,
                  const Mat& m) {
  os << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  char buf[40];
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
      if (c) os << ' ';
      os << buf;
    }
    os << '\n';
  }
}

class TokenReader {
 public:
  explicit TokenReader(const std::string& text) : is_(text) {}

  std::string next(const char* expecting) {
    std::string tok;
    if (!(is_ >> tok)) {
      throw WeightFileError(std::string("weight file truncated: expected ") +
                            expecting);
    }
    return tok;
  }

  long integer(const char* expecting) {
    const std::string tok = next(expecting);
    long v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw WeightFileError(std::string("weight file: bad integer '") + tok +
                            "' for " + expecting);
    }
    return v;
  }

  double real(const std::string& where) {
    const std::string tok = next(where.c_str());
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw WeightFileError("weight file: bad number '" + tok + "' in " +
                            where);
    }
    return v;
  }

  void expect(const std::string& word) {
    const std::string tok = next(word.c_str());
    if (tok != word) {
      throw WeightFileError("weight file: expected '" + word + "', got '" +
                            tok + "'");
    }
  }

 private:
  std::istringstream is_;
};

Mat read_matrix(TokenReader& in, const std::string& name, long rows,
                long cols) {
  in.expect(name);
  const long r = in.integer(name.c_str());
  const long c = in.integer(name.c_str());
  if (r != rows || c != cols) {
    throw WeightFileError("weight file: " + name + " is " +
                          dims(r, c) + " but layer_sizes implies " +
                          dims(rows, cols));
  }
  Mat m(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j) m(i, j) = in.real(name);
  return m;
}

std::string layer_name(const char* prefix, int l, int k) {
  return std::string(prefix) + "[" + std::to_string(l) + "][" +
         std::to_string(k) + "]";
}

}  // namespace

std::string serialize_weights(const JacNet& net) {
  net.validate();
  std::ostringstream os;
  const NetConfig& cfg = net.config;
  os << "jacnet v1\n";
  os << "n " << cfg.layers() << '\n';
  os << "m " << cfg.columns << '\n';
  os << "layer_sizes";
  for (int s : cfg.layer_sizes) os << ' ' << s;
  os << "\nactivation sigmoid\n";
  for (int k = 0; k < cfg.columns; ++k) {
    const ColumnStack& col = net.columns[k];
    for (int i = 0; i < cfg.layers(); ++i)
      write_matrix(os, layer_name("W", i + 1, k + 1), col.W[i]);
    for (int s = 0; s < cfg.estimated_systems(); ++s)
      write_matrix(os, layer_name("Wo", s + 1, k + 1), col.Wo[s]);
  }
  os << "end\n";
  return os.str();
}

JacNet parse_weights(const std::string& text) {
  TokenReader in(text);
  if (in.next("header") != "jacnet" || in.next("version") != "v1") {
    throw WeightFileError("weight file: missing 'jacnet v1' header");
  }
  in.expect("n");
  const long n = in.integer("n");
  in.expect("m");
  const long m = in.integer("m");
  in.expect("layer_sizes");
  if (n < 3 || n > 1000 || m < 1 || m > 100000) {
    throw WeightFileError("weight file: implausible n=" + std::to_string(n) +
                          " m=" + std::to_string(m));
  }
  NetConfig cfg;
  cfg.columns = static_cast<int>(m);
  for (long i = 0; i <= n; ++i)
    cfg.layer_sizes.push_back(static_cast<int>(in.integer("layer_sizes")));
  in.expect("activation");
  if (in.next("activation") != "sigmoid") {
    throw WeightFileError("weight file: only sigmoid activation is supported");
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw WeightFileError(std::string("weight file: ") + e.what());
  }
  JacNet net{cfg, {}};
  net.columns.resize(cfg.columns);
  for (int k = 0; k < cfg.columns; ++k) {
    ColumnStack& col = net.columns[k];
    for (int i = 0; i < cfg.layers(); ++i) {
      col.W.push_back(read_matrix(in, layer_name("W", i + 1, k + 1),
                                  cfg.layer_sizes[i + 1], cfg.layer_sizes[i]));
    }
    for (int s = 0; s < cfg.estimated_systems(); ++s) {
      col.Wo.push_back(read_matrix(in, layer_name("Wo", s + 1, k + 1),
                                   cfg.output_dim(), cfg.layer_sizes[s + 1]));
    }
  }
  in.expect("end");
  return net;
}

void save_weights(const JacNet& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw WeightFileError("cannot write " + path.string());
  out << serialize_weights(net);
  if (!out) throw WeightFileError("failed writing " + path.string());
}

JacNet load_weights(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw WeightFileError("cannot open weight file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_weights(ss.str());
}

}  // namespace jacnet
