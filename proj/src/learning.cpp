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

#include "jacnet/learning.hpp"

#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

namespace jacnet {

int pair_count(const NetConfig& config) { return config.layers() - 1; }

const Mat& pair_input_weights(const ColumnStack& column, int pair) {
  return column.W[pair];
}

const Mat& pair_output_weights(const ColumnStack& column, int pair) {
  const int estimated = static_cast<int>(column.Wo.size());
  return pair < estimated ? column.Wo[pair] : column.W[pair + 1];
}

Mat& pair_input_weights(ColumnStack& column, int pair) { return column.W[pair]; }

Mat& pair_output_weights(ColumnStack& column, int pair) {
  const int estimated = static_cast<int>(column.Wo.size());
  return pair < estimated ? column.Wo[pair] : column.W[pair + 1];
}

LearnParams LearnParams::uniform(const NetConfig& config, double alpha,
                                 double beta, double eta) {
  LearnParams p;
  p.pairs.assign(pair_count(config), PairGains{alpha, beta, alpha, beta});
  p.eta = eta;
  return p;
}

void LearnParams::validate(const NetConfig& config) const {
  if (static_cast<int>(pairs.size()) != pair_count(config)) {
    throw std::invalid_argument("learning gains given for " +
                                std::to_string(pairs.size()) +
                                " layer pairs, network has " +
                                std::to_string(pair_count(config)));
  }
  for (std::size_t s = 0; s < pairs.size(); ++s) {
    const PairGains& g = pairs[s];
    if (!(g.alpha_in > 0.0) || !(g.alpha_out > 0.0) || !(g.beta_in > 0.0) ||
        !(g.beta_out > 0.0)) {
      throw std::invalid_argument("learning gains alpha/beta of pair " +
                                  std::to_string(s + 1) + " must be > 0");
    }
  }
  if (!(eta >= 0.0)) throw std::invalid_argument("eta must be >= 0");
}

ObserverBank ObserverBank::start_at(const Vec& x, int count,
                                    const ControllerConfig& config, double kp) {
  ObserverBank bank;
  bank.exponent = config.exponent;
  bank.systems.assign(count, Observer{x, kp, config.ks, config.bound, config.sat_width});
  return bank;
}

void ObserverBank::reset(const Vec& x) {
  for (Observer& o : systems) o.x_hat = x;
}

void ObserverBank::set_gains(double kp, double ks) {
  for (Observer& o : systems) {
    o.kp = kp;
    o.ks = ks;
  }
}

Mat inner_weight_rate(const Vec& slope, const Mat& w_out, const Vec& err,
                      const Vec& z, const Mat& w_in, double alpha, double beta) {
  const Vec back = slope.cwiseProduct(w_out.transpose() * err);
  return alpha * (back * z.transpose()) - (alpha * beta * err.norm()) * w_in;
}

Mat output_weight_rate(const Vec& phi, const Vec& slope, const Vec& z,
                       const Mat& w_in, const Vec& err, const Mat& w_out,
                       double alpha, double beta) {
  const Vec linearized = phi - slope.cwiseProduct(w_in * z);
  return alpha * (err * linearized.transpose()) - (alpha * beta * err.norm()) * w_out;
}

namespace {

struct PairSignals {
  Vec phi;
  Vec slope;
};

PairSignals pair_signals(const ColumnForward& fw, int pair, double qdot_k) {
  const Vec& a = fw.act[pair];
  PairSignals s;
  s.phi = a * qdot_k;
  s.slope = a.cwiseProduct((1.0 - a.array()).matrix()) * qdot_k;
  return s;
}

void check_system(const NetConfig& config, const ObserverBank& bank, int system) {
  if (system < 0 || system >= static_cast<int>(bank.systems.size()) ||
      system > pair_count(config) - 1) {
    throw std::out_of_range("observer index " + std::to_string(system) +
                            " out of range");
  }
}

void check_inputs(const JacNet& net, const Vec& q, const Vec& qdot) {
  require_size(q, net.config.input_dim(), "joint vector q");
  require_size(qdot, net.config.columns, "joint velocity qdot");
}

Vec observer_velocity_from(const JacNet& net, const ObserverBank& bank,
                           int system, const std::vector<ColumnForward>& fw,
                           const Vec& qdot, const Vec& x, Mode mode) {
  const Observer& obs = bank.systems[system];
  Vec v = Vec::Zero(net.config.output_dim());
  for (int k = 0; k < net.config.columns; ++k) {
    v += pair_output_weights(net.columns[k], system) * (fw[k].act[system] * qdot(k));
  }
  const Vec dxh = x - obs.x_hat;
  v += obs.kp * feedback_error(dxh, obs.bound, bank.exponent, mode);
  v += obs.ks * robust_term(dxh, obs.sat_width, mode);
  return v;
}

void pair_deltas(const ColumnStack& col, const ColumnForward& fw, int pair,
                 double qdot_k, const Vec& err, double step,
                 const PairGains& g, Mat& d_in, Mat& d_out) {
  const PairSignals sig = pair_signals(fw, pair, qdot_k);
  const Mat& w_in = pair_input_weights(col, pair);
  const Mat& w_out = pair_output_weights(col, pair);
  const Vec& z = fw.input[pair];
  d_in = step * inner_weight_rate(sig.slope, w_out, err, z, w_in, g.alpha_in, g.beta_in);
  d_out = step * output_weight_rate(sig.phi, sig.slope, z, w_in, err, w_out,
                                    g.alpha_out, g.beta_out);
}

Mat& delta_out(ColumnStack& d, int pair) { return pair_output_weights(d, pair); }

struct StepPlan {
  int pairs = 0;
  int observers = 0;
  std::vector<Vec> errors;  // per pair
};

void validate_step(const JacNet& net, const ObserverBank& bank,
                   const LearningInput& in, const LearnParams& params) {
  check_inputs(net, in.q, in.qdot);
  require_size(in.x, net.config.output_dim(), "measured position x");
  params.validate(net.config);
  const int pairs = pair_count(net.config);
  const int observers = static_cast<int>(bank.systems.size());
  if (in.tracking_error) {
    require_size(*in.tracking_error, net.config.output_dim(), "tracking error");
    if (observers != pairs - 1) {
      throw DimensionError("observer bank has " + std::to_string(observers) +
                           " systems, network needs " + std::to_string(pairs - 1));
    }
  } else if (observers != pairs) {
    throw DimensionError("without a tracking error the bank needs " +
                         std::to_string(pairs) + " observers");
  }
  for (const Observer& o : bank.systems) {
    require_size(o.x_hat, net.config.output_dim(), "observer x_hat");
  }
}

LearningDeltas empty_deltas(const JacNet& net, int observers) {
  LearningDeltas d;
  d.weights.resize(net.config.columns);
  for (ColumnStack& c : d.weights) {
    c.W.resize(net.config.layers());
    c.Wo.resize(net.config.estimated_systems());
  }
  d.observer_velocity.resize(observers);
  return d;
}

std::vector<Vec> pair_errors(const JacNet& net, const ObserverBank& bank,
                             const LearningInput& in, Mode mode) {
  std::vector<Vec> errors;
  for (int s = 0; s < static_cast<int>(bank.systems.size()); ++s)
    errors.push_back(observer_error(bank, s, in.x, mode));
  if (in.tracking_error) errors.push_back(*in.tracking_error);
  (void)net;
  return errors;
}

}  // namespace

Vec observer_error(const ObserverBank& bank, int system, const Vec& x, Mode mode) {
  const Observer& obs = bank.systems.at(system);
  return feedback_error(x - obs.x_hat, obs.bound, bank.exponent, mode);
}

Vec observer_velocity(const JacNet& net, const ObserverBank& bank, int system,
                      const Vec& q, const Vec& qdot, const Vec& x, Mode mode) {
  check_system(net.config, bank, system);
  check_inputs(net, q, qdot);
  require_size(x, net.config.output_dim(), "measured position x");
  std::vector<ColumnForward> fw;
  for (const ColumnStack& col : net.columns) fw.push_back(forward_column(col, q));
  return observer_velocity_from(net, bank, system, fw, qdot, x, mode);
}

void observer_integrate(ObserverBank& bank, int system, const Vec& xdot_hat,
                        double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("observer_integrate: dt must be > 0");
  Observer& obs = bank.systems.at(system);
  require_size(xdot_hat, obs.x_hat.size(), "observer velocity");
  if (!xdot_hat.allFinite())
    throw NonFiniteError("observer_integrate: non-finite velocity");
  obs.x_hat += dt * xdot_hat;
}

namespace {

enum class Half { Input, Output };

Mat single_update(JacNet& net, int pair, int k, const Vec& q, const Vec& qdot,
                  const Vec& err, double dt, const LearnParams& params, Half half) {
  check_inputs(net, q, qdot);
  require_size(err, net.config.output_dim(), "error vector");
  if (k < 0 || k >= net.config.columns)
    throw std::out_of_range("column index " + std::to_string(k) + " out of range");
  params.validate(net.config);
  ColumnStack& col = net.columns[k];
  const ColumnForward fw = forward_column(col, q);
  Mat d_in, d_out;
  pair_deltas(col, fw, pair, qdot(k), err, params.eta * dt, params.pairs[pair],
              d_in, d_out);
  if (half == Half::Input) {
    pair_input_weights(col, pair) += d_in;
    return d_in;
  }
  pair_output_weights(col, pair) += d_out;
  return d_out;
}

void check_estimated(const NetConfig& config, int system) {
  if (system < 0 || system >= config.estimated_systems())
    throw std::out_of_range("modular system index " + std::to_string(system) +
                            " out of range");
}

}  // namespace

Mat update_inner_estimated(JacNet& net, int system, int k, const Vec& q,
                           const Vec& qdot, const Vec& err, double dt,
                           const LearnParams& params) {
  check_estimated(net.config, system);
  return single_update(net, system, k, q, qdot, err, dt, params, Half::Input);
}

Mat update_output_estimated(JacNet& net, int system, int k, const Vec& q,
                            const Vec& qdot, const Vec& err, double dt,
                            const LearnParams& params) {
  check_estimated(net.config, system);
  return single_update(net, system, k, q, qdot, err, dt, params, Half::Output);
}

Mat update_inner_tracking(JacNet& net, int k, const Vec& q, const Vec& qdot,
                          const Vec& err, double dt, const LearnParams& params) {
  return single_update(net, pair_count(net.config) - 1, k, q, qdot, err, dt,
                       params, Half::Input);
}

Mat update_output_tracking(JacNet& net, int k, const Vec& q, const Vec& qdot,
                           const Vec& err, double dt, const LearnParams& params) {
  return single_update(net, pair_count(net.config) - 1, k, q, qdot, err, dt,
                       params, Half::Output);
}

Backend parse_backend(std::string_view name) {
  if (name == "serial") return Backend::Serial;
  if (name == "openmp") return Backend::OpenMP;
  throw std::invalid_argument("unknown backend '" + std::string(name) +
                              "' (expected serial|openmp)");
}

LearningDeltas learning_deltas_serial(const JacNet& net, const ObserverBank& bank,
                                      const LearningInput& in, double dt,
                                      const LearnParams& params, Mode mode,
                                      std::span<const int> column_order) {
  validate_step(net, bank, in, params);
  const int m = net.config.columns;
  std::vector<int> order(column_order.begin(), column_order.end());
  if (order.empty()) {
    order.resize(m);
    std::iota(order.begin(), order.end(), 0);
  }
  if (static_cast<int>(order.size()) != m)
    throw std::invalid_argument("column order must list every column once");

  // (a) forward passes with the current weights
  std::vector<ColumnForward> fw(m);
  for (int k : order) fw.at(k) = forward_column(net.columns[k], in.q);

  // (b) observer velocities
  const int observers = static_cast<int>(bank.systems.size());
  LearningDeltas d = empty_deltas(net, observers);
  for (int s = 0; s < observers; ++s)
    d.observer_velocity[s] = observer_velocity_from(net, bank, s, fw, in.qdot, in.x, mode);

  // (c) weight deltas from the same snapshot
  const std::vector<Vec> errors = pair_errors(net, bank, in, mode);
  const double step = params.eta * dt;
  for (int k : order) {
    for (int s = 0; s < pair_count(net.config); ++s) {
      pair_deltas(net.columns[k], fw[k], s, in.qdot(k), errors[s], step,
                  params.pairs[s], d.weights[k].W[s], delta_out(d.weights[k], s));
    }
  }
  return d;
}

LearningDeltas learning_deltas_parallel(const JacNet& net, const ObserverBank& bank,
                                        const LearningInput& in, double dt,
                                        const LearnParams& params, Mode mode) {
  validate_step(net, bank, in, params);
  const int m = net.config.columns;
  const int pairs = pair_count(net.config);
  const int observers = static_cast<int>(bank.systems.size());

  std::vector<ColumnForward> fw(m);
#pragma omp parallel for schedule(static)
  for (int k = 0; k < m; ++k) fw[k] = forward_column(net.columns[k], in.q);

  LearningDeltas d = empty_deltas(net, observers);
#pragma omp parallel for schedule(static)
  for (int s = 0; s < observers; ++s)
    d.observer_velocity[s] = observer_velocity_from(net, bank, s, fw, in.qdot, in.x, mode);

  const std::vector<Vec> errors = pair_errors(net, bank, in, mode);
  const double step = params.eta * dt;
  const int tasks = m * pairs;
#pragma omp parallel for schedule(static)
  for (int task = 0; task < tasks; ++task) {
    const int k = task / pairs;
    const int s = task % pairs;
    pair_deltas(net.columns[k], fw[k], s, in.qdot(k), errors[s], step,
                params.pairs[s], d.weights[k].W[s], delta_out(d.weights[k], s));
  }
  return d;
}

void apply_deltas(JacNet& net, ObserverBank& bank, const LearningDeltas& deltas,
                  double dt) {
  for (int k = 0; k < net.config.columns; ++k) {
    ColumnStack& col = net.columns[k];
    const ColumnStack& dk = deltas.weights[k];
    for (std::size_t i = 0; i < col.W.size(); ++i) col.W[i] += dk.W[i];
    for (std::size_t s = 0; s < col.Wo.size(); ++s) col.Wo[s] += dk.Wo[s];
  }
  for (std::size_t s = 0; s < bank.systems.size(); ++s)
    bank.systems[s].x_hat += dt * deltas.observer_velocity[s];
}

void learning_step(JacNet& net, ObserverBank& bank, const LearningInput& in,
                   double dt, const LearnParams& params, Mode mode,
                   Backend backend) {
  if (!(dt > 0.0)) throw std::invalid_argument("learning_step: dt must be > 0");
  const LearningDeltas d =
      backend == Backend::OpenMP
          ? learning_deltas_parallel(net, bank, in, dt, params, mode)
          : learning_deltas_serial(net, bank, in, dt, params, mode);
  apply_deltas(net, bank, d, dt);
}

// Dataset CSV ----------------------------------------------------------------

namespace {

std::vector<std::string> dataset_header(int m, int p) {
  std::vector<std::string> h{"t"};
  for (int i = 1; i <= m; ++i) h.push_back("q" + std::to_string(i));
  for (int i = 1; i <= m; ++i) h.push_back("qd" + std::to_string(i));
  for (int i = 1; i <= p; ++i) h.push_back("x" + std::to_string(i));
  for (int i = 1; i <= p; ++i) h.push_back("xd" + std::to_string(i));
  return h;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
  if (data.empty()) throw std::invalid_argument("refusing to write an empty dataset");
  const int m = static_cast<int>(data.front().q.size());
  const int p = static_cast<int>(data.front().x.size());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const auto header = dataset_header(m, p);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.17g", v);
    out << buf;
  };
  for (const Sample& s : data) {
    std::snprintf(buf, sizeof buf, "%.17g", s.t);
    out << buf;
    for (double v : s.q) put(v);
    for (double v : s.qdot) put(v);
    for (double v : s.x) put(v);
    for (double v : s.xdot) put(v);
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("dataset " + path.string() + " is empty");
  const auto header = split_csv(line);
  int m = 0, p = 0;
  for (const auto& h : header) {
    if (h.size() > 2 && h.rfind("qd", 0) == 0) continue;
    if (h.size() > 2 && h.rfind("xd", 0) == 0) continue;
    if (h.rfind("q", 0) == 0) ++m;
    if (h.rfind("x", 0) == 0) ++p;
  }
  if (header != dataset_header(m, p)) {
    throw std::runtime_error("dataset " + path.string() +
                             ": header must be t,q1..qm,qd1..qdm,x1..xp,xd1..xdp");
  }
  Dataset data;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw std::runtime_error("dataset " + path.string() + " line " +
                               std::to_string(lineno) + ": expected " +
                               std::to_string(header.size()) + " fields");
    }
    std::vector<double> v(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      std::size_t used = 0;
      try {
        v[i] = std::stod(cells[i], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != cells[i].size()) {
        throw std::runtime_error("dataset " + path.string() + " line " +
                                 std::to_string(lineno) + ": bad number '" + cells[i] + "'");
      }
    }
    Sample s;
    s.t = v[0];
    s.q = Eigen::Map<const Vec>(v.data() + 1, m);
    s.qdot = Eigen::Map<const Vec>(v.data() + 1 + m, m);
    s.x = Eigen::Map<const Vec>(v.data() + 1 + 2 * m, p);
    s.xdot = Eigen::Map<const Vec>(v.data() + 1 + 2 * m + p, p);
    data.push_back(std::move(s));
  }
  return data;
}

// Pre-training ---------------------------------------------------------------

double mean_prediction_error(const JacNet& net, const Dataset& data) {
  if (data.empty()) throw std::invalid_argument("empty dataset");
  double sum = 0.0;
  for (const Sample& s : data)
    sum += (s.xdot - jacobian_velocity(net, s.q, s.qdot)).norm();
  return sum / static_cast<double>(data.size());
}

PretrainReport pretrain(JacNet& net, const Dataset& data,
                        const PretrainOptions& options) {
  if (data.empty()) throw std::invalid_argument("pretrain: empty dataset");
  if (options.epochs < 0) throw std::invalid_argument("pretrain: epochs must be >= 0");
  if (!(options.dt > 0.0)) throw std::invalid_argument("pretrain: dt must be > 0");
  if (options.hold_steps < 1) throw std::invalid_argument("pretrain: hold_steps must be >= 1");
  net.validate();
  options.params.validate(net.config);
  const int p = net.config.output_dim();
  for (const Sample& s : data) {
    require_size(s.q, net.config.input_dim(), "dataset q");
    require_size(s.qdot, net.config.columns, "dataset qdot");
    require_size(s.x, p, "dataset x");
    require_size(s.xdot, p, "dataset xdot");
  }

  ControllerConfig gains = ControllerConfig::standard(p);
  gains.ks = options.ks;
  gains.exponent = options.exponent;
  if (options.bound.size() == p) gains.bound = options.bound;
  if (options.sat_width.size() == p) gains.sat_width = options.sat_width;
  ObserverBank bank = ObserverBank::start_at(data.front().x, pair_count(net.config),
                                             gains, options.kp);

  PretrainReport report;
  report.mean_error.push_back(mean_prediction_error(net, data));
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    for (const Sample& s : data) {
      Vec x = s.x;
      bank.reset(x);
      for (int h = 0; h < options.hold_steps; ++h) {
        learning_step(net, bank, LearningInput{s.q, s.qdot, x, std::nullopt},
                      options.dt, options.params, options.mode, options.backend);
        x += options.dt * s.xdot;
      }
    }
    if (!net.all_finite()) {
      throw NonFiniteError("pretrain: weights became non-finite in epoch " +
                           std::to_string(epoch + 1));
    }
    report.mean_error.push_back(mean_prediction_error(net, data));
  }
  return report;
}

}  // namespace jacnet
