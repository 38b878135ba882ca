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

#include "jacnet/harness.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace jacnet {

namespace pt = boost::property_tree;

// ExperimentConfig -----------------------------------------------------------

void ExperimentConfig::set_mode(Mode m) { controller.mode = m; }

bool ExperimentConfig::teacher_plant() const {
  return std::holds_alternative<TeacherPlant>(plant);
}

const TeacherPlant& ExperimentConfig::teacher() const {
  const TeacherPlant* t = std::get_if<TeacherPlant>(&plant);
  if (!t) throw ConfigError("experiment plant is not a teacher network");
  return *t;
}

ExperimentConfig ExperimentConfig::standard() {
  ExperimentConfig c;
  c.plant = DHChain::default_arm();
  c.home_q = Vec{{-2.1012, 0.3608, -1.3825}};
  c.net = NetConfig::standard();
  c.controller = ControllerConfig::standard(3);
  c.learn = LearnParams::uniform(c.net, 1.0, 1.0, 0.01);
  c.trajectory.lemniscate = LemniscateSpec::standard();
  c.trajectory.approach_goal = lemniscate(c.trajectory.lemniscate, 0.0).x;
  c.trajectory.approach_duration = 5.0;
  c.init_scale = 1.0;
  c.pretrain.params = LearnParams::uniform(c.net, 1.0, 1e-4, 5e4);
  return c;
}

void ExperimentConfig::validate() const {
  try {
    if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
    if (!(duration >= 0.0)) throw ConfigError("duration must be >= 0");
    if (!(disturbance >= 0.0)) throw ConfigError("disturbance must be >= 0");
    if (log_every < 1) throw ConfigError("log_every must be >= 1");
    if (const DHChain* chain = std::get_if<DHChain>(&plant)) chain->validate();
    net.validate();
    const int m = plant_joints(plant);
    const int p = plant_task_dims(plant);
    if (net.columns != m || net.input_dim() != m) {
      throw ConfigError("network expects " + std::to_string(net.input_dim()) +
                        " joints and " + std::to_string(net.columns) +
                        " columns, plant has " + std::to_string(m) + " joints");
    }
    if (net.output_dim() != p) {
      throw ConfigError("network output size " + std::to_string(net.output_dim()) +
                        " differs from plant task size " + std::to_string(p));
    }
    if (teacher_plant() && !(teacher().ideal.config == net)) {
      throw ConfigError("teacher network shape differs from the estimated network");
    }
    require_size(home_q, m, "home joint vector");
    if (teacher_start_x.size() != 0) require_size(teacher_start_x, p, "teacher start x");
    controller.validate();
    require_size(controller.bound, p, "region bounds b");
    learn.validate(net);
    pretrain.params.validate(net);
    if (pretrain.epochs < 0) throw ConfigError("pretrain epochs must be >= 0");
    if (!(pretrain.dt > 0.0)) throw ConfigError("pretrain dt must be > 0");
    if (pretrain.hold_steps < 1) throw ConfigError("pretrain hold_steps must be >= 1");
    const TrajectoryConfig& tr = trajectory;
    if (tr.shape == TrajectoryShape::Lemniscate) {
      tr.lemniscate.validate();
      require_size(tr.lemniscate.center, p, "lemniscate center");
    }
    if (tr.hold_x.size() != 0) require_size(tr.hold_x, p, "hold position");
    if (tr.approach_goal.size() != 0) require_size(tr.approach_goal, p, "approach goal");
    if (!(tr.approach_duration >= 0.0)) throw ConfigError("approach duration must be >= 0");
    if (init == NetInit::Teacher && !teacher_plant() && weights_in.empty())
      throw ConfigError("init = teacher needs a teacher plant");
    if (teacher_monitor && !teacher_plant())
      throw ConfigError("the full Lyapunov monitor needs a teacher plant");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

// Config parsing -------------------------------------------------------------

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"experiment",
       {"dt", "duration", "seed", "disturbance", "log_every", "backend", "mode",
        "teacher_monitor", "weights_in", "weights_out", "log", "init",
        "init_scale", "teacher_perturbation"}},
      {"plant", {"home_q"}},
      {"chain", {"a", "alpha", "d", "theta_offset", "task_dims"}},
      {"teacher", {"weights", "seed", "scale", "start_x"}},
      {"network", {"layer_sizes", "activation"}},
      {"controller",
       {"mode", "k0", "kT", "ramp", "kp_tracking", "ks", "b", "a", "N",
        "max_joint_speed"}},
      {"learning", {"alpha", "beta", "eta"}},
      {"trajectory",
       {"shape", "center", "r1", "r2", "period", "repeat", "hold_x",
        "approach_goal", "approach_duration"}},
      {"dataset", {"samples", "amplitude", "qdot_range", "seed"}},
      {"pretrain", {"epochs", "dt", "alpha", "beta", "eta", "mode", "kp", "ks", "hold_steps"}},
  };
  return s;
}

std::vector<double> parse_numbers(const std::string& text, const std::string& key) {
  std::string cleaned = text;
  for (char& c : cleaned)
    if (c == ',' || c == '[' || c == ']') c = ' ';
  std::istringstream in(cleaned);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != tok.size())
      throw ConfigError("key '" + key + "': bad number '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("key '" + key + "' is empty");
  return out;
}

class Section {
 public:
  Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  bool has(const std::string& key) const { return tree_ && tree_->count(key) > 0; }

  std::string text(const std::string& key) const {
    return tree_->get<std::string>(key);
  }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const auto v = parse_numbers(text(key), full(key));
    if (v.size() != 1) throw ConfigError("key '" + full(key) + "' must be a scalar");
    return v[0];
  }

  long long integer(const std::string& key, long long fallback) const {
    const double v = number(key, static_cast<double>(fallback));
    if (v != std::floor(v)) throw ConfigError("key '" + full(key) + "' must be an integer");
    return static_cast<long long>(v);
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const std::string t = text(key);
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(t, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != t.size() || t.front() == '-')
      throw ConfigError("key '" + full(key) + "' must be a non-negative integer");
    return v;
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string t = text(key);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ConfigError("key '" + full(key) + "' must be true or false");
  }

  /// Vector of length n; a single value is broadcast.
  Vec vector(const std::string& key, const Vec& fallback, int n = -1) const {
    if (!has(key)) return fallback;
    const auto v = parse_numbers(text(key), full(key));
    if (n > 0 && v.size() == 1) return Vec::Constant(n, v[0]);
    if (n > 0 && static_cast<int>(v.size()) != n) {
      throw ConfigError("key '" + full(key) + "' needs " + std::to_string(n) +
                        " values, got " + std::to_string(v.size()));
    }
    return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
  }

  std::string full(const std::string& key) const { return name_ + "." + key; }

 private:
  const pt::ptree* tree_;
  std::string name_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) return base / path;
  return path;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text,
                              const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [name, section] : tree) {
    const auto it = schema().find(name);
    if (it == schema().end()) {
      if (section.empty() && !section.data().empty())
        throw ConfigError("key '" + name + "' outside any section");
      throw ConfigError("unknown config section [" + name + "]");
    }
    for (const auto& entry : section) {
      if (!it->second.count(entry.first))
        throw ConfigError("unknown key '" + entry.first + "' in [" + name + "]");
    }
  }
  auto section = [&tree](const std::string& name) {
    const auto child = tree.get_child_optional(name);
    return Section(child ? &*child : nullptr, name);
  };

  ExperimentConfig c = ExperimentConfig::standard();

  const Section net = section("network");
  if (net.has("layer_sizes")) {
    const Vec sizes = net.vector("layer_sizes", Vec());
    c.net.layer_sizes.clear();
    for (double s : sizes) {
      if (s != std::floor(s) || s < 1.0)
        throw ConfigError("network.layer_sizes must be positive integers");
      c.net.layer_sizes.push_back(static_cast<int>(s));
    }
    c.net.columns = c.net.layer_sizes.front();
  }
  if (net.has("activation") && net.text("activation") != "sigmoid")
    throw ConfigError("network.activation: only sigmoid is supported");

  const Section chain = section("chain");
  const Section teacher = section("teacher");
  if (tree.get_child_optional("chain") && tree.get_child_optional("teacher"))
    throw ConfigError("config has both [chain] and [teacher]; choose one plant");
  if (tree.get_child_optional("chain")) {
    const Vec a = chain.vector("a", Vec());
    const int m = static_cast<int>(a.size());
    if (m == 0) throw ConfigError("[chain] needs key 'a'");
    const Vec alpha = chain.vector("alpha", Vec::Zero(m), m);
    const Vec d = chain.vector("d", Vec::Zero(m), m);
    const Vec off = chain.vector("theta_offset", Vec::Zero(m), m);
    DHChain ch;
    for (int i = 0; i < m; ++i) ch.links.push_back(DHLink{a(i), alpha(i), d(i), off(i)});
    ch.task_dims = static_cast<int>(chain.integer("task_dims", 3));
    c.plant = ch;
  }

  const Section exp = section("experiment");
  c.dt = exp.number("dt", c.dt);
  c.duration = exp.number("duration", c.duration);
  c.seed = exp.unsigned_integer("seed", c.seed);
  c.disturbance = exp.number("disturbance", c.disturbance);
  c.log_every = static_cast<int>(exp.integer("log_every", c.log_every));
  c.teacher_monitor = exp.boolean("teacher_monitor", c.teacher_monitor);
  c.init_scale = exp.number("init_scale", c.init_scale);
  c.teacher_perturbation = exp.number("teacher_perturbation", c.teacher_perturbation);
  try {
    if (exp.has("backend")) c.backend = parse_backend(exp.text("backend"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("experiment.backend: ") + e.what());
  }
  if (exp.has("init")) {
    const std::string init = exp.text("init");
    if (init == "random") c.init = NetInit::Random;
    else if (init == "teacher") c.init = NetInit::Teacher;
    else throw ConfigError("experiment.init must be random|teacher");
  }
  if (exp.has("weights_in")) c.weights_in = resolve(base_dir, exp.text("weights_in"));
  if (exp.has("weights_out")) c.weights_out = resolve(base_dir, exp.text("weights_out"));
  if (exp.has("log")) c.log_path = resolve(base_dir, exp.text("log"));

  const int p = c.net.output_dim();
  const Section ctl = section("controller");
  c.controller = ControllerConfig::standard(p);
  try {
    if (ctl.has("mode")) c.controller.mode = parse_mode(ctl.text("mode"));
    if (exp.has("mode")) c.controller.mode = parse_mode(exp.text("mode"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("mode: ") + e.what());
  }
  c.controller.region_kp.k0 = ctl.number("k0", c.controller.region_kp.k0);
  c.controller.region_kp.kT = ctl.number("kT", c.controller.region_kp.kT);
  c.controller.region_kp.ramp = ctl.number("ramp", c.controller.region_kp.ramp);
  c.controller.kp_tracking = ctl.number("kp_tracking", c.controller.kp_tracking);
  c.controller.ks = ctl.number("ks", c.controller.ks);
  c.controller.bound = ctl.vector("b", c.controller.bound, p);
  c.controller.sat_width = ctl.vector("a", c.controller.sat_width, p);
  c.controller.exponent = static_cast<int>(ctl.integer("N", c.controller.exponent));
  c.controller.max_joint_speed = ctl.number("max_joint_speed", c.controller.max_joint_speed);

  const Section learn = section("learning");
  c.learn = LearnParams::uniform(c.net, learn.number("alpha", 1.0),
                                 learn.number("beta", 1.0), learn.number("eta", 0.01));

  const int m = c.net.columns;
  const Section plant = section("plant");
  if (plant.has("home_q")) c.home_q = plant.vector("home_q", Vec(), m);
  else if (c.home_q.size() != m) c.home_q = Vec::Zero(m);

  if (tree.get_child_optional("teacher")) {
    c.teacher_seed = teacher.unsigned_integer("seed", c.teacher_seed);
    c.teacher_scale = teacher.number("scale", c.teacher_scale);
    c.teacher_start_x = teacher.vector("start_x", Vec(), p);
    TeacherPlant tp;
    if (teacher.has("weights")) {
      tp.ideal = load_weights(resolve(base_dir, teacher.text("weights")));
    } else {
      tp = make_exact_teacher(c.net, default_teacher_jacobian(p, m, c.teacher_seed),
                              c.teacher_seed, c.teacher_scale);
    }
    c.plant = std::move(tp);
  }

  const Section traj = section("trajectory");
  if (traj.has("shape")) {
    const std::string s = traj.text("shape");
    if (s == "lemniscate") c.trajectory.shape = TrajectoryShape::Lemniscate;
    else if (s == "hold") c.trajectory.shape = TrajectoryShape::Hold;
    else throw ConfigError("trajectory.shape must be lemniscate|hold");
  }
  LemniscateSpec& lem = c.trajectory.lemniscate;
  if (lem.center.size() != p) {
    lem.center = Vec::Zero(p);
    lem.r1 = Vec::Zero(p);
    lem.r2 = Vec::Zero(p);
  }
  lem.center = traj.vector("center", lem.center, p);
  lem.r1 = traj.vector("r1", lem.r1, p);
  lem.r2 = traj.vector("r2", lem.r2, p);
  lem.period = traj.number("period", lem.period);
  lem.repeat = traj.boolean("repeat", lem.repeat);
  c.trajectory.hold_x = traj.vector("hold_x", Vec(), p);
  if (c.trajectory.approach_goal.size() != p) c.trajectory.approach_goal = Vec();
  c.trajectory.approach_goal = traj.vector("approach_goal", c.trajectory.approach_goal, p);
  c.trajectory.approach_duration =
      traj.number("approach_duration", c.trajectory.approach_duration);

  const Section ds = section("dataset");
  c.dataset.samples = static_cast<int>(ds.integer("samples", c.dataset.samples));
  c.dataset.amplitude = ds.number("amplitude", c.dataset.amplitude);
  c.dataset.qdot_range = ds.number("qdot_range", c.dataset.qdot_range);
  c.dataset.seed = ds.unsigned_integer("seed", c.dataset.seed);

  const Section pre = section("pretrain");
  c.pretrain.epochs = static_cast<int>(pre.integer("epochs", c.pretrain.epochs));
  c.pretrain.dt = pre.number("dt", c.pretrain.dt);
  c.pretrain.params = LearnParams::uniform(c.net, pre.number("alpha", 1.0),
                                           pre.number("beta", 1e-4),
                                           pre.number("eta", 5e4));
  try {
    if (pre.has("mode")) c.pretrain.mode = parse_mode(pre.text("mode"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("pretrain.mode: ") + e.what());
  }
  c.pretrain.kp = pre.number("kp", c.pretrain.kp);
  c.pretrain.ks = pre.number("ks", c.pretrain.ks);
  c.pretrain.hold_steps = static_cast<int>(pre.integer("hold_steps", c.pretrain.hold_steps));

  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str(), path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

// Network setup --------------------------------------------------------------

JacNet initial_network(const ExperimentConfig& config) {
  if (!config.weights_in.empty()) {
    JacNet net = load_weights(config.weights_in);
    if (!(net.config == config.net)) {
      throw ConfigError("weight file " + config.weights_in.string() +
                        " does not match the configured network shape");
    }
    return net;
  }
  if (config.init == NetInit::Teacher) {
    JacNet net = config.teacher().ideal;
    if (config.teacher_perturbation > 0.0) {
      const JacNet noise = init_weights(config.net, config.seed, config.teacher_perturbation);
      for (std::size_t k = 0; k < net.columns.size(); ++k) {
        for (std::size_t i = 0; i < net.columns[k].W.size(); ++i)
          net.columns[k].W[i] += noise.columns[k].W[i];
        for (std::size_t s = 0; s < net.columns[k].Wo.size(); ++s)
          net.columns[k].Wo[s] += noise.columns[k].Wo[s];
      }
    }
    return net;
  }
  return init_weights(config.net, config.seed, config.init_scale);
}

Dataset make_dataset(const ExperimentConfig& config) {
  return gen_dataset(config.plant, config.home_q, config.dataset);
}

PretrainReport pretrain_network(JacNet& net, const ExperimentConfig& config,
                                const Dataset& data) {
  PretrainOptions options = config.pretrain;
  options.bound = config.controller.bound;
  options.sat_width = config.controller.sat_width;
  options.exponent = config.controller.exponent;
  options.backend = config.backend;
  return pretrain(net, data, options);
}

// Monitor --------------------------------------------------------------------

LyapunovValue lyapunov_monitor(const Vec& dx, const ObserverBank& bank,
                               const Vec& x, const ControllerConfig& controller,
                               const JacNet& estimate, const LearnParams& params,
                               const JacNet* ideal) {
  const Mode mode = controller.mode;
  LyapunovValue v;
  for (const Observer& o : bank.systems)
    v.measured += potential(x - o.x_hat, o.bound, bank.exponent, mode);
  v.measured += potential(dx, controller.bound, controller.exponent, mode);
  if (!ideal) return v;

  if (!(ideal->config == estimate.config))
    throw DimensionError("ideal and estimated networks differ in shape");
  params.validate(estimate.config);
  const int pairs = pair_count(estimate.config);
  auto gain = [&params](double alpha) {
    return params.eta > 0.0 ? params.eta * alpha : alpha;
  };
  double trace = 0.0;
  for (std::size_t k = 0; k < estimate.columns.size(); ++k) {
    const ColumnStack& w = estimate.columns[k];
    const ColumnStack& wi = ideal->columns[k];
    for (int s = 0; s < pairs; ++s) {
      const PairGains& g = params.pairs[s];
      trace += (pair_input_weights(wi, s) - pair_input_weights(w, s)).squaredNorm() /
               (2.0 * gain(g.alpha_in));
      trace += (pair_output_weights(wi, s) - pair_output_weights(w, s)).squaredNorm() /
               (2.0 * gain(g.alpha_out));
    }
  }
  v.full = v.measured + trace;
  return v;
}

// Log ------------------------------------------------------------------------

std::size_t ExperimentLog::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw std::out_of_range("no log column named " + std::string(name));
}

std::string ExperimentLog::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out += ',';
    out += columns[i];
  }
  out += '\n';
  char buf[32];
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      if (std::isnan(row[i])) continue;  // absent value
      std::snprintf(buf, sizeof buf, "%.17g", row[i]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void ExperimentLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write log " + path.string());
  out << to_csv();
  if (!out) throw std::runtime_error("failed writing log " + path.string());
}

std::vector<std::string> log_columns(int joints, int task_dims, int systems) {
  std::vector<std::string> c{"t"};
  auto indexed = [&c](const std::string& prefix, int n) {
    for (int i = 1; i <= n; ++i) c.push_back(prefix + std::to_string(i));
  };
  indexed("q", joints);
  indexed("qd", joints);
  indexed("x", task_dims);
  indexed("xd", task_dims);
  indexed("dx", task_dims);
  c.push_back("dx_norm");
  for (int l = 1; l <= systems; ++l) {
    indexed("dxh" + std::to_string(l) + "_", task_dims);
    c.push_back("dxh" + std::to_string(l) + "_norm");
  }
  c.push_back("kp");
  c.push_back("V_meas");
  c.push_back("V_full");
  return c;
}

ExperimentAborted::ExperimentAborted(std::size_t step, const std::string& what)
    : std::runtime_error("aborted at step " + std::to_string(step) + ": " + what),
      step_(step) {}

// Closed loop ----------------------------------------------------------------

namespace {

struct Schedule {
  const ExperimentConfig& config;
  Vec start;
  std::size_t approach_steps = 0;

  double main_time(std::size_t step) const {
    const double t = static_cast<double>(step) * config.dt;
    return approach_steps ? t - config.trajectory.approach_duration : t;
  }

  Waypoint desired(std::size_t step) const {
    const TrajectoryConfig& tr = config.trajectory;
    if (step < approach_steps) {
      return approach_trajectory(start, tr.approach_goal, tr.approach_duration,
                                 static_cast<double>(step) * config.dt);
    }
    const double tm = std::max(0.0, main_time(step));
    if (tr.shape == TrajectoryShape::Lemniscate) return lemniscate(tr.lemniscate, tm);
    const Vec& hold = tr.hold_x.size() ? tr.hold_x
                                       : (approach_steps ? tr.approach_goal : start);
    return Waypoint{hold, Vec::Zero(hold.size())};
  }

  double kp(std::size_t step) const {
    if (config.mode() == Mode::Tracking) return config.controller.kp_tracking;
    return config.controller.region_kp.at(std::max(0.0, main_time(step)));
  }
};

Vec measured_position(const Plant& plant, const PlantState& s) {
  if (const DHChain* chain = std::get_if<DHChain>(&plant))
    return forward_kinematics(*chain, s.q);
  return s.x;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, JacNet net) {
  config.validate();
  if (!(net.config == config.net))
    throw ConfigError("network shape differs from the configuration");
  net.validate();

  const int m = plant_joints(config.plant);
  const int p = plant_task_dims(config.plant);
  const int systems = config.net.estimated_systems();
  const std::size_t steps =
      static_cast<std::size_t>(std::llround(config.duration / config.dt));

  Vec teacher_x0;
  if (config.teacher_plant()) {
    if (config.teacher_start_x.size()) {
      teacher_x0 = config.teacher_start_x;
    } else if (config.trajectory.shape == TrajectoryShape::Lemniscate) {
      teacher_x0 = lemniscate(config.trajectory.lemniscate, 0.0).x;
    } else {
      teacher_x0 = config.trajectory.hold_x.size() ? config.trajectory.hold_x : Vec::Zero(p);
    }
  }
  PlantState state = initial_state(config.plant, config.home_q, teacher_x0);

  Schedule schedule{config, measured_position(config.plant, state), 0};
  if (config.trajectory.approach_goal.size() && config.trajectory.approach_duration > 0.0) {
    schedule.approach_steps = static_cast<std::size_t>(
        std::llround(config.trajectory.approach_duration / config.dt));
  }

  std::mt19937_64 rng(config.seed);
  auto noise = [&rng](double half) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return half * (2.0 * u - 1.0);
  };
  auto sense = [&](const PlantState& s) {
    Vec x = measured_position(config.plant, s);
    if (config.disturbance > 0.0)
      for (int i = 0; i < p; ++i) x(i) += noise(config.disturbance);
    return x;
  };

  const JacNet* ideal =
      config.teacher_monitor ? &config.teacher().ideal : nullptr;
  const Mode mode = config.mode();
  ControllerConfig controller = config.controller;

  ExperimentResult result;
  result.log.columns = log_columns(m, p, systems);
  const std::size_t width = result.log.columns.size();
  result.max_weight_norm = net.weight_norm();

  Vec x = sense(state);
  ObserverBank bank = ObserverBank::start_at(x, systems, controller, schedule.kp(0));

  for (std::size_t step = 0;; ++step) {
    const double kp = schedule.kp(step);
    bank.set_gains(kp, controller.ks);
    const Waypoint wp = schedule.desired(step);
    const Vec dx = x - wp.x;
    const Mat J_hat = assemble_jacobian(net, state.q);
    const ControlCommand cmd = control_law(J_hat, wp.xdot, dx, controller, kp);
    if (cmd.clamped) ++result.clamped_steps;
    const LyapunovValue V =
        lyapunov_monitor(dx, bank, x, controller, net, config.learn, ideal);

    if (!state.q.allFinite() || !x.allFinite() || !cmd.qdot.allFinite() ||
        !std::isfinite(V.measured) || (V.full && !std::isfinite(*V.full))) {
      throw ExperimentAborted(step, "non-finite state");
    }

    if (step % static_cast<std::size_t>(config.log_every) == 0 || step == steps) {
      std::vector<double> row;
      row.reserve(width);
      row.push_back(static_cast<double>(step) * config.dt);
      auto append = [&row](const Vec& v) { row.insert(row.end(), v.begin(), v.end()); };
      append(state.q);
      append(cmd.qdot);
      append(x);
      append(wp.x);
      append(dx);
      row.push_back(dx.norm());
      for (const Observer& o : bank.systems) {
        const Vec dxh = x - o.x_hat;
        append(dxh);
        row.push_back(dxh.norm());
      }
      row.push_back(kp);
      row.push_back(V.measured);
      row.push_back(V.full ? *V.full : std::numeric_limits<double>::quiet_NaN());
      result.log.rows.push_back(std::move(row));
    }
    if (step == steps) break;

    const Vec e = feedback_error(dx, controller.bound, controller.exponent, mode);
    learning_step(net, bank, LearningInput{state.q, cmd.qdot, x, e}, config.dt,
                  config.learn, mode, config.backend);
    if (!net.all_finite()) throw ExperimentAborted(step, "non-finite weights");
    for (const Observer& o : bank.systems)
      if (!o.x_hat.allFinite()) throw ExperimentAborted(step, "non-finite observer state");
    result.max_weight_norm = std::max(result.max_weight_norm, net.weight_norm());

    state = plant_step(config.plant, state, cmd.qdot, config.dt);
    x = sense(state);
  }
  result.steps = steps;

  if (!config.weights_out.empty()) save_weights(net, config.weights_out);
  if (!config.log_path.empty()) result.log.write_csv(config.log_path);
  result.final_net = std::move(net);
  return result;
}

}  // namespace jacnet
