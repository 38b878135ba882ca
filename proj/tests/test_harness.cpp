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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "doctest.h"
#include "jacnet/harness.hpp"
#include "test_util.hpp"

using namespace jacnet;

namespace {

// Teacher plant, exact weights, constant target equal to the start: nothing
// should move.
ExperimentConfig teacher_hold(Mode mode) {
  ExperimentConfig c = ExperimentConfig::standard();
  c.plant = make_exact_teacher(c.net, default_teacher_jacobian(3, 3, 7), 7, 0.5);
  c.set_mode(mode);
  c.controller.ks = 0.0;
  c.trajectory.shape = TrajectoryShape::Hold;
  c.trajectory.hold_x = Vec{{0.1, -0.2, 0.3}};
  c.trajectory.approach_goal = Vec();
  c.teacher_start_x = c.trajectory.hold_x;
  c.init = NetInit::Teacher;
  c.teacher_monitor = true;
  c.duration = 1.0;
  return c;
}

ExperimentConfig short_run() {
  ExperimentConfig c = ExperimentConfig::standard();
  c.duration = 0.4;
  c.disturbance = 0.001;
  return c;
}

}  // namespace

TEST_SUITE("formula") {

TEST_CASE("monitor examples") {
  const NetConfig cfg = NetConfig::standard();
  const JacNet net = init_weights(cfg, 1, 1.0);
  const LearnParams p = LearnParams::uniform(cfg, 1.0, 1.0, 1.0);
  ControllerConfig region = ControllerConfig::standard(3);
  region.bound = Vec::Ones(3);
  region.sat_width = Vec::Ones(3);
  const Vec x{{0.5, 0.5, 0.5}};
  const ObserverBank bank = ObserverBank::start_at(x, 2, region, 1.0);

  // (2^2/1 - 1)^2 / (2 * 2)
  CHECK(lyapunov_monitor(Vec{{2.0, 0.0, 0.0}}, bank, x, region, net, p).measured == 2.25);
  CHECK(lyapunov_monitor(Vec{{0.5, -1.0, 0.0}}, bank, x, region, net, p).measured == 0.0);
  CHECK_FALSE(lyapunov_monitor(Vec::Zero(3), bank, x, region, net, p).full.has_value());

  ControllerConfig tracking = region;
  tracking.mode = Mode::Tracking;
  CHECK(lyapunov_monitor(Vec{{0.3, 0.4, 0.0}}, bank, x, tracking, net, p).measured ==
        doctest::Approx(0.125).epsilon(1e-15));

  // One weight off by 2 with alpha = eta = 1: 2^2 / 2.
  JacNet ideal = net;
  ideal.columns[1].W[2](3, 4) += 2.0;
  const LyapunovValue v = lyapunov_monitor(Vec::Zero(3), bank, x, region, net, p, &ideal);
  REQUIRE(v.full.has_value());
  CHECK(*v.full == doctest::Approx(2.0).epsilon(1e-15));
  ideal = net;
  ideal.columns[0].Wo[0](1, 1) -= 2.0;
  CHECK(*lyapunov_monitor(Vec::Zero(3), bank, x, region, net, p, &ideal).full ==
        doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("log schema") {
  const auto cols = log_columns(3, 3, 2);
  CHECK(cols.size() == 1 + 3 + 3 + 3 + 3 + 3 + 1 + 2 * 4 + 3);
  CHECK(cols.front() == "t");
  CHECK(cols[1] == "q1");
  CHECK(cols[4] == "qd1");
  CHECK(cols[16] == "dx_norm");
  CHECK(cols[17] == "dxh1_1");
  CHECK(cols[20] == "dxh1_norm");
  CHECK(cols[24] == "dxh2_norm");
  CHECK(cols.back() == "V_full");
}

TEST_CASE("zero duration logs only the initial row") {
  ExperimentConfig c = ExperimentConfig::standard();
  c.duration = 0.0;
  const ExperimentResult r = run_experiment(c, initial_network(c));
  CHECK(r.steps == 0);
  REQUIRE(r.log.rows.size() == 1);
  CHECK(r.log.rows[0][0] == 0.0);
  CHECK(identical(r.final_net, initial_network(c)));
}

}  // TEST_SUITE formula

TEST_CASE("a teacher held at its start stays put") {
  for (Mode mode : {Mode::Region, Mode::Tracking}) {
    const ExperimentConfig c = teacher_hold(mode);
    const ExperimentResult r = run_experiment(c, initial_network(c));
    const std::size_t col = r.log.column("dx_norm");
    double worst = 0.0;
    for (const auto& row : r.log.rows) worst = std::max(worst, row[col]);
    CHECK(worst < 1e-9);
    CHECK(identical(r.final_net, c.teacher().ideal));
    CHECK(r.log.rows.back()[r.log.column("V_full")] == 0.0);
  }
}

TEST_CASE("experiments are deterministic") {
  const ExperimentConfig c = short_run();
  const ExperimentResult a = run_experiment(c, initial_network(c));
  const ExperimentResult b = run_experiment(c, initial_network(c));
  CHECK(a.log.to_csv() == b.log.to_csv());
  CHECK(identical(a.final_net, b.final_net));
  CHECK(a.log.rows.size() == 201);

  ExperimentConfig other = c;
  other.seed = 43;
  CHECK(run_experiment(other, initial_network(other)).log.to_csv() != a.log.to_csv());
}

TEST_CASE("serial and openmp backends log the same run") {
  ExperimentConfig c = short_run();
  const std::string serial = run_experiment(c, initial_network(c)).log.to_csv();
  c.backend = Backend::OpenMP;
  CHECK(run_experiment(c, initial_network(c)).log.to_csv() == serial);
}

TEST_CASE("log csv leaves absent values empty") {
  ExperimentConfig c = short_run();
  c.duration = 0.004;
  const std::string csv = run_experiment(c, initial_network(c)).log.to_csv();
  CHECK(csv.rfind("t,q1,q2,q3,", 0) == 0);
  CHECK(csv.find(",\n") != std::string::npos);  // V_full empty without a teacher
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("config parsing") {
  const ExperimentConfig c = parse_config(R"(
[experiment]
dt = 0.001
duration = 3
seed = 9
mode = tracking
backend = openmp

[controller]
b = 0.002
a = 0.001, 0.002, 0.0005
k0 = 0.1

[learning]
eta = 0.02

[trajectory]
period = 10
repeat = true
)");
  CHECK(c.dt == 0.001);
  CHECK(c.duration == 3.0);
  CHECK(c.seed == 9);
  CHECK(c.mode() == Mode::Tracking);
  CHECK(c.backend == Backend::OpenMP);
  CHECK(c.controller.bound == Vec::Constant(3, 0.002));
  CHECK(c.controller.sat_width == Vec{{0.001, 0.002, 0.0005}});
  CHECK(c.controller.region_kp.k0 == 0.1);
  CHECK(c.learn.eta == 0.02);
  CHECK(c.trajectory.lemniscate.period == 10.0);
  CHECK(c.trajectory.lemniscate.repeat);

  const ExperimentConfig d = parse_config("");
  CHECK(d.home_q == ExperimentConfig::standard().home_q);
  CHECK(d.mode() == Mode::Region);
}

TEST_CASE("teacher section builds a teacher plant") {
  const ExperimentConfig c = parse_config("[teacher]\nseed = 3\nscale = 0.25\n");
  REQUIRE(c.teacher_plant());
  const TeacherPlant expect =
      make_exact_teacher(c.net, default_teacher_jacobian(3, 3, 3), 3, 0.25);
  CHECK(identical(c.teacher().ideal, expect.ideal));
}

TEST_CASE("config errors name the problem") {
  CHECK_THROWS_WITH_AS(parse_config("[controller]\nb = 0.001\na = 0.002\n"),
                       doctest::Contains("a_i ≤ b_i"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[controler]\nb = 1\n"), doctest::Contains("[controler]"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[learning]\ngamma = 1\n"), doctest::Contains("gamma"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[experiment]\ndt = fast\n"), doctest::Contains("fast"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[experiment]\nmode = sideways\n"),
                       doctest::Contains("sideways"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[plant]\nhome_q = 1, 2\n"), doctest::Contains("home_q"),
                       ConfigError);
  CHECK_THROWS_AS(parse_config("[chain]\na = 0.4\n[teacher]\nseed = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[experiment]\nteacher_monitor = true\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[learning]\nbeta = 0\n"), ConfigError);

  const auto missing = scratch_path("no_such.cfg");
  const std::string name = missing.string();
  CHECK_THROWS_WITH_AS(load_config(missing), doctest::Contains(name.c_str()), ConfigError);
}

TEST_CASE("config file paths resolve next to the file") {
  const auto dir = scratch_path("cfgdir");
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "run.cfg");
    out << "[experiment]\nlog = out/log.csv\nweights_out = /tmp/w.txt\n";
  }
  const ExperimentConfig c = load_config(dir / "run.cfg");
  CHECK(c.log_path == dir / "out/log.csv");
  CHECK(c.weights_out == std::filesystem::path("/tmp/w.txt"));
}

TEST_CASE("weight files must match the configured shape") {
  ExperimentConfig c = ExperimentConfig::standard();
  const auto path = scratch_path("small.w");
  save_weights(init_weights(NetConfig{{3, 8, 8, 8, 3}, Activation::Sigmoid, 3}, 1, 1.0), path);
  c.weights_in = path;
  CHECK_THROWS_AS(initial_network(c), ConfigError);
}
