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

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <vector>

#include "doctest.h"
#include "jacnet/kinematics.hpp"
#include "jacnet/learning.hpp"
#include "jacnet/trajectory.hpp"
#include "test_util.hpp"

using namespace jacnet;

namespace {

Mat scalar(double v) { return Mat::Constant(1, 1, v); }
Vec vec1(double v) { return Vec::Constant(1, v); }

ControllerConfig scalar_region(double kp_unused = 0.0) {
  (void)kp_unused;
  ControllerConfig c = ControllerConfig::standard(1);
  c.bound = vec1(1.0);
  c.sat_width = vec1(1.0);
  c.ks = 0.0;
  return c;
}

// 1-1-1-1-1 network with every weight zero.
JacNet zero_scalar_net() {
  return init_weights(NetConfig{{1, 1, 1, 1, 1}, Activation::Sigmoid, 1}, 1, 0.0);
}

struct Fixture {
  JacNet net = init_weights(NetConfig::standard(), 17, 1.0);
  ObserverBank bank;
  LearningInput in;
  LearnParams params = LearnParams::uniform(NetConfig::standard(), 1.0, 1.0, 0.5);

  Fixture() {
    ControllerConfig c = ControllerConfig::standard(3);
    c.bound = Vec::Constant(3, 0.01);
    c.sat_width = Vec::Constant(3, 0.01);
    bank = ObserverBank::start_at(Vec{{0.3, -0.2, 0.1}}, 2, c, 4.0);
    bank.systems[0].x_hat += Vec{{0.05, -0.02, 0.03}};
    bank.systems[1].x_hat += Vec{{-0.04, 0.06, 0.01}};
    in.q = Vec{{0.4, -0.9, 1.3}};
    in.qdot = Vec{{0.7, -0.3, 0.5}};
    in.x = Vec{{0.3, -0.2, 0.1}};
    in.tracking_error = Vec{{0.02, -0.05, 0.04}};
  }
};

bool same_bits(const Mat& a, const Mat& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

bool same_deltas(const LearningDeltas& a, const LearningDeltas& b) {
  if (a.weights.size() != b.weights.size()) return false;
  for (std::size_t k = 0; k < a.weights.size(); ++k) {
    for (std::size_t i = 0; i < a.weights[k].W.size(); ++i)
      if (!same_bits(a.weights[k].W[i], b.weights[k].W[i])) return false;
    for (std::size_t i = 0; i < a.weights[k].Wo.size(); ++i)
      if (!same_bits(a.weights[k].Wo[i], b.weights[k].Wo[i])) return false;
  }
  for (std::size_t s = 0; s < a.observer_velocity.size(); ++s)
    if (!same_bits(a.observer_velocity[s], b.observer_velocity[s])) return false;
  return true;
}

double logistic(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

TEST_SUITE("formula") {

TEST_CASE("observer velocity examples") {
  const JacNet zero = init_weights(NetConfig::standard(), 1, 0.0);
  ControllerConfig c = ControllerConfig::standard(3);
  const Vec x{{0.1, 0.2, 0.3}};
  ObserverBank bank = ObserverBank::start_at(x, 2, c, 10.0);
  const Vec q{{0.3, 0.1, -0.2}};
  CHECK(observer_velocity(zero, bank, 0, q, Vec::Ones(3), x, Mode::Region) == Vec::Zero(3));

  const JacNet random = init_weights(NetConfig::standard(), 3, 1.0);
  CHECK(observer_velocity(random, bank, 1, q, Vec::Zero(3), x, Mode::Tracking) == Vec::Zero(3));

  // Scalar network, weights 0, b = 1, N = 2, kp = 2, ks = 0, x - x_hat = 2.
  const JacNet s = zero_scalar_net();
  ObserverBank sb = ObserverBank::start_at(vec1(0.0), 2, scalar_region(), 2.0);
  const double oracle = 2.0 * (2.0 * 2.0 - 1.0) * 2.0;
  CHECK(oracle == 12.0);
  CHECK(observer_velocity(s, sb, 0, vec1(0.0), vec1(1.0), vec1(2.0), Mode::Region)(0) == oracle);
}

TEST_CASE("observer integrate examples") {
  ObserverBank bank = ObserverBank::start_at(Vec::Zero(2), 1, ControllerConfig::standard(2), 1.0);
  observer_integrate(bank, 0, Vec::Zero(2), 0.002);
  CHECK(bank.systems[0].x_hat == Vec::Zero(2));
  observer_integrate(bank, 0, Vec::Ones(2), 0.002);
  CHECK(bank.systems[0].x_hat == Vec::Constant(2, 0.002));

  ObserverBank many = ObserverBank::start_at(Vec::Zero(1), 1, scalar_region(), 1.0);
  const Vec v = vec1(0.25);
  for (int i = 0; i < 400; ++i) observer_integrate(many, 0, v, 0.002);
  CHECK(many.systems[0].x_hat(0) == doctest::Approx(400 * 0.002 * 0.25).epsilon(1e-13));
  CHECK_THROWS_AS(observer_integrate(many, 0, vec1(std::nan("")), 0.002), NonFiniteError);
}

TEST_CASE("inner weight law examples") {
  const Mat r = inner_weight_rate(vec1(0.25), scalar(1.0), vec1(2.0), vec1(3.0), scalar(1.0), 1.0, 1.0);
  CHECK(r(0, 0) == doctest::Approx(0.25 * 1 * 2 * 3 - 1 * 1 * 2 * 1).epsilon(1e-15));
  CHECK(r(0, 0) == doctest::Approx(-0.5));
  CHECK(inner_weight_rate(vec1(0.25), scalar(1.0), vec1(0.0), vec1(3.0), scalar(1.0), 1.0, 1.0)(0, 0) == 0.0);
  const Mat r2 = inner_weight_rate(vec1(0.25), scalar(1.0), vec1(2.0), vec1(3.0), scalar(1.0), 2.0, 1.0);
  CHECK(r2(0, 0) == 2.0 * r(0, 0));
}

TEST_CASE("output weight law examples") {
  const Mat r = output_weight_rate(vec1(0.5), vec1(0.25), vec1(3.0), scalar(1.0), vec1(2.0), scalar(1.0), 1.0, 1.0);
  CHECK(r(0, 0) == doctest::Approx(2.0 * (0.5 - 0.25 * 3.0) - 2.0).epsilon(1e-15));
  CHECK(r(0, 0) == doctest::Approx(-2.5));
  CHECK(output_weight_rate(vec1(0.5), vec1(0.25), vec1(3.0), scalar(1.0), vec1(0.0), scalar(1.0), 1.0, 1.0)(0, 0) == 0.0);
  // phi = slope * W z exactly and no leakage: the two terms cancel.
  CHECK(output_weight_rate(vec1(0.75), vec1(0.25), vec1(3.0), scalar(1.0), vec1(2.0), scalar(1.0), 1.0, 0.0)(0, 0) == 0.0);
}

TEST_CASE("tracking layer law examples") {
  // Same arithmetic as the estimated laws, through the tracking pair.
  CHECK(inner_weight_rate(vec1(0.25), scalar(1.0), vec1(2.0), vec1(3.0), scalar(1.0), 1.0, 1.0)(0, 0) ==
        doctest::Approx(-0.5));
  CHECK(output_weight_rate(vec1(0.5), vec1(0.25), vec1(3.0), scalar(1.0), vec1(2.0), scalar(1.0), 1.0, 1.0)(0, 0) ==
        doctest::Approx(-2.5));

  // Doubling err: first term doubles and so does the |err| leakage.
  for (double err : {2.0, 4.0}) {
    const double oracle = err * (0.5 - 0.25 * 3.0) - err * 1.0;
    CHECK(output_weight_rate(vec1(0.5), vec1(0.25), vec1(3.0), scalar(1.0), vec1(err), scalar(1.0), 1.0, 1.0)(0, 0) ==
          doctest::Approx(oracle).epsilon(1e-15));
  }

  // With the output layer zeroed only the leakage acts on W[n-2].
  JacNet net = init_weights(NetConfig::standard(), 5, 1.0);
  const int last = net.config.layers() - 1;
  for (ColumnStack& c : net.columns) c.W[last].setZero();
  const LearnParams p = LearnParams::uniform(net.config, 1.0, 1.0, 1.0);
  const Vec q{{0.1, 0.2, 0.3}}, qdot{{1.0, -1.0, 0.5}}, err{{0.1, -0.2, 0.05}};
  double prev = net.columns[1].W[last - 1].norm();
  for (int i = 0; i < 100; ++i) {
    update_inner_tracking(net, 1, q, qdot, err, 0.01, p);
    const double now = net.columns[1].W[last - 1].norm();
    CHECK(now < prev);
    prev = now;
  }
}

TEST_CASE("zero error leaves the weights untouched") {
  JacNet net = init_weights(NetConfig::standard(), 7, 1.0);
  const JacNet before = net;
  const LearnParams p = LearnParams::uniform(net.config, 1.0, 1.0, 0.01);
  const Vec q{{0.1, 0.2, 0.3}}, qdot{{1.0, -1.0, 0.5}};
  const Vec zero = Vec::Zero(3);
  CHECK(update_inner_estimated(net, 0, 1, q, qdot, zero, 0.002, p).cwiseAbs().maxCoeff() == 0.0);
  CHECK(update_output_estimated(net, 1, 2, q, qdot, zero, 0.002, p).cwiseAbs().maxCoeff() == 0.0);
  CHECK(update_inner_tracking(net, 0, q, qdot, zero, 0.002, p).cwiseAbs().maxCoeff() == 0.0);
  CHECK(update_output_tracking(net, 0, q, qdot, zero, 0.002, p).cwiseAbs().maxCoeff() == 0.0);
  CHECK(identical(net, before));
}

TEST_CASE("learning step with zero errors is a no-op on the weights") {
  Fixture f;
  for (Observer& o : f.bank.systems) o.x_hat = f.in.x;
  f.in.tracking_error = Vec::Zero(3);
  const JacNet before = f.net;
  for (Mode mode : {Mode::Region, Mode::Tracking}) {
    learning_step(f.net, f.bank, f.in, 0.002, f.params, mode);
    CHECK(identical(f.net, before));
    for (Observer& o : f.bank.systems) o.x_hat = f.in.x;
  }
}

TEST_CASE("learning step is reproducible") {
  Fixture a, b;
  learning_step(a.net, a.bank, a.in, 0.002, a.params, Mode::Region);
  learning_step(b.net, b.bank, b.in, 0.002, b.params, Mode::Region);
  CHECK(identical(a.net, b.net));
  for (std::size_t s = 0; s < a.bank.systems.size(); ++s)
    CHECK(same_bits(a.bank.systems[s].x_hat, b.bank.systems[s].x_hat));
}

TEST_CASE("column processing order does not matter") {
  Fixture f;
  for (Mode mode : {Mode::Region, Mode::Tracking}) {
    const LearningDeltas natural = learning_deltas_serial(f.net, f.bank, f.in, 0.002, f.params, mode);
    for (const std::array<int, 3>& order :
         {std::array<int, 3>{2, 0, 1}, std::array<int, 3>{1, 2, 0}, std::array<int, 3>{2, 1, 0}}) {
      const LearningDeltas permuted =
          learning_deltas_serial(f.net, f.bank, f.in, 0.002, f.params, mode, order);
      CHECK(same_deltas(natural, permuted));
    }
  }
}

}  // TEST_SUITE formula

TEST_CASE("single-law wrappers apply eta * dt * rate to the right matrix") {
  JacNet net = init_weights(NetConfig::standard(), 23, 1.0);
  const LearnParams p = LearnParams::uniform(net.config, 1.5, 0.7, 0.3);
  const Vec q{{0.3, -0.4, 0.8}}, qdot{{0.6, -1.1, 0.4}}, err{{0.02, -0.01, 0.03}};
  const double dt = 0.002;
  const int k = 1, l = 1;

  // Oracle forward pass with explicit sigmoids.
  const ColumnStack col = net.columns[k];
  Vec z = q;
  for (int i = 0; i < l; ++i) z = sigmoid(col.W[i] * z);
  const Vec u = col.W[l] * z;
  Vec phi(u.size()), slope(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    phi(i) = logistic(u(i)) * qdot(k);
    slope(i) = logistic(u(i)) * (1.0 - logistic(u(i))) * qdot(k);
  }
  const Mat inner = 1.5 * slope.asDiagonal() * col.Wo[l].transpose() * err * z.transpose() -
                    1.5 * 0.7 * err.norm() * col.W[l];
  const Mat outer = 1.5 * err * (phi - slope.cwiseProduct(u)).transpose() -
                    1.5 * 0.7 * err.norm() * col.Wo[l];

  JacNet a = net;
  const Mat d_in = update_inner_estimated(a, l, k, q, qdot, err, dt, p);
  check_close(d_in, 0.3 * dt * inner, 1e-15);
  check_close(a.columns[k].W[l], col.W[l] + 0.3 * dt * inner, 1e-15);
  check_close(a.columns[k].Wo[l], col.Wo[l], 0.0);

  JacNet b = net;
  const Mat d_out = update_output_estimated(b, l, k, q, qdot, err, dt, p);
  check_close(d_out, 0.3 * dt * outer, 1e-15);
  check_close(b.columns[k].Wo[l], col.Wo[l] + 0.3 * dt * outer, 1e-15);

  CHECK_THROWS_AS(update_inner_estimated(net, 2, k, q, qdot, err, dt, p), std::out_of_range);
  CHECK_THROWS_AS(update_inner_tracking(net, 3, q, qdot, err, dt, p), std::out_of_range);
  CHECK_THROWS_AS(update_inner_tracking(net, 0, q, qdot, Vec::Zero(2), dt, p), DimensionError);
}

TEST_CASE("tracking wrappers act on the last two layers") {
  JacNet net = init_weights(NetConfig::standard(), 29, 1.0);
  const JacNet before = net;
  const LearnParams p = LearnParams::uniform(net.config, 1.0, 1.0, 1.0);
  const Vec q{{0.3, -0.4, 0.8}}, qdot{{0.6, -1.1, 0.4}}, err{{0.02, -0.01, 0.03}};
  const int n = net.config.layers();
  update_inner_tracking(net, 2, q, qdot, err, 0.01, p);
  update_output_tracking(net, 2, q, qdot, err, 0.01, p);
  for (int i = 0; i < n; ++i) {
    const bool touched = i >= n - 2;
    CHECK(same_bits(net.columns[2].W[i], before.columns[2].W[i]) == !touched);
  }
  for (int s = 0; s < n - 2; ++s) CHECK(same_bits(net.columns[2].Wo[s], before.columns[2].Wo[s]));
}

TEST_CASE("openmp kernel matches the serial reference bit for bit") {
  Fixture f;
  for (Mode mode : {Mode::Region, Mode::Tracking}) {
    CHECK(same_deltas(learning_deltas_serial(f.net, f.bank, f.in, 0.002, f.params, mode),
                      learning_deltas_parallel(f.net, f.bank, f.in, 0.002, f.params, mode)));
  }
  Fixture a, b;
  for (int i = 0; i < 50; ++i) {
    learning_step(a.net, a.bank, a.in, 0.002, a.params, Mode::Region, Backend::Serial);
    learning_step(b.net, b.bank, b.in, 0.002, b.params, Mode::Region, Backend::OpenMP);
  }
  CHECK(identical(a.net, b.net));
}

TEST_CASE("layer pairs are updated from one snapshot") {
  // Sequentially applying the single-law updates would feed each law the
  // weights already changed by the previous one; the step must not.
  Fixture f;
  const LearningDeltas d = learning_deltas_serial(f.net, f.bank, f.in, 0.002, f.params, Mode::Region);
  const int l = 1, k = 0;
  const Vec err = observer_error(f.bank, l, f.in.x, Mode::Region);
  JacNet copy = f.net;
  const Mat d_in = update_inner_estimated(copy, l, k, f.in.q, f.in.qdot, err, 0.002, f.params);
  JacNet copy2 = f.net;
  const Mat d_out = update_output_estimated(copy2, l, k, f.in.q, f.in.qdot, err, 0.002, f.params);
  CHECK(same_bits(d.weights[k].W[l], d_in));
  CHECK(same_bits(d.weights[k].Wo[l], d_out));
}

TEST_CASE("eta scales every delta") {
  Fixture f;
  LearnParams scaled = f.params;
  scaled.eta *= 4.0;
  const LearningDeltas a = learning_deltas_serial(f.net, f.bank, f.in, 0.002, f.params, Mode::Region);
  const LearningDeltas b = learning_deltas_serial(f.net, f.bank, f.in, 0.002, scaled, Mode::Region);
  for (std::size_t k = 0; k < a.weights.size(); ++k) {
    for (std::size_t i = 0; i < a.weights[k].W.size(); ++i)
      CHECK(same_bits(b.weights[k].W[i], Mat(4.0 * a.weights[k].W[i])));
    for (std::size_t i = 0; i < a.weights[k].Wo.size(); ++i)
      CHECK(same_bits(b.weights[k].Wo[i], Mat(4.0 * a.weights[k].Wo[i])));
  }
  LearnParams three = f.params;
  three.eta *= 3.0;
  const LearningDeltas c = learning_deltas_serial(f.net, f.bank, f.in, 0.002, three, Mode::Region);
  check_close(c.weights[2].W[1], 3.0 * a.weights[2].W[1], 1e-15);
}

TEST_CASE("sigma modification keeps a frozen-cross-term law bounded") {
  // W' = W + h * alpha * (c - beta |e| W) with c = slope * wo * e * z fixed.
  const double slope = 0.25, wo = 3.0, e = 0.5, z = 2.0, alpha = 2.0, beta = 0.2, h = 0.01;
  Mat w = scalar(-4.0);
  const double frozen = slope * wo * e * z;
  const double bound = std::max(4.0, frozen / (beta * e));
  double peak = 0.0;
  for (int i = 0; i < 1000000; ++i) {
    w += h * inner_weight_rate(vec1(slope), scalar(wo), vec1(e), vec1(z), w, alpha, beta);
    peak = std::max(peak, std::abs(w(0, 0)));
  }
  CHECK(std::isfinite(w(0, 0)));
  CHECK(peak <= bound + 1e-12);
  CHECK(w(0, 0) == doctest::Approx(frozen / (beta * e)).epsilon(1e-9));
}

TEST_CASE("observers of the exact teacher see the true velocity") {
  const TeacherPlant t =
      make_exact_teacher(NetConfig::standard(), default_teacher_jacobian(3, 3, 3), 3, 0.5);
  const Vec x{{0.1, 0.2, -0.3}};
  const ObserverBank bank = ObserverBank::start_at(x, 3, ControllerConfig::standard(3), 10.0);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec q{{u(rng), u(rng), u(rng)}};
    const Vec qdot{{u(rng), u(rng), u(rng)}};
    const Vec truth = teacher_velocity(t, q, qdot);
    for (int s = 0; s < 3; ++s) {
      for (Mode mode : {Mode::Region, Mode::Tracking})
        check_close(observer_velocity(t.ideal, bank, s, q, qdot, x, mode), truth, 1e-12);
    }
  }
}

TEST_CASE("learn params validation") {
  const NetConfig cfg = NetConfig::standard();
  CHECK_NOTHROW(LearnParams::uniform(cfg, 1.0, 1.0, 0.0).validate(cfg));
  CHECK_THROWS_AS(LearnParams::uniform(cfg, 1.0, 0.0, 0.01).validate(cfg), std::invalid_argument);
  CHECK_THROWS_AS(LearnParams::uniform(cfg, 1.0, 1.0, -1.0).validate(cfg), std::invalid_argument);
  LearnParams short_list = LearnParams::uniform(cfg, 1.0, 1.0, 0.01);
  short_list.pairs.pop_back();
  CHECK_THROWS_AS(short_list.validate(cfg), std::invalid_argument);
}

TEST_CASE("learning step checks the observer count") {
  Fixture f;
  f.in.tracking_error.reset();
  CHECK_THROWS_AS(learning_step(f.net, f.bank, f.in, 0.002, f.params, Mode::Region), DimensionError);
}

TEST_CASE("dataset csv round trip") {
  const Dataset data = gen_dataset(Plant{DHChain::default_arm()}, Vec{{0.1, 0.5, -0.4}}, DatasetOptions{20, 0.3, 1.0, 3});
  const auto path = scratch_path("dataset.csv");
  write_dataset_csv(data, path);
  const Dataset back = read_dataset_csv(path);
  REQUIRE(back.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(back[i].t == data[i].t);
    CHECK(same_bits(back[i].q, data[i].q));
    CHECK(same_bits(back[i].qdot, data[i].qdot));
    CHECK(same_bits(back[i].x, data[i].x));
    CHECK(same_bits(back[i].xdot, data[i].xdot));
  }
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,q1,q2,q3,qd1,qd2,qd3,x1,x2,x3,xd1,xd2,xd3");
}

TEST_CASE("malformed dataset files") {
  const auto path = scratch_path("bad.csv");
  {
    std::ofstream out(path);
    out << "t,q1,qd1,x1,xd1\n0,1,2,3\n";
  }
  CHECK_THROWS_WITH(read_dataset_csv(path), doctest::Contains("line 2"));
  {
    std::ofstream out(path);
    out << "t,q1,x1,qd1,xd1\n0,1,2,3,4\n";
  }
  CHECK_THROWS_WITH(read_dataset_csv(path), doctest::Contains("header"));
  CHECK_THROWS(read_dataset_csv(scratch_path("does_not_exist.csv")));
}

TEST_CASE("pretraining with zero epochs changes nothing") {
  const NetConfig cfg = NetConfig::standard();
  const TeacherPlant t = make_exact_teacher(cfg, default_teacher_jacobian(3, 3, 3), 3, 0.5);
  const Dataset data = gen_dataset(Plant{t}, Vec::Zero(3), DatasetOptions{50, 0.3, 1.0, 1});
  JacNet net = init_weights(cfg, 4, 1.0);
  const JacNet before = net;
  PretrainOptions o;
  o.epochs = 0;
  o.params = LearnParams::uniform(cfg, 1.0, 1e-4, 5e4);
  const PretrainReport r = pretrain(net, data, o);
  CHECK(identical(net, before));
  CHECK(r.mean_error.size() == 1);
  CHECK_THROWS_AS(pretrain(net, Dataset{}, o), std::invalid_argument);
}

TEST_CASE("pretraining on a teacher dataset lowers the prediction error") {
  const NetConfig cfg = NetConfig::standard();
  const TeacherPlant t = make_exact_teacher(cfg, default_teacher_jacobian(3, 3, 3), 3, 0.5);
  const Dataset data = gen_dataset(Plant{t}, Vec::Zero(3), DatasetOptions{200, 0.3, 1.0, 1});
  PretrainOptions o;
  o.epochs = 50;
  o.params = LearnParams::uniform(cfg, 1.0, 1e-4, 5e4);
  JacNet a = init_weights(cfg, 4, 1.0);
  JacNet b = a;
  const PretrainReport ra = pretrain(a, data, o);
  const PretrainReport rb = pretrain(b, data, o);
  CHECK(ra.mean_error.size() == 51);
  CHECK(ra.mean_error.back() < ra.mean_error.front());
  CHECK(ra.mean_error.back() < 0.5 * ra.mean_error.front());
  CHECK(identical(a, b));
  CHECK(ra.mean_error == rb.mean_error);
}
