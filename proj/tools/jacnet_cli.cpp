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

// Command line front end: gen-dataset, pretrain, run, validate-config.

#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "jacnet/harness.hpp"

namespace {

struct Options {
  std::string config;
  std::string mode;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string weights_in;
  std::string weights_out;
  std::string dataset;
  bool teacher = false;
  bool pretrain = false;
};

jacnet::ExperimentConfig prepare(const Options& o) {
  jacnet::ExperimentConfig c =
      o.config.empty() ? jacnet::ExperimentConfig::standard() : jacnet::load_config(o.config);
  if (!o.mode.empty()) c.set_mode(jacnet::parse_mode(o.mode));
  if (o.seed) c.seed = *o.seed;
  if (!o.weights_in.empty()) c.weights_in = o.weights_in;
  if (!o.weights_out.empty()) c.weights_out = o.weights_out;
  if (o.teacher) c.teacher_monitor = true;
  c.validate();
  return c;
}

int gen_dataset(const Options& o) {
  const jacnet::ExperimentConfig c = prepare(o);
  if (o.out.empty()) throw std::runtime_error("gen-dataset needs --out PATH");
  jacnet::DatasetOptions d = c.dataset;
  if (o.seed) d.seed = *o.seed;
  const jacnet::Dataset data = jacnet::gen_dataset(c.plant, c.home_q, d);
  jacnet::write_dataset_csv(data, o.out);
  std::printf("wrote %zu samples to %s\n", data.size(), o.out.c_str());
  return 0;
}

int pretrain(const Options& o) {
  jacnet::ExperimentConfig c = prepare(o);
  const std::string out = !o.weights_out.empty() ? o.weights_out : o.out;
  if (out.empty()) throw std::runtime_error("pretrain needs --weights-out PATH");
  const jacnet::Dataset data =
      o.dataset.empty() ? jacnet::make_dataset(c) : jacnet::read_dataset_csv(o.dataset);
  jacnet::JacNet net = jacnet::initial_network(c);
  const jacnet::PretrainReport r = jacnet::pretrain_network(net, c, data);
  jacnet::save_weights(net, out);
  std::printf("pretrained %d epochs on %zu samples: mean |xdot - J qdot| %.6g -> %.6g\n",
              c.pretrain.epochs, data.size(), r.mean_error.front(), r.mean_error.back());
  return 0;
}

int run(const Options& o) {
  jacnet::ExperimentConfig c = prepare(o);
  if (!o.out.empty()) c.log_path = o.out;
  jacnet::JacNet net = jacnet::initial_network(c);
  if (o.pretrain) jacnet::pretrain_network(net, c, jacnet::make_dataset(c));
  const jacnet::ExperimentResult r = jacnet::run_experiment(c, std::move(net));
  const auto& last = r.log.rows.back();
  std::printf("%zu steps, final |dx| %.6g m, max weight norm %.6g\n", r.steps,
              last[r.log.column("dx_norm")], r.max_weight_norm);
  return 0;
}

int validate(const Options& o) {
  if (o.config.empty()) throw std::runtime_error("validate-config needs --config PATH");
  prepare(o);
  std::printf("%s: ok\n", o.config.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep Jacobian network kinematic controller"};
  app.require_subcommand(1);
  Options o;

  auto common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "experiment config file");
    sub->add_option("--mode", o.mode, "region|tracking")
        ->check(CLI::IsMember({"region", "tracking"}));
    sub->add_option("--seed", o.seed, "experiment seed");
    sub->add_option("--out", o.out, "output file");
    sub->add_option("--weights-in", o.weights_in, "initial weight file");
    sub->add_option("--weights-out", o.weights_out, "final weight file");
  };

  CLI::App* gen = app.add_subcommand("gen-dataset", "sample a training set around home");
  common(gen);
  CLI::App* pre = app.add_subcommand("pretrain", "pre-train the network on a dataset");
  common(pre);
  pre->add_option("--dataset", o.dataset, "dataset CSV (default: generate)");
  CLI::App* runc = app.add_subcommand("run", "run the closed-loop experiment");
  common(runc);
  runc->add_flag("--teacher", o.teacher, "log the full Lyapunov function");
  runc->add_flag("--pretrain", o.pretrain, "pre-train before running");
  CLI::App* val = app.add_subcommand("validate-config", "check a config file");
  common(val);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "jacnet: %s\n", e.what());
    return 2;
  }

  try {
    if (gen->parsed()) return gen_dataset(o);
    if (pre->parsed()) return pretrain(o);
    if (runc->parsed()) return run(o);
    return validate(o);
  } catch (const jacnet::ExperimentAborted& e) {
    std::fprintf(stderr, "jacnet: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "jacnet: error: %s\n", e.what());
    return 1;
  }
}
