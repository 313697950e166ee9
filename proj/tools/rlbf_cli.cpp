// Copyright 2025 The rlbf Authors
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

// Command-line front end; all real work happens behind the C API.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "rlbf/rlbf.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

using nlohmann::json;

std::atomic<bool> g_interrupted{false};
void on_signal(int) { g_interrupted.store(true); }

/// --config wins; RLBF_CONFIG is the fallback; {} when neither is set.
json load_config(const std::string& flag_path, std::uint64_t seed,
                 bool seed_set) {
  std::string path = flag_path;
  if (path.empty()) {
    if (const char* env = std::getenv("RLBF_CONFIG")) path = env;
  }
  json cfg = json::object();
  if (!path.empty()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read config: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    cfg = json::parse(ss.str());
  }
  if (seed_set) cfg["seed"] = seed;
  return cfg;
}

int check(int rc) {
  if (rc != RLBF_OK) {
    std::cerr << "error: " << rlbf_last_error() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"backtracking transducer toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", rlbf_version());

  std::string config_path, out_path, dataset_path, checkpoint_path;
  std::string in_path, traj_path, mode = "stream", format = "json";
  std::string host = "127.0.0.1";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int port = 0;
  bool baseline = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config path");
    cmd->add_option("--seed", seed, "override config seed")
        ->each([&](const std::string&) { seed_set = true; });
  };

  CLI::App* datagen = app.add_subcommand("datagen", "build the dataset");
  add_common(datagen);
  datagen->add_option("--out", out_path, "output dataset path")->required();

  CLI::App* sft = app.add_subcommand("sft", "supervised pretraining only");
  add_common(sft);
  sft->add_option("--dataset", dataset_path, "dataset path")->required();
  sft->add_option("--out", out_path, "checkpoint path")->required();

  CLI::App* train = app.add_subcommand("train", "full training recipe");
  add_common(train);
  train->add_option("--dataset", dataset_path, "dataset path")->required();
  train->add_option("--out", out_path, "checkpoint path")->required();
  train->add_flag("--baseline", baseline, "safe-only comparison baseline");

  CLI::App* eval = app.add_subcommand("eval", "attack-success evaluation");
  add_common(eval);
  eval->add_option("--policy", checkpoint_path, "checkpoint path")->required();
  eval->add_option("--out", out_path, "report path")->required();
  eval->add_option("--format", format, "json|csv|markdown");

  CLI::App* transduce = app.add_subcommand("transduce", "run the transducer");
  add_common(transduce);
  transduce->add_option("--in", in_path, "token JSONL path")->required();
  transduce->add_option("--mode", mode, "stream|offline");
  transduce->add_option("--out", out_path, "event JSONL path")->required();

  CLI::App* reward = app.add_subcommand("reward", "score trajectories");
  add_common(reward);
  reward->add_option("--in", traj_path, "trajectory JSONL path")->required();
  reward->add_option("--dataset", dataset_path, "dataset path")->required();
  reward->add_option("--out", out_path, "breakdown JSONL path")->required();

  CLI::App* serve = app.add_subcommand("serve", "NDJSON transducer service");
  add_common(serve);
  serve->add_option("--host", host, "listen address");
  serve->add_option("--port", port, "listen port (0 = ephemeral)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  std::string cfg;
  try {
    cfg = load_config(config_path, seed, seed_set).dump();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }

  if (datagen->parsed()) {
    return check(rlbf_run_datagen(cfg.c_str(), out_path.c_str()));
  }
  if (sft->parsed()) {
    return check(
        rlbf_run_sft(dataset_path.c_str(), cfg.c_str(), out_path.c_str()));
  }
  if (train->parsed()) {
    return check(rlbf_run_train(dataset_path.c_str(), cfg.c_str(),
                                out_path.c_str(), baseline ? 1 : 0));
  }
  if (eval->parsed()) {
    return check(rlbf_run_eval(checkpoint_path.c_str(), cfg.c_str(),
                               format.c_str(), out_path.c_str()));
  }
  if (transduce->parsed()) {
    return check(rlbf_run_transduce(in_path.c_str(), mode.c_str(),
                                    cfg.c_str(), out_path.c_str()));
  }
  if (reward->parsed()) {
    return check(rlbf_run_reward(traj_path.c_str(), dataset_path.c_str(),
                                 out_path.c_str()));
  }
  if (serve->parsed()) {
    rlbf_service* svc = nullptr;
    const char* svc_cfg = config_path.empty() && !std::getenv("RLBF_CONFIG")
                              ? nullptr
                              : cfg.c_str();
    if (int rc = check(rlbf_service_start(svc_cfg, host.c_str(), port, &svc))) {
      return rc;
    }
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cout << "listening on " << host << ":" << rlbf_service_port(svc)
              << std::endl;
    while (!g_interrupted.load()) {
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    rlbf_service_stop(svc);
    rlbf_service_free(svc);
    return kExitOk;
  }
  return kExitUsage;
}
