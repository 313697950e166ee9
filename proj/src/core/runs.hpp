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

#ifndef RLBF_CORE_RUNS_HPP_
#define RLBF_CORE_RUNS_HPP_

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

namespace rlbf {

// File-level pipeline entry points shared by the C API and the CLI. Every
// run writes a manifest (config hash, seed, version) next to its primary
// output. Same config and seed give byte-identical outputs.

/// Builds the synthetic dataset; writes {"vocab", "config", "examples",
/// "known_violations"} to out_path.
void run_datagen(const nlohmann::json& config, const std::string& out_path);

/// Supervised pretraining only; writes a checkpoint {"version", "config",
/// "vocab", "policy", "log"} to out_path.
void run_sft(const std::string& dataset_path, const nlohmann::json& config,
             const std::string& out_path);

/// The full recipe (supervised pretraining then policy optimization), or the
/// safe-only comparison baseline when baseline is true.
void run_train(const std::string& dataset_path, const nlohmann::json& config,
               const std::string& out_path, bool baseline = false);

/// Ablation suite over a trained checkpoint; format json|csv|markdown.
void run_eval(const std::string& checkpoint_path, const nlohmann::json& config,
              const std::string& format, const std::string& out_path);

/// Token JSONL in, event JSONL out; mode is "stream" or "offline".
void run_transduce(const std::string& in_path, const std::string& mode,
                   const nlohmann::json& config, const std::string& out_path);

/// Scores raw trajectories ({"raw": [token, ...]} per line) against the
/// dataset's lexicon and known violations; writes one breakdown per line.
void run_reward(const std::string& traj_path, const std::string& dataset_path,
                const std::string& out_path);

}  // namespace rlbf

#endif  // RLBF_CORE_RUNS_HPP_
