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

#ifndef RLBF_CORE_JSONIO_HPP_
#define RLBF_CORE_JSONIO_HPP_

#include <string>
#include <vector>

#include <json.hpp>

#include "core/token.hpp"
#include "core/transducer.hpp"

namespace rlbf {

// Wire forms, bit-exact:
//   token:  {"t":"content","sym":n} | {"t":"cat","name":...} |
//           {"t":"bt","x":n} | {"t":"eor"}
//   event:  {"e":"emit","token":...} | {"e":"retract","n":...} |
//           {"e":"note","categories":[...],"span_len":n} |
//           {"e":"fault","kind":...,"position":n}

nlohmann::json token_to_json(const Token& t);
Token token_from_json(const nlohmann::json& j);

std::string fault_kind_name(TransducerFaultKind kind);

nlohmann::json event_to_json(const StreamEvent& e);

nlohmann::json transducer_config_to_json(const TransducerConfig& cfg);
TransducerConfig transducer_config_from_json(const nlohmann::json& j);

std::vector<Token> tokens_from_jsonl(const std::string& path);
void write_lines(const std::string& path, const std::vector<std::string>& lines);
nlohmann::json load_json(const std::string& path);
std::vector<nlohmann::json> load_jsonl(const std::string& path);
void save_json(const std::string& path, const nlohmann::json& j);

/// FNV-1a over the compact serialization; used for config hashes in
/// manifests, checkpoints, and reports.
std::string json_hash(const nlohmann::json& j);

/// Writes <output>.manifest.json with the config hash, seed, and version.
void write_manifest(const std::string& output_path, const nlohmann::json& config,
                    std::uint64_t seed);

}  // namespace rlbf

#endif  // RLBF_CORE_JSONIO_HPP_
