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

#ifndef RLBF_CORE_DATAGEN_HPP_
#define RLBF_CORE_DATAGEN_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/critic.hpp"
#include "core/token.hpp"
#include "core/vocab.hpp"

namespace rlbf {

// Training-data construction: take a safe response, splice a violating
// segment in at a sentence boundary, and emit a masked example whose target
// is the correction (category tokens, backtrack command, safe continuation).
// Running the transducer over context-response + target must reproduce the
// original safe response tail; every generated example is checked against
// that round trip.

struct SafePair {
  std::vector<Token> prompt;
  std::vector<Token> response;  // safe, contains >= 1 sentence-end symbol
};

struct ViolatingDraft {
  std::vector<Token> part1;
  std::vector<Token> violation;
  std::vector<Token> part2;
  std::vector<SafetyCategory> categories;
  int x = 0;  // tokens to retract; |violation| in the synthetic setting
};

struct SftExample {
  std::vector<Token> context;  // prompt + part1 + violation
  std::vector<Token> target;   // category tokens + BacktrackBy(x) + part2
  std::vector<bool> loss_mask; // context+target positions; true = loss-active
  std::vector<SafetyCategory> categories;
  int x = 0;
  std::size_t prompt_len = 0;  // context[0, prompt_len) is the prompt
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static SftExample from_json(const nlohmann::json& j);
};

/// Uniformly seeded choice among the sentence boundaries of the response
/// (positions after a sentence-end symbol, excluding the end of the
/// response). Error(kRange) when no boundary is eligible.
ViolatingDraft inject_violation(const SafePair& pair,
                                const std::vector<Token>& violation,
                                const std::vector<SafetyCategory>& categories,
                                int sentence_end_sym, std::uint64_t seed);

/// Assembles the masked example; category tokens appear in registry order.
SftExample build_sft_example(const ViolatingDraft& draft,
                             const std::vector<Token>& prompt);

struct HarmfulGeneration {
  bool refusal = false;
  std::string pre;      // steering text before the harmful part
  std::string harmful;  // the <harmful> segment
  std::vector<SafetyCategory> categories;
};

/// Parses a generator reply: either a refusal ("I can't help with that"), or
/// text with a <harmful>...</harmful> segment followed by a <tag>...</tag>
/// comma-separated category list.
HarmfulGeneration parse_harmful_generation(const std::string& text);

/// Drives the harmful-continuation generator prompt against an external
/// endpoint; returns the raw reply text for parse_harmful_generation.
std::string remote_continuation_client(const std::string& user,
                                       const std::string& partial_assistant,
                                       const RemoteConfig& cfg);

/// The generator instruction prompt sent by remote_continuation_client.
const std::string& continuation_system_prompt();

struct DatagenConfig {
  int backtrack_examples = 4000;
  int safe_examples = 2000;
  int prompt_len_min = 3, prompt_len_max = 8;
  int sentences_min = 2, sentences_max = 4;
  int words_per_sentence_min = 3, words_per_sentence_max = 6;
  int payload_len = 2;
  std::uint64_t seed = 1;

  nlohmann::json to_json() const;
  static DatagenConfig from_json(const nlohmann::json& j);
};

struct SftDataset {
  std::vector<SftExample> examples;  // backtrack examples then safe examples
  std::vector<std::vector<Token>> known_violations;
};

/// Seeded synthetic dataset: safe pairs from the vocabulary's safe symbols,
/// violations drawn per category in round-robin. Safe examples carry the
/// plain response as target with no control tokens.
SftDataset build_sft_dataset(const SyntheticVocab& vocab,
                             const DatagenConfig& cfg);

/// Round-trip contract: transducing part1 + violation + target reproduces
/// part1 + part2. Checked for every generated example.
bool sft_round_trip_holds(const SftExample& ex);

}  // namespace rlbf

#endif  // RLBF_CORE_DATAGEN_HPP_
