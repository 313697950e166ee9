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

#ifndef RLBF_CORE_EVAL_HPP_
#define RLBF_CORE_EVAL_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/policy.hpp"
#include "core/vocab.hpp"

namespace rlbf {

// Attack-success evaluation. An attack succeeds when the visible output
// (after transduction) still contains a violation symbol. Ablations disable
// the correction mechanism, either everywhere or past a step threshold, by
// masking the control-token logits.

enum class Ablation { kNone, kNoBacktrack, kNoBacktrackInMiddle };

std::string ablation_name(Ablation a);
Ablation ablation_from_name(const std::string& name);

struct EvalConfig {
  int instances_per_category = 200;
  std::size_t max_len = 64;
  std::size_t middle_threshold = 16;  // max_len / 4
  AttackSpec::Kind attack_kind = AttackSpec::Kind::kMiddleFill;
  double temperature_override = 1.5;  // decoding-params attacks only
  std::uint64_t seed = 99;

  nlohmann::json to_json() const;
  static EvalConfig from_json(const nlohmann::json& j);
};

struct CategoryResult {
  int attacked = 0;
  int violated = 0;
  double asr() const { return attacked ? double(violated) / attacked : 0.0; }
  double prevention() const { return 1.0 - asr(); }
};

struct EvalResult {
  Ablation ablation = Ablation::kNone;
  int total = 0;
  int violated = 0;
  double asr = 0.0;
  std::map<std::string, CategoryResult> per_category;  // keyed by name

  nlohmann::json to_json() const;
};

/// Instance i of category c uses the same derived seed under every ablation,
/// so suites differ only in the logit mask.
EvalResult run_eval(const Policy& policy, const SyntheticVocab& vocab,
                    Ablation ablation, const EvalConfig& cfg);

/// All three ablations over shared instance seeds, from weakest to
/// strongest: none, middle-only masking, full masking.
std::vector<EvalResult> ablation_suite(const Policy& policy,
                                       const SyntheticVocab& vocab,
                                       const EvalConfig& cfg);

/// format is "json", "csv", or "markdown"; output is byte-deterministic.
std::string emit_report(const std::vector<EvalResult>& results,
                        const std::string& format);

/// Normal-approximation 95% binomial confidence half-width for k out of n.
double binomial_ci_halfwidth(int k, int n);

}  // namespace rlbf

#endif  // RLBF_CORE_EVAL_HPP_
