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

#ifndef RLBF_CORE_POLICY_HPP_
#define RLBF_CORE_POLICY_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/token.hpp"
#include "core/vocab.hpp"

namespace rlbf {

// Table policy over the synthetic vocabulary: each context class (a hash of
// the last two actions) owns a logit row over the full action space.
// Deliberately tiny; gradients are exact and finite-difference checkable.

/// Per-step mask applied to logits before sampling; masked actions get
/// probability zero. Used by the eval-time backtracking ablations.
using ActionMask = std::function<bool(int action, int step)>;

class Policy {
 public:
  Policy(int buckets, int vocab_size, double temperature = 1.0);

  int buckets() const { return buckets_; }
  int vocab_size() const { return vocab_size_; }
  double temperature() const { return temperature_; }
  void set_temperature(double t) { temperature_ = t; }

  std::size_t param_count() const { return logits_.size(); }
  double param(std::size_t i) const { return logits_[i]; }
  void set_param(std::size_t i, double v) { logits_[i] = v; }
  std::span<const double> row(int bucket) const;

  /// Context class of the last two actions; -1 marks absent history.
  int context_class(int prev, int last) const;

  /// softmax(row / temperature); sums to 1 within 1e-9.
  std::vector<double> distribution(int bucket,
                                   double temperature_override = 0.0,
                                   const ActionMask* mask = nullptr,
                                   int step = 0) const;

  /// Inverse-CDF draw from the context distribution; bit-reproducible.
  int sample(int prev, int last, std::mt19937_64& rng,
             double temperature_override = 0.0,
             const ActionMask* mask = nullptr, int step = 0) const;

  double log_prob(int prev, int last, int action) const;

  /// d log p(action | ctx) / d logits added into grad (dense, same shape).
  void accumulate_logprob_grad(int prev, int last, int action, double weight,
                               std::vector<double>& grad) const;

  void apply_update(std::span<const double> direction, double step_size);

  nlohmann::json to_json() const;
  static Policy from_json(const nlohmann::json& j);

 private:
  int buckets_;
  int vocab_size_;
  double temperature_;
  std::vector<double> logits_;  // buckets_ x vocab_size_
};

struct AttackSpec {
  enum class Kind { kMiddleFill, kPrefill, kDecodingParams };
  Kind kind = Kind::kMiddleFill;
  std::size_t position = 0;            // generation step, middle_fill
  std::vector<Token> payload;          // violation tokens
  double temperature_override = 1.0;   // decoding_params

  nlohmann::json to_json() const;
  static AttackSpec from_json(const nlohmann::json& j);
};

struct Trajectory {
  std::vector<Token> prompt;
  std::vector<Token> tokens;   // raw generated stream
  std::vector<bool> forced;    // per generated token; true = attack payload
  std::optional<AttackSpec> attack;
  std::uint64_t seed = 0;
};

struct SampleConfig {
  std::size_t max_len = 64;
  const ActionMask* mask = nullptr;
};

/// Autoregressive rollout until EOR or max_len. Forced payload tokens are
/// flagged and never contribute to the policy log-probability.
Trajectory sample_trajectory(const Policy& policy, const SyntheticVocab& vocab,
                             const std::vector<Token>& prompt,
                             const std::optional<AttackSpec>& attack,
                             std::uint64_t seed, const SampleConfig& cfg = {});

/// Sum of log pi(token | last-2 context) over non-forced generated positions;
/// the gradient (same shape as the parameter table) is exact.
struct LogProbGrad {
  double logprob = 0.0;
  std::vector<double> grad;
};
LogProbGrad logprob_and_grad(const Policy& policy, const SyntheticVocab& vocab,
                             const Trajectory& traj);

double trajectory_logprob(const Policy& policy, const SyntheticVocab& vocab,
                          const Trajectory& traj);

}  // namespace rlbf

#endif  // RLBF_CORE_POLICY_HPP_
