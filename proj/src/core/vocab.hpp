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

#ifndef RLBF_CORE_VOCAB_HPP_
#define RLBF_CORE_VOCAB_HPP_

#include <vector>

#include <json.hpp>

#include "core/critic.hpp"
#include "core/token.hpp"

namespace rlbf {

// Synthetic token environment: a partitioned content alphabet (safe symbols,
// per-category violation symbols, one sentence-end symbol) plus the control
// tokens, flattened into a dense action space for the table policy.

class SyntheticVocab {
 public:
  SyntheticVocab();  // defaults: 200 safe, 5 violations x 10 categories

  int safe_count() const { return safe_count_; }
  int per_category() const { return per_category_; }
  const std::vector<SafetyCategory>& attack_categories() const {
    return categories_;
  }
  int sentence_end() const { return safe_count_ + per_category_ * ncats(); }
  int content_count() const { return sentence_end() + 1; }
  int max_policy_backtrack() const { return max_policy_backtrack_; }

  int violation_symbol(int cat_index, int k) const;
  bool is_violation_symbol(int sym) const;
  // Index into attack_categories(), or -1.
  int category_index_of_symbol(int sym) const;

  // Dense action space: content symbols, then the 18 category tokens, then
  // BacktrackBy(1..max_policy_backtrack), then EOR.
  int vocab_size() const { return content_count() + kCategoryCount +
                                  max_policy_backtrack_ + 1; }
  int eor_action() const { return vocab_size() - 1; }
  int action_of(const Token& t) const;       // Error(kRange) if unrepresentable
  Token token_of_action(int action) const;   // Error(kRange) if out of range
  bool is_category_action(int action) const;
  bool is_backtrack_action(int action) const;
  bool is_control_action(int action) const {
    return action >= content_count();
  }

  Lexicon lexicon() const;
  Vocabulary vocabulary() const;

  nlohmann::json to_json() const;
  static SyntheticVocab from_json(const nlohmann::json& j);

 private:
  int ncats() const { return static_cast<int>(categories_.size()); }

  int safe_count_ = 200;
  int per_category_ = 5;
  int max_policy_backtrack_ = 8;
  std::vector<SafetyCategory> categories_;
};

}  // namespace rlbf

#endif  // RLBF_CORE_VOCAB_HPP_
