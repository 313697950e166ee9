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

#include "core/vocab.hpp"

#include <algorithm>

#include "core/error.hpp"

namespace rlbf {

using nlohmann::json;

SyntheticVocab::SyntheticVocab() {
  categories_ = {
      SafetyCategory::kHateSpeech,       SafetyCategory::kToxic,
      SafetyCategory::kPolitics,         SafetyCategory::kHealth,
      SafetyCategory::kDangerousContent, SafetyCategory::kSexuallyExplicit,
      SafetyCategory::kPublicSafety,     SafetyCategory::kIllicitDrugs,
      SafetyCategory::kViolent,          SafetyCategory::kFinance,
  };
}

int SyntheticVocab::violation_symbol(int cat_index, int k) const {
  if (cat_index < 0 || cat_index >= ncats() || k < 0 || k >= per_category_) {
    throw Error(ErrorCode::kRange, "violation symbol index out of range");
  }
  return safe_count_ + cat_index * per_category_ + k;
}

bool SyntheticVocab::is_violation_symbol(int sym) const {
  return sym >= safe_count_ && sym < safe_count_ + per_category_ * ncats();
}

int SyntheticVocab::category_index_of_symbol(int sym) const {
  if (!is_violation_symbol(sym)) return -1;
  return (sym - safe_count_) / per_category_;
}

int SyntheticVocab::action_of(const Token& t) const {
  switch (t.kind) {
    case Token::Kind::kContent:
      if (t.sym < 0 || t.sym >= content_count()) {
        throw Error(ErrorCode::kRange,
                    "content symbol outside vocabulary: " +
                        std::to_string(t.sym));
      }
      return t.sym;
    case Token::Kind::kCategory:
      return content_count() + static_cast<int>(t.cat);
    case Token::Kind::kBacktrack:
      if (t.backtrack_by > max_policy_backtrack_) {
        throw Error(ErrorCode::kRange,
                    "backtrack amount outside policy action space: " +
                        std::to_string(t.backtrack_by));
      }
      return content_count() + kCategoryCount + t.backtrack_by - 1;
    case Token::Kind::kEndOfResponse:
      return eor_action();
  }
  throw Error(ErrorCode::kRange, "invalid token kind");
}

Token SyntheticVocab::token_of_action(int action) const {
  if (action < 0 || action >= vocab_size()) {
    throw Error(ErrorCode::kRange,
                "action out of range: " + std::to_string(action));
  }
  if (action < content_count()) return Token::content(action);
  action -= content_count();
  if (action < kCategoryCount) {
    return Token::category(static_cast<SafetyCategory>(action));
  }
  action -= kCategoryCount;
  if (action < max_policy_backtrack_) return Token::backtrack(action + 1);
  return Token::end_of_response();
}

bool SyntheticVocab::is_category_action(int action) const {
  return action >= content_count() &&
         action < content_count() + kCategoryCount;
}

bool SyntheticVocab::is_backtrack_action(int action) const {
  return action >= content_count() + kCategoryCount &&
         action < vocab_size() - 1;
}

Lexicon SyntheticVocab::lexicon() const {
  Lexicon lex;
  for (int j = 0; j < ncats(); ++j) {
    for (int k = 0; k < per_category_; ++k) {
      lex.add(categories_[j], violation_symbol(j, k));
    }
  }
  return lex;
}

Vocabulary SyntheticVocab::vocabulary() const {
  std::vector<std::string> content;
  content.reserve(content_count());
  for (int i = 0; i < safe_count_; ++i) {
    content.push_back("w" + std::to_string(i));
  }
  for (int j = 0; j < ncats(); ++j) {
    for (int k = 0; k < per_category_; ++k) {
      content.push_back("v_" + category_name(categories_[j]) + "_" +
                        std::to_string(k));
    }
  }
  content.push_back(".");
  Vocabulary v(std::move(content));
  v.set_max_backtrack(kMaxBacktrack);
  return v;
}

json SyntheticVocab::to_json() const {
  json cats = json::array();
  for (SafetyCategory c : categories_) cats.push_back(category_name(c));
  return json{
      {"safe_symbols", safe_count_},
      {"per_category", per_category_},
      {"categories", cats},
      {"max_policy_backtrack", max_policy_backtrack_},
  };
}

SyntheticVocab SyntheticVocab::from_json(const json& j) {
  SyntheticVocab v;
  if (j.contains("safe_symbols")) v.safe_count_ = j["safe_symbols"].get<int>();
  if (j.contains("per_category")) {
    v.per_category_ = j["per_category"].get<int>();
  }
  if (j.contains("max_policy_backtrack")) {
    v.max_policy_backtrack_ = j["max_policy_backtrack"].get<int>();
  }
  if (j.contains("categories")) {
    v.categories_.clear();
    for (const auto& name : j["categories"]) {
      auto c = category_from_name(name.get<std::string>());
      if (!c) {
        throw Error(ErrorCode::kUnknownCategory,
                    "unknown category: " + name.get<std::string>());
      }
      v.categories_.push_back(*c);
    }
  }
  if (v.safe_count_ < 1 || v.per_category_ < 1 || v.categories_.empty() ||
      v.max_policy_backtrack_ < 1 ||
      v.max_policy_backtrack_ > kMaxBacktrack) {
    throw Error(ErrorCode::kRange, "invalid vocabulary configuration");
  }
  return v;
}

}  // namespace rlbf
