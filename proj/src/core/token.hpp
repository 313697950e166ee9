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

#ifndef RLBF_CORE_TOKEN_HPP_
#define RLBF_CORE_TOKEN_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/error.hpp"

namespace rlbf {

// Control-token grammar: a response stream is content tokens interleaved
// with correction signals of the form
//   [CATEGORY_A] [CATEGORY_B] ... [BACKTRACK_BY_x]
// where the category run is contiguous and immediately precedes the
// backtrack command. [EOR] terminates the response.

inline constexpr int kCategoryCount = 18;
inline constexpr int kMaxBacktrack = 4096;

enum class SafetyCategory : int {
  kDangerousContent = 0,
  kHarassment,
  kHateSpeech,
  kSexuallyExplicit,
  kUnder18,
  kToxic,
  kProfanity,
  kDeathHarmAndTragedy,
  kViolent,
  kFirearmsAndWeapons,
  kPublicSafety,
  kHealth,
  kReligionAndBelief,
  kIllicitDrugs,
  kWarAndConflict,
  kPolitics,
  kFinance,
  kLegal,
};

/// Canonical uppercase identifier, e.g. "HATE_SPEECH".
const std::string& category_name(SafetyCategory c);

/// Inverse of category_name.
std::optional<SafetyCategory> category_from_name(const std::string& name);

/// Maps free-form labels ("Hate Speech", "Death Harm & Tragedy", "under 18")
/// to a category: uppercase, "&" -> "AND", whitespace runs -> "_".
std::optional<SafetyCategory> category_from_label(const std::string& label);

struct Token {
  enum class Kind { kContent, kCategory, kBacktrack, kEndOfResponse };

  Kind kind = Kind::kEndOfResponse;
  int sym = 0;                                          // kContent
  SafetyCategory cat = SafetyCategory::kDangerousContent;  // kCategory
  int backtrack_by = 0;                                 // kBacktrack

  static Token content(int sym);
  static Token category(SafetyCategory cat);
  static Token backtrack(int x);  // throws Error(kRange) outside [1, 4096]
  static Token end_of_response();

  bool is_content() const { return kind == Kind::kContent; }
  bool is_control() const { return kind != Kind::kContent; }

  friend bool operator==(const Token& a, const Token& b);
  friend bool operator<(const Token& a, const Token& b);  // ordered containers
};

/// Content-symbol <-> surface-text table. Symbol i renders as content(i).
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> content);

  std::size_t size() const { return content_.size(); }
  const std::string& text(int sym) const;  // Error(kLookup) if out of range
  std::optional<int> lookup(const std::string& text) const;

  int max_backtrack() const { return max_backtrack_; }
  void set_max_backtrack(int x) { max_backtrack_ = x; }

 private:
  std::vector<std::string> content_;
  int max_backtrack_ = kMaxBacktrack;
};

/// Canonical surface form: [CATEGORY_<NAME>], [BACKTRACK_BY_<x>], [EOR],
/// or the vocabulary text of a content symbol.
std::string render_token(const Token& t, const Vocabulary& vocab);

/// Exact inverse of render_token. Rejects leading zeros, x outside
/// [1, max_backtrack], unknown category names, and unknown content text.
Token parse_token(const std::string& s, const Vocabulary& vocab);

enum class GrammarMode { kStrict, kLenient };

enum class GrammarFaultKind {
  kBacktrackWithoutCategory,  // BacktrackBy not preceded by a category run
  kDanglingCategory,          // category run not followed by a BacktrackBy
  kControlInPrompt,           // control token inside the prompt region
};

struct GrammarFault {
  GrammarFaultKind kind;
  std::size_t position;  // token index in the input sequence
};

struct GrammarReport {
  std::vector<GrammarFault> faults;
  bool ok() const { return faults.empty(); }
};

/// Scans a token sequence for protocol faults. Tokens at index < prompt_len
/// form the prompt region, where any control token is a fault. In strict
/// mode a non-empty report is thrown as Error(kGrammar).
GrammarReport validate_stream_grammar(std::span<const Token> tokens,
                                      GrammarMode mode,
                                      std::size_t prompt_len = 0);

}  // namespace rlbf

#endif  // RLBF_CORE_TOKEN_HPP_
