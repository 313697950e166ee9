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

#include "core/token.hpp"

#include <array>
#include <cctype>
#include <tuple>
#include <unordered_map>

namespace rlbf {

namespace {

const std::array<std::string, kCategoryCount>& names() {
  static const std::array<std::string, kCategoryCount> kNames = {
      "DANGEROUS_CONTENT",
      "HARASSMENT",
      "HATE_SPEECH",
      "SEXUALLY_EXPLICIT",
      "UNDER_18",
      "TOXIC",
      "PROFANITY",
      "DEATH_HARM_AND_TRAGEDY",
      "VIOLENT",
      "FIREARMS_AND_WEAPONS",
      "PUBLIC_SAFETY",
      "HEALTH",
      "RELIGION_AND_BELIEF",
      "ILLICIT_DRUGS",
      "WAR_AND_CONFLICT",
      "POLITICS",
      "FINANCE",
      "LEGAL",
  };
  return kNames;
}

const std::unordered_map<std::string, SafetyCategory>& name_index() {
  static const auto* kIndex = [] {
    auto* m = new std::unordered_map<std::string, SafetyCategory>();
    for (int i = 0; i < kCategoryCount; ++i) {
      m->emplace(names()[i], static_cast<SafetyCategory>(i));
    }
    return m;
  }();
  return *kIndex;
}

}  // namespace

const std::string& category_name(SafetyCategory c) {
  return names()[static_cast<int>(c)];
}

std::optional<SafetyCategory> category_from_name(const std::string& name) {
  auto it = name_index().find(name);
  if (it == name_index().end()) return std::nullopt;
  return it->second;
}

std::optional<SafetyCategory> category_from_label(const std::string& label) {
  std::string canon;
  canon.reserve(label.size());
  std::size_t i = 0, n = label.size();
  while (i < n && std::isspace(static_cast<unsigned char>(label[i]))) ++i;
  while (n > i && std::isspace(static_cast<unsigned char>(label[n - 1]))) --n;
  bool pending_sep = false;
  for (; i < n; ++i) {
    char c = label[i];
    if (std::isspace(static_cast<unsigned char>(c)) || c == '_') {
      pending_sep = true;
      continue;
    }
    if (pending_sep && !canon.empty()) canon.push_back('_');
    pending_sep = false;
    if (c == '&') {
      canon += "AND";
    } else {
      canon.push_back(
          static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
  }
  return category_from_name(canon);
}

Token Token::content(int sym) {
  if (sym < 0) throw Error(ErrorCode::kRange, "content symbol must be >= 0");
  Token t;
  t.kind = Kind::kContent;
  t.sym = sym;
  return t;
}

Token Token::category(SafetyCategory cat) {
  Token t;
  t.kind = Kind::kCategory;
  t.cat = cat;
  return t;
}

Token Token::backtrack(int x) {
  if (x < 1 || x > kMaxBacktrack) {
    throw Error(ErrorCode::kRange,
                "backtrack amount " + std::to_string(x) + " outside [1, " +
                    std::to_string(kMaxBacktrack) + "]");
  }
  Token t;
  t.kind = Kind::kBacktrack;
  t.backtrack_by = x;
  return t;
}

Token Token::end_of_response() { return Token{}; }

bool operator==(const Token& a, const Token& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Token::Kind::kContent:
      return a.sym == b.sym;
    case Token::Kind::kCategory:
      return a.cat == b.cat;
    case Token::Kind::kBacktrack:
      return a.backtrack_by == b.backtrack_by;
    case Token::Kind::kEndOfResponse:
      return true;
  }
  return false;
}

bool operator<(const Token& a, const Token& b) {
  auto key = [](const Token& t) {
    return std::tuple(static_cast<int>(t.kind), t.sym,
                      static_cast<int>(t.cat), t.backtrack_by);
  };
  return key(a) < key(b);
}

Vocabulary::Vocabulary(std::vector<std::string> content)
    : content_(std::move(content)) {}

const std::string& Vocabulary::text(int sym) const {
  if (sym < 0 || static_cast<std::size_t>(sym) >= content_.size()) {
    throw Error(ErrorCode::kLookup,
                "unknown content symbol " + std::to_string(sym));
  }
  return content_[sym];
}

std::optional<int> Vocabulary::lookup(const std::string& text) const {
  for (std::size_t i = 0; i < content_.size(); ++i) {
    if (content_[i] == text) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::string render_token(const Token& t, const Vocabulary& vocab) {
  switch (t.kind) {
    case Token::Kind::kContent:
      return vocab.text(t.sym);
    case Token::Kind::kCategory:
      return "[CATEGORY_" + category_name(t.cat) + "]";
    case Token::Kind::kBacktrack:
      return "[BACKTRACK_BY_" + std::to_string(t.backtrack_by) + "]";
    case Token::Kind::kEndOfResponse:
      return "[EOR]";
  }
  throw Error(ErrorCode::kRange, "invalid token kind");
}

namespace {

constexpr const char kCategoryPrefix[] = "[CATEGORY_";
constexpr const char kBacktrackPrefix[] = "[BACKTRACK_BY_";

}  // namespace

Token parse_token(const std::string& s, const Vocabulary& vocab) {
  if (s == "[EOR]") return Token::end_of_response();
  if (s.rfind(kCategoryPrefix, 0) == 0) {
    if (s.back() != ']') {
      throw Error(ErrorCode::kParse,
                  "unterminated bracket token at position " +
                      std::to_string(s.size()) + ": " + s);
    }
    std::string name = s.substr(sizeof(kCategoryPrefix) - 1,
                                s.size() - sizeof(kCategoryPrefix));
    auto cat = category_from_name(name);
    if (!cat) {
      throw Error(ErrorCode::kUnknownCategory,
                  "unknown category name: " + name);
    }
    return Token::category(*cat);
  }
  if (s.rfind(kBacktrackPrefix, 0) == 0) {
    if (s.back() != ']') {
      throw Error(ErrorCode::kParse,
                  "unterminated bracket token at position " +
                      std::to_string(s.size()) + ": " + s);
    }
    std::string digits = s.substr(sizeof(kBacktrackPrefix) - 1,
                                  s.size() - sizeof(kBacktrackPrefix));
    if (digits.empty()) {
      throw Error(ErrorCode::kParse, "missing backtrack amount: " + s);
    }
    for (std::size_t i = 0; i < digits.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(digits[i]))) {
        throw Error(ErrorCode::kParse,
                    "non-digit in backtrack amount at position " +
                        std::to_string(sizeof(kBacktrackPrefix) - 1 + i) +
                        ": " + s);
      }
    }
    if (digits[0] == '0') {
      // Covers both [BACKTRACK_BY_0] and leading-zero forms like _00, _01.
      if (digits == "0") {
        throw Error(ErrorCode::kRange, "backtrack amount 0 outside [1, " +
                                           std::to_string(kMaxBacktrack) +
                                           "]");
      }
      throw Error(ErrorCode::kParse, "leading zero in backtrack amount: " + s);
    }
    if (digits.size() > 4) {
      throw Error(ErrorCode::kRange, "backtrack amount too large: " + s);
    }
    int x = std::stoi(digits);
    if (x > kMaxBacktrack || x > vocab.max_backtrack()) {
      throw Error(ErrorCode::kRange, "backtrack amount out of range: " + s);
    }
    return Token::backtrack(x);
  }
  if (!s.empty() && s[0] == '[') {
    throw Error(ErrorCode::kParse, "malformed bracket token at position 0: " + s);
  }
  auto sym = vocab.lookup(s);
  if (!sym) throw Error(ErrorCode::kLookup, "unknown content text: " + s);
  return Token::content(*sym);
}

GrammarReport validate_stream_grammar(std::span<const Token> tokens,
                                      GrammarMode mode,
                                      std::size_t prompt_len) {
  GrammarReport report;
  bool run_open = false;
  std::size_t run_start = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const Token& t = tokens[i];
    if (i < prompt_len) {
      if (t.is_control()) {
        report.faults.push_back({GrammarFaultKind::kControlInPrompt, i});
      }
      continue;
    }
    switch (t.kind) {
      case Token::Kind::kCategory:
        if (!run_open) {
          run_open = true;
          run_start = i;
        }
        break;
      case Token::Kind::kBacktrack:
        if (!run_open) {
          report.faults.push_back(
              {GrammarFaultKind::kBacktrackWithoutCategory, i});
        }
        run_open = false;
        break;
      default:
        if (run_open) {
          report.faults.push_back({GrammarFaultKind::kDanglingCategory,
                                   run_start});
          run_open = false;
        }
        break;
    }
  }
  if (run_open) {
    report.faults.push_back({GrammarFaultKind::kDanglingCategory, run_start});
  }
  if (mode == GrammarMode::kStrict && !report.ok()) {
    throw Error(ErrorCode::kGrammar,
                "stream grammar violation at position " +
                    std::to_string(report.faults.front().position));
  }
  return report;
}

}  // namespace rlbf
