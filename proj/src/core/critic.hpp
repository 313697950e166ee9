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

#ifndef RLBF_CORE_CRITIC_HPP_
#define RLBF_CORE_CRITIC_HPP_

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/token.hpp"

namespace rlbf {

// Safety critic for the synthetic token environment. The deterministic
// lexicon matcher stands in for an LLM critic so that rewards are decidable;
// the remote client drives the same interfaces against a real critic service.

/// Maps each category to the set of content symbols that violate it.
/// A symbol may violate several categories; violating symbols are disjoint
/// from the safe-symbol set by construction.
class Lexicon {
 public:
  Lexicon() = default;

  void add(SafetyCategory c, int sym);
  bool violating(int sym) const;
  std::vector<SafetyCategory> categories_of(int sym) const;
  const std::map<SafetyCategory, std::set<int>>& sets() const { return sets_; }

  nlohmann::json to_json() const;  // {"TOXIC": [syms...], ...}
  static Lexicon from_json(const nlohmann::json& j);

 private:
  std::map<SafetyCategory, std::set<int>> sets_;
  std::set<int> all_;
};

struct CriticVerdict {
  bool safe = true;
  std::vector<SafetyCategory> categories;  // nonempty iff !safe
  std::size_t begin = 0, end = 0;          // [begin, end) into judged sequence
};

/// Safe iff no symbol is in any category set; otherwise reports the maximal
/// contiguous violating run containing the first violating token, with the
/// union of the run's categories.
CriticVerdict lexicon_judge(std::span<const Token> tokens, const Lexicon& lex);

struct QualityConfig {
  std::size_t min_len = 1;      // coherent: suffix length floor
  std::size_t min_content = 1;  // useful: non-sentence-end token floor
  int sentence_end_sym = -1;    // -1: no sentence-end symbol defined
};

struct QualityJudgment {
  bool safe = false;
  bool coherent = false;
  bool useful = false;
  bool all() const { return safe && coherent && useful; }
};

/// Structural stand-in for the critic's post-correction judgment of the
/// continuation that follows a backtrack.
QualityJudgment judge_correction(std::span<const Token> prefix,
                                 std::span<const Token> suffix,
                                 const Lexicon& lex, const QualityConfig& cfg);

struct AnnotationSegment {
  enum class Kind { kPlain, kViolation, kEdit };
  Kind kind;
  std::string text;

  friend bool operator==(const AnnotationSegment&,
                         const AnnotationSegment&) = default;
};

struct CriticAnnotation {
  bool is_no = false;  // the critic found nothing to fix
  std::vector<AnnotationSegment> segments;

  /// Plain + Violation text with Edits dropped: the response as judged.
  std::string original_text() const;
  /// Plain + Edit text with Violations dropped: the corrected response.
  std::string edited_text() const;
};

/// Parses a critic reply: exactly "No" (modulo surrounding whitespace), or
/// text with <violation>...</violation> / <edit>...</edit> tags. Plain text
/// is preserved byte-exactly, except that whitespace between a violation
/// close and its edit open is dropped.
CriticAnnotation parse_critic_annotation(const std::string& text);

struct RemoteConfig {
  std::string host;  // e.g. "127.0.0.1"
  int port = 80;
  std::string path = "/v1/generate";
  int max_retries = 3;
  int backoff_ms = 100;  // doubled per retry
  int timeout_sec = 30;
};

/// Posts {"system", "user"} with the critic instruction prompt and parses the
/// reply's "text" field via parse_critic_annotation. Error(kTransport) after
/// the retry budget; parse failures carry the raw reply in the message.
CriticAnnotation remote_critic(const std::string& prompt,
                               const std::string& response,
                               const RemoteConfig& cfg);

/// True iff any known violating segment occurs as a contiguous subsequence
/// of the visible output.
bool detect_masked_regeneration(
    std::span<const Token> generated,
    const std::vector<std::vector<Token>>& known_violations);

/// The critic instruction prompt sent by remote_critic.
const std::string& critic_system_prompt();

namespace detail {
/// POST body as JSON, return reply body; exponential backoff between
/// attempts, Error(kTransport) once the retry budget is spent.
std::string post_json_with_retry(const RemoteConfig& cfg,
                                 const nlohmann::json& body);
}  // namespace detail

}  // namespace rlbf

#endif  // RLBF_CORE_CRITIC_HPP_
