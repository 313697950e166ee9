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

#ifndef RLBF_CORE_TRANSDUCER_HPP_
#define RLBF_CORE_TRANSDUCER_HPP_

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "core/token.hpp"

namespace rlbf {

// Streaming output handler for the backtracking protocol. The generator
// never rewinds its own state; this transducer owns the correction: it
// consumes the raw autoregressive stream and produces the user-visible
// stream with retractions applied.

enum class DownstreamMode {
  kRetractionCapable,  // sink understands Retract events; hold_back may be 0
  kAppendOnly,         // plain-text sink; only buffered tokens can be undone
};

enum class OverlongPolicy { kClamp, kError };

struct TransducerConfig {
  std::size_t hold_back = 0;
  DownstreamMode downstream = DownstreamMode::kRetractionCapable;
  OverlongPolicy overlong = OverlongPolicy::kClamp;
  GrammarMode grammar = GrammarMode::kLenient;
  std::array<bool, kCategoryCount> category_enabled = [] {
    std::array<bool, kCategoryCount> a;
    a.fill(true);
    return a;
  }();

  bool enabled(SafetyCategory c) const {
    return category_enabled[static_cast<int>(c)];
  }

  // Error(kRange) if append-only with hold_back == 0.
  void validate() const;
};

enum class TransducerFaultKind {
  kBacktrackWithoutCategory,
  kDanglingCategory,
  kOverlongBacktrack,
  kCommitHorizon,   // retraction past committed output in append-only mode
  kInputAfterEnd,   // token fed after [EOR] or finish()
};

struct StreamEvent {
  enum class Kind { kEmit, kRetract, kNote, kFault };

  Kind kind = Kind::kEmit;
  Token token;                     // kEmit
  std::size_t retract_n = 0;       // kRetract
  std::vector<SafetyCategory> categories;  // kNote
  std::vector<Token> retracted_span;       // kNote, original order
  bool clamped = false;                    // kNote
  TransducerFaultKind fault = TransducerFaultKind::kBacktrackWithoutCategory;
  std::size_t position = 0;  // kFault: raw-stream index of offending token

  static StreamEvent emit(Token t);
  static StreamEvent retract(std::size_t n);
  static StreamEvent note(std::vector<SafetyCategory> cats,
                          std::vector<Token> span, bool clamped);
  static StreamEvent make_fault(TransducerFaultKind kind, std::size_t pos);
};

/// Single-writer streaming transducer; one instance per stream.
class Transducer {
 public:
  explicit Transducer(TransducerConfig cfg);

  std::vector<StreamEvent> feed(const Token& t);
  std::vector<StreamEvent> finish();

  bool finished() const { return done_; }
  std::size_t tokens_in() const { return pos_; }
  std::size_t tokens_emitted() const { return total_emitted_; }
  std::size_t retractions() const { return retraction_events_; }
  std::size_t faults() const { return fault_events_; }

  // Visible response so far (committed + buffered); test hook.
  const std::vector<Token>& visible() const { return visible_; }

 private:
  void flush(std::vector<StreamEvent>& out);
  void apply_backtrack(int x, std::size_t pos, std::vector<StreamEvent>& out);

  TransducerConfig cfg_;
  std::vector<Token> visible_;  // content tokens; [0, emitted_) committed
  std::size_t emitted_ = 0;
  std::vector<SafetyCategory> pending_run_;
  std::size_t run_start_ = 0;
  std::size_t pos_ = 0;
  bool done_ = false;
  std::size_t total_emitted_ = 0;
  std::size_t retraction_events_ = 0;
  std::size_t fault_events_ = 0;
};

struct OfflineNote {
  std::vector<SafetyCategory> categories;
  int requested_x = 0;
  std::vector<Token> retracted_span;  // original order
  bool clamped = false;
  std::size_t raw_position = 0;       // index of the BacktrackBy token
  std::size_t visible_len_after = 0;  // visible length right after retraction
};

struct OfflineFault {
  TransducerFaultKind kind;
  std::size_t position;
};

struct OfflineResult {
  std::vector<Token> visible;
  std::vector<OfflineNote> notes;
  std::vector<OfflineFault> faults;
};

/// Reference (non-streaming) semantics: push content tokens onto a list, pop
/// x on each category-run + BacktrackBy(x). The streaming path is tested
/// against this oracle.
OfflineResult transduce_offline(std::span<const Token> tokens,
                                const TransducerConfig& cfg);

/// Replays emit/retract events literally onto a list; used to compare the
/// streaming path against transduce_offline.
std::vector<Token> replay_events(std::span<const StreamEvent> events);

}  // namespace rlbf

#endif  // RLBF_CORE_TRANSDUCER_HPP_
