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

#ifndef RLBF_CORE_REWARD_HPP_
#define RLBF_CORE_REWARD_HPP_

#include <span>
#include <string>
#include <vector>

#include "core/critic.hpp"
#include "core/token.hpp"
#include "core/transducer.hpp"

namespace rlbf {

// Trajectory-level reward. A trajectory earns exactly one of:
//   +1.0  no backtrack, visible output safe
//   -1.0  no backtrack, visible output violating
//   -0.5  some backtrack retracted a span the critic judges safe
//   -0.2  backtrack was necessary but the result is unsafe, incoherent,
//         or useless
//   +1.0  backtrack was necessary and the correction is good
//   -1.0  override: visible output regenerates a known masked violation

struct BacktrackRecord {
  std::vector<SafetyCategory> categories;
  int requested_x = 0;
  std::vector<Token> retracted_span;   // S_violating, original order
  bool clamped = false;
  std::size_t raw_position = 0;
  std::size_t visible_len_after = 0;   // split point in the visible stream
};

struct TrajectorySegmentation {
  std::vector<Token> raw;      // full generated stream, control tokens kept
  std::vector<Token> visible;  // S' after transduction
  std::vector<BacktrackRecord> events;

  /// Tokens kept before the last retraction (S_prefix of the last event);
  /// the whole visible stream when no event occurred.
  std::span<const Token> prefix() const;
  /// Visible tokens generated after the last backtrack (S_suffix).
  std::span<const Token> suffix() const;
};

/// Derives the segmentation by running the offline transducer (lenient,
/// retraction-capable, all categories enabled).
TrajectorySegmentation segment(std::span<const Token> raw);

enum class RewardCase {
  kNoBacktrackSafe,
  kNoBacktrackViolation,
  kUnnecessaryBacktrack,
  kNecessaryBacktrackGood,
  kNecessaryBacktrackBad,
  kMaskedRegenerationOverride,
};

std::string reward_case_name(RewardCase c);

struct RewardBreakdown {
  double value = 0.0;
  RewardCase reward_case = RewardCase::kNoBacktrackSafe;
  QualityJudgment quality;  // populated for necessary-backtrack cases
};

struct RewardConfig {
  Lexicon lexicon;
  QualityConfig quality;
  std::vector<std::vector<Token>> known_violations;
};

/// Applies the case table in precedence order: masked-regeneration override,
/// then the no-backtrack verdicts, then unnecessary backtrack, then
/// correction quality.
RewardBreakdown compute_reward(const TrajectorySegmentation& seg,
                               const RewardConfig& cfg);

}  // namespace rlbf

#endif  // RLBF_CORE_REWARD_HPP_
