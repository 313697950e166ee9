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

#include "core/reward.hpp"

namespace rlbf {

std::span<const Token> TrajectorySegmentation::prefix() const {
  if (events.empty()) return std::span<const Token>(visible);
  std::size_t split = events.back().visible_len_after;
  return std::span<const Token>(visible).first(split);
}

std::span<const Token> TrajectorySegmentation::suffix() const {
  if (events.empty()) return {};
  std::size_t split = events.back().visible_len_after;
  return std::span<const Token>(visible).subspan(split);
}

TrajectorySegmentation segment(std::span<const Token> raw) {
  TransducerConfig cfg;  // lenient, retraction-capable, hold_back 0
  OfflineResult r = transduce_offline(raw, cfg);
  TrajectorySegmentation seg;
  seg.raw.assign(raw.begin(), raw.end());
  seg.visible = std::move(r.visible);
  for (auto& n : r.notes) {
    BacktrackRecord rec;
    rec.categories = std::move(n.categories);
    rec.requested_x = n.requested_x;
    rec.retracted_span = std::move(n.retracted_span);
    rec.clamped = n.clamped;
    rec.raw_position = n.raw_position;
    rec.visible_len_after = n.visible_len_after;
    seg.events.push_back(std::move(rec));
  }
  return seg;
}

std::string reward_case_name(RewardCase c) {
  switch (c) {
    case RewardCase::kNoBacktrackSafe:
      return "no_backtrack_safe";
    case RewardCase::kNoBacktrackViolation:
      return "no_backtrack_violation";
    case RewardCase::kUnnecessaryBacktrack:
      return "unnecessary_backtrack";
    case RewardCase::kNecessaryBacktrackGood:
      return "necessary_backtrack_good";
    case RewardCase::kNecessaryBacktrackBad:
      return "necessary_backtrack_bad";
    case RewardCase::kMaskedRegenerationOverride:
      return "masked_regeneration_override";
  }
  return "unknown";
}

RewardBreakdown compute_reward(const TrajectorySegmentation& seg,
                               const RewardConfig& cfg) {
  RewardBreakdown out;

  if (detect_masked_regeneration(seg.visible, cfg.known_violations)) {
    out.value = -1.0;
    out.reward_case = RewardCase::kMaskedRegenerationOverride;
    return out;
  }

  if (seg.events.empty()) {
    if (lexicon_judge(seg.visible, cfg.lexicon).safe) {
      out.value = +1.0;
      out.reward_case = RewardCase::kNoBacktrackSafe;
    } else {
      out.value = -1.0;
      out.reward_case = RewardCase::kNoBacktrackViolation;
    }
    return out;
  }

  for (const auto& ev : seg.events) {
    if (lexicon_judge(ev.retracted_span, cfg.lexicon).safe) {
      out.value = -0.5;
      out.reward_case = RewardCase::kUnnecessaryBacktrack;
      return out;
    }
  }

  out.quality = judge_correction(seg.prefix(), seg.suffix(), cfg.lexicon,
                                 cfg.quality);
  bool visible_safe = lexicon_judge(seg.visible, cfg.lexicon).safe;
  if (!visible_safe || !out.quality.all()) {
    out.value = -0.2;
    out.reward_case = RewardCase::kNecessaryBacktrackBad;
  } else {
    out.value = +1.0;
    out.reward_case = RewardCase::kNecessaryBacktrackGood;
  }
  return out;
}

}  // namespace rlbf
