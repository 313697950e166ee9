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

#include <doctest.h>

#include <random>

#include "core/error.hpp"
#include "core/transducer.hpp"

using namespace rlbf;

namespace {

std::vector<StreamEvent> run_stream(const std::vector<Token>& tokens,
                                    const TransducerConfig& cfg) {
  Transducer t(cfg);
  std::vector<StreamEvent> events;
  for (const Token& tok : tokens) {
    for (auto& ev : t.feed(tok)) events.push_back(std::move(ev));
  }
  for (auto& ev : t.finish()) events.push_back(std::move(ev));
  return events;
}

// Seeded stream generator shared with the acceptance gate: mixes safe
// content, violation markers, and (sometimes malformed) control runs.
std::vector<Token> random_stream(std::mt19937_64& rng, std::size_t max_len) {
  std::vector<Token> out;
  std::size_t len = 1 + rng() % max_len;
  while (out.size() < len) {
    switch (rng() % 10) {
      case 0: {  // well-formed correction run
        int ncats = 1 + static_cast<int>(rng() % 3);
        for (int i = 0; i < ncats; ++i) {
          out.push_back(Token::category(
              static_cast<SafetyCategory>(rng() % kCategoryCount)));
        }
        out.push_back(Token::backtrack(1 + static_cast<int>(rng() % 12)));
        break;
      }
      case 1:  // malformed: bare backtrack
        out.push_back(Token::backtrack(1 + static_cast<int>(rng() % 12)));
        break;
      case 2:  // malformed: dangling category
        out.push_back(Token::category(
            static_cast<SafetyCategory>(rng() % kCategoryCount)));
        break;
      default:
        out.push_back(Token::content(static_cast<int>(rng() % 64)));
    }
  }
  if (rng() % 2) out.push_back(Token::end_of_response());
  return out;
}

TransducerConfig random_config(std::mt19937_64& rng) {
  TransducerConfig cfg;
  cfg.downstream = rng() % 2 ? DownstreamMode::kRetractionCapable
                             : DownstreamMode::kAppendOnly;
  cfg.hold_back = cfg.downstream == DownstreamMode::kAppendOnly
                      ? 1 + rng() % 16
                      : rng() % 16;
  cfg.overlong = OverlongPolicy::kClamp;
  cfg.grammar = GrammarMode::kLenient;
  if (rng() % 4 == 0) {
    for (int i = 0; i < kCategoryCount; ++i) {
      cfg.category_enabled[i] = rng() % 2 == 0;
    }
  }
  return cfg;
}

}  // namespace

TEST_CASE("retraction mid-stream produces emit, retract, note, emit") {
  // "the sky is", correction run retracting 2, then "blue today".
  std::vector<Token> raw{
      Token::content(0), Token::content(1), Token::content(2),
      Token::category(SafetyCategory::kToxic), Token::backtrack(2),
      Token::content(3), Token::content(4), Token::end_of_response()};
  auto events = run_stream(raw, TransducerConfig{});
  REQUIRE(events.size() == 7);
  CHECK(events[0].kind == StreamEvent::Kind::kEmit);
  CHECK(events[1].kind == StreamEvent::Kind::kEmit);
  CHECK(events[2].kind == StreamEvent::Kind::kEmit);
  CHECK(events[3].kind == StreamEvent::Kind::kRetract);
  CHECK(events[3].retract_n == 2);
  CHECK(events[4].kind == StreamEvent::Kind::kNote);
  CHECK(events[4].categories ==
        std::vector<SafetyCategory>{SafetyCategory::kToxic});
  CHECK(events[4].retracted_span ==
        std::vector<Token>{Token::content(1), Token::content(2)});
  CHECK(events[5].kind == StreamEvent::Kind::kEmit);
  CHECK(events[5].token == Token::content(3));
  CHECK(events[6].token == Token::content(4));
  CHECK(replay_events(events) ==
        std::vector<Token>{Token::content(0), Token::content(3),
                           Token::content(4)});
}

TEST_CASE("hold_back buffers tokens so retraction never reaches the sink") {
  TransducerConfig cfg;
  cfg.hold_back = 2;
  cfg.downstream = DownstreamMode::kAppendOnly;
  std::vector<Token> raw{
      Token::content(0), Token::content(1), Token::content(2),
      Token::category(SafetyCategory::kToxic), Token::backtrack(2),
      Token::content(3), Token::end_of_response()};
  auto events = run_stream(raw, cfg);
  for (const auto& ev : events) {
    CHECK(ev.kind != StreamEvent::Kind::kRetract);
    CHECK(ev.kind != StreamEvent::Kind::kFault);
  }
  CHECK(replay_events(events) ==
        std::vector<Token>{Token::content(0), Token::content(3)});
}

TEST_CASE("append-only retraction past the commit horizon faults and clamps") {
  TransducerConfig cfg;
  cfg.hold_back = 1;
  cfg.downstream = DownstreamMode::kAppendOnly;
  std::vector<Token> raw{
      Token::content(0), Token::content(1), Token::content(2),
      Token::category(SafetyCategory::kToxic), Token::backtrack(3),
      Token::content(3), Token::end_of_response()};
  auto events = run_stream(raw, cfg);
  bool saw_horizon_fault = false;
  for (const auto& ev : events) {
    if (ev.kind == StreamEvent::Kind::kFault) {
      CHECK(ev.fault == TransducerFaultKind::kCommitHorizon);
      saw_horizon_fault = true;
    }
  }
  CHECK(saw_horizon_fault);
}

TEST_CASE("overlong backtrack clamps or errors per policy") {
  std::vector<Token> raw{Token::content(0),
                         Token::category(SafetyCategory::kToxic),
                         Token::backtrack(5), Token::content(1)};
  SUBCASE("clamp") {
    auto events = run_stream(raw, TransducerConfig{});
    bool clamp_fault = false, clamped_note = false;
    for (const auto& ev : events) {
      if (ev.kind == StreamEvent::Kind::kFault &&
          ev.fault == TransducerFaultKind::kOverlongBacktrack) {
        clamp_fault = true;
      }
      if (ev.kind == StreamEvent::Kind::kNote && ev.clamped) {
        clamped_note = true;
        CHECK(ev.retracted_span.size() == 1);
      }
    }
    CHECK(clamp_fault);
    CHECK(clamped_note);
    CHECK(replay_events(events) == std::vector<Token>{Token::content(1)});
  }
  SUBCASE("error") {
    TransducerConfig cfg;
    cfg.overlong = OverlongPolicy::kError;
    CHECK_THROWS_AS(run_stream(raw, cfg), Error);
  }
}

TEST_CASE("bare backtrack is dropped with a fault") {
  std::vector<Token> raw{Token::content(0), Token::backtrack(1),
                         Token::content(1)};
  auto events = run_stream(raw, TransducerConfig{});
  bool fault = false;
  for (const auto& ev : events) {
    if (ev.kind == StreamEvent::Kind::kFault) {
      CHECK(ev.fault == TransducerFaultKind::kBacktrackWithoutCategory);
      fault = true;
    }
    CHECK(ev.kind != StreamEvent::Kind::kRetract);
  }
  CHECK(fault);
  CHECK(replay_events(events) ==
        std::vector<Token>{Token::content(0), Token::content(1)});
}

TEST_CASE("dangling category faults and the content still flows") {
  std::vector<Token> raw{Token::content(0),
                         Token::category(SafetyCategory::kToxic),
                         Token::content(1)};
  auto events = run_stream(raw, TransducerConfig{});
  bool fault = false;
  for (const auto& ev : events) {
    if (ev.kind == StreamEvent::Kind::kFault) {
      CHECK(ev.fault == TransducerFaultKind::kDanglingCategory);
      fault = true;
    }
  }
  CHECK(fault);
  CHECK(replay_events(events) ==
        std::vector<Token>{Token::content(0), Token::content(1)});
}

TEST_CASE("disabled categories suppress the retraction") {
  TransducerConfig cfg;
  cfg.category_enabled[static_cast<int>(SafetyCategory::kToxic)] = false;
  std::vector<Token> raw{Token::content(0), Token::content(1),
                         Token::category(SafetyCategory::kToxic),
                         Token::backtrack(1), Token::content(2)};
  auto events = run_stream(raw, cfg);
  CHECK(replay_events(events) ==
        std::vector<Token>{Token::content(0), Token::content(1),
                           Token::content(2)});

  // A run with any enabled category still retracts.
  raw.insert(raw.begin() + 2, Token::category(SafetyCategory::kViolent));
  events = run_stream(raw, cfg);
  CHECK(replay_events(events) ==
        std::vector<Token>{Token::content(0), Token::content(2)});
}

TEST_CASE("input after end of response faults") {
  Transducer t((TransducerConfig()));
  t.feed(Token::content(0));
  t.feed(Token::end_of_response());
  auto events = t.feed(Token::content(1));
  REQUIRE(events.size() == 1);
  CHECK(events[0].kind == StreamEvent::Kind::kFault);
  CHECK(events[0].fault == TransducerFaultKind::kInputAfterEnd);
}

TEST_CASE("strict grammar raises on malformed runs") {
  TransducerConfig cfg;
  cfg.grammar = GrammarMode::kStrict;
  std::vector<Token> raw{Token::content(0), Token::backtrack(1)};
  CHECK_THROWS_AS(run_stream(raw, cfg), Error);
}

TEST_CASE("streaming replay equals the offline oracle on random streams") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 3000; ++i) {
    auto cfg = random_config(rng);
    auto raw = random_stream(rng, 96);
    auto offline = transduce_offline(raw, cfg);
    auto visible = replay_events(run_stream(raw, cfg));
    REQUIRE(visible == offline.visible);
  }
}

TEST_CASE("offline notes record span, position, and clamping") {
  std::vector<Token> raw{Token::content(0), Token::content(1),
                         Token::category(SafetyCategory::kHealth),
                         Token::category(SafetyCategory::kToxic),
                         Token::backtrack(1), Token::content(2)};
  auto r = transduce_offline(raw, TransducerConfig{});
  REQUIRE(r.notes.size() == 1);
  CHECK(r.notes[0].categories ==
        std::vector<SafetyCategory>{SafetyCategory::kHealth,
                                    SafetyCategory::kToxic});
  CHECK(r.notes[0].retracted_span == std::vector<Token>{Token::content(1)});
  CHECK(r.notes[0].requested_x == 1);
  CHECK_FALSE(r.notes[0].clamped);
  CHECK(r.notes[0].visible_len_after == 1);
}

TEST_CASE("append-only with zero hold_back is rejected") {
  TransducerConfig cfg;
  cfg.downstream = DownstreamMode::kAppendOnly;
  cfg.hold_back = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}
