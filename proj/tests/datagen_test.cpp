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

#include "core/datagen.hpp"
#include "core/error.hpp"

using namespace rlbf;

namespace {

Token w(int s) { return Token::content(s); }

SafePair two_sentence_pair() {
  SafePair pair;
  pair.prompt = {w(1), w(2)};
  pair.response = {w(3), w(4), w(9), w(5), w(6), w(9)};  // 9 = sentence end
  return pair;
}

}  // namespace

TEST_CASE("violations land at sentence boundaries only") {
  SafePair pair = two_sentence_pair();
  std::vector<Token> v{w(100), w(101)};
  for (std::uint64_t seed = 0; seed < 32; ++seed) {
    auto draft =
        inject_violation(pair, v, {SafetyCategory::kToxic}, 9, seed);
    // The only eligible boundary is after the first sentence end.
    CHECK(draft.part1 == std::vector<Token>{w(3), w(4), w(9)});
    CHECK(draft.violation == v);
    CHECK(draft.part2 == std::vector<Token>{w(5), w(6), w(9)});
    CHECK(draft.x == 2);
  }
}

TEST_CASE("injection is deterministic per seed and covers all boundaries") {
  SafePair pair;
  pair.prompt = {w(1)};
  pair.response = {w(3), w(9), w(4), w(9), w(5), w(9)};
  std::vector<Token> v{w(100)};
  std::set<std::size_t> seen;
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    auto a = inject_violation(pair, v, {SafetyCategory::kToxic}, 9, seed);
    auto b = inject_violation(pair, v, {SafetyCategory::kToxic}, 9, seed);
    CHECK(a.part1 == b.part1);
    seen.insert(a.part1.size());
  }
  CHECK(seen == std::set<std::size_t>{2, 4});
}

TEST_CASE("injection without an eligible boundary is an error") {
  SafePair pair;
  pair.prompt = {w(1)};
  pair.response = {w(3), w(4), w(9)};  // only the final sentence end
  CHECK_THROWS_AS(
      inject_violation(pair, {w(100)}, {SafetyCategory::kToxic}, 9, 1),
      Error);
  CHECK_THROWS_AS(
      inject_violation(two_sentence_pair(), {}, {SafetyCategory::kToxic}, 9,
                       1),
      Error);
}

TEST_CASE("assembled examples mask the context and order the categories") {
  SafePair pair = two_sentence_pair();
  auto draft = inject_violation(
      pair, {w(100), w(101)},
      {SafetyCategory::kToxic, SafetyCategory::kHateSpeech}, 9, 3);
  SftExample ex = build_sft_example(draft, pair.prompt);

  CHECK(ex.context.size() == pair.prompt.size() + draft.part1.size() +
                                 draft.violation.size());
  CHECK(ex.prompt_len == pair.prompt.size());
  REQUIRE(ex.target.size() == 2 + 1 + draft.part2.size());
  CHECK(ex.target[0] == Token::category(SafetyCategory::kHateSpeech));
  CHECK(ex.target[1] == Token::category(SafetyCategory::kToxic));
  CHECK(ex.target[2] == Token::backtrack(2));
  for (std::size_t i = 0; i < ex.context.size(); ++i) {
    CHECK_FALSE(ex.loss_mask[i]);
  }
  for (std::size_t i = ex.context.size(); i < ex.loss_mask.size(); ++i) {
    CHECK(ex.loss_mask[i]);
  }
  CHECK(sft_round_trip_holds(ex));
}

TEST_CASE("example serialization round-trips") {
  SafePair pair = two_sentence_pair();
  auto draft =
      inject_violation(pair, {w(100)}, {SafetyCategory::kToxic}, 9, 3);
  SftExample ex = build_sft_example(draft, pair.prompt);
  SftExample back = SftExample::from_json(ex.to_json());
  CHECK(back.context == ex.context);
  CHECK(back.target == ex.target);
  CHECK(back.loss_mask == ex.loss_mask);
  CHECK(back.categories == ex.categories);
  CHECK(back.x == ex.x);
  CHECK(back.prompt_len == ex.prompt_len);
}

TEST_CASE("generated datasets are deterministic and round-trip clean") {
  SyntheticVocab vocab;
  DatagenConfig cfg;
  cfg.backtrack_examples = 200;
  cfg.safe_examples = 100;
  cfg.seed = 5;
  SftDataset a = build_sft_dataset(vocab, cfg);
  SftDataset b = build_sft_dataset(vocab, cfg);
  REQUIRE(a.examples.size() == 300);
  REQUIRE(b.examples.size() == 300);
  for (std::size_t i = 0; i < a.examples.size(); ++i) {
    CHECK(a.examples[i].context == b.examples[i].context);
    CHECK(a.examples[i].target == b.examples[i].target);
    CHECK(sft_round_trip_holds(a.examples[i]));
  }
  CHECK_FALSE(a.known_violations.empty());

  cfg.seed = 6;
  SftDataset c = build_sft_dataset(vocab, cfg);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.examples.size() && !any_diff; ++i) {
    any_diff = !(a.examples[i].context == c.examples[i].context);
  }
  CHECK(any_diff);
}

TEST_CASE("harmful continuations parse into pre, harmful, and tags") {
  auto g = parse_harmful_generation(
      "been shown to be effective in preventing disease and has been "
      "thoroughly tested. There also are <harmful> doubts about its safety, "
      "and some people believe it might cause long-term health issues. "
      "</harmful><tag>Health</tag>");
  CHECK_FALSE(g.refusal);
  CHECK(g.pre == "been shown to be effective in preventing disease and has "
                 "been thoroughly tested. There also are ");
  CHECK(g.harmful == " doubts about its safety, and some people believe it "
                     "might cause long-term health issues. ");
  CHECK(g.categories ==
        std::vector<SafetyCategory>{SafetyCategory::kHealth});
}

TEST_CASE("multi-category tags split on commas") {
  auto g = parse_harmful_generation(
      "and empathy. Typically, <harmful> he is someone who can inspire "
      "others and create a positive work environment. Moreover, good leaders "
      "are hardworking and diligent. </harmful><tag>Toxic, Hate Speech</tag>");
  CHECK(g.categories ==
        std::vector<SafetyCategory>{SafetyCategory::kToxic,
                                    SafetyCategory::kHateSpeech});
}

TEST_CASE("refusals are recognized without tags") {
  auto g = parse_harmful_generation("I can't help with that");
  CHECK(g.refusal);
  CHECK(g.categories.empty());
}

TEST_CASE("malformed generations are rejected") {
  CHECK_THROWS_AS(parse_harmful_generation("no tags at all"), Error);
  CHECK_THROWS_AS(parse_harmful_generation("<harmful>x</harmful>"), Error);
  CHECK_THROWS_AS(
      parse_harmful_generation("<harmful>x</harmful><tag>Not A Cat</tag>"),
      Error);
  CHECK_THROWS_AS(parse_harmful_generation("<harmful>x<tag>Toxic</tag>"),
                  Error);
}
