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
#include "core/jsonio.hpp"
#include "core/token.hpp"

using namespace rlbf;

TEST_CASE("category registry has fixed order and names") {
  CHECK(kCategoryCount == 18);
  CHECK(category_name(SafetyCategory::kDangerousContent) ==
        "DANGEROUS_CONTENT");
  CHECK(category_name(static_cast<SafetyCategory>(0)) == "DANGEROUS_CONTENT");
  CHECK(category_name(static_cast<SafetyCategory>(7)) ==
        "DEATH_HARM_AND_TRAGEDY");
  CHECK(category_name(static_cast<SafetyCategory>(17)) == "LEGAL");
  for (int i = 0; i < kCategoryCount; ++i) {
    auto c = static_cast<SafetyCategory>(i);
    auto back = category_from_name(category_name(c));
    REQUIRE(back.has_value());
    CHECK(*back == c);
  }
}

TEST_CASE("free-form labels canonicalize to registry names") {
  CHECK(category_from_label("Hate Speech") == SafetyCategory::kHateSpeech);
  CHECK(category_from_label("Death Harm & Tragedy") ==
        SafetyCategory::kDeathHarmAndTragedy);
  CHECK(category_from_label("Firearms & Weapons") ==
        SafetyCategory::kFirearmsAndWeapons);
  CHECK(category_from_label("under 18") == SafetyCategory::kUnder18);
  CHECK(category_from_label("TOXIC") == SafetyCategory::kToxic);
  CHECK_FALSE(category_from_label("Not A Category").has_value());
}

TEST_CASE("control token surface forms") {
  Vocabulary vocab({"the", "sky", "is"});
  CHECK(render_token(Token::category(SafetyCategory::kToxic), vocab) ==
        "[CATEGORY_TOXIC]");
  CHECK(render_token(Token::backtrack(2), vocab) == "[BACKTRACK_BY_2]");
  CHECK(render_token(Token::end_of_response(), vocab) == "[EOR]");
  CHECK(render_token(Token::content(1), vocab) == "sky");
}

TEST_CASE("render and parse are exact inverses") {
  Vocabulary vocab({"w0", "w1", "w2", "w3"});
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    Token t;
    switch (rng() % 4) {
      case 0: t = Token::content(static_cast<int>(rng() % vocab.size())); break;
      case 1:
        t = Token::category(
            static_cast<SafetyCategory>(rng() % kCategoryCount));
        break;
      case 2:
        t = Token::backtrack(1 + static_cast<int>(rng() % kMaxBacktrack));
        break;
      default: t = Token::end_of_response();
    }
    CHECK(parse_token(render_token(t, vocab), vocab) == t);
  }
}

TEST_CASE("malformed surface forms are rejected") {
  Vocabulary vocab({"a"});
  CHECK_THROWS_AS(Token::backtrack(0), Error);
  CHECK_THROWS_AS(Token::backtrack(kMaxBacktrack + 1), Error);
  CHECK_THROWS_AS(parse_token("[BACKTRACK_BY_0]", vocab), Error);
  CHECK_THROWS_AS(parse_token("[BACKTRACK_BY_00]", vocab), Error);
  CHECK_THROWS_AS(parse_token("[BACKTRACK_BY_01]", vocab), Error);
  CHECK_THROWS_AS(parse_token("[BACKTRACK_BY_4097]", vocab), Error);
  CHECK_THROWS_AS(parse_token("[CATEGORY_NOT_REAL]", vocab), Error);
  CHECK_THROWS_AS(parse_token("unknown word", vocab), Error);
  CHECK(parse_token("[BACKTRACK_BY_4096]", vocab) ==
        Token::backtrack(kMaxBacktrack));
}

TEST_CASE("stream grammar validation") {
  auto cat = Token::category(SafetyCategory::kToxic);
  auto bt = Token::backtrack(1);
  auto w = Token::content(0);

  SUBCASE("well-formed run") {
    std::vector<Token> ok{w, w, cat, bt, w, Token::end_of_response()};
    CHECK(validate_stream_grammar(ok, GrammarMode::kLenient, 0).faults.empty());
  }
  SUBCASE("backtrack without category") {
    std::vector<Token> bad{w, bt};
    auto report = validate_stream_grammar(bad, GrammarMode::kLenient, 0);
    REQUIRE(report.faults.size() == 1);
    CHECK(report.faults[0].kind == GrammarFaultKind::kBacktrackWithoutCategory);
    CHECK_THROWS_AS(validate_stream_grammar(bad, GrammarMode::kStrict, 0),
                    Error);
  }
  SUBCASE("dangling category") {
    std::vector<Token> bad{w, cat, w};
    auto report = validate_stream_grammar(bad, GrammarMode::kLenient, 0);
    REQUIRE(report.faults.size() == 1);
    CHECK(report.faults[0].kind == GrammarFaultKind::kDanglingCategory);
  }
  SUBCASE("control token in prompt region") {
    std::vector<Token> bad{cat, bt, w};
    auto report = validate_stream_grammar(bad, GrammarMode::kLenient, 2);
    REQUIRE_FALSE(report.faults.empty());
    CHECK(report.faults[0].kind == GrammarFaultKind::kControlInPrompt);
  }
}

TEST_CASE("token json wire form is bit-exact") {
  CHECK(token_to_json(Token::content(7)).dump() == R"({"sym":7,"t":"content"})");
  CHECK(token_to_json(Token::category(SafetyCategory::kToxic)).dump() ==
        R"({"name":"TOXIC","t":"cat"})");
  CHECK(token_to_json(Token::backtrack(3)).dump() == R"({"t":"bt","x":3})");
  CHECK(token_to_json(Token::end_of_response()).dump() == R"({"t":"eor"})");
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    Token t = rng() % 2 ? Token::content(static_cast<int>(rng() % 100))
                        : Token::backtrack(1 + static_cast<int>(rng() % 64));
    CHECK(token_from_json(token_to_json(t)) == t);
  }
}
