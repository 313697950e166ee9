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

#include "core/jsonio.hpp"

#include <fstream>
#include <sstream>

#include "core/error.hpp"
#include "core/version.hpp"

namespace rlbf {

using nlohmann::json;

json token_to_json(const Token& t) {
  switch (t.kind) {
    case Token::Kind::kContent:
      return json{{"t", "content"}, {"sym", t.sym}};
    case Token::Kind::kCategory:
      return json{{"t", "cat"}, {"name", category_name(t.cat)}};
    case Token::Kind::kBacktrack:
      return json{{"t", "bt"}, {"x", t.backtrack_by}};
    case Token::Kind::kEndOfResponse:
      return json{{"t", "eor"}};
  }
  throw Error(ErrorCode::kFormat, "invalid token kind");
}

Token token_from_json(const json& j) {
  if (!j.is_object() || !j.contains("t") || !j["t"].is_string()) {
    throw Error(ErrorCode::kFormat, "token object missing \"t\"");
  }
  const std::string kind = j["t"].get<std::string>();
  if (kind == "content") {
    if (!j.contains("sym") || !j["sym"].is_number_integer()) {
      throw Error(ErrorCode::kFormat, "content token missing \"sym\"");
    }
    return Token::content(j["sym"].get<int>());
  }
  if (kind == "cat") {
    if (!j.contains("name") || !j["name"].is_string()) {
      throw Error(ErrorCode::kFormat, "category token missing \"name\"");
    }
    auto c = category_from_name(j["name"].get<std::string>());
    if (!c) {
      throw Error(ErrorCode::kUnknownCategory,
                  "unknown category: " + j["name"].get<std::string>());
    }
    return Token::category(*c);
  }
  if (kind == "bt") {
    if (!j.contains("x") || !j["x"].is_number_integer()) {
      throw Error(ErrorCode::kFormat, "backtrack token missing \"x\"");
    }
    return Token::backtrack(j["x"].get<int>());
  }
  if (kind == "eor") return Token::end_of_response();
  throw Error(ErrorCode::kFormat, "unknown token kind: " + kind);
}

std::string fault_kind_name(TransducerFaultKind kind) {
  switch (kind) {
    case TransducerFaultKind::kBacktrackWithoutCategory:
      return "backtrack_without_category";
    case TransducerFaultKind::kDanglingCategory:
      return "dangling_category";
    case TransducerFaultKind::kOverlongBacktrack:
      return "overlong_backtrack";
    case TransducerFaultKind::kCommitHorizon:
      return "commit_horizon";
    case TransducerFaultKind::kInputAfterEnd:
      return "input_after_end";
  }
  return "unknown";
}

json event_to_json(const StreamEvent& e) {
  switch (e.kind) {
    case StreamEvent::Kind::kEmit:
      return json{{"e", "emit"}, {"token", token_to_json(e.token)}};
    case StreamEvent::Kind::kRetract:
      return json{{"e", "retract"}, {"n", e.retract_n}};
    case StreamEvent::Kind::kNote: {
      json cats = json::array();
      for (SafetyCategory c : e.categories) cats.push_back(category_name(c));
      return json{{"e", "note"},
                  {"categories", cats},
                  {"span_len", e.retracted_span.size()},
                  {"clamped", e.clamped}};
    }
    case StreamEvent::Kind::kFault:
      return json{{"e", "fault"},
                  {"kind", fault_kind_name(e.fault)},
                  {"position", e.position}};
  }
  throw Error(ErrorCode::kFormat, "invalid event kind");
}

json transducer_config_to_json(const TransducerConfig& cfg) {
  json disabled = json::array();
  for (int i = 0; i < kCategoryCount; ++i) {
    if (!cfg.category_enabled[i]) {
      disabled.push_back(category_name(static_cast<SafetyCategory>(i)));
    }
  }
  return json{
      {"hold_back", cfg.hold_back},
      {"downstream", cfg.downstream == DownstreamMode::kAppendOnly
                         ? "append_only"
                         : "retraction_capable"},
      {"overlong",
       cfg.overlong == OverlongPolicy::kError ? "error" : "clamp"},
      {"grammar", cfg.grammar == GrammarMode::kStrict ? "strict" : "lenient"},
      {"disabled_categories", disabled},
  };
}

TransducerConfig transducer_config_from_json(const json& j) {
  TransducerConfig cfg;
  if (j.contains("hold_back")) cfg.hold_back = j["hold_back"].get<std::size_t>();
  if (j.contains("downstream")) {
    const std::string m = j["downstream"].get<std::string>();
    if (m == "append_only") {
      cfg.downstream = DownstreamMode::kAppendOnly;
    } else if (m == "retraction_capable") {
      cfg.downstream = DownstreamMode::kRetractionCapable;
    } else {
      throw Error(ErrorCode::kFormat, "unknown downstream mode: " + m);
    }
  }
  if (j.contains("overlong")) {
    const std::string m = j["overlong"].get<std::string>();
    if (m == "error") {
      cfg.overlong = OverlongPolicy::kError;
    } else if (m == "clamp") {
      cfg.overlong = OverlongPolicy::kClamp;
    } else {
      throw Error(ErrorCode::kFormat, "unknown overlong policy: " + m);
    }
  }
  if (j.contains("grammar")) {
    const std::string m = j["grammar"].get<std::string>();
    if (m == "strict") {
      cfg.grammar = GrammarMode::kStrict;
    } else if (m == "lenient") {
      cfg.grammar = GrammarMode::kLenient;
    } else {
      throw Error(ErrorCode::kFormat, "unknown grammar mode: " + m);
    }
  }
  if (j.contains("disabled_categories")) {
    for (const auto& name : j["disabled_categories"]) {
      auto c = category_from_name(name.get<std::string>());
      if (!c) {
        throw Error(ErrorCode::kUnknownCategory,
                    "unknown category: " + name.get<std::string>());
      }
      cfg.category_enabled[static_cast<int>(*c)] = false;
    }
  }
  cfg.validate();
  return cfg;
}

std::vector<Token> tokens_from_jsonl(const std::string& path) {
  std::vector<Token> out;
  for (const auto& j : load_jsonl(path)) out.push_back(token_from_json(j));
  return out;
}

void write_lines(const std::string& path,
                 const std::vector<std::string>& lines) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot open for writing: " + path);
  for (const auto& l : lines) f << l << '\n';
  if (!f) throw Error(ErrorCode::kIo, "write failed: " + path);
}

json load_json(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot open: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, path + ": " + e.what());
  }
  return j;
}

std::vector<json> load_jsonl(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot open: " + path);
  std::vector<json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse,
                  path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void save_json(const std::string& path, const json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot open for writing: " + path);
  f << j.dump(2) << '\n';
  if (!f) throw Error(ErrorCode::kIo, "write failed: " + path);
}

std::string json_hash(const json& j) {
  const std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

void write_manifest(const std::string& output_path, const json& config,
                    std::uint64_t seed) {
  json m{
      {"config_hash", json_hash(config)},
      {"seed", seed},
      {"version", kVersion},
  };
  save_json(output_path + ".manifest.json", m);
}

}  // namespace rlbf
