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

#include "rlbf/rlbf.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include <json.hpp>

#include "core/critic.hpp"
#include "core/datagen.hpp"
#include "core/error.hpp"
#include "core/jsonio.hpp"
#include "core/reward.hpp"
#include "core/runs.hpp"
#include "core/service.hpp"
#include "core/token.hpp"
#include "core/transducer.hpp"
#include "core/version.hpp"

namespace {

using nlohmann::json;
using namespace rlbf;

thread_local std::string g_last_error;

int status_of(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kParse: return RLBF_ERR_PARSE;
    case ErrorCode::kRange: return RLBF_ERR_RANGE;
    case ErrorCode::kUnknownCategory: return RLBF_ERR_UNKNOWN_CATEGORY;
    case ErrorCode::kGrammar: return RLBF_ERR_GRAMMAR;
    case ErrorCode::kLookup: return RLBF_ERR_LOOKUP;
    case ErrorCode::kFormat: return RLBF_ERR_FORMAT;
    case ErrorCode::kTransport: return RLBF_ERR_TRANSPORT;
    case ErrorCode::kIo: return RLBF_ERR_IO;
    case ErrorCode::kUsage: return RLBF_ERR_USAGE;
    case ErrorCode::kState: return RLBF_ERR_STATE;
  }
  return RLBF_ERR_STATE;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

/// Runs fn, translating exceptions into status codes + last-error text.
template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return RLBF_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e);
  } catch (const json::exception& e) {
    g_last_error = e.what();
    return RLBF_ERR_PARSE;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return RLBF_ERR_STATE;
  }
}

int require(bool ok, const char* what) {
  if (ok) return RLBF_OK;
  g_last_error = std::string("null argument: ") + what;
  return RLBF_ERR_INVALID_ARGUMENT;
}

json ordered_events(const std::vector<StreamEvent>& events) {
  json arr = json::array();
  for (const StreamEvent& ev : events) arr.push_back(event_to_json(ev));
  return arr;
}

RewardConfig reward_config_from_json(const json& j) {
  RewardConfig cfg;
  cfg.lexicon = Lexicon::from_json(j.at("lexicon"));
  if (j.contains("quality")) {
    const json& q = j["quality"];
    if (q.contains("min_len")) cfg.quality.min_len = q["min_len"].get<int>();
    if (q.contains("min_content")) {
      cfg.quality.min_content = q["min_content"].get<int>();
    }
    if (q.contains("sentence_end_sym")) {
      cfg.quality.sentence_end_sym = q["sentence_end_sym"].get<int>();
    }
  }
  if (j.contains("known_violations")) {
    for (const auto& span : j["known_violations"]) {
      std::vector<Token> tokens;
      for (const auto& t : span) tokens.push_back(token_from_json(t));
      cfg.known_violations.push_back(std::move(tokens));
    }
  }
  return cfg;
}

}  // namespace

struct rlbf_transducer {
  rlbf::Transducer impl;
};

struct rlbf_service {
  rlbf::StreamService impl;
  explicit rlbf_service(rlbf::TransducerConfig cfg) : impl(cfg) {}
};

extern "C" {

const char* rlbf_version(void) { return rlbf::kVersion; }

const char* rlbf_last_error(void) { return g_last_error.c_str(); }

void rlbf_string_free(char* s) { std::free(s); }

int rlbf_token_parse(const char* text, char** out_token_json) {
  if (int rc = require(text && out_token_json, "text/out")) return rc;
  return guarded([&] {
    Token t = parse_token(text, Vocabulary());
    *out_token_json = dup_string(token_to_json(t).dump());
  });
}

int rlbf_token_render(const char* token_json, char** out_text) {
  if (int rc = require(token_json && out_text, "token/out")) return rc;
  return guarded([&] {
    Token t = token_from_json(json::parse(token_json));
    *out_text = dup_string(render_token(t, Vocabulary()));
  });
}

int rlbf_transducer_new(const char* config_json, rlbf_transducer** out) {
  if (int rc = require(out != nullptr, "out")) return rc;
  return guarded([&] {
    TransducerConfig cfg;
    if (config_json) cfg = transducer_config_from_json(json::parse(config_json));
    cfg.validate();
    *out = new rlbf_transducer{Transducer(cfg)};
  });
}

void rlbf_transducer_free(rlbf_transducer* t) { delete t; }

int rlbf_transducer_feed(rlbf_transducer* t, const char* token_json,
                         char** out_events_json) {
  if (int rc = require(t && token_json && out_events_json, "args")) return rc;
  return guarded([&] {
    auto events = t->impl.feed(token_from_json(json::parse(token_json)));
    *out_events_json = dup_string(ordered_events(events).dump());
  });
}

int rlbf_transducer_finish(rlbf_transducer* t, char** out_events_json) {
  if (int rc = require(t && out_events_json, "args")) return rc;
  return guarded([&] {
    *out_events_json = dup_string(ordered_events(t->impl.finish()).dump());
  });
}

int rlbf_transducer_stats(const rlbf_transducer* t, char** out_stats_json) {
  if (int rc = require(t && out_stats_json, "args")) return rc;
  return guarded([&] {
    json j{{"tokens_in", t->impl.tokens_in()},
           {"tokens_emitted", t->impl.tokens_emitted()},
           {"retractions", t->impl.retractions()},
           {"faults", t->impl.faults()}};
    *out_stats_json = dup_string(j.dump());
  });
}

int rlbf_transduce_offline(const char* tokens_json, const char* config_json,
                           char** out_result_json) {
  if (int rc = require(tokens_json && out_result_json, "args")) return rc;
  return guarded([&] {
    TransducerConfig cfg;
    if (config_json) cfg = transducer_config_from_json(json::parse(config_json));
    cfg.validate();
    std::vector<Token> tokens;
    for (const auto& t : json::parse(tokens_json)) {
      tokens.push_back(token_from_json(t));
    }
    OfflineResult r = transduce_offline(tokens, cfg);
    json visible = json::array();
    for (const Token& t : r.visible) visible.push_back(token_to_json(t));
    json notes = json::array();
    for (const OfflineNote& n : r.notes) {
      json cats = json::array();
      for (SafetyCategory c : n.categories) cats.push_back(category_name(c));
      json span = json::array();
      for (const Token& t : n.retracted_span) span.push_back(token_to_json(t));
      notes.push_back(json{{"categories", cats},
                           {"requested_x", n.requested_x},
                           {"span", span},
                           {"clamped", n.clamped},
                           {"position", n.raw_position},
                           {"visible_len_after", n.visible_len_after}});
    }
    json faults = json::array();
    for (const OfflineFault& f : r.faults) {
      faults.push_back(json{{"kind", fault_kind_name(f.kind)},
                            {"position", f.position}});
    }
    json out{{"visible", visible}, {"notes", notes}, {"faults", faults}};
    *out_result_json = dup_string(out.dump());
  });
}

int rlbf_reward(const char* raw_tokens_json, const char* reward_config_json,
                char** out_breakdown_json) {
  if (int rc = require(raw_tokens_json && reward_config_json &&
                           out_breakdown_json,
                       "args")) {
    return rc;
  }
  return guarded([&] {
    std::vector<Token> raw;
    for (const auto& t : json::parse(raw_tokens_json)) {
      raw.push_back(token_from_json(t));
    }
    RewardConfig cfg = reward_config_from_json(json::parse(reward_config_json));
    RewardBreakdown rb = compute_reward(segment(raw), cfg);
    json j{{"reward", rb.value},
           {"case", reward_case_name(rb.reward_case)},
           {"quality",
            json{{"safe", rb.quality.safe},
                 {"coherent", rb.quality.coherent},
                 {"useful", rb.quality.useful}}}};
    *out_breakdown_json = dup_string(j.dump());
  });
}

int rlbf_parse_critic_annotation(const char* text, char** out_json) {
  if (int rc = require(text && out_json, "args")) return rc;
  return guarded([&] {
    CriticAnnotation ann = parse_critic_annotation(text);
    json segments = json::array();
    for (const AnnotationSegment& s : ann.segments) {
      const char* kind = s.kind == AnnotationSegment::Kind::kPlain ? "plain"
                         : s.kind == AnnotationSegment::Kind::kViolation
                             ? "violation"
                             : "edit";
      segments.push_back(json{{"kind", kind}, {"text", s.text}});
    }
    json j{{"is_no", ann.is_no}, {"segments", segments}};
    *out_json = dup_string(j.dump());
  });
}

int rlbf_parse_harmful_generation(const char* text, char** out_json) {
  if (int rc = require(text && out_json, "args")) return rc;
  return guarded([&] {
    HarmfulGeneration g = parse_harmful_generation(text);
    json cats = json::array();
    for (SafetyCategory c : g.categories) cats.push_back(category_name(c));
    json j{{"refusal", g.refusal},
           {"pre", g.pre},
           {"harmful", g.harmful},
           {"categories", cats}};
    *out_json = dup_string(j.dump());
  });
}

int rlbf_run_datagen(const char* config_json, const char* out_path) {
  if (int rc = require(config_json && out_path, "args")) return rc;
  return guarded([&] { run_datagen(json::parse(config_json), out_path); });
}

int rlbf_run_sft(const char* dataset_path, const char* config_json,
                 const char* out_path) {
  if (int rc = require(dataset_path && config_json && out_path, "args")) {
    return rc;
  }
  return guarded(
      [&] { run_sft(dataset_path, json::parse(config_json), out_path); });
}

int rlbf_run_train(const char* dataset_path, const char* config_json,
                   const char* out_path, int baseline) {
  if (int rc = require(dataset_path && config_json && out_path, "args")) {
    return rc;
  }
  return guarded([&] {
    run_train(dataset_path, json::parse(config_json), out_path,
              baseline != 0);
  });
}

int rlbf_run_eval(const char* checkpoint_path, const char* config_json,
                  const char* format, const char* out_path) {
  if (int rc = require(checkpoint_path && config_json && format && out_path,
                       "args")) {
    return rc;
  }
  return guarded([&] {
    run_eval(checkpoint_path, json::parse(config_json), format, out_path);
  });
}

int rlbf_run_transduce(const char* in_path, const char* mode,
                       const char* config_json, const char* out_path) {
  if (int rc = require(in_path && mode && out_path, "args")) return rc;
  return guarded([&] {
    json cfg = config_json ? json::parse(config_json) : json::object();
    run_transduce(in_path, mode, cfg, out_path);
  });
}

int rlbf_run_reward(const char* traj_path, const char* dataset_path,
                    const char* out_path) {
  if (int rc = require(traj_path && dataset_path && out_path, "args")) {
    return rc;
  }
  return guarded([&] { run_reward(traj_path, dataset_path, out_path); });
}

int rlbf_service_start(const char* config_json, const char* host, int port,
                       rlbf_service** out) {
  if (int rc = require(host && out, "args")) return rc;
  return guarded([&] {
    TransducerConfig cfg;
    if (config_json) cfg = transducer_config_from_json(json::parse(config_json));
    auto* svc = new rlbf_service(cfg);
    try {
      svc->impl.start(host, port);
    } catch (...) {
      delete svc;
      throw;
    }
    *out = svc;
  });
}

int rlbf_service_port(const rlbf_service* s) {
  return s ? s->impl.port() : -1;
}

int rlbf_service_stats(const rlbf_service* s, char** out_stats_json) {
  if (int rc = require(s && out_stats_json, "args")) return rc;
  return guarded([&] { *out_stats_json = dup_string(s->impl.stats().dump()); });
}

int rlbf_service_stop(rlbf_service* s) {
  if (int rc = require(s != nullptr, "service")) return rc;
  return guarded([&] { s->impl.stop(); });
}

void rlbf_service_free(rlbf_service* s) { delete s; }

}  // extern "C"
