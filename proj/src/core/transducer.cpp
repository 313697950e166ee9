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

#include "core/transducer.hpp"

#include <algorithm>

#include "core/error.hpp"

namespace rlbf {

void TransducerConfig::validate() const {
  if (downstream == DownstreamMode::kAppendOnly && hold_back == 0) {
    throw Error(ErrorCode::kRange, "append-only mode requires hold_back >= 1");
  }
}

StreamEvent StreamEvent::emit(Token t) {
  StreamEvent e;
  e.kind = Kind::kEmit;
  e.token = t;
  return e;
}

StreamEvent StreamEvent::retract(std::size_t n) {
  StreamEvent e;
  e.kind = Kind::kRetract;
  e.retract_n = n;
  return e;
}

StreamEvent StreamEvent::note(std::vector<SafetyCategory> cats,
                              std::vector<Token> span, bool clamped) {
  StreamEvent e;
  e.kind = Kind::kNote;
  e.categories = std::move(cats);
  e.retracted_span = std::move(span);
  e.clamped = clamped;
  return e;
}

StreamEvent StreamEvent::make_fault(TransducerFaultKind kind,
                                    std::size_t pos) {
  StreamEvent e;
  e.kind = Kind::kFault;
  e.fault = kind;
  e.position = pos;
  return e;
}

namespace {

bool any_enabled(const TransducerConfig& cfg,
                 const std::vector<SafetyCategory>& run) {
  return std::any_of(run.begin(), run.end(),
                     [&](SafetyCategory c) { return cfg.enabled(c); });
}

[[noreturn]] void throw_fault(TransducerFaultKind kind, std::size_t pos) {
  const char* what = "";
  switch (kind) {
    case TransducerFaultKind::kBacktrackWithoutCategory:
      what = "backtrack without preceding category run";
      break;
    case TransducerFaultKind::kDanglingCategory:
      what = "category run without backtrack";
      break;
    case TransducerFaultKind::kOverlongBacktrack:
      what = "backtrack past response start";
      break;
    case TransducerFaultKind::kCommitHorizon:
      what = "retraction past commit horizon";
      break;
    case TransducerFaultKind::kInputAfterEnd:
      what = "token after end of response";
      break;
  }
  throw Error(ErrorCode::kGrammar,
              std::string(what) + " at position " + std::to_string(pos));
}

}  // namespace

Transducer::Transducer(TransducerConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void Transducer::flush(std::vector<StreamEvent>& out) {
  while (emitted_ < visible_.size()) {
    out.push_back(StreamEvent::emit(visible_[emitted_]));
    ++emitted_;
    ++total_emitted_;
  }
}

void Transducer::apply_backtrack(int x, std::size_t pos,
                                 std::vector<StreamEvent>& out) {
  std::size_t want = static_cast<std::size_t>(x);
  bool clamped = false;
  if (want > visible_.size()) {
    if (cfg_.overlong == OverlongPolicy::kError) {
      throw Error(ErrorCode::kRange, "backtrack by " + std::to_string(x) +
                                         " exceeds response length " +
                                         std::to_string(visible_.size()));
    }
    clamped = true;
    ++fault_events_;
    out.push_back(
        StreamEvent::make_fault(TransducerFaultKind::kOverlongBacktrack, pos));
    want = visible_.size();
  }
  std::size_t uncommitted = visible_.size() - emitted_;
  if (want > uncommitted &&
      cfg_.downstream == DownstreamMode::kAppendOnly) {
    if (cfg_.grammar == GrammarMode::kStrict) {
      throw_fault(TransducerFaultKind::kCommitHorizon, pos);
    }
    clamped = true;
    ++fault_events_;
    out.push_back(
        StreamEvent::make_fault(TransducerFaultKind::kCommitHorizon, pos));
    want = uncommitted;
  }
  std::vector<Token> span(visible_.end() - want, visible_.end());
  visible_.resize(visible_.size() - want);
  if (emitted_ > visible_.size()) {
    std::size_t n = emitted_ - visible_.size();
    emitted_ = visible_.size();
    ++retraction_events_;
    out.push_back(StreamEvent::retract(n));
  }
  out.push_back(
      StreamEvent::note(std::move(pending_run_), std::move(span), clamped));
  pending_run_.clear();
}

std::vector<StreamEvent> Transducer::feed(const Token& t) {
  std::vector<StreamEvent> out;
  std::size_t pos = pos_++;
  if (done_) {
    if (cfg_.grammar == GrammarMode::kStrict) {
      throw_fault(TransducerFaultKind::kInputAfterEnd, pos);
    }
    ++fault_events_;
    out.push_back(
        StreamEvent::make_fault(TransducerFaultKind::kInputAfterEnd, pos));
    return out;
  }
  switch (t.kind) {
    case Token::Kind::kContent:
      if (!pending_run_.empty()) {
        if (cfg_.grammar == GrammarMode::kStrict) {
          throw_fault(TransducerFaultKind::kDanglingCategory, run_start_);
        }
        ++fault_events_;
        out.push_back(StreamEvent::make_fault(
            TransducerFaultKind::kDanglingCategory, run_start_));
        pending_run_.clear();
      }
      visible_.push_back(t);
      while (visible_.size() - emitted_ > cfg_.hold_back) {
        out.push_back(StreamEvent::emit(visible_[emitted_]));
        ++emitted_;
        ++total_emitted_;
      }
      break;
    case Token::Kind::kCategory:
      if (pending_run_.empty()) run_start_ = pos;
      pending_run_.push_back(t.cat);
      break;
    case Token::Kind::kBacktrack:
      if (pending_run_.empty()) {
        if (cfg_.grammar == GrammarMode::kStrict) {
          throw_fault(TransducerFaultKind::kBacktrackWithoutCategory, pos);
        }
        ++fault_events_;
        out.push_back(StreamEvent::make_fault(
            TransducerFaultKind::kBacktrackWithoutCategory, pos));
        break;
      }
      if (!any_enabled(cfg_, pending_run_)) {
        // Ablation gate: drop the whole control run, retract nothing.
        pending_run_.clear();
        break;
      }
      apply_backtrack(t.backtrack_by, pos, out);
      break;
    case Token::Kind::kEndOfResponse:
      if (!pending_run_.empty()) {
        if (cfg_.grammar == GrammarMode::kStrict) {
          throw_fault(TransducerFaultKind::kDanglingCategory, run_start_);
        }
        ++fault_events_;
        out.push_back(StreamEvent::make_fault(
            TransducerFaultKind::kDanglingCategory, run_start_));
        pending_run_.clear();
      }
      flush(out);
      done_ = true;
      break;
  }
  return out;
}

std::vector<StreamEvent> Transducer::finish() {
  std::vector<StreamEvent> out;
  if (done_) return out;
  if (!pending_run_.empty()) {
    if (cfg_.grammar == GrammarMode::kStrict) {
      throw_fault(TransducerFaultKind::kDanglingCategory, run_start_);
    }
    ++fault_events_;
    flush(out);
    out.push_back(StreamEvent::make_fault(
        TransducerFaultKind::kDanglingCategory, run_start_));
    pending_run_.clear();
  } else {
    flush(out);
  }
  done_ = true;
  return out;
}

OfflineResult transduce_offline(std::span<const Token> tokens,
                                const TransducerConfig& cfg) {
  cfg.validate();
  OfflineResult r;
  std::vector<SafetyCategory> run;
  std::size_t run_start = 0;
  // Highest visible length ever reached minus hold_back; in append-only mode
  // tokens below this watermark are committed and cannot be retracted.
  std::size_t committed_watermark = 0;
  bool ended = false;

  auto fault = [&](TransducerFaultKind kind, std::size_t pos) {
    if (cfg.grammar == GrammarMode::kStrict) throw_fault(kind, pos);
    r.faults.push_back({kind, pos});
  };

  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const Token& t = tokens[i];
    if (ended) {
      fault(TransducerFaultKind::kInputAfterEnd, i);
      continue;
    }
    switch (t.kind) {
      case Token::Kind::kContent:
        if (!run.empty()) {
          fault(TransducerFaultKind::kDanglingCategory, run_start);
          run.clear();
        }
        r.visible.push_back(t);
        if (r.visible.size() > cfg.hold_back) {
          committed_watermark =
              std::max(committed_watermark, r.visible.size() - cfg.hold_back);
        }
        break;
      case Token::Kind::kCategory:
        if (run.empty()) run_start = i;
        run.push_back(t.cat);
        break;
      case Token::Kind::kBacktrack: {
        if (run.empty()) {
          fault(TransducerFaultKind::kBacktrackWithoutCategory, i);
          break;
        }
        if (!any_enabled(cfg, run)) {
          run.clear();
          break;
        }
        std::size_t want = static_cast<std::size_t>(t.backtrack_by);
        bool clamped = false;
        if (want > r.visible.size()) {
          if (cfg.overlong == OverlongPolicy::kError) {
            throw Error(ErrorCode::kRange,
                        "backtrack by " + std::to_string(t.backtrack_by) +
                            " exceeds response length " +
                            std::to_string(r.visible.size()));
          }
          clamped = true;
          r.faults.push_back({TransducerFaultKind::kOverlongBacktrack, i});
          want = r.visible.size();
        }
        if (cfg.downstream == DownstreamMode::kAppendOnly &&
            r.visible.size() - want < committed_watermark) {
          fault(TransducerFaultKind::kCommitHorizon, i);
          clamped = true;
          want = r.visible.size() - committed_watermark;
        }
        OfflineNote note;
        note.categories = run;
        note.requested_x = t.backtrack_by;
        note.retracted_span.assign(r.visible.end() - want, r.visible.end());
        note.clamped = clamped;
        note.raw_position = i;
        r.visible.resize(r.visible.size() - want);
        note.visible_len_after = r.visible.size();
        r.notes.push_back(std::move(note));
        run.clear();
        break;
      }
      case Token::Kind::kEndOfResponse:
        if (!run.empty()) {
          fault(TransducerFaultKind::kDanglingCategory, run_start);
          run.clear();
        }
        ended = true;
        break;
    }
  }
  if (!run.empty()) {
    fault(TransducerFaultKind::kDanglingCategory, run_start);
  }
  return r;
}

std::vector<Token> replay_events(std::span<const StreamEvent> events) {
  std::vector<Token> out;
  for (const StreamEvent& e : events) {
    switch (e.kind) {
      case StreamEvent::Kind::kEmit:
        out.push_back(e.token);
        break;
      case StreamEvent::Kind::kRetract:
        if (e.retract_n > out.size()) {
          throw Error(ErrorCode::kState, "retract past emitted output");
        }
        out.resize(out.size() - e.retract_n);
        break;
      default:
        break;
    }
  }
  return out;
}

}  // namespace rlbf
