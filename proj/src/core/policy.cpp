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

#include "core/policy.hpp"

#include <cmath>

#include "core/error.hpp"
#include "core/jsonio.hpp"

namespace rlbf {

using nlohmann::json;

Policy::Policy(int buckets, int vocab_size, double temperature)
    : buckets_(buckets), vocab_size_(vocab_size), temperature_(temperature) {
  if (buckets < 1 || vocab_size < 2) {
    throw Error(ErrorCode::kRange, "policy needs >= 1 bucket, >= 2 actions");
  }
  if (!(temperature > 0.0)) {
    throw Error(ErrorCode::kRange, "temperature must be positive");
  }
  logits_.assign(static_cast<std::size_t>(buckets) * vocab_size, 0.0);
}

std::span<const double> Policy::row(int bucket) const {
  return std::span<const double>(logits_)
      .subspan(static_cast<std::size_t>(bucket) * vocab_size_, vocab_size_);
}

int Policy::context_class(int prev, int last) const {
  // splitmix64-style mixing of the two action ids.
  std::uint64_t a = static_cast<std::uint64_t>(prev + 2);
  std::uint64_t b = static_cast<std::uint64_t>(last + 2);
  std::uint64_t h = a * 0x9E3779B97F4A7C15ull ^ (b * 0xC2B2AE3D27D4EB4Full);
  h ^= h >> 33;
  h *= 0xFF51AFD7ED558CCDull;
  h ^= h >> 33;
  return static_cast<int>(h % static_cast<std::uint64_t>(buckets_));
}

std::vector<double> Policy::distribution(int bucket,
                                         double temperature_override,
                                         const ActionMask* mask,
                                         int step) const {
  const double temp =
      temperature_override > 0.0 ? temperature_override : temperature_;
  auto r = row(bucket);
  std::vector<double> p(vocab_size_, 0.0);
  double max_logit = -HUGE_VAL;
  for (int j = 0; j < vocab_size_; ++j) {
    if (mask && !(*mask)(j, step)) continue;
    max_logit = std::max(max_logit, r[j]);
  }
  if (max_logit == -HUGE_VAL) {
    throw Error(ErrorCode::kState, "all actions masked");
  }
  double z = 0.0;
  for (int j = 0; j < vocab_size_; ++j) {
    if (mask && !(*mask)(j, step)) continue;
    p[j] = std::exp((r[j] - max_logit) / temp);
    z += p[j];
  }
  for (double& v : p) v /= z;
  return p;
}

int Policy::sample(int prev, int last, std::mt19937_64& rng,
                   double temperature_override, const ActionMask* mask,
                   int step) const {
  std::vector<double> p =
      distribution(context_class(prev, last), temperature_override, mask, step);
  // 53-bit uniform draw; fixed evaluation order keeps runs bit-reproducible.
  double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  double acc = 0.0;
  int last_valid = -1;
  for (int j = 0; j < vocab_size_; ++j) {
    if (p[j] <= 0.0) continue;
    last_valid = j;
    acc += p[j];
    if (u < acc) return j;
  }
  return last_valid;
}

double Policy::log_prob(int prev, int last, int action) const {
  auto r = row(context_class(prev, last));
  double max_logit = -HUGE_VAL;
  for (int j = 0; j < vocab_size_; ++j) max_logit = std::max(max_logit, r[j]);
  double z = 0.0;
  for (int j = 0; j < vocab_size_; ++j) {
    z += std::exp((r[j] - max_logit) / temperature_);
  }
  return (r[action] - max_logit) / temperature_ - std::log(z);
}

void Policy::accumulate_logprob_grad(int prev, int last, int action,
                                     double weight,
                                     std::vector<double>& grad) const {
  int bucket = context_class(prev, last);
  std::vector<double> p = distribution(bucket);
  double* g = grad.data() + static_cast<std::size_t>(bucket) * vocab_size_;
  const double inv_t = 1.0 / temperature_;
  for (int j = 0; j < vocab_size_; ++j) {
    g[j] += weight * ((j == action ? 1.0 : 0.0) - p[j]) * inv_t;
  }
}

void Policy::apply_update(std::span<const double> direction,
                          double step_size) {
  if (direction.size() != logits_.size()) {
    throw Error(ErrorCode::kRange, "update direction shape mismatch");
  }
  for (std::size_t i = 0; i < logits_.size(); ++i) {
    logits_[i] += step_size * direction[i];
  }
}

json Policy::to_json() const {
  return json{
      {"buckets", buckets_},
      {"vocab_size", vocab_size_},
      {"temperature", temperature_},
      {"logits", logits_},
  };
}

Policy Policy::from_json(const json& j) {
  Policy p(j.at("buckets").get<int>(), j.at("vocab_size").get<int>(),
           j.at("temperature").get<double>());
  auto logits = j.at("logits").get<std::vector<double>>();
  if (logits.size() != p.logits_.size()) {
    throw Error(ErrorCode::kFormat, "checkpoint logit table shape mismatch");
  }
  p.logits_ = std::move(logits);
  return p;
}

json AttackSpec::to_json() const {
  const char* kind_name = kind == Kind::kMiddleFill ? "middle_fill"
                          : kind == Kind::kPrefill  ? "prefill"
                                                    : "decoding_params";
  json payload_json = json::array();
  for (const Token& t : payload) payload_json.push_back(token_to_json(t));
  return json{
      {"kind", kind_name},
      {"position", position},
      {"payload", payload_json},
      {"temperature_override", temperature_override},
  };
}

AttackSpec AttackSpec::from_json(const json& j) {
  AttackSpec a;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "middle_fill") {
    a.kind = Kind::kMiddleFill;
  } else if (kind == "prefill") {
    a.kind = Kind::kPrefill;
  } else if (kind == "decoding_params") {
    a.kind = Kind::kDecodingParams;
  } else {
    throw Error(ErrorCode::kFormat, "unknown attack kind: " + kind);
  }
  if (j.contains("position")) a.position = j["position"].get<std::size_t>();
  if (j.contains("payload")) {
    for (const auto& t : j["payload"]) a.payload.push_back(token_from_json(t));
  }
  if (j.contains("temperature_override")) {
    a.temperature_override = j["temperature_override"].get<double>();
  }
  if (a.kind != Kind::kDecodingParams && a.payload.empty()) {
    throw Error(ErrorCode::kRange, "attack payload must be nonempty");
  }
  return a;
}

Trajectory sample_trajectory(const Policy& policy, const SyntheticVocab& vocab,
                             const std::vector<Token>& prompt,
                             const std::optional<AttackSpec>& attack,
                             std::uint64_t seed, const SampleConfig& cfg) {
  Trajectory traj;
  traj.prompt = prompt;
  traj.attack = attack;
  traj.seed = seed;
  std::mt19937_64 rng(seed);

  int prev = -1, last = -1;
  auto push_context = [&](const Token& t) {
    prev = last;
    last = vocab.action_of(t);
  };
  for (const Token& t : prompt) push_context(t);

  double temp_override = 0.0;
  if (attack && attack->kind == AttackSpec::Kind::kDecodingParams) {
    temp_override = attack->temperature_override;
  }

  bool injected =
      !(attack && (attack->kind == AttackSpec::Kind::kMiddleFill ||
                   attack->kind == AttackSpec::Kind::kPrefill));
  auto inject_payload = [&] {
    for (const Token& t : attack->payload) {
      traj.tokens.push_back(t);
      traj.forced.push_back(true);
      push_context(t);
    }
    injected = true;
  };

  if (attack && attack->kind == AttackSpec::Kind::kPrefill) inject_payload();

  while (traj.tokens.size() < cfg.max_len) {
    if (!injected && attack->kind == AttackSpec::Kind::kMiddleFill &&
        traj.tokens.size() >= attack->position) {
      inject_payload();
      continue;
    }
    int step = static_cast<int>(traj.tokens.size());
    int action =
        policy.sample(prev, last, rng, temp_override, cfg.mask, step);
    Token t = vocab.token_of_action(action);
    if (t.kind == Token::Kind::kEndOfResponse && !injected) {
      // A middle-fill attack lands regardless of where the model would have
      // stopped; the payload displaces the end-of-response draw.
      inject_payload();
      continue;
    }
    traj.tokens.push_back(t);
    traj.forced.push_back(false);
    push_context(t);
    if (t.kind == Token::Kind::kEndOfResponse) break;
  }
  return traj;
}

LogProbGrad logprob_and_grad(const Policy& policy, const SyntheticVocab& vocab,
                             const Trajectory& traj) {
  LogProbGrad out;
  out.grad.assign(policy.param_count(), 0.0);
  int prev = -1, last = -1;
  for (const Token& t : traj.prompt) {
    prev = last;
    last = vocab.action_of(t);
  }
  for (std::size_t i = 0; i < traj.tokens.size(); ++i) {
    int action = vocab.action_of(traj.tokens[i]);
    if (!traj.forced[i]) {
      out.logprob += policy.log_prob(prev, last, action);
      policy.accumulate_logprob_grad(prev, last, action, 1.0, out.grad);
    }
    prev = last;
    last = action;
  }
  return out;
}

double trajectory_logprob(const Policy& policy, const SyntheticVocab& vocab,
                          const Trajectory& traj) {
  double lp = 0.0;
  int prev = -1, last = -1;
  for (const Token& t : traj.prompt) {
    prev = last;
    last = vocab.action_of(t);
  }
  for (std::size_t i = 0; i < traj.tokens.size(); ++i) {
    int action = vocab.action_of(traj.tokens[i]);
    if (!traj.forced[i]) lp += policy.log_prob(prev, last, action);
    prev = last;
    last = action;
  }
  return lp;
}

}  // namespace rlbf
