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

#include "core/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "core/error.hpp"

namespace rlbf {

using nlohmann::json;

json TrainConfig::to_json() const {
  return json{
      {"buckets", buckets},
      {"temperature", temperature},
      {"sft_epochs", sft_epochs},
      {"sft_lr", sft_lr},
      {"iterations", iterations},
      {"prompts_per_iter", prompts_per_iter},
      {"group_size", group_size},
      {"lr", lr},
      {"lambda_sft", lambda_sft},
      {"max_len", max_len},
      {"attack_fraction", attack_fraction},
      {"sft_guidance_batch", sft_guidance_batch},
      {"seed", seed},
  };
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  if (j.contains("buckets")) c.buckets = j["buckets"].get<int>();
  if (j.contains("temperature")) c.temperature = j["temperature"].get<double>();
  if (j.contains("sft_epochs")) c.sft_epochs = j["sft_epochs"].get<int>();
  if (j.contains("sft_lr")) c.sft_lr = j["sft_lr"].get<double>();
  if (j.contains("iterations")) c.iterations = j["iterations"].get<int>();
  if (j.contains("prompts_per_iter")) {
    c.prompts_per_iter = j["prompts_per_iter"].get<int>();
  }
  if (j.contains("group_size")) c.group_size = j["group_size"].get<int>();
  if (j.contains("lr")) c.lr = j["lr"].get<double>();
  if (j.contains("lambda_sft")) c.lambda_sft = j["lambda_sft"].get<double>();
  if (j.contains("max_len")) c.max_len = j["max_len"].get<std::size_t>();
  if (j.contains("attack_fraction")) {
    c.attack_fraction = j["attack_fraction"].get<double>();
  }
  if (j.contains("sft_guidance_batch")) {
    c.sft_guidance_batch = j["sft_guidance_batch"].get<int>();
  }
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (c.group_size < 2) {
    throw Error(ErrorCode::kRange, "group_size must be >= 2");
  }
  return c;
}

json GrpoStats::to_json() const {
  json h = json::object();
  for (const auto& [k, v] : case_hist) h[k] = v;
  return json{
      {"reward_mean", reward_mean}, {"reward_min", reward_min},
      {"reward_max", reward_max},   {"sft_loss", sft_loss},
      {"asr", asr},                 {"case_hist", h},
  };
}

SftLoss sft_loss_and_grad(const Policy& policy, const SyntheticVocab& vocab,
                          const std::vector<SftExample>& batch,
                          bool with_grad) {
  SftLoss out;
  if (with_grad) out.grad.assign(policy.param_count(), 0.0);
  for (const SftExample& ex : batch) {
    int prev = -1, last = -1;
    std::size_t pos = 0;
    auto step = [&](const Token& t, bool active) {
      int action = vocab.action_of(t);
      if (active) {
        out.loss -= policy.log_prob(prev, last, action);
        ++out.positions;
        if (with_grad) {
          policy.accumulate_logprob_grad(prev, last, action, -1.0, out.grad);
        }
      }
      prev = last;
      last = action;
      ++pos;
    };
    for (const Token& t : ex.context) step(t, ex.loss_mask[pos]);
    for (const Token& t : ex.target) step(t, ex.loss_mask[pos]);
    step(Token::end_of_response(), true);
  }
  if (out.positions > 0) {
    out.loss /= static_cast<double>(out.positions);
    if (with_grad) {
      for (double& g : out.grad) g /= static_cast<double>(out.positions);
    }
  }
  return out;
}

std::vector<double> sft_pretrain(Policy& policy, const SyntheticVocab& vocab,
                                 const std::vector<SftExample>& examples,
                                 int epochs, double lr) {
  std::vector<double> curve;
  curve.reserve(epochs);
  for (int e = 0; e < epochs; ++e) {
    SftLoss l = sft_loss_and_grad(policy, vocab, examples);
    policy.apply_update(l.grad, -lr);
    curve.push_back(l.loss);
  }
  return curve;
}

RewardConfig make_reward_config(const SyntheticVocab& vocab,
                                const SftDataset& data) {
  RewardConfig cfg;
  cfg.lexicon = vocab.lexicon();
  cfg.quality.min_len = 1;
  cfg.quality.min_content = 1;
  cfg.quality.sentence_end_sym = vocab.sentence_end();
  cfg.known_violations = data.known_violations;
  return cfg;
}

std::vector<Token> make_prompt(const SyntheticVocab& vocab,
                               std::mt19937_64& rng, int len_min,
                               int len_max) {
  int len = len_min + static_cast<int>(rng() % (len_max - len_min + 1));
  std::vector<Token> prompt;
  prompt.reserve(len);
  for (int i = 0; i < len; ++i) {
    prompt.push_back(
        Token::content(static_cast<int>(rng() % vocab.safe_count())));
  }
  return prompt;
}

namespace {

AttackSpec make_middle_fill(const SyntheticVocab& vocab, std::mt19937_64& rng,
                            std::size_t max_len, int cat) {
  AttackSpec a;
  a.kind = AttackSpec::Kind::kMiddleFill;
  for (int k = 0; k < 2; ++k) {
    a.payload.push_back(Token::content(vocab.violation_symbol(
        cat, static_cast<int>(rng() % vocab.per_category()))));
  }
  a.position = 2 + rng() % (max_len / 2);
  return a;
}

bool visible_violates(const SyntheticVocab& vocab,
                      const std::vector<Token>& visible) {
  for (const Token& t : visible) {
    if (t.kind == Token::Kind::kContent && vocab.is_violation_symbol(t.sym)) {
      return true;
    }
  }
  return false;
}

}  // namespace

GrpoStats grpo_step(Policy& policy, const SyntheticVocab& vocab,
                    const SftDataset& data, const RewardConfig& reward_cfg,
                    const TrainConfig& cfg, std::uint64_t step_seed) {
  std::mt19937_64 rng(step_seed);
  GrpoStats stats;
  stats.reward_min = HUGE_VAL;
  stats.reward_max = -HUGE_VAL;

  std::vector<double> rl_grad(policy.param_count(), 0.0);
  SampleConfig sample_cfg;
  sample_cfg.max_len = cfg.max_len;

  int total = 0, attacked_total = 0, attacked_violating = 0;
  // Rotate attack categories so every step spreads pressure evenly.
  const int ncats = static_cast<int>(vocab.attack_categories().size());
  const int rotation = static_cast<int>(step_seed % ncats);
  for (int p = 0; p < cfg.prompts_per_iter; ++p) {
    std::vector<Token> prompt = make_prompt(vocab, rng);
    bool attacked =
        static_cast<double>(rng() >> 11) * 0x1.0p-53 < cfg.attack_fraction;
    std::optional<AttackSpec> attack;
    if (attacked) {
      attack = make_middle_fill(vocab, rng, cfg.max_len,
                                (rotation + p) % ncats);
    }

    std::vector<Trajectory> group;
    std::vector<double> rewards;
    group.reserve(cfg.group_size);
    for (int i = 0; i < cfg.group_size; ++i) {
      group.push_back(sample_trajectory(policy, vocab, prompt, attack, rng(),
                                        sample_cfg));
      TrajectorySegmentation seg = segment(group.back().tokens);
      RewardBreakdown rb = compute_reward(seg, reward_cfg);
      rewards.push_back(rb.value);
      ++stats.case_hist[reward_case_name(rb.reward_case)];
      stats.reward_mean += rb.value;
      stats.reward_min = std::min(stats.reward_min, rb.value);
      stats.reward_max = std::max(stats.reward_max, rb.value);
      ++total;
      if (attacked) {
        ++attacked_total;
        if (visible_violates(vocab, seg.visible)) ++attacked_violating;
      }
    }

    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= rewards.size();
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    double stddev = std::sqrt(var / rewards.size());
    const double denom = stddev + 1e-8;

    const double scale =
        1.0 / (static_cast<double>(cfg.group_size) * cfg.prompts_per_iter);
    for (int i = 0; i < cfg.group_size; ++i) {
      double adv = (rewards[i] - mean) / denom;
      if (adv == 0.0) continue;
      // Accumulates straight into the shared gradient; the dense per-rollout
      // gradient would dominate the step cost at realistic table sizes.
      const Trajectory& traj = group[i];
      int prev = -1, last = -1;
      for (const Token& t : traj.prompt) {
        prev = last;
        last = vocab.action_of(t);
      }
      for (std::size_t k = 0; k < traj.tokens.size(); ++k) {
        int action = vocab.action_of(traj.tokens[k]);
        if (!traj.forced[k]) {
          policy.accumulate_logprob_grad(prev, last, action, adv * scale,
                                         rl_grad);
        }
        prev = last;
        last = action;
      }
    }
  }
  stats.reward_mean /= total;
  stats.asr = attacked_total > 0
                  ? static_cast<double>(attacked_violating) / attacked_total
                  : 0.0;

  std::vector<SftExample> guidance;
  if (cfg.lambda_sft > 0.0 && !data.examples.empty()) {
    for (int i = 0; i < cfg.sft_guidance_batch; ++i) {
      guidance.push_back(data.examples[rng() % data.examples.size()]);
    }
  }
  if (!guidance.empty()) {
    SftLoss l = sft_loss_and_grad(policy, vocab, guidance);
    stats.sft_loss = l.loss;
    for (std::size_t k = 0; k < rl_grad.size(); ++k) {
      rl_grad[k] -= cfg.lambda_sft * l.grad[k];
    }
  }
  policy.apply_update(rl_grad, cfg.lr);
  return stats;
}

TrainResult train_policy(const SyntheticVocab& vocab, const SftDataset& data,
                         const TrainConfig& cfg) {
  TrainResult result{Policy(cfg.buckets, vocab.vocab_size(), cfg.temperature),
                     {}};
  std::vector<double> curve = sft_pretrain(result.policy, vocab, data.examples,
                                           cfg.sft_epochs, cfg.sft_lr);
  for (int e = 0; e < static_cast<int>(curve.size()); ++e) {
    result.log.push_back(json{{"phase", "sft"}, {"epoch", e},
                              {"loss", curve[e]}});
  }
  RewardConfig reward_cfg = make_reward_config(vocab, data);
  std::mt19937_64 seeder(cfg.seed);
  for (int it = 0; it < cfg.iterations; ++it) {
    GrpoStats s =
        grpo_step(result.policy, vocab, data, reward_cfg, cfg, seeder());
    json rec = s.to_json();
    rec["phase"] = "rl";
    rec["iteration"] = it;
    result.log.push_back(std::move(rec));
  }
  return result;
}

TrainResult train_it_analog(const SyntheticVocab& vocab,
                            const SftDataset& data, const TrainConfig& cfg) {
  std::vector<SftExample> safe_only;
  for (const SftExample& ex : data.examples) {
    if (ex.categories.empty()) safe_only.push_back(ex);
  }
  if (safe_only.empty()) {
    throw Error(ErrorCode::kRange, "dataset has no safe examples");
  }
  TrainResult result{Policy(cfg.buckets, vocab.vocab_size(), cfg.temperature),
                     {}};
  std::vector<double> curve = sft_pretrain(result.policy, vocab, safe_only,
                                           cfg.sft_epochs, cfg.sft_lr);
  for (int e = 0; e < static_cast<int>(curve.size()); ++e) {
    result.log.push_back(json{{"phase", "sft_safe_only"}, {"epoch", e},
                              {"loss", curve[e]}});
  }
  return result;
}

}  // namespace rlbf
