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

#ifndef RLBF_CORE_TRAINER_HPP_
#define RLBF_CORE_TRAINER_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/datagen.hpp"
#include "core/policy.hpp"
#include "core/reward.hpp"
#include "core/vocab.hpp"

namespace rlbf {

// Two-stage recipe: supervised pretraining on masked correction examples,
// then group-relative policy optimization against the trajectory reward,
// with the supervised loss kept as a guidance term.

struct TrainConfig {
  int buckets = 512;
  double temperature = 1.0;

  int sft_epochs = 40;
  double sft_lr = 2.0;

  int iterations = 200;
  int prompts_per_iter = 16;
  int group_size = 8;          // rollouts per prompt
  double lr = 0.5;
  double lambda_sft = 0.1;     // weight of the guidance loss
  std::size_t max_len = 64;
  double attack_fraction = 1.0;
  int sft_guidance_batch = 64;
  std::uint64_t seed = 7;

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

/// Mean cross-entropy over loss-active positions (targets get a trailing
/// end-of-response token). grad is d(loss)/d(logits), dense.
struct SftLoss {
  double loss = 0.0;
  std::size_t positions = 0;
  std::vector<double> grad;
};
SftLoss sft_loss_and_grad(const Policy& policy, const SyntheticVocab& vocab,
                          const std::vector<SftExample>& batch,
                          bool with_grad = true);

/// Full-batch gradient descent on the masked cross-entropy. Returns the
/// per-epoch loss curve (monotone to within noise on the default recipe).
std::vector<double> sft_pretrain(Policy& policy, const SyntheticVocab& vocab,
                                 const std::vector<SftExample>& examples,
                                 int epochs, double lr);

struct GrpoStats {
  double reward_mean = 0.0;
  double reward_min = 0.0;
  double reward_max = 0.0;
  double sft_loss = 0.0;
  double asr = 0.0;  // attacked rollouts whose visible output violates
  std::map<std::string, int> case_hist;

  nlohmann::json to_json() const;
};

/// One optimization step: prompts_per_iter prompts, group_size rollouts
/// each (middle-fill attacked per attack_fraction), advantages normalized
/// within each group, ascent on the clipped-free objective minus
/// lambda_sft times the guidance-loss gradient.
GrpoStats grpo_step(Policy& policy, const SyntheticVocab& vocab,
                    const SftDataset& data, const RewardConfig& reward_cfg,
                    const TrainConfig& cfg, std::uint64_t step_seed);

struct TrainResult {
  Policy policy;
  std::vector<nlohmann::json> log;  // one record per epoch / iteration
};

/// Reward configuration implied by the synthetic vocabulary and dataset.
RewardConfig make_reward_config(const SyntheticVocab& vocab,
                                const SftDataset& data);

/// The full recipe: supervised pretraining then GRPO.
TrainResult train_policy(const SyntheticVocab& vocab, const SftDataset& data,
                         const TrainConfig& cfg);

/// Comparison baseline: identical architecture and supervised recipe, but
/// trained only on the safe examples, so it never emits control tokens.
TrainResult train_it_analog(const SyntheticVocab& vocab,
                            const SftDataset& data, const TrainConfig& cfg);

/// Seeded evaluation/training prompt over the safe content alphabet.
std::vector<Token> make_prompt(const SyntheticVocab& vocab,
                               std::mt19937_64& rng, int len_min = 3,
                               int len_max = 8);

}  // namespace rlbf

#endif  // RLBF_CORE_TRAINER_HPP_
