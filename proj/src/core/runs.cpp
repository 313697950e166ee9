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

#include "core/runs.hpp"

#include <fstream>

#include "core/datagen.hpp"
#include "core/error.hpp"
#include "core/eval.hpp"
#include "core/jsonio.hpp"
#include "core/reward.hpp"
#include "core/trainer.hpp"
#include "core/transducer.hpp"
#include "core/version.hpp"
#include "core/vocab.hpp"

namespace rlbf {

using nlohmann::json;

namespace {

struct LoadedDataset {
  SyntheticVocab vocab;
  SftDataset data;
};

json dataset_to_json(const SyntheticVocab& vocab, const DatagenConfig& cfg,
                     const SftDataset& data) {
  json examples = json::array();
  for (const SftExample& ex : data.examples) examples.push_back(ex.to_json());
  json known = json::array();
  for (const auto& span : data.known_violations) {
    json arr = json::array();
    for (const Token& t : span) arr.push_back(token_to_json(t));
    known.push_back(std::move(arr));
  }
  return json{
      {"version", kVersion},
      {"vocab", vocab.to_json()},
      {"config", cfg.to_json()},
      {"examples", std::move(examples)},
      {"known_violations", std::move(known)},
  };
}

LoadedDataset load_dataset(const std::string& path) {
  json j = load_json(path);
  LoadedDataset out;
  out.vocab = SyntheticVocab::from_json(j.at("vocab"));
  for (const auto& e : j.at("examples")) {
    out.data.examples.push_back(SftExample::from_json(e));
  }
  for (const auto& span : j.at("known_violations")) {
    std::vector<Token> tokens;
    for (const auto& t : span) tokens.push_back(token_from_json(t));
    out.data.known_violations.push_back(std::move(tokens));
  }
  return out;
}

json checkpoint_to_json(const TrainConfig& cfg, const SyntheticVocab& vocab,
                        const TrainResult& result) {
  return json{
      {"version", kVersion},
      {"config", cfg.to_json()},
      {"config_hash", json_hash(cfg.to_json())},
      {"vocab", vocab.to_json()},
      {"policy", result.policy.to_json()},
      {"log", result.log},
  };
}

}  // namespace

void run_datagen(const json& config, const std::string& out_path) {
  DatagenConfig cfg = DatagenConfig::from_json(config);
  SyntheticVocab vocab = config.contains("vocab")
                             ? SyntheticVocab::from_json(config["vocab"])
                             : SyntheticVocab();
  SftDataset data = build_sft_dataset(vocab, cfg);
  save_json(out_path, dataset_to_json(vocab, cfg, data));
  write_manifest(out_path, config, cfg.seed);
}

void run_sft(const std::string& dataset_path, const json& config,
             const std::string& out_path) {
  LoadedDataset ds = load_dataset(dataset_path);
  TrainConfig cfg = TrainConfig::from_json(config);
  TrainResult result{Policy(cfg.buckets, ds.vocab.vocab_size(),
                            cfg.temperature),
                     {}};
  std::vector<double> curve = sft_pretrain(result.policy, ds.vocab,
                                           ds.data.examples, cfg.sft_epochs,
                                           cfg.sft_lr);
  for (int e = 0; e < static_cast<int>(curve.size()); ++e) {
    result.log.push_back(json{{"phase", "sft"}, {"epoch", e},
                              {"loss", curve[e]}});
  }
  save_json(out_path, checkpoint_to_json(cfg, ds.vocab, result));
  write_manifest(out_path, config, cfg.seed);
}

void run_train(const std::string& dataset_path, const json& config,
               const std::string& out_path, bool baseline) {
  LoadedDataset ds = load_dataset(dataset_path);
  TrainConfig cfg = TrainConfig::from_json(config);
  TrainResult result = baseline ? train_it_analog(ds.vocab, ds.data, cfg)
                                : train_policy(ds.vocab, ds.data, cfg);
  save_json(out_path, checkpoint_to_json(cfg, ds.vocab, result));
  write_manifest(out_path, config, cfg.seed);
}

void run_eval(const std::string& checkpoint_path, const json& config,
              const std::string& format, const std::string& out_path) {
  json ckpt = load_json(checkpoint_path);
  SyntheticVocab vocab = SyntheticVocab::from_json(ckpt.at("vocab"));
  Policy policy = Policy::from_json(ckpt.at("policy"));
  EvalConfig cfg = EvalConfig::from_json(config);
  std::vector<EvalResult> results = ablation_suite(policy, vocab, cfg);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + out_path);
  out << emit_report(results, format);
  out.close();
  write_manifest(out_path, config, cfg.seed);
}

void run_transduce(const std::string& in_path, const std::string& mode,
                   const json& config, const std::string& out_path) {
  TransducerConfig cfg = config.is_null() || config.empty()
                             ? TransducerConfig{}
                             : transducer_config_from_json(config);
  cfg.validate();
  std::vector<Token> tokens = tokens_from_jsonl(in_path);
  std::vector<std::string> lines;
  if (mode == "stream") {
    Transducer t(cfg);
    for (const Token& tok : tokens) {
      for (const StreamEvent& ev : t.feed(tok)) {
        lines.push_back(event_to_json(ev).dump());
      }
    }
    for (const StreamEvent& ev : t.finish()) {
      lines.push_back(event_to_json(ev).dump());
    }
  } else if (mode == "offline") {
    OfflineResult r = transduce_offline(tokens, cfg);
    json visible = json::array();
    for (const Token& t : r.visible) visible.push_back(token_to_json(t));
    lines.push_back(json{{"visible", visible}}.dump());
    for (const OfflineNote& n : r.notes) {
      json cats = json::array();
      for (SafetyCategory c : n.categories) cats.push_back(category_name(c));
      lines.push_back(json{{"note",
                            json{{"categories", cats},
                                 {"span_len", n.retracted_span.size()},
                                 {"clamped", n.clamped},
                                 {"position", n.raw_position}}}}
                          .dump());
    }
    for (const OfflineFault& f : r.faults) {
      lines.push_back(json{{"fault", json{{"kind", fault_kind_name(f.kind)},
                                          {"position", f.position}}}}
                          .dump());
    }
  } else {
    throw Error(ErrorCode::kUsage, "mode must be stream or offline");
  }
  write_lines(out_path, lines);
  write_manifest(out_path, config, 0);
}

void run_reward(const std::string& traj_path, const std::string& dataset_path,
                const std::string& out_path) {
  LoadedDataset ds = load_dataset(dataset_path);
  RewardConfig cfg = make_reward_config(ds.vocab, ds.data);
  std::vector<std::string> lines;
  for (const json& line : load_jsonl(traj_path)) {
    std::vector<Token> raw;
    for (const auto& t : line.at("raw")) raw.push_back(token_from_json(t));
    TrajectorySegmentation seg = segment(raw);
    RewardBreakdown rb = compute_reward(seg, cfg);
    lines.push_back(json{{"reward", rb.value},
                         {"case", reward_case_name(rb.reward_case)},
                         {"quality",
                          json{{"safe", rb.quality.safe},
                               {"coherent", rb.quality.coherent},
                               {"useful", rb.quality.useful}}}}
                        .dump());
  }
  write_lines(out_path, lines);
  write_manifest(out_path, json::object(), 0);
}

}  // namespace rlbf
