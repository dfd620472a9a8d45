/*
 * Copyright 2026 The mumis authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

#include "mumis/data.hpp"
#include "mumis/nn.hpp"

namespace mumis::zoo {

/// Supervised training recipe (SGD with momentum, stepwise lr decay).
struct TrainConfig {
  int epochs = 40;
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  int batch_size = 64;
  std::vector<int> lr_milestones;  // epochs at which lr is multiplied by lr_decay
  double lr_decay = 0.1;
  std::uint64_t seed = 0;
  /// When positive, train() fails unless final train-set accuracy reaches this.
  double min_train_accuracy = 0.0;

  void validate() const;
};

struct CheckpointMeta {
  int schema_version = 1;
  nn::ArchConfig arch;
  std::vector<int> label_space;
  std::uint64_t train_seed = 0;
  std::string dataset_id;
  TrainConfig recipe;
  std::uint64_t params_checksum = 0;
  std::uint64_t buffers_checksum = 0;
};

/// A checkpoint directory holds meta.json plus params.bin (the tensor
/// archive). Save followed by load followed by save is byte-stable.
void save_checkpoint(const std::string& dir, const nn::Model& model, CheckpointMeta meta);

struct Checkpoint {
  nn::Model model;
  CheckpointMeta meta;
};
Checkpoint load_checkpoint(const std::string& dir);

/// Content id of a stored checkpoint (hash of params and buffers).
std::string checkpoint_id(const nn::Model& model);

/// Train a classifier on the given train indices at the given granularity.
/// Deterministic for a fixed config seed.
nn::Model train(const data::Dataset& dataset, const std::vector<int>& train_indices,
                data::Granularity granularity, const nn::ArchConfig& arch,
                const TrainConfig& cfg);

/// Accuracy (percent) of the model on the given sample indices.
double evaluate_accuracy(nn::Model& model, const data::Dataset& dataset, data::Split split,
                         const std::vector<int>& indices, data::Granularity granularity);

/// Mean cross-entropy of the model on the given indices (diagnostics).
double evaluate_ce_loss(nn::Model& model, const data::Dataset& dataset, data::Split split,
                        const std::vector<int>& indices, data::Granularity granularity);

/// Cross-entropy loss graph for a labeled batch (shared by training and the
/// unlearning baselines).
ag::Var ce_loss_graph(nn::Model& model, const ag::Var& x, const std::vector<int>& labels,
                      bool train_mode);

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
void to_json(nlohmann::json& j, const CheckpointMeta& m);
void from_json(const nlohmann::json& j, CheckpointMeta& m);
void to_json(nlohmann::json& j, const nn::ArchConfig& a);
void from_json(const nlohmann::json& j, nn::ArchConfig& a);

}  // namespace mumis::zoo
