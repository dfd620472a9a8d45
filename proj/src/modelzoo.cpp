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
#include "mumis/modelzoo.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "mumis/util.hpp"

namespace mumis::zoo {

using nlohmann::json;

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train batch_size must be >= 1");
  if (lr <= 0.0) throw ConfigError("train lr must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must be in [0, 1)");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be nonnegative");
}

ag::Var ce_loss_graph(nn::Model& model, const ag::Var& x, const std::vector<int>& labels,
                      bool train_mode) {
  const int n = x->value.dim(0);
  const int c = model.num_classes();
  if (static_cast<int>(labels.size()) != n)
    throw std::invalid_argument("label count does not match batch");
  auto logits = model.forward(x, train_mode);

  // log-sum-exp with a detached row max
  Tensor mx({n});
  auto lm = logits->value.matrix(n, c);
  for (int i = 0; i < n; ++i) mx.at(i) = lm.row(i).maxCoeff();
  const auto mx_c = ag::constant(mx);
  const auto shifted = ag::sub(logits, ag::bcast_rows(mx_c, c));
  const auto lse = ag::add(ag::log_op(ag::row_sum(ag::exp_op(shifted))), mx_c);

  auto table = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= c) throw std::invalid_argument("label out of range");
    (*table)[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(i) * c + y;
  }
  const auto picked = ag::gather(logits, table, {n});
  return ag::mean_all(ag::sub(lse, picked));
}

namespace {

std::vector<std::vector<int>> make_batches(std::vector<int> indices, int batch_size, Rng& rng) {
  rng.shuffle(indices);
  std::vector<std::vector<int>> batches;
  for (std::size_t i = 0; i < indices.size(); i += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(indices.size(), i + static_cast<std::size_t>(batch_size));
    batches.emplace_back(indices.begin() + static_cast<std::ptrdiff_t>(i),
                         indices.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

}  // namespace

nn::Model train(const data::Dataset& dataset, const std::vector<int>& train_indices,
                data::Granularity granularity, const nn::ArchConfig& arch,
                const TrainConfig& cfg) {
  cfg.validate();
  if (train_indices.empty()) throw ConfigError("train: empty index set");
  if (arch.num_classes != dataset.num_classes(granularity))
    throw ConfigError("arch num_classes does not match dataset granularity");

  nn::Model model(arch, derive_seed(cfg.seed, "init"));
  Rng order_rng(derive_seed(cfg.seed, "order"));

  // momentum buffers, one per parameter
  std::vector<Tensor> velocity;
  velocity.reserve(model.params().size());
  for (const auto& [name, v] : model.params()) velocity.push_back(Tensor::zeros(v->value.shape()));

  double lr = cfg.lr;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (std::find(cfg.lr_milestones.begin(), cfg.lr_milestones.end(), epoch) !=
        cfg.lr_milestones.end())
      lr *= cfg.lr_decay;

    const auto batches = make_batches(train_indices, cfg.batch_size, order_rng);
    int step = 0;
    for (const auto& batch_idx : batches) {
      ++step;
      const Tensor x = dataset.batch(data::Split::Train, batch_idx);
      const auto labels = dataset.batch_labels(data::Split::Train, batch_idx, granularity);
      const auto loss = ce_loss_graph(model, ag::constant(x), labels, true);
      if (!std::isfinite(loss->value.item()))
        throw TrainError("training diverged (non-finite loss) at epoch " +
                         std::to_string(epoch) + " step " + std::to_string(step));

      std::vector<ag::Var> wrt;
      wrt.reserve(model.params().size());
      for (const auto& [name, v] : model.params()) wrt.push_back(v);
      const auto grads = ag::backward(loss, wrt);

      for (std::size_t p = 0; p < wrt.size(); ++p) {
        auto w = wrt[p]->value.array();
        auto g = grads[p]->value.array();
        auto vel = velocity[p].array();
        vel = cfg.momentum * vel + (g + cfg.weight_decay * w);
        w -= lr * vel;
      }
    }
  }

  if (cfg.min_train_accuracy > 0.0) {
    const double acc =
        evaluate_accuracy(model, dataset, data::Split::Train, train_indices, granularity);
    if (acc < cfg.min_train_accuracy)
      throw TrainError("trained model reached " + format_double(acc, 4) +
                       "% train accuracy, below the recipe floor of " +
                       format_double(cfg.min_train_accuracy, 4) + "%");
  }
  return model;
}

namespace {

constexpr int kEvalChunk = 256;

}

double evaluate_accuracy(nn::Model& model, const data::Dataset& dataset, data::Split split,
                         const std::vector<int>& indices, data::Granularity granularity) {
  if (indices.empty()) throw ConfigError("evaluate_accuracy: empty index set");
  if (model.num_classes() != dataset.num_classes(granularity))
    throw ConfigError("model label space does not match requested granularity");
  std::int64_t correct = 0;
  for (std::size_t i = 0; i < indices.size(); i += kEvalChunk) {
    const std::size_t end = std::min(indices.size(), i + kEvalChunk);
    const std::vector<int> chunk(indices.begin() + static_cast<std::ptrdiff_t>(i),
                                 indices.begin() + static_cast<std::ptrdiff_t>(end));
    const auto preds = model.predict(dataset.batch(split, chunk));
    const auto labels = dataset.batch_labels(split, chunk, granularity);
    for (std::size_t k = 0; k < chunk.size(); ++k) {
      if (preds[k] == labels[k]) ++correct;
    }
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(indices.size());
}

double evaluate_ce_loss(nn::Model& model, const data::Dataset& dataset, data::Split split,
                        const std::vector<int>& indices, data::Granularity granularity) {
  if (indices.empty()) throw ConfigError("evaluate_ce_loss: empty index set");
  double total = 0.0;
  for (std::size_t i = 0; i < indices.size(); i += kEvalChunk) {
    const std::size_t end = std::min(indices.size(), i + kEvalChunk);
    const std::vector<int> chunk(indices.begin() + static_cast<std::ptrdiff_t>(i),
                                 indices.begin() + static_cast<std::ptrdiff_t>(end));
    const Tensor probs = model.predict_probs(dataset.batch(split, chunk));
    const auto labels = dataset.batch_labels(split, chunk, granularity);
    const int c = model.num_classes();
    for (std::size_t k = 0; k < chunk.size(); ++k) {
      const double p =
          std::max(probs.at(static_cast<std::int64_t>(k) * c + labels[k]), 1e-300);
      total -= std::log(p);
    }
  }
  return total / static_cast<double>(indices.size());
}

// ---------------------------------------------------------------------------
// Checkpoint persistence
// ---------------------------------------------------------------------------

std::string checkpoint_id(const nn::Model& model) {
  const std::uint64_t h =
      splitmix64(model.params_checksum() ^ (model.buffers_checksum() * 0x9e3779b97f4a7c15ULL));
  return hash_hex(h);
}

void save_checkpoint(const std::string& dir, const nn::Model& model, CheckpointMeta meta) {
  ensure_dir(dir);
  meta.params_checksum = model.params_checksum();
  meta.buffers_checksum = model.buffers_checksum();
  json j;
  to_json(j, meta);
  write_text_file(dir + "/meta.json", j.dump(2) + "\n");
  nn::save_tensors(dir + "/params.bin", model);
}

Checkpoint load_checkpoint(const std::string& dir) {
  const std::string meta_path = dir + "/meta.json";
  if (!file_exists(meta_path)) throw ConfigError("no checkpoint at " + dir);
  CheckpointMeta meta;
  from_json(json::parse(read_text_file(meta_path)), meta);
  nn::Model model(meta.arch, 0);
  nn::load_tensors(dir + "/params.bin", model);
  if (meta.params_checksum != 0 && meta.params_checksum != model.params_checksum())
    throw ConfigError("checkpoint parameter checksum mismatch in " + dir);
  if (meta.buffers_checksum != 0 && meta.buffers_checksum != model.buffers_checksum())
    throw ConfigError("checkpoint buffer checksum mismatch in " + dir);
  return Checkpoint{std::move(model), std::move(meta)};
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"epochs", c.epochs},
           {"lr", c.lr},
           {"momentum", c.momentum},
           {"weight_decay", c.weight_decay},
           {"batch_size", c.batch_size},
           {"lr_milestones", c.lr_milestones},
           {"lr_decay", c.lr_decay},
           {"seed", c.seed},
           {"min_train_accuracy", c.min_train_accuracy}};
}

void from_json(const json& j, TrainConfig& c) {
  c = TrainConfig{};
  c.epochs = j.value("epochs", c.epochs);
  c.lr = j.value("lr", c.lr);
  c.momentum = j.value("momentum", c.momentum);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr_milestones = j.value("lr_milestones", c.lr_milestones);
  c.lr_decay = j.value("lr_decay", c.lr_decay);
  c.seed = j.value("seed", c.seed);
  c.min_train_accuracy = j.value("min_train_accuracy", c.min_train_accuracy);
}

void to_json(json& j, const nn::ArchConfig& a) {
  j = json{{"tag", a.tag},
           {"in_channels", a.in_channels},
           {"height", a.height},
           {"width", a.width},
           {"channels", a.channels},
           {"in_dim", a.in_dim},
           {"hidden", a.hidden},
           {"num_classes", a.num_classes},
           {"activation", a.activation}};
}

void from_json(const json& j, nn::ArchConfig& a) {
  a = nn::ArchConfig{};
  a.tag = j.value("tag", a.tag);
  a.in_channels = j.value("in_channels", a.in_channels);
  a.height = j.value("height", a.height);
  a.width = j.value("width", a.width);
  a.channels = j.value("channels", a.channels);
  a.in_dim = j.value("in_dim", a.in_dim);
  a.hidden = j.value("hidden", a.hidden);
  a.num_classes = j.value("num_classes", a.num_classes);
  a.activation = j.value("activation", a.activation);
}

void to_json(json& j, const CheckpointMeta& m) {
  json arch;
  to_json(arch, m.arch);
  json recipe;
  to_json(recipe, m.recipe);
  j = json{{"schema_version", m.schema_version},
           {"arch", arch},
           {"label_space", m.label_space},
           {"train_seed", m.train_seed},
           {"dataset_id", m.dataset_id},
           {"recipe", recipe},
           {"params_checksum", m.params_checksum},
           {"buffers_checksum", m.buffers_checksum}};
}

void from_json(const json& j, CheckpointMeta& m) {
  m = CheckpointMeta{};
  m.schema_version = j.value("schema_version", 1);
  if (j.contains("arch")) from_json(j.at("arch"), m.arch);
  m.label_space = j.value("label_space", m.label_space);
  m.train_seed = j.value("train_seed", m.train_seed);
  m.dataset_id = j.value("dataset_id", m.dataset_id);
  if (j.contains("recipe")) from_json(j.at("recipe"), m.recipe);
  m.params_checksum = j.value("params_checksum", 0ULL);
  m.buffers_checksum = j.value("buffers_checksum", 0ULL);
}

}  // namespace mumis::zoo
