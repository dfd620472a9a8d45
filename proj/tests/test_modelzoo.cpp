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
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "mumis/data.hpp"
#include "mumis/modelzoo.hpp"
#include "mumis/util.hpp"

using namespace mumis;

namespace {

data::DatasetSpec tiny_set() {
  data::DatasetSpec spec;
  spec.name = "custom";
  spec.classes = 3;
  spec.per_class_train = 24;
  spec.per_class_test = 8;
  spec.image_size = 8;
  spec.noise = 0.3;
  spec.seed = 11;
  return spec;
}

nn::ArchConfig tiny_mlp(int in_dim, int classes) {
  nn::ArchConfig a;
  a.tag = "mlp";
  a.in_dim = in_dim;
  a.hidden = {16};
  a.num_classes = classes;
  return a;
}

/// Linear model that always prefers class `c` (zero weights, biased head).
nn::Model constant_model(int in_dim, int classes, int c) {
  nn::ArchConfig a;
  a.tag = "mlp";
  a.in_dim = in_dim;
  a.num_classes = classes;
  nn::Model m(a, 0);
  m.set_param("head.weight", Tensor::zeros({classes, in_dim}));
  Tensor b({classes});
  b.at(c) = 5.0;
  m.set_param("head.bias", b);
  return m;
}

}  // namespace

TEST_CASE("constant predictor accuracy on skewed and balanced sets") {
  const auto dataset = data::make_dataset(tiny_set());
  auto model = constant_model(64, 3, 1);

  const auto class1 = dataset.train_indices_of({1});
  CHECK(zoo::evaluate_accuracy(model, dataset, data::Split::Train, class1,
                               data::Granularity::Fine) == doctest::Approx(100.0));

  const auto all = dataset.all_train_indices();
  CHECK(zoo::evaluate_accuracy(model, dataset, data::Split::Train, all,
                               data::Granularity::Fine) == doctest::Approx(100.0 / 3));
}

TEST_CASE("accuracy is permutation invariant and bounded") {
  const auto dataset = data::make_dataset(tiny_set());
  nn::Model model(tiny_mlp(64, 3), 5);
  auto idx = dataset.all_train_indices();
  const double a = zoo::evaluate_accuracy(model, dataset, data::Split::Train, idx,
                                          data::Granularity::Fine);
  Rng rng(3);
  rng.shuffle(idx);
  const double b = zoo::evaluate_accuracy(model, dataset, data::Split::Train, idx,
                                          data::Granularity::Fine);
  CHECK(a == doctest::Approx(b));
  CHECK(a >= 0.0);
  CHECK(a <= 100.0);
}

TEST_CASE("evaluate rejects empty index sets and wrong granularity") {
  const auto dataset = data::make_dataset(tiny_set());
  nn::Model model(tiny_mlp(64, 3), 5);
  CHECK_THROWS_AS(zoo::evaluate_accuracy(model, dataset, data::Split::Train, {},
                                         data::Granularity::Fine),
                  ConfigError);
  nn::Model wrong(tiny_mlp(64, 5), 5);
  CHECK_THROWS_AS(zoo::evaluate_accuracy(wrong, dataset, data::Split::Train,
                                         dataset.all_train_indices(), data::Granularity::Fine),
                  ConfigError);
}

TEST_CASE("training reaches the recipe floor and is deterministic") {
  const auto dataset = data::make_dataset(tiny_set());
  zoo::TrainConfig cfg;
  cfg.epochs = 30;
  cfg.lr = 0.08;
  cfg.momentum = 0.9;
  cfg.weight_decay = 1e-4;
  cfg.batch_size = 16;
  cfg.lr_milestones = {20};
  cfg.seed = 123;
  cfg.min_train_accuracy = 90.0;

  const auto arch = tiny_mlp(64, 3);
  nn::Model a = zoo::train(dataset, dataset.all_train_indices(), data::Granularity::Fine, arch, cfg);
  const double acc = zoo::evaluate_accuracy(a, dataset, data::Split::Train,
                                            dataset.all_train_indices(), data::Granularity::Fine);
  CHECK(acc >= 90.0);

  nn::Model b = zoo::train(dataset, dataset.all_train_indices(), data::Granularity::Fine, arch, cfg);
  CHECK(a.params_checksum() == b.params_checksum());
  CHECK(a.buffers_checksum() == b.buffers_checksum());
}

TEST_CASE("training rejects bad configs and unreachable floors") {
  const auto dataset = data::make_dataset(tiny_set());
  const auto arch = tiny_mlp(64, 3);
  zoo::TrainConfig cfg;
  cfg.epochs = 0;
  CHECK_THROWS_AS(zoo::train(dataset, dataset.all_train_indices(), data::Granularity::Fine,
                             arch, cfg),
                  ConfigError);
  cfg.epochs = 1;
  CHECK_THROWS_AS(zoo::train(dataset, {}, data::Granularity::Fine, arch, cfg), ConfigError);

  cfg.epochs = 1;
  cfg.lr = 1e-9;
  cfg.min_train_accuracy = 99.9;  // one tiny-lr epoch cannot reach this
  CHECK_THROWS_AS(zoo::train(dataset, dataset.all_train_indices(), data::Granularity::Fine,
                             arch, cfg),
                  TrainError);
}

TEST_CASE("checkpoint save/load round trip") {
  const auto dataset = data::make_dataset(tiny_set());
  nn::Model model(tiny_mlp(64, 3), 77);
  zoo::CheckpointMeta meta;
  meta.arch = model.arch();
  meta.label_space = {0, 1, 2};
  meta.train_seed = 77;
  meta.dataset_id = dataset.id;

  const std::string dir =
      (std::filesystem::temp_directory_path() / "mumis_ckpt_test").string();
  std::filesystem::remove_all(dir);
  zoo::save_checkpoint(dir, model, meta);

  auto loaded = zoo::load_checkpoint(dir);
  CHECK(loaded.model.params_checksum() == model.params_checksum());
  CHECK(loaded.meta.dataset_id == dataset.id);
  CHECK(loaded.meta.label_space == std::vector<int>{0, 1, 2});

  // byte-stable: saving the loaded model reproduces params.bin exactly
  const std::string dir2 = dir + "_resave";
  std::filesystem::remove_all(dir2);
  zoo::save_checkpoint(dir2, loaded.model, loaded.meta);
  CHECK(read_text_file(dir + "/params.bin") == read_text_file(dir2 + "/params.bin"));

  CHECK_THROWS_AS(zoo::load_checkpoint(dir + "_missing"), ConfigError);
}

TEST_CASE("coarse-granularity training uses the superclass map") {
  data::DatasetSpec spec = tiny_set();
  spec.classes = 4;
  spec.coarse = 2;
  spec.per_class_train = 12;
  const auto dataset = data::make_dataset(spec);
  zoo::TrainConfig cfg;
  cfg.epochs = 10;
  cfg.lr = 0.05;
  cfg.batch_size = 12;
  cfg.seed = 9;
  nn::Model m = zoo::train(dataset, dataset.all_train_indices(), data::Granularity::Coarse,
                           tiny_mlp(64, 2), cfg);
  const double acc = zoo::evaluate_accuracy(m, dataset, data::Split::Train,
                                            dataset.all_train_indices(),
                                            data::Granularity::Coarse);
  CHECK(acc > 60.0);
}
