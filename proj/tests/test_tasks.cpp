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
#include <nlohmann/json.hpp>
#include <set>

#include "mumis/tasks.hpp"
#include "mumis/util.hpp"

using namespace mumis;
using tasks::TaskMode;
using tasks::TaskSpec;

namespace {

/// Labels-only dataset (pixels are never touched by the split logic).
data::Dataset labels_dataset(const std::vector<int>& train_labels, int num_fine,
                             int num_coarse = 0) {
  data::Dataset d;
  d.id = "labels-only";
  d.num_fine = num_fine;
  d.num_coarse = num_coarse == 0 ? num_fine : num_coarse;
  const int variants = num_coarse == 0 ? 1 : num_fine / num_coarse;
  d.superclass_map.resize(static_cast<std::size_t>(num_fine));
  for (int c = 0; c < num_fine; ++c)
    d.superclass_map[static_cast<std::size_t>(c)] = num_coarse == 0 ? c : c / variants;
  d.train_labels = train_labels;
  d.test_labels = {0};
  return d;
}

data::Dataset balanced_dataset(int classes, int per_class, int num_coarse = 0) {
  std::vector<int> labels;
  for (int c = 0; c < classes; ++c)
    for (int i = 0; i < per_class; ++i) labels.push_back(c);
  return labels_dataset(labels, classes, num_coarse);
}

std::string split_fingerprint(const tasks::SplitIndices& s) {
  nlohmann::json j;
  tasks::to_json(j, s);
  return j.dump();
}

}  // namespace

TEST_CASE("full-class split on a balanced 10x100 set") {
  const auto dataset = balanced_dataset(10, 100);
  TaskSpec spec;
  spec.mode = TaskMode::FullClass;
  spec.targets = {3};
  const auto split = tasks::build_split(spec, dataset);
  CHECK(split.forget.size() == 100);
  CHECK(split.remain.size() == 900);
  for (int i : split.forget) CHECK(dataset.train_labels[static_cast<std::size_t>(i)] == 3);
  CHECK(split.granularity == data::Granularity::Fine);
  CHECK(split.label_space.size() == 10);
}

TEST_CASE("random subset picks ceil(fraction * N) samples") {
  const auto dataset = balanced_dataset(10, 5000);  // 50000 train samples
  TaskSpec spec;
  spec.mode = TaskMode::RandomSubset;
  spec.fraction = 0.10;
  spec.seed = 7;
  const auto split = tasks::build_split(spec, dataset);
  CHECK(split.forget.size() == 5000);
  CHECK(split.remain.size() == 45000);
}

TEST_CASE("splits are deterministic for a fixed seed") {
  const auto dataset = balanced_dataset(6, 40);
  TaskSpec spec;
  spec.mode = TaskMode::RandomSubset;
  spec.fraction = 0.25;
  spec.seed = 99;
  const auto a = tasks::build_split(spec, dataset);
  const auto b = tasks::build_split(spec, dataset);
  CHECK(split_fingerprint(a) == split_fingerprint(b));

  spec.seed = 100;
  const auto c = tasks::build_split(spec, dataset);
  CHECK(split_fingerprint(a) != split_fingerprint(c));
}

TEST_CASE("partition property holds across modes") {
  const auto dataset = balanced_dataset(8, 25, 4);
  std::vector<TaskSpec> specs;
  {
    TaskSpec s;
    s.mode = TaskMode::FullClass;
    s.targets = {0, 5};
    specs.push_back(s);
  }
  {
    TaskSpec s;
    s.mode = TaskMode::SubClass;
    s.targets = {3};
    specs.push_back(s);
  }
  for (double f : {0.01, 0.37, 1.0}) {
    TaskSpec s;
    s.mode = TaskMode::RandomSubset;
    s.fraction = f;
    s.seed = static_cast<std::uint64_t>(f * 1000);
    specs.push_back(s);
  }
  for (const auto& spec : specs) {
    const auto split = tasks::build_split(spec, dataset);
    std::set<int> seen(split.forget.begin(), split.forget.end());
    for (int i : split.remain) CHECK(seen.insert(i).second);
    CHECK(seen.size() == static_cast<std::size_t>(dataset.train_size()));
    CHECK(std::is_sorted(split.forget.begin(), split.forget.end()));
    CHECK(std::is_sorted(split.remain.begin(), split.remain.end()));
    CHECK(!split.forget.empty());
  }
}

TEST_CASE("sub-class split keeps coarse support and coarse granularity") {
  const auto dataset = balanced_dataset(8, 25, 4);  // 2 fine per coarse
  TaskSpec spec;
  spec.mode = TaskMode::SubClass;
  spec.targets = {2};  // coarse group 1
  const auto split = tasks::build_split(spec, dataset);
  CHECK(split.granularity == data::Granularity::Coarse);
  CHECK(split.label_space.size() == 4);
  bool coarse_supported = false;
  for (int i : split.remain) {
    if (dataset.label_of(data::Split::Train, i, data::Granularity::Coarse) == 1)
      coarse_supported = true;
  }
  CHECK(coarse_supported);
}

TEST_CASE("invalid specs are rejected") {
  const auto dataset = balanced_dataset(4, 10);
  TaskSpec spec;
  spec.mode = TaskMode::FullClass;
  spec.targets = {7};
  CHECK_THROWS_AS(tasks::build_split(spec, dataset), ConfigError);

  spec.targets = {};
  CHECK_THROWS_AS(tasks::build_split(spec, dataset), ConfigError);

  TaskSpec frac;
  frac.mode = TaskMode::RandomSubset;
  frac.fraction = 0.0;
  CHECK_THROWS_AS(tasks::build_split(frac, dataset), ConfigError);
  frac.fraction = 1.5;
  CHECK_THROWS_AS(tasks::build_split(frac, dataset), ConfigError);

  // class exists in the label space but has no training samples
  const auto gappy = labels_dataset({0, 0, 1, 1}, 3);
  TaskSpec empty_class;
  empty_class.mode = TaskMode::FullClass;
  empty_class.targets = {2};
  CHECK_THROWS_AS(tasks::build_split(empty_class, gappy), ConfigError);

  // sub_class on a dataset without superclass structure
  TaskSpec sub;
  sub.mode = TaskMode::SubClass;
  sub.targets = {1};
  CHECK_THROWS_AS(tasks::build_split(sub, dataset), ConfigError);
}

TEST_CASE("advance_sequence walks requests and accumulates") {
  TaskSpec seq;
  seq.mode = TaskMode::Sequential;
  seq.seed = 5;
  for (int c = 0; c < 5; ++c) {
    TaskSpec r;
    r.mode = TaskMode::FullClass;
    r.targets = {c};
    seq.sequence.push_back(r);
  }

  const auto s0 = tasks::advance_sequence(seq, 0);
  CHECK(s0.request.targets == std::vector<int>{0});
  CHECK(s0.cumulative.empty());

  const auto s2 = tasks::advance_sequence(seq, 2);
  CHECK(s2.request.targets == std::vector<int>{2});
  CHECK(s2.cumulative == std::vector<int>{0, 1});

  CHECK_THROWS_AS(tasks::advance_sequence(seq, 5), ConfigError);
  CHECK_THROWS_AS(tasks::advance_sequence(seq, -1), ConfigError);

  TaskSpec single;
  single.mode = TaskMode::FullClass;
  single.targets = {0};
  CHECK_THROWS_AS(tasks::advance_sequence(single, 0), ConfigError);
}

TEST_CASE("sequential specs validate their requests") {
  const auto dataset = balanced_dataset(4, 10);
  TaskSpec seq;
  seq.mode = TaskMode::Sequential;
  TaskSpec r;
  r.mode = TaskMode::FullClass;
  r.targets = {0};
  seq.sequence.push_back(r);
  CHECK_THROWS_AS(seq.validate(dataset), ConfigError);  // needs >= 2 requests

  TaskSpec bad;
  bad.mode = TaskMode::RandomSubset;
  bad.fraction = 0.5;
  seq.sequence.push_back(bad);
  CHECK_THROWS_AS(seq.validate(dataset), ConfigError);  // random subset not allowed inside

  seq.sequence[1] = r;
  seq.sequence[1].targets = {1};
  CHECK_NOTHROW(seq.validate(dataset));
}

TEST_CASE("task specs round trip through JSON") {
  TaskSpec seq;
  seq.mode = TaskMode::Sequential;
  seq.seed = 17;
  for (int c : {2, 4}) {
    TaskSpec r;
    r.mode = TaskMode::SubClass;
    r.targets = {c};
    seq.sequence.push_back(r);
  }
  nlohmann::json j;
  tasks::to_json(j, seq);
  TaskSpec back;
  tasks::from_json(j, back);
  CHECK(back.mode == TaskMode::Sequential);
  CHECK(back.sequence.size() == 2);
  CHECK(back.sequence[1].targets == std::vector<int>{4});
  CHECK(back.seed == 17);
}

TEST_CASE("split cache is keyed by spec, dataset and seed") {
  const auto dataset = balanced_dataset(5, 20);
  const std::string dir =
      (std::filesystem::temp_directory_path() / "mumis_split_cache").string();
  std::filesystem::remove_all(dir);
  TaskSpec spec;
  spec.mode = TaskMode::RandomSubset;
  spec.fraction = 0.2;
  spec.seed = 3;
  const auto a = tasks::build_split_cached(spec, dataset, dir);
  const auto b = tasks::build_split_cached(spec, dataset, dir);  // served from cache
  CHECK(split_fingerprint(a) == split_fingerprint(b));
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++files;
  CHECK(files == 1);
}
