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
#include "mumis/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>
#include <set>

#include "mumis/util.hpp"

namespace mumis::tasks {

using nlohmann::json;

std::string to_string(TaskMode m) {
  switch (m) {
    case TaskMode::FullClass: return "full_class";
    case TaskMode::SubClass: return "sub_class";
    case TaskMode::RandomSubset: return "random_subset";
    case TaskMode::Sequential: return "sequential";
  }
  return "unknown";
}

TaskMode task_mode_from_string(const std::string& s) {
  if (s == "full_class") return TaskMode::FullClass;
  if (s == "sub_class") return TaskMode::SubClass;
  if (s == "random_subset") return TaskMode::RandomSubset;
  if (s == "sequential") return TaskMode::Sequential;
  throw ConfigError("unknown task mode: " + s);
}

void TaskSpec::validate(const data::Dataset& dataset) const {
  switch (mode) {
    case TaskMode::FullClass:
    case TaskMode::SubClass: {
      if (targets.empty()) throw ConfigError("task targets must be non-empty");
      for (int c : targets) {
        if (c < 0 || c >= dataset.num_fine)
          throw ConfigError("unknown class id " + std::to_string(c) + " in task targets");
      }
      if (mode == TaskMode::SubClass && dataset.num_coarse == dataset.num_fine)
        throw ConfigError("sub_class task requires a dataset with a superclass map");
      break;
    }
    case TaskMode::RandomSubset: {
      if (!(fraction > 0.0 && fraction <= 1.0))
        throw ConfigError("random_subset fraction must be in (0, 1]");
      break;
    }
    case TaskMode::Sequential: {
      if (sequence.size() < 2)
        throw ConfigError("sequential task needs at least 2 requests");
      for (const TaskSpec& r : sequence) {
        if (r.mode != TaskMode::FullClass && r.mode != TaskMode::SubClass)
          throw ConfigError("sequential requests must be full_class or sub_class");
        r.validate(dataset);
      }
      break;
    }
  }
}

std::string TaskSpec::hash(const std::string& dataset_id) const {
  json j;
  to_json(j, *this);
  j["dataset_id"] = dataset_id;
  return hash_hex(fnv1a64(j.dump()));
}

SplitIndices build_split(const TaskSpec& spec, const data::Dataset& dataset) {
  spec.validate(dataset);
  if (spec.mode == TaskMode::Sequential)
    throw ConfigError("build_split takes a single request; use advance_sequence first");

  SplitIndices out;
  out.granularity =
      spec.mode == TaskMode::SubClass ? data::Granularity::Coarse : data::Granularity::Fine;
  const int num_classes = dataset.num_classes(out.granularity);
  out.label_space.resize(static_cast<std::size_t>(num_classes));
  std::iota(out.label_space.begin(), out.label_space.end(), 0);

  const int n_train = dataset.train_size();
  std::vector<char> in_forget(static_cast<std::size_t>(n_train), 0);

  if (spec.mode == TaskMode::RandomSubset) {
    const auto want = static_cast<std::size_t>(
        std::ceil(spec.fraction * static_cast<double>(n_train)));
    std::vector<int> all = dataset.all_train_indices();
    Rng rng(derive_seed(spec.seed, "task.random_subset"));
    rng.shuffle(all);
    for (std::size_t i = 0; i < want && i < all.size(); ++i)
      in_forget[static_cast<std::size_t>(all[i])] = 1;
  } else {
    const std::set<int> targets(spec.targets.begin(), spec.targets.end());
    for (int i = 0; i < n_train; ++i) {
      if (targets.count(dataset.train_labels[static_cast<std::size_t>(i)]) != 0)
        in_forget[static_cast<std::size_t>(i)] = 1;
    }
    out.forget_classes.assign(targets.begin(), targets.end());
  }

  for (int i = 0; i < n_train; ++i) {
    (in_forget[static_cast<std::size_t>(i)] ? out.forget : out.remain).push_back(i);
  }
  out.test = dataset.all_test_indices();

  if (out.forget.empty()) throw ConfigError("task selects an empty forget set");

  if (spec.mode == TaskMode::SubClass) {
    // The coarse label of each forgotten fine class must keep support.
    for (int fine : spec.targets) {
      const int coarse = dataset.superclass_map[static_cast<std::size_t>(fine)];
      bool supported = false;
      for (int i : out.remain) {
        if (dataset.label_of(data::Split::Train, i, data::Granularity::Coarse) == coarse) {
          supported = true;
          break;
        }
      }
      if (!supported)
        throw ConfigError("sub_class task would leave coarse class " +
                          std::to_string(coarse) + " without remaining support");
    }
  }
  return out;
}

SequenceStep advance_sequence(const TaskSpec& spec, int step) {
  if (spec.mode != TaskMode::Sequential)
    throw ConfigError("advance_sequence requires a sequential task");
  if (step < 0 || static_cast<std::size_t>(step) >= spec.sequence.size())
    throw ConfigError("sequence step " + std::to_string(step) + " out of range (have " +
                      std::to_string(spec.sequence.size()) + " requests)");
  SequenceStep out;
  out.request = spec.sequence[static_cast<std::size_t>(step)];
  if (out.request.seed == 0) out.request.seed = derive_seed(spec.seed, "seq" + std::to_string(step));
  std::set<int> cumulative;
  for (int i = 0; i < step; ++i) {
    for (int c : spec.sequence[static_cast<std::size_t>(i)].targets) cumulative.insert(c);
  }
  out.cumulative.assign(cumulative.begin(), cumulative.end());
  return out;
}

void to_json(json& j, const TaskSpec& t) {
  j = json{{"mode", to_string(t.mode)}, {"seed", t.seed}};
  if (t.mode == TaskMode::RandomSubset) {
    j["fraction"] = t.fraction;
  } else if (t.mode == TaskMode::Sequential) {
    json seq = json::array();
    for (const auto& r : t.sequence) {
      json rj;
      to_json(rj, r);
      seq.push_back(rj);
    }
    j["sequence"] = seq;
  } else {
    j["targets"] = t.targets;
  }
}

void from_json(const json& j, TaskSpec& t) {
  t = TaskSpec{};
  t.mode = task_mode_from_string(j.at("mode").get<std::string>());
  t.seed = j.value("seed", 0ULL);
  t.fraction = j.value("fraction", 0.0);
  if (j.contains("targets")) t.targets = j.at("targets").get<std::vector<int>>();
  if (j.contains("sequence")) {
    for (const auto& rj : j.at("sequence")) {
      TaskSpec r;
      from_json(rj, r);
      t.sequence.push_back(std::move(r));
    }
  }
}

void to_json(json& j, const SplitIndices& s) {
  j = json{{"forget", s.forget},
           {"remain", s.remain},
           {"test", s.test},
           {"label_space", s.label_space},
           {"granularity", s.granularity == data::Granularity::Coarse ? "coarse" : "fine"},
           {"forget_classes", s.forget_classes},
           {"excluded_classes", s.excluded_classes}};
}

void from_json(const json& j, SplitIndices& s) {
  s.forget = j.at("forget").get<std::vector<int>>();
  s.remain = j.at("remain").get<std::vector<int>>();
  s.test = j.at("test").get<std::vector<int>>();
  s.label_space = j.at("label_space").get<std::vector<int>>();
  s.granularity = j.at("granularity").get<std::string>() == "coarse"
                      ? data::Granularity::Coarse
                      : data::Granularity::Fine;
  s.forget_classes = j.value("forget_classes", std::vector<int>{});
  s.excluded_classes = j.value("excluded_classes", std::vector<int>{});
}

SplitIndices build_split_cached(const TaskSpec& spec, const data::Dataset& dataset,
                                const std::string& cache_dir) {
  ensure_dir(cache_dir);
  const std::string path = cache_dir + "/split-" + spec.hash(dataset.id) + ".json";
  if (file_exists(path)) {
    SplitIndices s;
    from_json(json::parse(read_text_file(path)), s);
    return s;
  }
  SplitIndices s = build_split(spec, dataset);
  json j;
  to_json(j, s);
  write_text_file(path, j.dump(2));
  return s;
}

}  // namespace mumis::tasks
