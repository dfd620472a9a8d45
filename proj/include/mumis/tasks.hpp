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
#include <string>
#include <vector>

#include "mumis/data.hpp"

namespace mumis::tasks {

enum class TaskMode { FullClass, SubClass, RandomSubset, Sequential };

std::string to_string(TaskMode m);
TaskMode task_mode_from_string(const std::string& s);

/// Declarative unlearning scenario. Everything downstream (splits, oracles,
/// reports) is a deterministic function of this plus the dataset.
struct TaskSpec {
  TaskMode mode = TaskMode::FullClass;
  std::vector<int> targets;        // class ids (full_class) / fine ids (sub_class)
  double fraction = 0.0;           // random_subset, in (0, 1]
  std::vector<TaskSpec> sequence;  // sequential requests
  std::uint64_t seed = 0;

  void validate(const data::Dataset& dataset) const;
  std::string hash(const std::string& dataset_id) const;
};

/// Immutable partition of the dataset for one unlearning request.
/// forget/remain index the train split, test indexes the held-out split, so
/// train and test universes are disjoint by construction.
struct SplitIndices {
  std::vector<int> forget;
  std::vector<int> remain;
  std::vector<int> test;
  std::vector<int> label_space;  // class ids the model is trained over
  data::Granularity granularity = data::Granularity::Fine;
  std::vector<int> forget_classes;  // fine ids being forgotten (empty for random subsets)
  /// Classes removed from the train universe by earlier sequential requests;
  /// empty outside sequential evaluation. forget and remain partition the
  /// train set minus these classes.
  std::vector<int> excluded_classes;
};

SplitIndices build_split(const TaskSpec& spec, const data::Dataset& dataset);

struct SequenceStep {
  TaskSpec request;             // single-request spec for this step
  std::vector<int> cumulative;  // classes forgotten by requests before `step`
};

SequenceStep advance_sequence(const TaskSpec& spec, int step);

void to_json(nlohmann::json& j, const TaskSpec& t);
void from_json(const nlohmann::json& j, TaskSpec& t);
void to_json(nlohmann::json& j, const SplitIndices& s);
void from_json(const nlohmann::json& j, SplitIndices& s);

/// Cache wrapper: splits are stored as JSON keyed by a content hash of
/// (task spec, dataset id, seed) under `cache_dir`.
SplitIndices build_split_cached(const TaskSpec& spec, const data::Dataset& dataset,
                                const std::string& cache_dir);

}  // namespace mumis::tasks
