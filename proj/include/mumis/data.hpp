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

#include <string>
#include <vector>

#include "mumis/tensor.hpp"

#include <nlohmann/json_fwd.hpp>

namespace mumis::data {

enum class Split { Train, Test };
enum class Granularity { Fine, Coarse };

/// Parameters of the built-in procedurally generated image sets. Classes are
/// oriented gratings; grouped sets vary frequency within an orientation so a
/// coarse class keeps support when one fine class is removed.
struct DatasetSpec {
  std::string name = "synth10";  // "synth10", "synth20" or "custom"
  std::uint64_t seed = 0;
  int classes = 10;
  int coarse = 0;  // 0 = flat label space; otherwise classes % coarse == 0
  int per_class_train = 150;
  int per_class_test = 50;
  int image_size = 16;
  double noise = 2.2;

  static DatasetSpec builtin(const std::string& name, std::uint64_t seed = 0);
  void validate() const;
  std::string id() const;  // content id over all generation knobs
};

struct Dataset {
  DatasetSpec spec;
  std::string id;
  int channels = 1;
  int height = 0;
  int width = 0;
  int num_fine = 0;
  int num_coarse = 0;                // == num_fine for flat label spaces
  std::vector<int> superclass_map;   // fine -> coarse
  Tensor train_x;                    // [N, 1, H, W]
  Tensor test_x;
  std::vector<int> train_labels;     // fine labels
  std::vector<int> test_labels;

  int train_size() const { return static_cast<int>(train_labels.size()); }
  int test_size() const { return static_cast<int>(test_labels.size()); }
  int num_classes(Granularity g) const {
    return g == Granularity::Fine ? num_fine : num_coarse;
  }
  int label_of(Split s, int index, Granularity g) const;
  const std::vector<int>& labels(Split s) const {
    return s == Split::Train ? train_labels : test_labels;
  }

  /// Stack the given sample indices into a batch tensor.
  Tensor batch(Split s, const std::vector<int>& indices) const;
  std::vector<int> batch_labels(Split s, const std::vector<int>& indices, Granularity g) const;

  /// All train indices whose fine label is in `fine_classes`.
  std::vector<int> train_indices_of(const std::vector<int>& fine_classes) const;
  std::vector<int> test_indices_of(const std::vector<int>& fine_classes) const;
  std::vector<int> all_train_indices() const;
  std::vector<int> all_test_indices() const;
};

Dataset make_dataset(const DatasetSpec& spec);

void to_json(nlohmann::json& j, const DatasetSpec& s);
void from_json(const nlohmann::json& j, DatasetSpec& s);

}  // namespace mumis::data
