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
#include "mumis/data.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>
#include <stdexcept>

#include "mumis/util.hpp"

namespace mumis::data {

using nlohmann::json;

DatasetSpec DatasetSpec::builtin(const std::string& name, std::uint64_t seed) {
  DatasetSpec s;
  s.name = name;
  s.seed = seed;
  if (name == "synth10") {
    s.classes = 10;
    s.coarse = 0;
    s.per_class_train = 150;
    s.per_class_test = 50;
    s.noise = 2.2;
  } else if (name == "synth20") {
    s.classes = 20;
    s.coarse = 5;
    s.per_class_train = 75;
    s.per_class_test = 25;
    s.noise = 2.2;
  } else {
    throw ConfigError("unknown built-in dataset: " + name);
  }
  return s;
}

void DatasetSpec::validate() const {
  if (classes < 2) throw ConfigError("dataset needs at least 2 classes");
  if (coarse != 0 && (coarse < 2 || classes % coarse != 0))
    throw ConfigError("coarse must divide classes");
  if (per_class_train < 1 || per_class_test < 1)
    throw ConfigError("per-class sample counts must be positive");
  if (image_size < 8 || image_size % 8 != 0)
    throw ConfigError("image_size must be a positive multiple of 8");
  if (noise < 0.0) throw ConfigError("noise must be nonnegative");
}

std::string DatasetSpec::id() const {
  json j;
  to_json(j, *this);
  return hash_hex(fnv1a64(j.dump()));
}

int Dataset::label_of(Split s, int index, Granularity g) const {
  const int fine = labels(s).at(static_cast<std::size_t>(index));
  return g == Granularity::Fine ? fine : superclass_map.at(static_cast<std::size_t>(fine));
}

Tensor Dataset::batch(Split s, const std::vector<int>& indices) const {
  const Tensor& src = s == Split::Train ? train_x : test_x;
  const std::int64_t sample = static_cast<std::int64_t>(channels) * height * width;
  Tensor out({static_cast<int>(indices.size()), channels, height, width});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const double* from = src.data() + indices[i] * sample;
    std::copy(from, from + sample, out.data() + static_cast<std::int64_t>(i) * sample);
  }
  return out;
}

std::vector<int> Dataset::batch_labels(Split s, const std::vector<int>& indices,
                                       Granularity g) const {
  std::vector<int> out(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) out[i] = label_of(s, indices[i], g);
  return out;
}

std::vector<int> Dataset::train_indices_of(const std::vector<int>& fine_classes) const {
  std::vector<int> out;
  for (int i = 0; i < train_size(); ++i) {
    for (int c : fine_classes) {
      if (train_labels[static_cast<std::size_t>(i)] == c) {
        out.push_back(i);
        break;
      }
    }
  }
  return out;
}

std::vector<int> Dataset::test_indices_of(const std::vector<int>& fine_classes) const {
  std::vector<int> out;
  for (int i = 0; i < test_size(); ++i) {
    for (int c : fine_classes) {
      if (test_labels[static_cast<std::size_t>(i)] == c) {
        out.push_back(i);
        break;
      }
    }
  }
  return out;
}

std::vector<int> Dataset::all_train_indices() const {
  std::vector<int> out(static_cast<std::size_t>(train_size()));
  std::iota(out.begin(), out.end(), 0);
  return out;
}

std::vector<int> Dataset::all_test_indices() const {
  std::vector<int> out(static_cast<std::size_t>(test_size()));
  std::iota(out.begin(), out.end(), 0);
  return out;
}

namespace {

// One grating sample. Orientation carries the coarse identity, frequency the
// fine variant; phase, slight orientation jitter, amplitude and pixel noise
// vary per sample so the class mapping is non-trivial.
void render_grating(double* out, int size, double theta, double freq, Rng& rng, double noise) {
  const double phase = rng.uniform(0.0, 2.0 * M_PI);
  const double jitter = rng.uniform(-0.06, 0.06);
  const double amp = rng.uniform(0.85, 1.15);
  const double ct = std::cos(theta + jitter), st = std::sin(theta + jitter);
  const double scale = 2.0 * M_PI * freq / size;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double u = x - size / 2.0 + 0.5;
      const double v = y - size / 2.0 + 0.5;
      const double wave = amp * std::sin(scale * (u * ct + v * st) + phase);
      out[y * size + x] = wave + noise * rng.normal();
    }
  }
}

void class_params(const DatasetSpec& spec, int fine, double& theta, double& freq) {
  if (spec.coarse == 0) {
    // alternate frequency bands so orientation neighbors stay far apart in
    // feature space
    theta = M_PI * fine / spec.classes;
    freq = fine % 2 == 0 ? 2.5 : 4.0;
  } else {
    const int variants = spec.classes / spec.coarse;
    const int group = fine / variants;
    const int variant = fine % variants;
    theta = M_PI * group / spec.coarse;
    freq = 2.0 + 1.3 * variant;
  }
}

}  // namespace

Dataset make_dataset(const DatasetSpec& spec_in) {
  DatasetSpec spec = spec_in;
  spec.validate();

  Dataset d;
  d.spec = spec;
  d.id = spec.id();
  d.channels = 1;
  d.height = spec.image_size;
  d.width = spec.image_size;
  d.num_fine = spec.classes;
  d.num_coarse = spec.coarse == 0 ? spec.classes : spec.coarse;
  d.superclass_map.resize(static_cast<std::size_t>(spec.classes));
  const int variants = spec.coarse == 0 ? 1 : spec.classes / spec.coarse;
  for (int c = 0; c < spec.classes; ++c)
    d.superclass_map[static_cast<std::size_t>(c)] = spec.coarse == 0 ? c : c / variants;

  const int n_train = spec.classes * spec.per_class_train;
  const int n_test = spec.classes * spec.per_class_test;
  const std::int64_t sample = static_cast<std::int64_t>(d.height) * d.width;
  d.train_x = Tensor({n_train, 1, d.height, d.width});
  d.test_x = Tensor({n_test, 1, d.height, d.width});
  d.train_labels.resize(static_cast<std::size_t>(n_train));
  d.test_labels.resize(static_cast<std::size_t>(n_test));

  Rng train_rng(derive_seed(spec.seed, "dataset.train." + spec.name));
  Rng test_rng(derive_seed(spec.seed, "dataset.test." + spec.name));

  int ti = 0, vi = 0;
  for (int c = 0; c < spec.classes; ++c) {
    double theta = 0.0, freq = 0.0;
    class_params(spec, c, theta, freq);
    for (int i = 0; i < spec.per_class_train; ++i, ++ti) {
      render_grating(d.train_x.data() + ti * sample, d.height, theta, freq, train_rng,
                     spec.noise);
      d.train_labels[static_cast<std::size_t>(ti)] = c;
    }
    for (int i = 0; i < spec.per_class_test; ++i, ++vi) {
      render_grating(d.test_x.data() + vi * sample, d.height, theta, freq, test_rng, spec.noise);
      d.test_labels[static_cast<std::size_t>(vi)] = c;
    }
  }
  return d;
}

void to_json(json& j, const DatasetSpec& s) {
  j = json{{"name", s.name},
           {"seed", s.seed},
           {"classes", s.classes},
           {"coarse", s.coarse},
           {"per_class_train", s.per_class_train},
           {"per_class_test", s.per_class_test},
           {"image_size", s.image_size},
           {"noise", s.noise}};
}

void from_json(const json& j, DatasetSpec& s) {
  s = DatasetSpec{};
  s.name = j.value("name", s.name);
  s.seed = j.value("seed", s.seed);
  if (s.name != "custom") {
    const double noise_override = j.value("noise", -1.0);
    s = DatasetSpec::builtin(s.name, s.seed);
    if (noise_override >= 0.0) s.noise = noise_override;
    return;
  }
  s.classes = j.value("classes", s.classes);
  s.coarse = j.value("coarse", s.coarse);
  s.per_class_train = j.value("per_class_train", s.per_class_train);
  s.per_class_test = j.value("per_class_test", s.per_class_test);
  s.image_size = j.value("image_size", s.image_size);
  s.noise = j.value("noise", s.noise);
}

}  // namespace mumis::data
