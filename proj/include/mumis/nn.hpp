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

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "mumis/autograd.hpp"
#include "mumis/tensor.hpp"

namespace mumis::nn {

/// Architecture description, serialized into checkpoint metadata.
struct ArchConfig {
  std::string tag = "smallconv";  // "smallconv" or "mlp"
  // Convolutional input geometry (smallconv).
  int in_channels = 1;
  int height = 16;
  int width = 16;
  std::vector<int> channels = {8, 16, 32};  // one conv block per entry
  // Flat input dimension (mlp). hidden may be empty, giving a linear model.
  int in_dim = 0;
  std::vector<int> hidden;
  int num_classes = 10;
  std::string activation = "tanh";  // "tanh", "relu" or "silu"

  int input_numel() const;
  Tensor::Shape input_shape(int batch) const;
};

/// A classifier with named parameters and named normalization buffers.
/// forward() builds an autograd graph; with train_mode the normalization
/// layers use batch statistics and update their running estimates, otherwise
/// the frozen running statistics are used and samples stay independent.
class Model {
 public:
  Model(ArchConfig cfg, std::uint64_t init_seed);

  ag::Var forward(const ag::Var& x, bool train_mode);

  /// Logits for a raw batch without keeping the graph.
  Tensor forward_values(const Tensor& x);

  /// Row-wise softmax probabilities for a raw batch.
  Tensor predict_probs(const Tensor& x);

  /// Argmax class per sample.
  std::vector<int> predict(const Tensor& x);

  const ArchConfig& arch() const { return cfg_; }
  int num_classes() const { return cfg_.num_classes; }

  std::vector<std::pair<std::string, ag::Var>>& params() { return params_; }
  const std::vector<std::pair<std::string, ag::Var>>& params() const { return params_; }
  std::vector<std::pair<std::string, Tensor>>& buffers() { return buffers_; }
  const std::vector<std::pair<std::string, Tensor>>& buffers() const { return buffers_; }

  ag::Var param(const std::string& name) const;
  void set_param(const std::string& name, Tensor value);
  void set_buffer(const std::string& name, Tensor value);

  std::int64_t param_count() const;
  std::uint64_t params_checksum() const;
  std::uint64_t buffers_checksum() const;

  Model clone() const;

 private:
  ag::Var activation(const ag::Var& x) const;
  ag::Var conv_block(const ag::Var& x, int block, int n, int in_c, int& h, int& w,
                     bool train_mode);
  ag::Var batchnorm(const ag::Var& x, int block, int n, int c, int s, bool train_mode);
  ag::IndexTable im2col_table(int n, int c, int h, int w) const;
  ag::IndexTable nhwc_to_nchw_table(int n, int c, int h, int w) const;

  ArchConfig cfg_;
  std::vector<std::pair<std::string, ag::Var>> params_;
  std::vector<std::pair<std::string, Tensor>> buffers_;
  // gather index tables keyed by (kind, channels, packed n/h/w)
  mutable std::map<std::tuple<int, int, long long>, ag::IndexTable> table_cache_;
};

/// Parameter/buffer archive (the checkpoint tensor file). Byte-stable:
/// load followed by save reproduces the file exactly.
void save_tensors(const std::string& path, const Model& model);
void load_tensors(const std::string& path, Model& model);

}  // namespace mumis::nn
