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

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <vector>

namespace mumis {

/// Dense double-precision tensor with row-major flat storage and shared
/// ownership of the buffer. Copies are shallow; use clone() for a deep copy.
/// Every operation in the autograd layer allocates fresh outputs, so aliasing
/// is only a concern for code that mutates buffers directly (the optimizers).
class Tensor {
 public:
  using Shape = std::vector<int>;

  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, double fill);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape), 0.0); }
  static Tensor full(Shape shape, double v) { return Tensor(std::move(shape), v); }
  static Tensor scalar(double v) { return Tensor({1}, v); }

  const Shape& shape() const { return shape_; }
  int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
  int ndim() const { return static_cast<int>(shape_.size()); }
  std::int64_t numel() const;
  bool defined() const { return store_ != nullptr; }

  double* data() { return store_->data(); }
  const double* data() const { return store_->data(); }
  double& at(std::int64_t i) { return (*store_)[static_cast<std::size_t>(i)]; }
  double at(std::int64_t i) const { return (*store_)[static_cast<std::size_t>(i)]; }

  /// Value of a 1-element tensor.
  double item() const;

  Tensor clone() const;
  Tensor reshaped(Shape shape) const;  // shares storage

  Eigen::Map<Eigen::ArrayXd> array();
  Eigen::Map<const Eigen::ArrayXd> array() const;

  using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<MatrixRM> matrix(int rows, int cols);
  Eigen::Map<const MatrixRM> matrix(int rows, int cols) const;
  /// 2-D view using the first dim as rows and the rest collapsed as columns.
  Eigen::Map<MatrixRM> matrix();
  Eigen::Map<const MatrixRM> matrix() const;

  bool all_finite() const;

  /// FNV-1a over the raw bytes; used for checkpoint checksums.
  std::uint64_t checksum() const;

  static std::int64_t shape_numel(const Shape& shape);

 private:
  Shape shape_;
  std::shared_ptr<std::vector<double>> store_;
};

bool same_shape(const Tensor& a, const Tensor& b);

}  // namespace mumis
