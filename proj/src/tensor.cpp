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
#include "mumis/tensor.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mumis/util.hpp"

namespace mumis {

std::int64_t Tensor::shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("negative tensor dimension");
    n *= d;
  }
  return n;
}

Tensor::Tensor(Shape shape) : Tensor(std::move(shape), 0.0) {}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)),
      store_(std::make_shared<std::vector<double>>(
          static_cast<std::size_t>(shape_numel(shape_)), fill)) {}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)) {
  if (shape_numel(shape_) != static_cast<std::int64_t>(values.size()))
    throw std::invalid_argument("tensor shape does not match value count");
  store_ = std::make_shared<std::vector<double>>(std::move(values));
}

std::int64_t Tensor::numel() const { return store_ ? static_cast<std::int64_t>(store_->size()) : 0; }

double Tensor::item() const {
  if (numel() != 1) throw std::logic_error("item() requires a 1-element tensor");
  return (*store_)[0];
}

Tensor Tensor::clone() const {
  Tensor t;
  t.shape_ = shape_;
  t.store_ = std::make_shared<std::vector<double>>(*store_);
  return t;
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != numel()) throw std::invalid_argument("reshape changes element count");
  Tensor t;
  t.shape_ = std::move(shape);
  t.store_ = store_;
  return t;
}

Eigen::Map<Eigen::ArrayXd> Tensor::array() {
  return Eigen::Map<Eigen::ArrayXd>(data(), numel());
}

Eigen::Map<const Eigen::ArrayXd> Tensor::array() const {
  return Eigen::Map<const Eigen::ArrayXd>(data(), numel());
}

Eigen::Map<Tensor::MatrixRM> Tensor::matrix(int rows, int cols) {
  if (static_cast<std::int64_t>(rows) * cols != numel())
    throw std::invalid_argument("matrix view does not match element count");
  return Eigen::Map<MatrixRM>(data(), rows, cols);
}

Eigen::Map<const Tensor::MatrixRM> Tensor::matrix(int rows, int cols) const {
  if (static_cast<std::int64_t>(rows) * cols != numel())
    throw std::invalid_argument("matrix view does not match element count");
  return Eigen::Map<const MatrixRM>(data(), rows, cols);
}

Eigen::Map<Tensor::MatrixRM> Tensor::matrix() {
  const int rows = shape_.empty() ? 1 : shape_[0];
  const int cols = rows == 0 ? 0 : static_cast<int>(numel() / rows);
  return matrix(rows, cols);
}

Eigen::Map<const Tensor::MatrixRM> Tensor::matrix() const {
  const int rows = shape_.empty() ? 1 : shape_[0];
  const int cols = rows == 0 ? 0 : static_cast<int>(numel() / rows);
  return matrix(rows, cols);
}

bool Tensor::all_finite() const {
  const double* p = data();
  const std::int64_t n = numel();
  for (std::int64_t i = 0; i < n; ++i) {
    if (!std::isfinite(p[i])) return false;
  }
  return true;
}

std::uint64_t Tensor::checksum() const {
  return fnv1a64(data(), static_cast<std::size_t>(numel()) * sizeof(double));
}

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape() == b.shape(); }

}  // namespace mumis
