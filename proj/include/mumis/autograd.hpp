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

#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "mumis/tensor.hpp"

namespace mumis::ag {

/// Reverse-mode autodiff over a dynamic graph. Backward passes are themselves
/// expressed in terms of graph operations, so the gradient of a scalar built
/// from gradients (double backpropagation) is just a second backward() call.
///
/// Tensor layout conventions used by the ops:
///   [N, D]       batched row vectors; row = sample
///   [N, C, S]    batched per-channel data; S = collapsed spatial extent
/// Everything is stored flat and row-major; ops carry the needed dims.

struct Node;
using Var = std::shared_ptr<Node>;

/// Maps the upstream gradient to per-input gradients, as new graph nodes.
/// A null entry means "no gradient flows to this input".
using BackwardFn = std::function<std::vector<Var>(const Var& self, const Var& grad)>;

struct Node {
  Tensor value;
  std::vector<Var> inputs;
  BackwardFn backward;
  bool requires_grad = false;
  const char* op = "leaf";
};

Var constant(Tensor value);
Var leaf(Tensor value, bool requires_grad);

/// Index table shared by gather/scatter ops. Entry -1 reads/writes nothing
/// (zero padding).
using IndexTable = std::shared_ptr<const std::vector<std::int64_t>>;

// Elementwise (shapes must match exactly).
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var neg(const Var& a);
Var scale(const Var& a, double c);
Var add_const(const Var& a, double c);
Var square(const Var& a);
Var sqrt_op(const Var& a);
Var reciprocal(const Var& a);
Var exp_op(const Var& a);  // input clamped at 700 to stay finite
Var log_op(const Var& a);
Var tanh_op(const Var& a);
/// (x > 0 ? g : 0). Gradient flows to g only; the mask has zero derivative.
Var posmask_mul(const Var& x, const Var& g);

// Linear algebra / shape.
Var matmul(const Var& a, const Var& b);  // [M,K]x[K,N]
Var transpose2d(const Var& a);           // [M,N] -> [N,M]
Var reshape(const Var& a, Tensor::Shape shape);

// Reductions and broadcasts.
Var sum_all(const Var& a);                          // -> [1]
Var mean_all(const Var& a);                         // -> [1]
Var row_sum(const Var& a);                          // [N,D] -> [N]
Var channel_sum(const Var& a, int n, int c, int s); // [N,C,S] -> [C]
Var channel_mean(const Var& a, int n, int c, int s);
Var bcast_channel(const Var& v, int n, int s);      // [C] -> [N,C,S] (flat)
Var bcast_rows(const Var& v, int cols);             // [N] -> [N,cols]
Var bcast_fill(const Var& s, Tensor::Shape shape);  // [1] -> shape

// Gather/scatter (mutual adjoints; both linear).
Var gather(const Var& a, IndexTable table, Tensor::Shape out_shape);
Var scatter_add(const Var& a, IndexTable table, Tensor::Shape out_shape);

// 2x2 average pooling on [N,C,H,W] (H, W even) and its adjoint.
Var avgpool2(const Var& a, int n, int c, int h, int w);
Var up2quarter(const Var& a, int n, int c, int h, int w);

/// Gradients of a scalar root with respect to `wrt`. Entries that the root
/// does not reach come back as zero tensors. The returned nodes stay part of
/// the graph, so a further backward() through them is valid (create-graph
/// semantics are always on).
std::vector<Var> backward(const Var& root, const std::vector<Var>& wrt);

/// Number of nodes reachable from v (diagnostics).
std::size_t graph_size(const Var& v);

}  // namespace mumis::ag
