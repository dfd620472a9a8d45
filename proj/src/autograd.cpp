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
#include "mumis/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace mumis::ag {

namespace {

Var make_node(Tensor value, std::vector<Var> inputs, BackwardFn backward, const char* op) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = false;
  for (const auto& in : inputs) {
    if (in && in->requires_grad) n->requires_grad = true;
  }
  n->inputs = std::move(inputs);
  if (n->requires_grad) n->backward = std::move(backward);
  n->op = op;
  return n;
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (!same_shape(a->value, b->value))
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

}  // namespace

Var constant(Tensor value) { return leaf(std::move(value), false); }

Var leaf(Tensor value, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  return n;
}

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  Tensor out(a->value.shape());
  out.array() = a->value.array() + b->value.array();
  return make_node(std::move(out), {a, b},
                   [](const Var&, const Var& g) -> std::vector<Var> { return {g, g}; }, "add");
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  Tensor out(a->value.shape());
  out.array() = a->value.array() - b->value.array();
  return make_node(std::move(out), {a, b},
                   [](const Var&, const Var& g) -> std::vector<Var> { return {g, neg(g)}; },
                   "sub");
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a, b, "mul");
  Tensor out(a->value.shape());
  out.array() = a->value.array() * b->value.array();
  return make_node(std::move(out), {a, b},
                   [](const Var& self, const Var& g) -> std::vector<Var> {
                     return {mul(g, self->inputs[1]), mul(g, self->inputs[0])};
                   },
                   "mul");
}

Var neg(const Var& a) {
  Tensor out(a->value.shape());
  out.array() = -a->value.array();
  return make_node(std::move(out), {a},
                   [](const Var&, const Var& g) -> std::vector<Var> { return {neg(g)}; }, "neg");
}

Var scale(const Var& a, double c) {
  Tensor out(a->value.shape());
  out.array() = a->value.array() * c;
  return make_node(std::move(out), {a},
                   [c](const Var&, const Var& g) -> std::vector<Var> { return {scale(g, c)}; },
                   "scale");
}

Var add_const(const Var& a, double c) {
  Tensor out(a->value.shape());
  out.array() = a->value.array() + c;
  return make_node(std::move(out), {a},
                   [](const Var&, const Var& g) -> std::vector<Var> { return {g}; }, "add_const");
}

Var square(const Var& a) {
  Tensor out(a->value.shape());
  out.array() = a->value.array().square();
  return make_node(std::move(out), {a},
                   [](const Var& self, const Var& g) -> std::vector<Var> {
                     return {scale(mul(g, self->inputs[0]), 2.0)};
                   },
                   "square");
}

Var sqrt_op(const Var& a) {
  Tensor out(a->value.shape());
  out.array() = a->value.array().sqrt();
  return make_node(std::move(out), {a},
                   [](const Var& self, const Var& g) -> std::vector<Var> {
                     return {scale(mul(g, reciprocal(self)), 0.5)};
                   },
                   "sqrt");
}

Var reciprocal(const Var& a) {
  Tensor out(a->value.shape());
  out.array() = a->value.array().inverse();
  return make_node(std::move(out), {a},
                   [](const Var& self, const Var& g) -> std::vector<Var> {
                     return {neg(mul(g, square(self)))};
                   },
                   "reciprocal");
}

Var exp_op(const Var& a) {
  Tensor out(a->value.shape());
  out.array() = a->value.array().min(700.0).exp();
  return make_node(std::move(out), {a},
                   [](const Var& self, const Var& g) -> std::vector<Var> {
                     return {mul(g, self)};
                   },
                   "exp");
}

Var log_op(const Var& a) {
  Tensor out(a->value.shape());
  out.array() = a->value.array().log();
  return make_node(std::move(out), {a},
                   [](const Var& self, const Var& g) -> std::vector<Var> {
                     return {mul(g, reciprocal(self->inputs[0]))};
                   },
                   "log");
}

Var tanh_op(const Var& a) {
  Tensor out(a->value.shape());
  out.array() = a->value.array().tanh();
  return make_node(std::move(out), {a},
                   [](const Var& self, const Var& g) -> std::vector<Var> {
                     // g * (1 - tanh(x)^2), with tanh(x) re-used from self
                     return {mul(g, add_const(neg(square(self)), 1.0))};
                   },
                   "tanh");
}

Var posmask_mul(const Var& x, const Var& g) {
  check_same_shape(x, g, "posmask_mul");
  Tensor out(x->value.shape());
  out.array() = (x->value.array() > 0.0).select(g->value.array(), 0.0);
  return make_node(std::move(out), {x, g},
                   [](const Var& self, const Var& grad) -> std::vector<Var> {
                     return {nullptr, posmask_mul(self->inputs[0], grad)};
                   },
                   "posmask_mul");
}

Var matmul(const Var& a, const Var& b) {
  if (a->value.ndim() != 2 || b->value.ndim() != 2 || a->value.dim(1) != b->value.dim(0))
    throw std::invalid_argument("matmul: incompatible shapes");
  const int m = a->value.dim(0), k = a->value.dim(1), n = b->value.dim(1);
  Tensor out({m, n});
  out.matrix(m, n).noalias() = a->value.matrix(m, k) * b->value.matrix(k, n);
  return make_node(std::move(out), {a, b},
                   [](const Var& self, const Var& g) -> std::vector<Var> {
                     const Var& A = self->inputs[0];
                     const Var& B = self->inputs[1];
                     return {matmul(g, transpose2d(B)), matmul(transpose2d(A), g)};
                   },
                   "matmul");
}

Var transpose2d(const Var& a) {
  if (a->value.ndim() != 2) throw std::invalid_argument("transpose2d: need 2-D tensor");
  const int m = a->value.dim(0), n = a->value.dim(1);
  Tensor out({n, m});
  out.matrix(n, m).noalias() = a->value.matrix(m, n).transpose();
  return make_node(std::move(out), {a},
                   [](const Var&, const Var& g) -> std::vector<Var> { return {transpose2d(g)}; },
                   "transpose2d");
}

Var reshape(const Var& a, Tensor::Shape shape) {
  Tensor out = a->value.reshaped(std::move(shape));
  Tensor::Shape in_shape = a->value.shape();
  return make_node(std::move(out), {a},
                   [in_shape](const Var&, const Var& g) -> std::vector<Var> {
                     return {reshape(g, in_shape)};
                   },
                   "reshape");
}

Var sum_all(const Var& a) {
  Tensor out = Tensor::scalar(a->value.array().sum());
  Tensor::Shape in_shape = a->value.shape();
  return make_node(std::move(out), {a},
                   [in_shape](const Var&, const Var& g) -> std::vector<Var> {
                     return {bcast_fill(g, in_shape)};
                   },
                   "sum_all");
}

Var mean_all(const Var& a) {
  const auto n = a->value.numel();
  return scale(sum_all(a), n > 0 ? 1.0 / static_cast<double>(n) : 0.0);
}

Var row_sum(const Var& a) {
  if (a->value.ndim() < 2) throw std::invalid_argument("row_sum: need >=2-D tensor");
  const int n = a->value.dim(0);
  const int d = static_cast<int>(a->value.numel() / n);
  Tensor out({n});
  out.matrix(n, 1).noalias() = a->value.matrix(n, d).rowwise().sum();
  const int cols = d;
  return make_node(std::move(out), {a},
                   [cols, shape = a->value.shape()](const Var&, const Var& g) -> std::vector<Var> {
                     return {reshape(bcast_rows(g, cols), shape)};
                   },
                   "row_sum");
}

Var channel_sum(const Var& a, int n, int c, int s) {
  if (a->value.numel() != static_cast<std::int64_t>(n) * c * s)
    throw std::invalid_argument("channel_sum: dims do not match element count");
  Tensor out({c});
  double* o = out.data();
  const double* p = a->value.data();
  for (int ci = 0; ci < c; ++ci) o[ci] = 0.0;
  for (int ni = 0; ni < n; ++ni) {
    for (int ci = 0; ci < c; ++ci) {
      double acc = 0.0;
      const double* row = p + (static_cast<std::int64_t>(ni) * c + ci) * s;
      for (int si = 0; si < s; ++si) acc += row[si];
      o[ci] += acc;
    }
  }
  return make_node(std::move(out), {a},
                   [n, s, shape = a->value.shape()](const Var&, const Var& g) -> std::vector<Var> {
                     return {reshape(bcast_channel(g, n, s), shape)};
                   },
                   "channel_sum");
}

Var channel_mean(const Var& a, int n, int c, int s) {
  return scale(channel_sum(a, n, c, s), 1.0 / (static_cast<double>(n) * s));
}

Var bcast_channel(const Var& v, int n, int s) {
  const int c = static_cast<int>(v->value.numel());
  Tensor out({n, c, s});
  double* o = out.data();
  const double* p = v->value.data();
  for (int ni = 0; ni < n; ++ni) {
    for (int ci = 0; ci < c; ++ci) {
      double* row = o + (static_cast<std::int64_t>(ni) * c + ci) * s;
      std::fill(row, row + s, p[ci]);
    }
  }
  return make_node(std::move(out), {v},
                   [n, c, s](const Var&, const Var& g) -> std::vector<Var> {
                     return {channel_sum(g, n, c, s)};
                   },
                   "bcast_channel");
}

Var bcast_rows(const Var& v, int cols) {
  const int n = static_cast<int>(v->value.numel());
  Tensor out({n, cols});
  double* o = out.data();
  const double* p = v->value.data();
  for (int i = 0; i < n; ++i) std::fill(o + static_cast<std::int64_t>(i) * cols,
                                        o + static_cast<std::int64_t>(i + 1) * cols, p[i]);
  return make_node(std::move(out), {v},
                   [](const Var&, const Var& g) -> std::vector<Var> { return {row_sum(g)}; },
                   "bcast_rows");
}

Var bcast_fill(const Var& s, Tensor::Shape shape) {
  if (s->value.numel() != 1) throw std::invalid_argument("bcast_fill: need scalar");
  Tensor out(shape, s->value.item());
  return make_node(std::move(out), {s},
                   [](const Var&, const Var& g) -> std::vector<Var> { return {sum_all(g)}; },
                   "bcast_fill");
}

Var gather(const Var& a, IndexTable table, Tensor::Shape out_shape) {
  if (Tensor::shape_numel(out_shape) != static_cast<std::int64_t>(table->size()))
    throw std::invalid_argument("gather: table size does not match output shape");
  Tensor out(out_shape);
  double* o = out.data();
  const double* p = a->value.data();
  const auto& t = *table;
  for (std::size_t i = 0; i < t.size(); ++i) o[i] = t[i] >= 0 ? p[t[i]] : 0.0;
  return make_node(std::move(out), {a},
                   [table, in_shape = a->value.shape()](const Var&, const Var& g)
                       -> std::vector<Var> { return {scatter_add(g, table, in_shape)}; },
                   "gather");
}

Var scatter_add(const Var& a, IndexTable table, Tensor::Shape out_shape) {
  if (a->value.numel() != static_cast<std::int64_t>(table->size()))
    throw std::invalid_argument("scatter_add: table size does not match input");
  Tensor out(out_shape, 0.0);
  double* o = out.data();
  const double* p = a->value.data();
  const auto& t = *table;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] >= 0) o[t[i]] += p[i];
  }
  return make_node(std::move(out), {a},
                   [table, in_shape = a->value.shape()](const Var&, const Var& g)
                       -> std::vector<Var> { return {gather(g, table, in_shape)}; },
                   "scatter_add");
}

Var avgpool2(const Var& a, int n, int c, int h, int w) {
  if (h % 2 != 0 || w % 2 != 0) throw std::invalid_argument("avgpool2: odd spatial dims");
  const int oh = h / 2, ow = w / 2;
  Tensor out({n, c, oh, ow});
  double* o = out.data();
  const double* p = a->value.data();
  for (int ni = 0; ni < n; ++ni) {
    for (int ci = 0; ci < c; ++ci) {
      const double* plane = p + (static_cast<std::int64_t>(ni) * c + ci) * h * w;
      double* oplane = o + (static_cast<std::int64_t>(ni) * c + ci) * oh * ow;
      for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
          const double* q = plane + (2 * y) * w + 2 * x;
          oplane[y * ow + x] = 0.25 * (q[0] + q[1] + q[w] + q[w + 1]);
        }
      }
    }
  }
  return make_node(std::move(out), {a},
                   [n, c, oh, ow](const Var&, const Var& g) -> std::vector<Var> {
                     return {up2quarter(g, n, c, oh, ow)};
                   },
                   "avgpool2");
}

Var up2quarter(const Var& a, int n, int c, int h, int w) {
  const int oh = h * 2, ow = w * 2;
  Tensor out({n, c, oh, ow});
  double* o = out.data();
  const double* p = a->value.data();
  for (int ni = 0; ni < n; ++ni) {
    for (int ci = 0; ci < c; ++ci) {
      const double* plane = p + (static_cast<std::int64_t>(ni) * c + ci) * h * w;
      double* oplane = o + (static_cast<std::int64_t>(ni) * c + ci) * oh * ow;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double v = 0.25 * plane[y * w + x];
          double* q = oplane + (2 * y) * ow + 2 * x;
          q[0] = v;
          q[1] = v;
          q[ow] = v;
          q[ow + 1] = v;
        }
      }
    }
  }
  return make_node(std::move(out), {a},
                   [n, c, h, w](const Var&, const Var& g) -> std::vector<Var> {
                     return {avgpool2(g, n, c, h * 2, w * 2)};
                   },
                   "up2quarter");
}

namespace {

void topo_collect(const Var& root, std::vector<Node*>& order,
                  std::unordered_map<Node*, Var>& keep) {
  // Iterative postorder DFS; only nodes that require grad matter.
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  if (!root->requires_grad) return;
  keep.emplace(root.get(), root);
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next_child] = stack.back();
    bool descended = false;
    while (next_child < node->inputs.size()) {
      const Var& child = node->inputs[next_child++];
      if (child && child->requires_grad && visited.insert(child.get()).second) {
        keep.emplace(child.get(), child);
        stack.emplace_back(child.get(), 0);
        descended = true;
        break;
      }
    }
    if (!descended && next_child >= node->inputs.size()) {
      order.push_back(node);
      stack.pop_back();
    }
  }
}

}  // namespace

std::vector<Var> backward(const Var& root, const std::vector<Var>& wrt) {
  if (root->value.numel() != 1)
    throw std::invalid_argument("backward: root must be a 1-element tensor");

  std::vector<Node*> order;
  std::unordered_map<Node*, Var> keep;
  topo_collect(root, order, keep);

  std::unordered_map<Node*, Var> grads;
  grads[root.get()] = constant(Tensor::scalar(1.0));

  // order is postorder (children before parents); walk it backwards.
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    auto git = grads.find(node);
    if (git == grads.end() || !node->backward) continue;
    const Var self = keep.at(node);
    const std::vector<Var> input_grads = node->backward(self, git->second);
    if (input_grads.size() != node->inputs.size())
      throw std::logic_error("backward fn arity mismatch for op " + std::string(node->op));
    for (std::size_t i = 0; i < node->inputs.size(); ++i) {
      const Var& in = node->inputs[i];
      if (!in || !in->requires_grad || !input_grads[i]) continue;
      auto pos = grads.find(in.get());
      if (pos == grads.end()) {
        grads.emplace(in.get(), input_grads[i]);
      } else {
        pos->second = add(pos->second, input_grads[i]);
      }
    }
  }

  std::vector<Var> out;
  out.reserve(wrt.size());
  for (const auto& w : wrt) {
    auto it = grads.find(w.get());
    if (it != grads.end()) {
      out.push_back(it->second);
    } else {
      out.push_back(constant(Tensor::zeros(w->value.shape())));
    }
  }
  return out;
}

std::size_t graph_size(const Var& v) {
  std::unordered_set<const Node*> seen{v.get()};
  std::vector<const Node*> work{v.get()};
  while (!work.empty()) {
    const Node* n = work.back();
    work.pop_back();
    for (const auto& in : n->inputs) {
      if (in && seen.insert(in.get()).second) work.push_back(in.get());
    }
  }
  return seen.size();
}

}  // namespace mumis::ag
