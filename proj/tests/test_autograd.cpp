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

#include <cmath>

#include "mumis/autograd.hpp"
#include "mumis/nn.hpp"
#include "mumis/util.hpp"
#include "oracles.hpp"

using namespace mumis;
using mumis::ag::Var;

namespace {

Tensor random_tensor(Tensor::Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.numel(); ++i) t.at(i) = rng.normal() * scale;
  return t;
}

}  // namespace

TEST_CASE("elementwise and reduction values") {
  auto a = ag::constant(Tensor({2, 2}, {1.0, 2.0, 3.0, 4.0}));
  auto b = ag::constant(Tensor({2, 2}, {0.5, -1.0, 2.0, 0.0}));
  CHECK(ag::add(a, b)->value.at(1) == doctest::Approx(1.0));
  CHECK(ag::mul(a, b)->value.at(2) == doctest::Approx(6.0));
  CHECK(ag::sum_all(a)->value.item() == doctest::Approx(10.0));
  CHECK(ag::mean_all(a)->value.item() == doctest::Approx(2.5));
  CHECK(ag::row_sum(a)->value.at(0) == doctest::Approx(3.0));
  CHECK(ag::row_sum(a)->value.at(1) == doctest::Approx(7.0));
}

TEST_CASE("matmul against Eigen") {
  Rng rng(7);
  Tensor at = random_tensor({3, 4}, rng);
  Tensor bt = random_tensor({4, 5}, rng);
  auto out = ag::matmul(ag::constant(at), ag::constant(bt));
  auto expect = (at.matrix(3, 4) * bt.matrix(4, 5)).eval();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 5; ++j) CHECK(out->value.matrix(3, 5)(i, j) == doctest::Approx(expect(i, j)));
}

TEST_CASE("first-order gradients match finite differences") {
  Rng rng(11);
  // scalar = sum(tanh(A x + b)^2 * w) style mixed graph
  Tensor xt = random_tensor({4, 3}, rng);
  Tensor At = random_tensor({3, 5}, rng);
  Tensor bt = random_tensor({5}, rng, 0.2);

  auto eval = [&](const Tensor& x_in, const Tensor& a_in, const Tensor& b_in) {
    auto x = ag::leaf(x_in, true);
    auto A = ag::leaf(a_in, true);
    auto b = ag::leaf(b_in, true);
    auto h = ag::matmul(x, A);
    h = ag::add(h, ag::reshape(ag::bcast_channel(b, 4, 1), {4, 5}));
    h = ag::tanh_op(h);
    auto s = ag::sum_all(ag::square(h));
    return std::make_tuple(s, x, A, b);
  };

  auto [root, x, A, b] = eval(xt, At, bt);
  auto grads = ag::backward(root, {x, A, b});

  auto fx = [&](const Tensor& probe) {
    auto [r, xx, aa, bb] = eval(probe, At, bt);
    return r->value.item();
  };
  auto fa = [&](const Tensor& probe) {
    auto [r, xx, aa, bb] = eval(xt, probe, bt);
    return r->value.item();
  };
  auto fb = [&](const Tensor& probe) {
    auto [r, xx, aa, bb] = eval(xt, At, probe);
    return r->value.item();
  };

  CHECK(test::max_rel_err(grads[0]->value, test::central_diff(fx, xt)) < 1e-6);
  CHECK(test::max_rel_err(grads[1]->value, test::central_diff(fa, At)) < 1e-6);
  CHECK(test::max_rel_err(grads[2]->value, test::central_diff(fb, bt)) < 1e-6);
}

TEST_CASE("gather and scatter_add round trip gradients") {
  Rng rng(13);
  Tensor xt = random_tensor({6}, rng);
  auto table = std::make_shared<std::vector<std::int64_t>>(
      std::vector<std::int64_t>{5, -1, 0, 0, 3, 2, 1, -1});

  auto eval = [&](const Tensor& x_in) {
    auto x = ag::leaf(x_in, true);
    auto g = ag::gather(x, table, {8});
    auto s = ag::sum_all(ag::square(g));
    return std::make_pair(s, x);
  };
  auto [root, x] = eval(xt);
  auto grads = ag::backward(root, {x});
  auto f = [&](const Tensor& probe) { return eval(probe).first->value.item(); };
  CHECK(test::max_rel_err(grads[0]->value, test::central_diff(f, xt)) < 1e-6);
}

TEST_CASE("avgpool2 gradients match finite differences") {
  Rng rng(17);
  Tensor xt = random_tensor({2, 3, 4, 4}, rng);
  auto eval = [&](const Tensor& x_in) {
    auto x = ag::leaf(x_in, true);
    auto p = ag::avgpool2(x, 2, 3, 4, 4);
    auto s = ag::sum_all(ag::mul(p, p));
    return std::make_pair(s, x);
  };
  auto [root, x] = eval(xt);
  auto grads = ag::backward(root, {x});
  auto f = [&](const Tensor& probe) { return eval(probe).first->value.item(); };
  CHECK(test::max_rel_err(grads[0]->value, test::central_diff(f, xt)) < 1e-6);
}

TEST_CASE("second-order: gradient of an input-gradient norm") {
  // S(w) = || d/dx sum(tanh(w x)) ||^2 for scalar x and w has a closed form:
  // u = w * (1 - tanh(wx)^2), S = u^2. Check dS/dw against finite differences.
  auto eval = [&](double wv, double xv) {
    auto w = ag::leaf(Tensor::scalar(wv), true);
    auto x = ag::leaf(Tensor::scalar(xv), true);
    auto y = ag::sum_all(ag::tanh_op(ag::mul(w, x)));
    auto u = ag::backward(y, {x})[0];
    auto s = ag::sum_all(ag::square(u));
    return std::make_tuple(s, w, x);
  };

  const double wv = 0.83, xv = 0.41;
  auto [s, w, x] = eval(wv, xv);
  auto dw = ag::backward(s, {w})[0];

  auto f = [&](const Tensor& probe) {
    auto [ss, ww, xx] = eval(probe.item(), xv);
    return ss->value.item();
  };
  const Tensor fd = test::central_diff(f, Tensor::scalar(wv), 1e-6);
  CHECK(dw->value.item() == doctest::Approx(fd.item()).epsilon(1e-6));

  // closed form
  const double t = std::tanh(wv * xv);
  const double u = wv * (1.0 - t * t);
  const double du_dw = (1.0 - t * t) - wv * 2.0 * t * (1.0 - t * t) * xv;
  CHECK(dw->value.item() == doctest::Approx(2.0 * u * du_dw).epsilon(1e-9));
}

TEST_CASE("second-order through the mlp forward") {
  Rng rng(23);
  nn::ArchConfig cfg;
  cfg.tag = "mlp";
  cfg.in_dim = 4;
  cfg.hidden = {5};
  cfg.num_classes = 3;
  nn::Model model(cfg, 99);

  Tensor xt = random_tensor({2, 4}, rng);
  auto weight = model.param("fc0.weight");

  auto eval = [&](const Tensor& w_in) -> double {
    weight->value = w_in;
    auto x = ag::leaf(xt, true);
    auto logits = model.forward(x, false);
    // select logit 1 of every sample
    auto table = std::make_shared<std::vector<std::int64_t>>(std::vector<std::int64_t>{1, 4});
    auto sel = ag::gather(logits, table, {2});
    auto u = ag::backward(ag::sum_all(sel), {x})[0];
    return ag::sum_all(ag::square(u))->value.item();
  };

  const Tensor w0 = weight->value.clone();
  // analytic gradient
  weight->value = w0;
  auto x = ag::leaf(xt, true);
  auto logits = model.forward(x, false);
  auto table = std::make_shared<std::vector<std::int64_t>>(std::vector<std::int64_t>{1, 4});
  auto sel = ag::gather(logits, table, {2});
  auto u = ag::backward(ag::sum_all(sel), {x})[0];
  auto s = ag::sum_all(ag::square(u));
  auto grad = ag::backward(s, {weight})[0];

  const Tensor fd = test::central_diff(eval, w0, 1e-5);
  weight->value = w0;
  CHECK(test::max_rel_err(grad->value, fd) < 1e-5);
}

TEST_CASE("backward rejects non-scalar roots") {
  auto a = ag::leaf(Tensor({2}, {1.0, 2.0}), true);
  CHECK_THROWS(ag::backward(a, {a}));
}

TEST_CASE("unreached parameters get zero gradients") {
  auto a = ag::leaf(Tensor::scalar(2.0), true);
  auto b = ag::leaf(Tensor::scalar(3.0), true);
  auto s = ag::sum_all(ag::square(a));
  auto grads = ag::backward(s, {a, b});
  CHECK(grads[0]->value.item() == doctest::Approx(4.0));
  CHECK(grads[1]->value.item() == doctest::Approx(0.0));
}
