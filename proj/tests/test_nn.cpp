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

#include <filesystem>

#include "mumis/modelzoo.hpp"
#include "mumis/nn.hpp"
#include "mumis/util.hpp"
#include "oracles.hpp"

using namespace mumis;

namespace {

Tensor random_tensor(Tensor::Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.numel(); ++i) t.at(i) = rng.normal() * scale;
  return t;
}

nn::ArchConfig tiny_conv_arch() {
  nn::ArchConfig cfg;
  cfg.tag = "smallconv";
  cfg.in_channels = 1;
  cfg.height = 8;
  cfg.width = 8;
  cfg.channels = {2, 3, 4};
  cfg.num_classes = 3;
  return cfg;
}

}  // namespace

TEST_CASE("conv parameter gradients match finite differences (train mode off)") {
  Rng rng(3);
  nn::Model model(tiny_conv_arch(), 17);
  Tensor x = random_tensor({2, 1, 8, 8}, rng);
  const std::vector<int> labels = {1, 2};

  for (const std::string pname : {"conv0.weight", "bn1.gamma", "head.weight", "conv2.bias"}) {
    auto p = model.param(pname);
    const Tensor p0 = p->value.clone();

    auto loss_value = [&](const Tensor& w_in) {
      p->value = w_in;
      auto loss = zoo::ce_loss_graph(model, ag::constant(x), labels, false);
      const double v = loss->value.item();
      return v;
    };

    p->value = p0;
    auto loss = zoo::ce_loss_graph(model, ag::constant(x), labels, false);
    auto grad = ag::backward(loss, {p})[0];
    const Tensor fd = test::central_diff(loss_value, p0, 1e-6);
    p->value = p0;
    CAPTURE(pname);
    CHECK(test::max_rel_err(grad->value, fd) < 2e-5);
  }
}

TEST_CASE("conv parameter gradients match finite differences (train mode on)") {
  Rng rng(5);
  nn::ArchConfig arch = tiny_conv_arch();
  nn::Model model(arch, 29);
  Tensor x = random_tensor({4, 1, 8, 8}, rng);
  const std::vector<int> labels = {0, 1, 2, 0};

  auto p = model.param("conv1.weight");
  const Tensor p0 = p->value.clone();
  // batch statistics make the loss depend on all samples jointly; running
  // stats are restored around every probe so the value function is pure
  const auto buffers0 = model.buffers();

  auto loss_value = [&](const Tensor& w_in) {
    p->value = w_in;
    for (const auto& [name, t] : buffers0) model.set_buffer(name, t.clone());
    auto loss = zoo::ce_loss_graph(model, ag::constant(x), labels, true);
    return loss->value.item();
  };

  p->value = p0;
  for (const auto& [name, t] : buffers0) model.set_buffer(name, t.clone());
  auto loss = zoo::ce_loss_graph(model, ag::constant(x), labels, true);
  auto grad = ag::backward(loss, {p})[0];
  const Tensor fd = test::central_diff(loss_value, p0, 1e-6);
  CHECK(test::max_rel_err(grad->value, fd) < 2e-5);
}

TEST_CASE("batchnorm updates running stats only in train mode") {
  Rng rng(7);
  nn::Model model(tiny_conv_arch(), 31);
  Tensor x = random_tensor({4, 1, 8, 8}, rng);

  const auto before = model.buffers_checksum();
  (void)model.forward(ag::constant(x), false);
  CHECK(model.buffers_checksum() == before);

  (void)model.forward(ag::constant(x), true);
  CHECK(model.buffers_checksum() != before);
}

TEST_CASE("tensor archive round trip is byte stable") {
  nn::Model model(tiny_conv_arch(), 41);
  const std::string dir = (std::filesystem::temp_directory_path() / "mumis_nn_test").string();
  ensure_dir(dir);
  const std::string p1 = dir + "/a.bin", p2 = dir + "/b.bin";
  nn::save_tensors(p1, model);

  nn::Model loaded(tiny_conv_arch(), 0);
  nn::load_tensors(p1, loaded);
  CHECK(loaded.params_checksum() == model.params_checksum());
  CHECK(loaded.buffers_checksum() == model.buffers_checksum());

  nn::save_tensors(p2, loaded);
  CHECK(read_text_file(p1) == read_text_file(p2));
}

TEST_CASE("activation variants stay differentiable") {
  Rng rng(11);
  for (const std::string act : {"tanh", "relu", "silu"}) {
    nn::ArchConfig cfg;
    cfg.tag = "mlp";
    cfg.in_dim = 5;
    cfg.hidden = {6};
    cfg.num_classes = 3;
    cfg.activation = act;
    nn::Model model(cfg, 53);
    Tensor x = random_tensor({3, 5}, rng);
    auto loss = zoo::ce_loss_graph(model, ag::constant(x), {0, 1, 2}, false);
    auto grads = ag::backward(loss, {model.param("fc0.weight")});
    CAPTURE(act);
    CHECK(grads[0]->value.all_finite());
    CHECK(std::isfinite(loss->value.item()));
  }
}

TEST_CASE("predict and probs are consistent") {
  Rng rng(13);
  nn::Model model(tiny_conv_arch(), 61);
  Tensor x = random_tensor({5, 1, 8, 8}, rng);
  const Tensor probs = model.predict_probs(x);
  const auto preds = model.predict(x);
  for (int i = 0; i < 5; ++i) {
    double row_sum = 0.0;
    int best = 0;
    double best_p = -1.0;
    for (int c = 0; c < 3; ++c) {
      const double p = probs.at(i * 3 + c);
      row_sum += p;
      if (p > best_p) {
        best_p = p;
        best = c;
      }
    }
    CHECK(row_sum == doctest::Approx(1.0));
    CHECK(best == preds[static_cast<std::size_t>(i)]);
  }
}
