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

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "mumis/sensitivity.hpp"
#include "mumis/util.hpp"
#include "oracles.hpp"

using namespace mumis;
namespace sens = mumis::sensitivity;

namespace {

Tensor random_tensor(Tensor::Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.numel(); ++i) t.at(i) = rng.normal() * scale;
  return t;
}

nn::Model linear_model(const Tensor& w, const Tensor& b) {
  nn::ArchConfig a;
  a.tag = "mlp";
  a.in_dim = w.dim(1);
  a.num_classes = w.dim(0);
  nn::Model m(a, 0);
  m.set_param("head.weight", w.clone());
  m.set_param("head.bias", b.clone());
  return m;
}

nn::Model oracle_mlp(std::uint64_t seed = 1234) {
  // 6-8-6-3 tanh mlp: 56+63+21 weights + 17 biases = 157 parameters
  nn::ArchConfig a;
  a.tag = "mlp";
  a.in_dim = 6;
  a.hidden = {8, 6};
  a.num_classes = 3;
  a.activation = "tanh";
  return nn::Model(a, seed);
}

}  // namespace

TEST_CASE("constant model has zero input sensitivity") {
  auto m = linear_model(Tensor::zeros({3, 4}), Tensor({3}, {0.1, -0.2, 0.3}));
  Rng rng(1);
  const Tensor x = random_tensor({5, 4}, rng);
  const auto norms = sens::logit_input_grad_norms(m, x, {0, 1, 2, 0, 1}, false);
  for (double v : norms) CHECK(v == 0.0);
}

TEST_CASE("linear model input gradient norm is the weight row norm") {
  Rng rng(2);
  const Tensor w = random_tensor({4, 7}, rng);
  const Tensor b = random_tensor({4}, rng);
  auto m = linear_model(w, b);
  const Tensor x = random_tensor({3, 7}, rng);
  const std::vector<int> classes = {2, 0, 3};
  const auto norms = sens::logit_input_grad_norms(m, x, classes, false);
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const double expect = w.matrix(4, 7).row(classes[i]).norm();
    CHECK(std::abs(norms[i] - expect) <= 1e-10);
  }
}

TEST_CASE("input gradient norms match finite differences on an mlp") {
  auto model = oracle_mlp();
  CHECK(model.param_count() <= 1000);
  Rng rng(3);
  const Tensor x = random_tensor({2, 6}, rng);

  for (int cls = 0; cls < 3; ++cls) {
    for (int row = 0; row < 2; ++row) {
      Tensor one({1, 6});
      std::copy(x.data() + row * 6, x.data() + (row + 1) * 6, one.data());
      auto f = [&](const Tensor& probe) {
        return model.forward_values(probe).at(cls);
      };
      const Tensor fd = test::central_diff(f, one, 1e-6);
      // analytic gradient norm vs finite-difference gradient norm
      const auto norms = sens::logit_input_grad_norms(model, one, {cls}, false);
      const double fd_norm = std::sqrt(fd.array().square().sum());
      CHECK(std::abs(norms[0] - fd_norm) / std::max(fd_norm, 1e-12) < 1e-6);
    }
  }
}

TEST_CASE("squared norms equal unsquared norms squared") {
  auto model = oracle_mlp(7);
  Rng rng(4);
  const Tensor x = random_tensor({4, 6}, rng);
  const std::vector<int> classes = {0, 1, 2, 1};
  const auto sq = sens::logit_input_grad_norms(model, x, classes, true);
  const auto un = sens::logit_input_grad_norms(model, x, classes, false);
  for (std::size_t i = 0; i < sq.size(); ++i)
    CHECK(sq[i] == doctest::Approx(un[i] * un[i]).epsilon(1e-12));
}

TEST_CASE("sensitivity records: binary case and gap identity") {
  Rng rng(5);
  const Tensor w = random_tensor({2, 5}, rng);
  auto m = linear_model(w, Tensor::zeros({2}));
  const Tensor x = random_tensor({3, 5}, rng);
  const auto records = sens::sensitivity_records(m, x, {0, 1, 0});
  for (std::size_t i = 0; i < records.size(); ++i) {
    const int y = i == 1 ? 1 : 0;
    const double own = w.matrix(2, 5).row(y).norm();
    const double other = w.matrix(2, 5).row(1 - y).norm();
    CHECK(records[i].target_norm == doctest::Approx(own));
    CHECK(records[i].irrelevant_mean_norm == doctest::Approx(other));
    CHECK(records[i].gap == records[i].target_norm - records[i].irrelevant_mean_norm);
  }
}

TEST_CASE("randomly initialized model has comparable target and irrelevant norms") {
  auto model = oracle_mlp(99);
  Rng rng(6);
  const Tensor x = random_tensor({32, 6, 1, 1}, rng).reshaped({32, 6});
  std::vector<int> labels(32);
  for (int i = 0; i < 32; ++i) labels[static_cast<std::size_t>(i)] = i % 3;
  const auto records = sens::sensitivity_records(model, x, labels);
  double t = 0.0, o = 0.0;
  for (const auto& r : records) {
    t += r.target_norm;
    o += r.irrelevant_mean_norm;
  }
  const double ratio = t / o;
  CHECK(ratio > 0.5);
  CHECK(ratio < 2.0);
}

TEST_CASE("mumis loss: plain form and linear analytic value") {
  Rng rng(7);
  const Tensor w = random_tensor({3, 4}, rng);
  auto m = linear_model(w, Tensor::zeros({3}));
  const Tensor x = random_tensor({2, 4}, rng);
  const std::vector<int> labels = {1, 1};
  const std::vector<int> choices = {0, 2};

  const auto lv = sens::mumis_loss(m, x, labels, choices, 1.0);
  const auto wm = w.matrix(3, 4);
  const double expect = 0.5 * ((wm.row(1).squaredNorm() - wm.row(0).squaredNorm()) +
                               (wm.row(1).squaredNorm() - wm.row(2).squaredNorm()));
  CHECK(lv.total == doctest::Approx(expect).epsilon(1e-12));
  CHECK(lv.alpha_c == 1.0);
  CHECK(lv.alpha_cprime == 1.0);
  CHECK(lv.total == lv.tc_term - lv.oc_term);  // bit-exact at kappa = 1
}

TEST_CASE("reweighted loss reduces to the plain loss at kappa 1 and scales terms otherwise") {
  auto model = oracle_mlp(11);
  Rng rng(8);
  const Tensor x = random_tensor({4, 6}, rng);
  const std::vector<int> labels = {0, 1, 2, 0};
  const std::vector<int> choices = {1, 0, 1, 2};

  const auto plain = sens::mumis_loss(model, x, labels, choices, 1.0);
  const auto re1 = sens::mumis_loss(model, x, labels, choices, 1.0, sens::SwitchMode::BatchMean);
  CHECK(plain.total == re1.total);  // bit-for-bit
  CHECK(plain.tc_term == re1.tc_term);
  CHECK(plain.oc_term == re1.oc_term);

  const auto re80 = sens::mumis_loss(model, x, labels, choices, 80.0);
  if (re80.tc_term >= re80.oc_term) {
    CHECK(re80.alpha_c == 80.0);
    CHECK(re80.alpha_cprime == 1.0);
    CHECK(re80.total == doctest::Approx(80.0 * plain.tc_term - plain.oc_term).epsilon(1e-12));
  } else {
    CHECK(re80.alpha_c == 1.0);
    CHECK(re80.alpha_cprime == 80.0);
    CHECK(re80.total == doctest::Approx(plain.tc_term - 80.0 * plain.oc_term).epsilon(1e-12));
  }
  // decomposition reconstructs the total
  CHECK(std::abs(re80.total - (re80.alpha_c * re80.tc_term -
                               re80.alpha_cprime * re80.oc_term)) <= 1e-9);
}

TEST_CASE("per-sample switch mode weights each sample independently") {
  auto model = oracle_mlp(13);
  Rng rng(9);
  const Tensor x = random_tensor({3, 6}, rng);
  const std::vector<int> labels = {0, 1, 2};
  const std::vector<int> choices = {2, 0, 1};
  const double kappa = 5.0;

  const auto lv = sens::mumis_loss(model, x, labels, choices, kappa,
                                   sens::SwitchMode::PerSample);
  // reconstruct from per-sample squared norms
  const auto t2 = sens::logit_input_grad_norms(model, x, labels, true);
  const auto o2 = sens::logit_input_grad_norms(model, x, choices, true);
  double expect = 0.0;
  for (std::size_t i = 0; i < t2.size(); ++i) {
    const bool dom = t2[i] >= o2[i];
    expect += (dom ? kappa : 1.0) * t2[i] - (dom ? 1.0 : kappa) * o2[i];
  }
  expect /= static_cast<double>(t2.size());
  CHECK(lv.total == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("loss reduction identity against independently computed norms") {
  auto model = oracle_mlp(17);
  Rng rng(10);
  const Tensor x = random_tensor({6, 6}, rng);
  std::vector<int> labels(6), choices(6);
  for (int i = 0; i < 6; ++i) {
    labels[static_cast<std::size_t>(i)] = i % 3;
    choices[static_cast<std::size_t>(i)] = (i + 1) % 3;
  }
  const auto lv = sens::mumis_loss(model, x, labels, choices, 1.0);
  const auto t2 = sens::logit_input_grad_norms(model, x, labels, true);
  const auto o2 = sens::logit_input_grad_norms(model, x, choices, true);
  double mean_gap = 0.0;
  for (std::size_t i = 0; i < t2.size(); ++i) mean_gap += t2[i] - o2[i];
  mean_gap /= static_cast<double>(t2.size());
  CHECK(std::abs(lv.total - mean_gap) <= 1e-9);
}

TEST_CASE("mumis loss rejects contract violations") {
  auto model = oracle_mlp(19);
  Rng rng(11);
  const Tensor x = random_tensor({2, 6}, rng);
  CHECK_THROWS(sens::mumis_loss(model, x, {0, 1}, {0, 2}, 1.0));  // choice == label
  CHECK_THROWS(sens::mumis_loss(model, x, {0, 1}, {1, 2}, 0.5));  // kappa < 1
  CHECK_THROWS(sens::mumis_loss(model, x, {0, 9}, {1, 2}, 1.0));  // label out of range
}

TEST_CASE("parameter gradient matches finite differences (double backprop oracle)") {
  auto model = oracle_mlp(23);
  Rng rng(12);
  const Tensor x = random_tensor({3, 6}, rng);
  const std::vector<int> labels = {0, 1, 2};
  const std::vector<int> choices = {1, 2, 0};

  const auto grads = sens::mumis_param_grad(model, x, labels, choices, 1.0);
  REQUIRE(grads.size() == model.params().size());

  for (const auto& [name, grad] : grads) {
    auto p = model.param(name);
    const Tensor p0 = p->value.clone();
    auto f = [&](const Tensor& probe) {
      p->value = probe;
      const double v = sens::mumis_loss(model, x, labels, choices, 1.0).total;
      return v;
    };
    const Tensor fd = test::central_diff(f, p0, 1e-5);
    p->value = p0;
    CAPTURE(name);
    CHECK(test::max_rel_err(grad, fd, 1e-5) < 1e-4);
  }
}

TEST_CASE("parameter gradient with reweighting matches finite differences") {
  auto model = oracle_mlp(29);
  Rng rng(13);
  const Tensor x = random_tensor({2, 6}, rng);
  const std::vector<int> labels = {0, 2};
  const std::vector<int> choices = {2, 1};

  const auto grads =
      sens::mumis_param_grad(model, x, labels, choices, 3.0, sens::SwitchMode::BatchMean);
  for (const auto& [name, grad] : grads) {
    if (name != "fc0.weight" && name != "head.bias") continue;
    auto p = model.param(name);
    const Tensor p0 = p->value.clone();
    auto f = [&](const Tensor& probe) {
      p->value = probe;
      return sens::mumis_loss(model, x, labels, choices, 3.0).total;
    };
    const Tensor fd = test::central_diff(f, p0, 1e-5);
    p->value = p0;
    CHECK(test::max_rel_err(grad, fd, 1e-5) < 1e-4);
  }
}

TEST_CASE("gradient map structure and constant-model zeros") {
  auto m = linear_model(Tensor::zeros({3, 4}), Tensor::zeros({3}));
  Rng rng(14);
  const Tensor x = random_tensor({2, 4}, rng);
  const auto grads = sens::mumis_param_grad(m, x, {0, 1}, {1, 0}, 1.0);
  REQUIRE(grads.size() == m.params().size());
  for (std::size_t i = 0; i < grads.size(); ++i) {
    CHECK(grads[i].first == m.params()[i].first);
    for (std::int64_t k = 0; k < grads[i].second.numel(); ++k)
      CHECK(grads[i].second.at(k) == 0.0);
  }
}

TEST_CASE("normalization buffers are untouched by the parameter gradient") {
  nn::ArchConfig arch;
  arch.tag = "smallconv";
  arch.height = 8;
  arch.width = 8;
  arch.channels = {2, 2, 2};
  arch.num_classes = 3;
  nn::Model model(arch, 31);
  Rng rng(15);
  const Tensor x = random_tensor({2, 1, 8, 8}, rng);

  const auto before = model.buffers_checksum();
  (void)sens::mumis_param_grad(model, x, {0, 1}, {1, 0}, 1.0);
  CHECK(model.buffers_checksum() == before);
}

TEST_CASE("pairwise similarity: identical samples, symmetry, flagged zeros") {
  auto model = oracle_mlp(37);
  Rng rng(16);
  Tensor x({3, 6});
  const Tensor one = random_tensor({6}, rng);
  for (int i = 0; i < 2; ++i)
    std::copy(one.data(), one.data() + 6, x.data() + i * 6);
  const Tensor other = random_tensor({6}, rng);
  std::copy(other.data(), other.data() + 6, x.data() + 12);

  const auto sim = sens::pairwise_grad_similarity(model, x, {1, 1, 2},
                                                  sens::GradMetric::TcSens);
  CHECK(sim.cosine(0, 1) == doctest::Approx(1.0));
  CHECK(sim.cosine(0, 0) == doctest::Approx(1.0));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(sim.cosine(i, j) == doctest::Approx(sim.cosine(j, i)));
  CHECK(sim.flagged.empty());

  // constant model: sensitivity gradients vanish, entries get flagged
  auto constant = linear_model(Tensor::zeros({3, 6}), Tensor::zeros({3}));
  const auto flagged = sens::pairwise_grad_similarity(constant, x, {1, 1, 2},
                                                      sens::GradMetric::TcSens);
  CHECK(!flagged.flagged.empty());
  CHECK(std::isnan(flagged.cosine(0, 1)));
}

TEST_CASE("jacobian norm aggregates the per-class norms") {
  Rng rng(17);
  const Tensor w = random_tensor({3, 5}, rng);
  auto m = linear_model(w, Tensor::zeros({3}));
  const Tensor x = random_tensor({2, 5}, rng);
  const auto jac = sens::jacobian_fro_norms(m, x);
  const double expect = std::sqrt(w.array().square().sum());
  for (double v : jac) CHECK(v == doctest::Approx(expect));
}

TEST_CASE("csv export writes one row per record") {
  const std::vector<sens::SensitivityRecord> records = {{0, 1.0, 0.5, 0.5}, {1, 2.0, 1.0, 1.0}};
  const std::string path =
      (std::filesystem::temp_directory_path() / "mumis_records.csv").string();
  sens::export_records_csv(path, records);
  const std::string text = read_text_file(path);
  CHECK(text.find("sample_id,target_norm,irrelevant_mean_norm,gap") == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}
