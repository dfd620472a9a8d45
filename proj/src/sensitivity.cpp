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
#include "mumis/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "mumis/util.hpp"

namespace mumis::sensitivity {

namespace {

void check_classes(const nn::Model& model, const std::vector<int>& classes, std::int64_t n) {
  if (static_cast<std::int64_t>(classes.size()) != n)
    throw std::invalid_argument("class list does not match batch size");
  for (int c : classes) {
    if (c < 0 || c >= model.num_classes())
      throw std::invalid_argument("class index " + std::to_string(c) + " out of range");
  }
}

ag::IndexTable pick_table(const std::vector<int>& classes, int num_classes) {
  auto table = std::make_shared<std::vector<std::int64_t>>(classes.size());
  for (std::size_t i = 0; i < classes.size(); ++i)
    (*table)[i] = static_cast<std::int64_t>(i) * num_classes + classes[i];
  return table;
}

/// Input gradient of the sum of one selected logit per sample, as a graph
/// node [N, D]. With frozen normalization each row is the gradient of that
/// sample's own logit.
ag::Var selected_logit_input_grad(const ag::Var& x, const ag::Var& logits,
                                  const std::vector<int>& classes, int num_classes) {
  const int n = logits->value.dim(0);
  const auto sel = ag::gather(logits, pick_table(classes, num_classes), {n});
  const auto grads = ag::backward(ag::sum_all(sel), {x});
  const int d = static_cast<int>(x->value.numel() / n);
  return ag::reshape(grads[0], {n, d});
}

}  // namespace

std::vector<double> logit_input_grad_norms(nn::Model& model, const Tensor& x,
                                           const std::vector<int>& classes, bool squared) {
  const int n = x.dim(0);
  check_classes(model, classes, n);
  auto xv = ag::leaf(x, true);
  const auto logits = model.forward(xv, false);
  const auto grad = selected_logit_input_grad(xv, logits, classes, model.num_classes());
  std::vector<double> out(static_cast<std::size_t>(n));
  const auto m = grad->value.matrix();
  for (int i = 0; i < n; ++i) {
    const double s = m.row(i).squaredNorm();
    out[static_cast<std::size_t>(i)] = squared ? s : std::sqrt(s);
  }
  return out;
}

std::vector<double> jacobian_fro_norms(nn::Model& model, const Tensor& x) {
  const int n = x.dim(0);
  const int c = model.num_classes();
  std::vector<double> acc(static_cast<std::size_t>(n), 0.0);
  auto xv = ag::leaf(x, true);
  const auto logits = model.forward(xv, false);
  for (int cls = 0; cls < c; ++cls) {
    const std::vector<int> classes(static_cast<std::size_t>(n), cls);
    const auto grad = selected_logit_input_grad(xv, logits, classes, c);
    const auto m = grad->value.matrix();
    for (int i = 0; i < n; ++i) acc[static_cast<std::size_t>(i)] += m.row(i).squaredNorm();
  }
  for (double& v : acc) v = std::sqrt(v);
  return acc;
}

std::vector<SensitivityRecord> sensitivity_records(nn::Model& model, const Tensor& x,
                                                   const std::vector<int>& labels,
                                                   const std::vector<int>& sample_ids) {
  const int n = x.dim(0);
  const int c = model.num_classes();
  if (c < 2) throw std::invalid_argument("sensitivity records need at least 2 classes");
  check_classes(model, labels, n);
  if (!sample_ids.empty() && static_cast<int>(sample_ids.size()) != n)
    throw std::invalid_argument("sample_ids do not match batch size");

  // Per-class unsquared norms; one backward pass per class over one forward.
  std::vector<std::vector<double>> norms(static_cast<std::size_t>(c));
  auto xv = ag::leaf(x, true);
  const auto logits = model.forward(xv, false);
  for (int cls = 0; cls < c; ++cls) {
    const std::vector<int> classes(static_cast<std::size_t>(n), cls);
    const auto grad = selected_logit_input_grad(xv, logits, classes, c);
    auto& row = norms[static_cast<std::size_t>(cls)];
    row.resize(static_cast<std::size_t>(n));
    const auto m = grad->value.matrix();
    for (int i = 0; i < n; ++i) row[static_cast<std::size_t>(i)] = m.row(i).norm();
  }

  std::vector<SensitivityRecord> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    SensitivityRecord& r = out[static_cast<std::size_t>(i)];
    r.sample_id = sample_ids.empty() ? i : sample_ids[static_cast<std::size_t>(i)];
    const int y = labels[static_cast<std::size_t>(i)];
    r.target_norm = norms[static_cast<std::size_t>(y)][static_cast<std::size_t>(i)];
    double sum = 0.0;
    for (int cls = 0; cls < c; ++cls) {
      if (cls != y) sum += norms[static_cast<std::size_t>(cls)][static_cast<std::size_t>(i)];
    }
    r.irrelevant_mean_norm = sum / static_cast<double>(c - 1);
    r.gap = r.target_norm - r.irrelevant_mean_norm;
  }
  return out;
}

void export_records_csv(const std::string& path, const std::vector<SensitivityRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "sample_id,target_norm,irrelevant_mean_norm,gap\n";
  for (const auto& r : records) {
    out << r.sample_id << ',' << format_double(r.target_norm) << ','
        << format_double(r.irrelevant_mean_norm) << ',' << format_double(r.gap) << '\n';
  }
}

double mean_irrelevant_norm(nn::Model& model, const Tensor& x, const std::vector<int>& labels) {
  const auto records = sensitivity_records(model, x, labels);
  double acc = 0.0;
  for (const auto& r : records) acc += r.irrelevant_mean_norm;
  return acc / static_cast<double>(records.size());
}

namespace {

struct LossGraph {
  LossValue value;
  ag::Var total;
};

LossGraph build_mumis_loss(nn::Model& model, const ag::Var& xv, const std::vector<int>& labels,
                           const std::vector<int>& choices, double kappa, SwitchMode mode,
                           LossVariant variant) {
  const int n = xv->value.dim(0);
  const int c = model.num_classes();
  check_classes(model, labels, n);
  if (variant != LossVariant::TcOnly) {
    check_classes(model, choices, n);
    for (int i = 0; i < n; ++i) {
      if (choices[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(i)])
        throw std::invalid_argument(
            "irrelevant_choice equals the target class for sample " + std::to_string(i));
    }
  }
  if (kappa < 1.0) throw std::invalid_argument("kappa must be >= 1");

  const auto logits = model.forward(xv, false);
  // Squared per-sample norms of the two selected input gradients.
  const auto ut = selected_logit_input_grad(xv, logits, labels, c);
  const auto t2 = ag::row_sum(ag::square(ut));  // [N]
  ag::Var o2;
  if (variant != LossVariant::TcOnly) {
    const auto uo = selected_logit_input_grad(xv, logits, choices, c);
    o2 = ag::row_sum(ag::square(uo));
  }

  const auto tc = ag::mean_all(t2);
  const auto oc = o2 ? ag::mean_all(o2) : ag::constant(Tensor::scalar(0.0));

  LossGraph out;
  out.value.tc_term = tc->value.item();
  out.value.oc_term = oc->value.item();

  if (variant == LossVariant::TcOnly) {
    out.total = tc;
    out.value.alpha_c = 1.0;
    out.value.alpha_cprime = 0.0;
  } else if (variant == LossVariant::OcOnly) {
    out.total = ag::neg(oc);
    out.value.alpha_c = 0.0;
    out.value.alpha_cprime = 1.0;
  } else if (kappa == 1.0) {
    out.total = ag::sub(tc, oc);
  } else if (mode == SwitchMode::BatchMean) {
    const bool tc_dominates = out.value.tc_term >= out.value.oc_term;
    out.value.alpha_c = tc_dominates ? kappa : 1.0;
    out.value.alpha_cprime = tc_dominates ? 1.0 : kappa;
    out.total = ag::sub(ag::scale(tc, out.value.alpha_c), ag::scale(oc, out.value.alpha_cprime));
  } else {
    // Per-sample switch: weight each sample by its own term comparison.
    Tensor ac({n}), ao({n});
    double ac_mean = 0.0, ao_mean = 0.0;
    for (int i = 0; i < n; ++i) {
      const bool dom = t2->value.at(i) >= o2->value.at(i);
      ac.at(i) = dom ? kappa : 1.0;
      ao.at(i) = dom ? 1.0 : kappa;
      ac_mean += ac.at(i);
      ao_mean += ao.at(i);
    }
    out.value.alpha_c = ac_mean / n;
    out.value.alpha_cprime = ao_mean / n;
    out.total = ag::mean_all(
        ag::sub(ag::mul(ag::constant(ac), t2), ag::mul(ag::constant(ao), o2)));
  }
  out.value.total = out.total->value.item();
  return out;
}

}  // namespace

LossValue mumis_loss(nn::Model& model, const Tensor& x, const std::vector<int>& labels,
                     const std::vector<int>& irrelevant_choice, double kappa, SwitchMode mode,
                     LossVariant variant) {
  auto xv = ag::leaf(x, true);
  return build_mumis_loss(model, xv, labels, irrelevant_choice, kappa, mode, variant).value;
}

std::pair<LossValue, NamedGrads> mumis_loss_and_grads(
    nn::Model& model, const Tensor& x, const std::vector<int>& labels,
    const std::vector<int>& irrelevant_choice, double kappa, SwitchMode mode,
    LossVariant variant) {
  auto xv = ag::leaf(x, true);
  const LossGraph graph =
      build_mumis_loss(model, xv, labels, irrelevant_choice, kappa, mode, variant);

  std::vector<ag::Var> wrt;
  wrt.reserve(model.params().size());
  for (const auto& [name, v] : model.params()) wrt.push_back(v);
  const auto grads = ag::backward(graph.total, wrt);

  NamedGrads named;
  named.reserve(grads.size());
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const std::string& name = model.params()[i].first;
    if (!grads[i]->value.all_finite())
      throw NumericalError("non-finite gradient for parameter " + name);
    named.emplace_back(name, grads[i]->value);
  }
  return {graph.value, std::move(named)};
}

NamedGrads mumis_param_grad(nn::Model& model, const Tensor& x, const std::vector<int>& labels,
                            const std::vector<int>& irrelevant_choice, double kappa,
                            SwitchMode mode, LossVariant variant) {
  return mumis_loss_and_grads(model, x, labels, irrelevant_choice, kappa, mode, variant).second;
}

namespace {

/// Flattened per-sample parameter gradient of one metric for sample row i.
Eigen::VectorXd per_sample_param_grad(nn::Model& model, const Tensor& x, int row, int label,
                                      GradMetric metric) {
  const std::int64_t d = x.numel() / x.dim(0);
  Tensor one({1, static_cast<int>(d)});
  std::copy(x.data() + row * d, x.data() + (row + 1) * d, one.data());
  Tensor::Shape shape = x.shape();
  shape[0] = 1;
  one = one.reshaped(shape);

  const int c = model.num_classes();
  auto xv = ag::leaf(one, true);
  const auto logits = model.forward(xv, false);

  ag::Var root;
  switch (metric) {
    case GradMetric::Logit: {
      root = ag::sum_all(ag::gather(logits, pick_table({label}, c), {1}));
      break;
    }
    case GradMetric::CeLoss: {
      Tensor mx({1});
      mx.at(0) = logits->value.matrix(1, c).row(0).maxCoeff();
      const auto mx_c = ag::constant(mx);
      const auto shifted = ag::sub(logits, ag::bcast_rows(mx_c, c));
      const auto lse = ag::add(ag::log_op(ag::row_sum(ag::exp_op(shifted))), mx_c);
      const auto picked = ag::gather(logits, pick_table({label}, c), {1});
      root = ag::sum_all(ag::sub(lse, picked));
      break;
    }
    case GradMetric::TcSens: {
      const auto u = selected_logit_input_grad(xv, logits, {label}, c);
      root = ag::sqrt_op(ag::sum_all(ag::square(u)));
      break;
    }
    case GradMetric::OcSens: {
      // sum over all irrelevant classes of the unsquared norm
      ag::Var acc;
      for (int cls = 0; cls < c; ++cls) {
        if (cls == label) continue;
        const auto u = selected_logit_input_grad(xv, logits, {cls}, c);
        const auto nrm = ag::sqrt_op(ag::sum_all(ag::square(u)));
        acc = acc ? ag::add(acc, nrm) : nrm;
      }
      root = acc;
      break;
    }
  }

  std::vector<ag::Var> wrt;
  for (const auto& [name, v] : model.params()) wrt.push_back(v);
  const auto grads = ag::backward(root, wrt);

  Eigen::VectorXd flat(model.param_count());
  std::int64_t pos = 0;
  for (const auto& g : grads) {
    const std::int64_t ne = g->value.numel();
    std::copy(g->value.data(), g->value.data() + ne, flat.data() + pos);
    pos += ne;
  }
  return flat;
}

}  // namespace

SimilarityResult pairwise_grad_similarity(nn::Model& model, const Tensor& x,
                                          const std::vector<int>& labels, GradMetric metric) {
  const int n = x.dim(0);
  if (n < 2) throw std::invalid_argument("pairwise similarity needs at least 2 samples");
  check_classes(model, labels, n);

  std::vector<Eigen::VectorXd> grads;
  grads.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    grads.push_back(
        per_sample_param_grad(model, x, i, labels[static_cast<std::size_t>(i)], metric));

  SimilarityResult res;
  res.cosine = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> norms(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) norms[static_cast<std::size_t>(i)] = grads[static_cast<std::size_t>(i)].norm();

  constexpr double kZeroNorm = 1e-150;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const double ni = norms[static_cast<std::size_t>(i)];
      const double nj = norms[static_cast<std::size_t>(j)];
      double v;
      // zero-norm or non-finite gradients have no defined cosine
      if (!(ni > kZeroNorm) || !(nj > kZeroNorm) || !std::isfinite(ni) || !std::isfinite(nj)) {
        v = std::numeric_limits<double>::quiet_NaN();
        res.flagged.emplace_back(i, j);
      } else if (i == j) {
        v = 1.0;
      } else {
        v = grads[static_cast<std::size_t>(i)].dot(grads[static_cast<std::size_t>(j)]) / (ni * nj);
        v = std::clamp(v, -1.0, 1.0);
      }
      res.cosine(i, j) = v;
      res.cosine(j, i) = v;
    }
  }
  return res;
}

}  // namespace mumis::sensitivity
