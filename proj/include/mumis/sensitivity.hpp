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
#include <string>
#include <vector>

#include "mumis/nn.hpp"
#include "mumis/tensor.hpp"

namespace mumis::sensitivity {

/// Per-sample input-sensitivity summary: Frobenius norm of the target-class
/// logit's input gradient, the mean of the other C-1 class norms, and their
/// difference. Models are always queried with frozen normalization, so the
/// per-sample values are independent of batch composition.
struct SensitivityRecord {
  int sample_id = 0;
  double target_norm = 0.0;
  double irrelevant_mean_norm = 0.0;
  double gap = 0.0;  // target_norm - irrelevant_mean_norm
};

/// Per-sample || d f_class / d x ||_F (or its square) over the flattened
/// input. `classes` selects one logit per sample.
std::vector<double> logit_input_grad_norms(nn::Model& model, const Tensor& x,
                                           const std::vector<int>& classes, bool squared);

/// Frobenius norm of the full logit Jacobian per sample:
/// sqrt(sum_c ||d f_c/d x||^2).
std::vector<double> jacobian_fro_norms(nn::Model& model, const Tensor& x);

/// One record per sample; labels give the target class.
std::vector<SensitivityRecord> sensitivity_records(nn::Model& model, const Tensor& x,
                                                   const std::vector<int>& labels,
                                                   const std::vector<int>& sample_ids = {});

void export_records_csv(const std::string& path, const std::vector<SensitivityRecord>& records);

/// How the reweighting switch is evaluated: on batch-mean terms (default,
/// avoids per-sample weight discontinuities) or strictly per sample.
enum class SwitchMode { BatchMean, PerSample };

/// Which loss terms are active (ablation support).
enum class LossVariant { Full, TcOnly, OcOnly };

struct LossValue {
  double total = 0.0;
  double tc_term = 0.0;  // mean squared target-class norm
  double oc_term = 0.0;  // mean squared chosen-irrelevant-class norm
  double alpha_c = 1.0;
  double alpha_cprime = 1.0;
};

/// The unlearning objective: mean over the batch of
///   alpha_c * ||d f_c/d x||_F^2 - alpha_c' * ||d f_c'/d x||_F^2
/// With kappa = 1 both weights are exactly 1. For kappa > 1 the larger term
/// gets weight kappa: (kappa, 1) when tc_term >= oc_term, else (1, kappa).
LossValue mumis_loss(nn::Model& model, const Tensor& x, const std::vector<int>& labels,
                     const std::vector<int>& irrelevant_choice, double kappa,
                     SwitchMode mode = SwitchMode::BatchMean,
                     LossVariant variant = LossVariant::Full);

using NamedGrads = std::vector<std::pair<std::string, Tensor>>;

/// Gradient of mumis_loss().total with respect to every trainable parameter
/// (double backpropagation). Keys equal the model's parameter names exactly;
/// normalization buffers are untouched. Throws NumericalError naming the
/// offending parameter if a gradient is non-finite.
NamedGrads mumis_param_grad(nn::Model& model, const Tensor& x, const std::vector<int>& labels,
                            const std::vector<int>& irrelevant_choice, double kappa,
                            SwitchMode mode = SwitchMode::BatchMean,
                            LossVariant variant = LossVariant::Full);

/// Loss and parameter gradients in one pass (what the unlearning driver uses).
std::pair<LossValue, NamedGrads> mumis_loss_and_grads(
    nn::Model& model, const Tensor& x, const std::vector<int>& labels,
    const std::vector<int>& irrelevant_choice, double kappa,
    SwitchMode mode = SwitchMode::BatchMean, LossVariant variant = LossVariant::Full);

/// Mean over samples of the per-sample irrelevant-class norm (unsquared,
/// averaged over all C-1 classes): the quantity monitored by the stopping
/// rule.
double mean_irrelevant_norm(nn::Model& model, const Tensor& x, const std::vector<int>& labels);

enum class GradMetric { CeLoss, Logit, TcSens, OcSens };

struct SimilarityResult {
  Eigen::MatrixXd cosine;                    // symmetric, unit diagonal
  std::vector<std::pair<int, int>> flagged;  // entries with a zero-norm operand (NaN)
};

/// Pairwise cosine similarity of per-sample parameter gradients of the chosen
/// metric. Zero-norm gradient vectors produce flagged NaN entries rather than
/// silent zeros.
SimilarityResult pairwise_grad_similarity(nn::Model& model, const Tensor& x,
                                          const std::vector<int>& labels, GradMetric metric);

}  // namespace mumis::sensitivity
