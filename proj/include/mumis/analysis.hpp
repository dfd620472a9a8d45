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

#include <optional>
#include <string>
#include <vector>

#include "mumis/metrics.hpp"
#include "mumis/sensitivity.hpp"
#include "mumis/unlearn.hpp"

namespace mumis::analysis {

enum class Quantity { TargetNorm, IrrelevantMeanNorm, Gap };

std::string to_string(Quantity q);

/// Share of forgetting samples whose chosen quantity rose (Delta > 0) from
/// the pre-trained to the retrained model. Ties count as "fall" so the two
/// percentages always add to 100.
struct RiseFallSummary {
  Quantity quantity = Quantity::Gap;
  double rise_pct = 0.0;
  double fall_pct = 0.0;
  int n = 0;
};

RiseFallSummary rise_fall(const std::vector<sensitivity::SensitivityRecord>& retrain_records,
                          const std::vector<sensitivity::SensitivityRecord>& pretrain_records,
                          Quantity quantity);

struct DistributionStats {
  double mean = 0.0, median = 0.0, q10 = 0.0, q90 = 0.0, min = 0.0, max = 0.0;
};

DistributionStats summarize(std::vector<double> values);

/// Jacobian-norm distributions of two checkpoints over the same subset, plus
/// a two-panel log-x histogram written to <out_prefix>.{svg,png} when
/// out_prefix is non-empty.
struct NormReport {
  DistributionStats before;
  DistributionStats after;
  std::vector<double> before_norms;
  std::vector<double> after_norms;
};

NormReport before_after_norm_report(nn::Model& initial, nn::Model& trained,
                                    const data::Dataset& dataset,
                                    const std::vector<int>& train_subset,
                                    const std::string& out_prefix = "");

/// Run one loss-term ablation variant and evaluate it against the oracle.
metrics::MetricsReport ablation_run(const nn::Model& pretrained, nn::Model& retrain_oracle,
                                    const data::Dataset& dataset,
                                    const tasks::SplitIndices& split,
                                    const tasks::TaskSpec& spec, unlearn::UnlearnConfig cfg,
                                    sensitivity::LossVariant variant, std::uint64_t eval_seed,
                                    int mia_pool_size);

struct SweepCell {
  double stop_ratio = 0.0;
  double lr = 0.0;
  bool failed = false;
  std::string error;
  std::optional<metrics::MetricsReport> report;
};

struct SweepResult {
  std::vector<SweepCell> cells;  // row-major over (lr, stop_ratio)
  std::vector<double> stop_ratios;
  std::vector<double> lrs;
};

/// Grid of unlearning runs over (stop_ratio, lr); failed cells are recorded
/// and the sweep continues. Writes a summary chart and CSV when out_prefix is
/// non-empty.
SweepResult sweep_stop_ratio(const nn::Model& pretrained, nn::Model& retrain_oracle,
                             const data::Dataset& dataset, const tasks::SplitIndices& split,
                             const tasks::TaskSpec& spec, const unlearn::UnlearnConfig& base_cfg,
                             const std::vector<double>& stop_ratios,
                             const std::vector<double>& lrs, std::uint64_t eval_seed,
                             int mia_pool_size, const std::string& out_prefix = "");

/// Input-gradient saliency |d f_label / d x| per sample, max-normalized to
/// [0,1], written as <dir>/<stem>_saliency.png next to <stem>_input.png.
/// Returns the per-sample heatmaps.
std::vector<std::vector<double>> saliency_export(nn::Model& model, const Tensor& samples,
                                                 const std::vector<int>& labels,
                                                 const std::string& dir,
                                                 const std::string& stem_prefix);

/// Heatmap + CSV of a pairwise-similarity matrix.
void export_similarity(const sensitivity::SimilarityResult& sim, const std::string& prefix);

/// Mean |cosine| between samples of different classes and mean cosine within
/// classes (excluding the diagonal); flagged entries are skipped.
struct SimilaritySummary {
  double inter_mean_abs = 0.0;
  double intra_mean = 0.0;
};

SimilaritySummary summarize_similarity(const sensitivity::SimilarityResult& sim,
                                       const std::vector<int>& labels);

}  // namespace mumis::analysis
