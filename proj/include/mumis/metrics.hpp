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

#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

#include "mumis/data.hpp"
#include "mumis/nn.hpp"
#include "mumis/tasks.hpp"
#include "mumis/unlearn.hpp"

namespace mumis::metrics {

struct AccTriple {
  double fa = 0.0;
  double ra = 0.0;
  double ta = 0.0;
};

/// Mean absolute accuracy disparity against the reference model.
double avg_gap(const AccTriple& a, const AccTriple& b);

/// FA/RA/TA for one model on one task. Class-wise tasks compute FA and RA on
/// the held-out split; random-subset tasks compute them on the train split.
/// TA is always the full held-out split.
AccTriple accuracy_triple(nn::Model& model, const data::Dataset& dataset,
                          const tasks::SplitIndices& split, const tasks::TaskSpec& spec);

struct MiaResult {
  double score = 0.0;     // percent of the forget set predicted "member"
  bool degenerate = false;  // attack pools were not separable / features constant
};

/// Confidence-based membership inference: a logistic attacker over per-sample
/// features (max softmax probability, prediction entropy, cross-entropy loss)
/// trained on member (remaining-train) vs non-member (test) pools, applied to
/// the forget set. Pools are balanced by seeded subsampling.
MiaResult mia_score(nn::Model& attacked, const data::Dataset& dataset,
                    const std::vector<int>& forget_train, const std::vector<int>& member_pool,
                    const std::vector<int>& nonmember_pool, data::Granularity granularity,
                    std::uint64_t seed);

/// Empirical KL divergence of output distributions over the entire dataset
/// (train + test), reference = retrained model. Probabilities are clamped at
/// 1e-12 before the log.
double kl_divergence(nn::Model& retrained, nn::Model& unlearned, const data::Dataset& dataset);

struct ResilienceMetrics {
  double fgta = 0.0;  // train accuracy on previously forgotten classes
  double fgva = 0.0;  // held-out accuracy on previously forgotten classes
  double resilience_avg_gap = 0.0;  // mean |disparity| to the retrain oracle
};

ResilienceMetrics resilience_metrics(nn::Model& model, nn::Model& oracle,
                                     const data::Dataset& dataset,
                                     const std::vector<int>& cumulative_classes,
                                     data::Granularity granularity);

struct MetricsReport {
  double fa = 0.0, ra = 0.0, ta = 0.0;
  double avg_gap = 0.0;
  double mia = 0.0;
  bool mia_degenerate = false;
  double kl_div = 0.0;
  double rte_seconds = 0.0;
  std::optional<double> fgta, fgva, resilience_avg_gap;
  std::string reference_retrain_id;
  std::string method;
};

/// Standard metric suite for an (unlearned, retrained) pair on one task.
MetricsReport evaluate_model(nn::Model& model, nn::Model& retrain_oracle,
                             const data::Dataset& dataset, const tasks::SplitIndices& split,
                             const tasks::TaskSpec& spec, std::uint64_t seed, int mia_pool_size,
                             double rte_seconds, const std::string& method_name);

/// Aligned comparison table, one row per report, columns in the order
/// RA, FA, TA, Avg. Gap, MIA, RTE.
std::string render_table(const std::vector<MetricsReport>& rows);
std::string render_table_csv(const std::vector<MetricsReport>& rows);

void to_json(nlohmann::json& j, const MetricsReport& r);
void from_json(const nlohmann::json& j, MetricsReport& r);

}  // namespace mumis::metrics
