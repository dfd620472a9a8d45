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

#include "mumis/analysis.hpp"
#include "mumis/metrics.hpp"
#include "mumis/modelzoo.hpp"
#include "mumis/tasks.hpp"
#include "mumis/unlearn.hpp"

namespace mumis::experiment {

struct EvalConfig {
  int mia_pool_size = 400;
  std::uint64_t seed = 0;
};

struct AnalysisConfig {
  std::vector<double> sweep_stop_ratios = {0.7, 0.8, 0.9, 1.0};
  std::vector<double> sweep_lrs;  // defaults to the unlearn lr when empty
  int saliency_count = 6;
  int similarity_samples = 40;
};

/// One experiment = dataset + task + architecture + training recipe +
/// unlearning configuration + evaluation knobs. Loaded from a single JSON
/// document; unset sub-seeds are derived from the top-level seed through
/// named streams (task, train, unlearn, mia).
struct ExperimentConfig {
  int schema_version = 1;
  data::DatasetSpec dataset;
  tasks::TaskSpec task;
  nn::ArchConfig arch;
  zoo::TrainConfig train_recipe;
  unlearn::UnlearnConfig unlearn_cfg;
  EvalConfig eval;
  AnalysisConfig analysis;
  std::string output_dir = "runs";
  std::uint64_t seed = 0;

  static ExperimentConfig load(const std::string& path);
  static ExperimentConfig from_json_value(const nlohmann::json& j);

  /// Derive unset sub-seeds and resolve the architecture against the dataset
  /// (class count, image geometry). Must be called before use.
  void finalize();

  nlohmann::json to_json_value() const;
  std::string config_hash() const;

  std::string data_dir() const;  // MUMIS_DATA_DIR or <output_dir>/data
};

// ---------------------------------------------------------------------------
// Commands. Artifact directories are content-addressed: rerunning with the
// same config reuses existing outputs unless force is set.
// ---------------------------------------------------------------------------

/// Train the pre-trained model (or the retrain oracle when retrain=true).
/// For sequential tasks, seq_step selects the request; the oracle then
/// excludes every class forgotten up to and including that step.
std::string cmd_train(const ExperimentConfig& cfg, bool retrain, int seq_step = -1,
                      bool force = false);

struct UnlearnArtifacts {
  std::string checkpoint_dir;
  std::string trace_csv;
  std::string summary_json;
  std::string audit_json;
  unlearn::DataAccessAudit audit;
};

UnlearnArtifacts cmd_unlearn(const ExperimentConfig& cfg, const std::string& pretrained_dir,
                             bool force = false);

/// Metric suite for (unlearned, retrain, pretrained); prints the comparison
/// table and writes report.json. Returns the report path.
std::string cmd_evaluate(const ExperimentConfig& cfg, const std::string& unlearned_dir,
                         const std::string& retrain_dir, const std::string& pretrained_dir,
                         bool force = false);

struct SequentialStepOutcome {
  int step = 0;
  std::vector<int> cumulative;  // classes forgotten before this step
  metrics::MetricsReport report;
  double kl_pretrain = 0.0;  // KL(oracle, pretrained) for contrast
  std::string unlearned_dir;
  std::string retrain_dir;
};

struct SequentialOutcome {
  std::vector<SequentialStepOutcome> steps;
  std::string report_dir;
};

SequentialOutcome cmd_sequential(const ExperimentConfig& cfg, bool force = false);

/// what: rise_fall | before_after | ablation | sweep | saliency | similarity
int cmd_analyze(const ExperimentConfig& cfg, const std::string& what,
                const std::string& checkpoint_dir = "", bool force = false);

// Shared plumbing, exposed for tests and the acceptance suite.
tasks::SplitIndices resolve_split(const ExperimentConfig& cfg);
tasks::SplitIndices sequential_step_split(const tasks::TaskSpec& seq, int step,
                                          const data::Dataset& dataset);
std::string pretrain_dir_for(const ExperimentConfig& cfg);
std::string retrain_dir_for(const ExperimentConfig& cfg, int seq_step = -1);
std::string unlearn_dir_for(const ExperimentConfig& cfg, const std::string& pretrained_dir);

}  // namespace mumis::experiment
