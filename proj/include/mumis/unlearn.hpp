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
#include "mumis/sensitivity.hpp"
#include "mumis/tasks.hpp"
#include "mumis/util.hpp"

namespace mumis::unlearn {

enum class Method { MuMis, Ng, Rl, Ft };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct UnlearnConfig {
  Method method = Method::MuMis;
  double lr = 1e-4;          // eta
  double stop_ratio = 0.9;   // delta
  double kappa = 1.0;
  int batch_size = 64;
  int max_epochs = 100;
  std::uint64_t seed = 0;
  sensitivity::SwitchMode switch_mode = sensitivity::SwitchMode::BatchMean;
  sensitivity::LossVariant variant = sensitivity::LossVariant::Full;
  bool stop_check_per_step = false;  // default: once per epoch over all of D_f
  bool relabel_per_epoch = false;    // rl: redraw wrong labels each epoch
  bool probe_metrics = false;        // record FA/RA/TA per epoch in the trace
  int probe_subsample = 400;         // cap on probed remain/test samples

  void validate() const;
};

enum class StopReason { ThresholdMet, MaxEpochs, Diverged };
std::string to_string(StopReason r);

struct TraceRecord {
  int epoch = 0;
  long long steps = 0;            // optimizer steps taken so far
  double loss = 0.0;              // mean loss over the epoch
  double tc_term = 0.0;
  double oc_term = 0.0;
  double monitor_norm = 0.0;      // mean ||d f_c'/d x||_F over D_f (NaN for baselines)
  double epsilon = 0.0;           // running minimum after this epoch
  double ratio = 0.0;             // monitor / initial monitor
  bool probed = false;
  double fa = 0.0, ra = 0.0, ta = 0.0;
  double elapsed_s = 0.0;         // optimization time so far (probes excluded)
};

struct UnlearnTrace {
  std::vector<TraceRecord> records;
  StopReason stop_reason = StopReason::MaxEpochs;
  double monitor_initial = 0.0;  // at the pre-trained weights
  double rte_seconds = 0.0;      // wall clock of the run, evaluation excluded
  // config echo for reproducibility
  double lr = 0.0, stop_ratio = 0.0, kappa = 1.0;
  std::string method;

  void write_csv(const std::string& path) const;
  nlohmann::json summary() const;
};

/// Samples consumed per split by the optimizer (probes and reporting do not
/// go through this counter). Remaining-data-free methods must end a run with
/// remain == 0 and test == 0.
struct DataAccessAudit {
  long long forget = 0;
  long long remain = 0;
  long long test = 0;
};

bool is_remaining_data_free(Method m);

/// Throws AuditError if the method's data-access contract is violated.
void enforce_audit(Method method, const DataAccessAudit& audit);

/// Batch source that counts every sample it hands out.
class AuditedSource {
 public:
  AuditedSource(const data::Dataset& dataset, data::Split split, std::vector<int> indices,
                data::Granularity granularity, long long* counter);

  struct Batch {
    Tensor x;
    std::vector<int> labels;
    std::vector<int> indices;
  };

  /// Shuffled batches for one epoch; every yielded sample is counted.
  std::vector<Batch> epoch_batches(int batch_size, Rng& rng);
  /// One batch holding the whole index set (counted).
  Batch full_batch();

  std::size_t size() const { return indices_.size(); }
  const std::vector<int>& indices() const { return indices_; }
  data::Granularity granularity() const { return granularity_; }
  const data::Dataset& dataset() const { return dataset_; }
  data::Split split() const { return split_; }

 private:
  const data::Dataset& dataset_;
  data::Split split_;
  std::vector<int> indices_;
  data::Granularity granularity_;
  long long* counter_;
};

/// Probe sets for trace metrics (outside the audited path by design: these
/// are evaluation passes, not algorithm data usage).
struct ProbeSets {
  std::vector<int> forget_valid;  // FA on the held-out split (class-wise tasks)
  std::vector<int> remain_eval;
  std::vector<int> test_eval;
  data::Split fa_split = data::Split::Test;
  data::Split remain_split = data::Split::Test;
};

ProbeSets make_probe_sets(const data::Dataset& dataset, const tasks::SplitIndices& split,
                          const tasks::TaskSpec& spec, int subsample, std::uint64_t seed);

struct UnlearnResult {
  nn::Model model;
  UnlearnTrace trace;
  DataAccessAudit audit;
};

/// MU-Mis driver: plain gradient descent on the sensitivity-gap loss over the
/// forgetting data only, with the epsilon-tracked stopping rule evaluated
/// once per epoch on all of D_f. The model runs with frozen normalization.
UnlearnResult run_mumis(const nn::Model& pretrained, AuditedSource& forget,
                        const UnlearnConfig& cfg, const data::Dataset& dataset,
                        const std::optional<ProbeSets>& probes = std::nullopt);

/// Gradient ascent on the cross-entropy of the forgetting data.
UnlearnResult run_ng(const nn::Model& pretrained, AuditedSource& forget,
                     const UnlearnConfig& cfg, const data::Dataset& dataset,
                     const std::optional<ProbeSets>& probes = std::nullopt);

/// Random relabeling: descend cross-entropy on D_f with fixed random wrong
/// labels (drawn once per run unless relabel_per_epoch).
UnlearnResult run_rl(const nn::Model& pretrained, AuditedSource& forget,
                     const UnlearnConfig& cfg, const data::Dataset& dataset,
                     const std::optional<ProbeSets>& probes = std::nullopt);

/// Fine-tuning on the remaining data (the remaining-data contrast baseline).
UnlearnResult run_ft(const nn::Model& pretrained, AuditedSource& remain,
                     const UnlearnConfig& cfg, const data::Dataset& dataset,
                     const std::optional<ProbeSets>& probes = std::nullopt);

/// Dispatch by cfg.method; builds the audited sources from the split.
UnlearnResult run_unlearn(const nn::Model& pretrained, const data::Dataset& dataset,
                          const tasks::SplitIndices& split, const tasks::TaskSpec& spec,
                          const UnlearnConfig& cfg,
                          const std::optional<ProbeSets>& probes = std::nullopt);

/// Epsilon-tracked stopping rule of the unlearning driver, separated for
/// direct testing. observe() is called once per check with the current
/// monitor value; it reports whether to stop (current value above the
/// previous running minimum and above delta times the initial value) and
/// then folds the value into the running minimum.
class StopTracker {
 public:
  explicit StopTracker(double initial_monitor);
  bool observe(double monitor, double delta);
  double epsilon() const { return epsilon_; }
  double initial() const { return initial_; }

 private:
  double initial_;
  double epsilon_;
};

void to_json(nlohmann::json& j, const UnlearnConfig& c);
void from_json(const nlohmann::json& j, UnlearnConfig& c);
void to_json(nlohmann::json& j, const DataAccessAudit& a);
void from_json(const nlohmann::json& j, DataAccessAudit& a);

}  // namespace mumis::unlearn
