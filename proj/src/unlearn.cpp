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
#include "mumis/unlearn.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>

#include "mumis/modelzoo.hpp"
#include "mumis/util.hpp"

namespace mumis::unlearn {

using nlohmann::json;

std::string to_string(Method m) {
  switch (m) {
    case Method::MuMis: return "mumis";
    case Method::Ng: return "ng";
    case Method::Rl: return "rl";
    case Method::Ft: return "ft";
  }
  return "unknown";
}

Method method_from_string(const std::string& s) {
  if (s == "mumis") return Method::MuMis;
  if (s == "ng") return Method::Ng;
  if (s == "rl") return Method::Rl;
  if (s == "ft") return Method::Ft;
  throw ConfigError("unknown unlearning method: " + s);
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::ThresholdMet: return "threshold_met";
    case StopReason::MaxEpochs: return "max_epochs";
    case StopReason::Diverged: return "diverged";
  }
  return "unknown";
}

void UnlearnConfig::validate() const {
  if (lr <= 0.0) throw ConfigError("unlearn lr must be positive");
  if (stop_ratio <= 0.0) throw ConfigError("stop_ratio must be positive");
  if (kappa < 1.0) throw ConfigError("kappa must be >= 1");
  if (batch_size < 1) throw ConfigError("unlearn batch_size must be >= 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
}

bool is_remaining_data_free(Method m) { return m != Method::Ft; }

void enforce_audit(Method method, const DataAccessAudit& audit) {
  if (is_remaining_data_free(method) && (audit.remain > 0 || audit.test > 0))
    throw AuditError("remaining-data-free method " + to_string(method) + " consumed " +
                     std::to_string(audit.remain) + " remain and " +
                     std::to_string(audit.test) + " test samples");
}

// ---------------------------------------------------------------------------
// AuditedSource
// ---------------------------------------------------------------------------

AuditedSource::AuditedSource(const data::Dataset& dataset, data::Split split,
                             std::vector<int> indices, data::Granularity granularity,
                             long long* counter)
    : dataset_(dataset),
      split_(split),
      indices_(std::move(indices)),
      granularity_(granularity),
      counter_(counter) {
  if (indices_.empty()) throw ConfigError("unlearning data source is empty");
}

std::vector<AuditedSource::Batch> AuditedSource::epoch_batches(int batch_size, Rng& rng) {
  std::vector<int> order = indices_;
  rng.shuffle(order);
  std::vector<Batch> out;
  for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(order.size(), i + static_cast<std::size_t>(batch_size));
    Batch b;
    b.indices.assign(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
    b.x = dataset_.batch(split_, b.indices);
    b.labels = dataset_.batch_labels(split_, b.indices, granularity_);
    *counter_ += static_cast<long long>(b.indices.size());
    out.push_back(std::move(b));
  }
  return out;
}

AuditedSource::Batch AuditedSource::full_batch() {
  Batch b;
  b.indices = indices_;
  b.x = dataset_.batch(split_, b.indices);
  b.labels = dataset_.batch_labels(split_, b.indices, granularity_);
  *counter_ += static_cast<long long>(b.indices.size());
  return b;
}

// ---------------------------------------------------------------------------
// StopTracker
// ---------------------------------------------------------------------------

StopTracker::StopTracker(double initial_monitor)
    : initial_(initial_monitor), epsilon_(std::numeric_limits<double>::infinity()) {}

bool StopTracker::observe(double monitor, double delta) {
  const bool above_min = monitor > epsilon_;
  const bool above_ratio = initial_ > 0.0 && monitor / initial_ > delta;
  const bool stop = above_min && above_ratio;
  epsilon_ = std::min(epsilon_, monitor);
  return stop;
}

// ---------------------------------------------------------------------------
// Trace
// ---------------------------------------------------------------------------

void UnlearnTrace::write_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "epoch,steps,loss,tc_term,oc_term,monitor_norm,epsilon,ratio,fa,ra,ta,elapsed_s\n";
  auto cell = [](double v) { return std::isnan(v) ? std::string() : format_double(v, 12); };
  for (const auto& r : records) {
    out << r.epoch << ',' << r.steps << ',' << cell(r.loss) << ',' << cell(r.tc_term) << ','
        << cell(r.oc_term) << ',' << cell(r.monitor_norm) << ',' << cell(r.epsilon) << ','
        << cell(r.ratio) << ',';
    if (r.probed) {
      out << format_double(r.fa, 6) << ',' << format_double(r.ra, 6) << ','
          << format_double(r.ta, 6);
    } else {
      out << ",,";
    }
    out << ',' << format_double(r.elapsed_s, 6) << '\n';
  }
}

json UnlearnTrace::summary() const {
  json j;
  j["method"] = method;
  j["stop_reason"] = to_string(stop_reason);
  j["epochs_run"] = records.empty() ? 0 : records.back().epoch;
  j["steps"] = records.empty() ? 0 : records.back().steps;
  j["rte_seconds"] = rte_seconds;
  j["monitor_initial"] = monitor_initial;
  j["lr"] = lr;
  j["stop_ratio"] = stop_ratio;
  j["kappa"] = kappa;
  if (!records.empty()) {
    j["final_monitor_norm"] = records.back().monitor_norm;
    j["final_epsilon"] = records.back().epsilon;
    j["final_ratio"] = records.back().ratio;
    j["final_loss"] = records.back().loss;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Shared driver plumbing
// ---------------------------------------------------------------------------

namespace {

constexpr double kDivergenceFactor = 1e6;
const double kNaN = std::numeric_limits<double>::quiet_NaN();

class Stopwatch {
 public:
  void start() { begin_ = std::chrono::steady_clock::now(); }
  void stop() {
    total_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - begin_).count();
  }
  double seconds() const { return total_; }

 private:
  std::chrono::steady_clock::time_point begin_;
  double total_ = 0.0;
};

struct Probe {
  const data::Dataset* dataset = nullptr;
  const ProbeSets* sets = nullptr;
  data::Granularity granularity = data::Granularity::Fine;

  void fill(nn::Model& model, TraceRecord& rec) const {
    rec.probed = true;
    rec.fa = sets->forget_valid.empty()
                 ? kNaN
                 : zoo::evaluate_accuracy(model, *dataset, sets->fa_split, sets->forget_valid,
                                          granularity);
    rec.ra = sets->remain_eval.empty()
                 ? kNaN
                 : zoo::evaluate_accuracy(model, *dataset, sets->remain_split,
                                          sets->remain_eval, granularity);
    rec.ta = sets->test_eval.empty()
                 ? kNaN
                 : zoo::evaluate_accuracy(model, *dataset, data::Split::Test, sets->test_eval,
                                          granularity);
  }
};

void sgd_step(nn::Model& model, const sensitivity::NamedGrads& grads, double lr) {
  auto& params = model.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i].second->value.array() -= lr * grads[i].second.array();
  }
}

void sgd_step_vars(nn::Model& model, const std::vector<ag::Var>& grads, double lr) {
  auto& params = model.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i].second->value.array() -= lr * grads[i]->value.array();
  }
}

std::vector<ag::Var> param_vars(nn::Model& model) {
  std::vector<ag::Var> out;
  out.reserve(model.params().size());
  for (const auto& [name, v] : model.params()) out.push_back(v);
  return out;
}

/// Mean unsquared irrelevant-class sensitivity norm over the full forget set,
/// in evaluation chunks. Counted as forget-data access (it is part of the
/// algorithm's stopping rule).
double monitor_norm(nn::Model& model, AuditedSource& forget) {
  const auto& idx = forget.indices();
  constexpr std::size_t kChunk = 256;
  double acc = 0.0;
  for (std::size_t i = 0; i < idx.size(); i += kChunk) {
    const std::size_t end = std::min(idx.size(), i + kChunk);
    const std::vector<int> chunk(idx.begin() + static_cast<std::ptrdiff_t>(i),
                                 idx.begin() + static_cast<std::ptrdiff_t>(end));
    const Tensor x = forget.dataset().batch(forget.split(), chunk);
    const auto labels =
        forget.dataset().batch_labels(forget.split(), chunk, forget.granularity());
    const auto records = sensitivity::sensitivity_records(model, x, labels);
    for (const auto& r : records) acc += r.irrelevant_mean_norm;
  }
  return acc / static_cast<double>(idx.size());
}

/// Cross-entropy epoch shared by the NG/RL/FT baselines. `labels_override`
/// replaces true labels (RL); `ascent` flips the update sign (NG).
struct CeEpochResult {
  double mean_loss = 0.0;
  long long steps = 0;
  bool finite = true;
};

CeEpochResult ce_epoch(nn::Model& model, AuditedSource& source, const UnlearnConfig& cfg,
                       Rng& rng, bool ascent,
                       const std::vector<int>* labels_override) {
  CeEpochResult res;
  double loss_sum = 0.0;
  int batches = 0;
  for (auto& batch : source.epoch_batches(cfg.batch_size, rng)) {
    std::vector<int> labels = batch.labels;
    if (labels_override != nullptr) {
      for (std::size_t k = 0; k < batch.indices.size(); ++k)
        labels[k] = (*labels_override)[static_cast<std::size_t>(batch.indices[k])];
    }
    const auto loss = zoo::ce_loss_graph(model, ag::constant(batch.x), labels, false);
    const double lv = loss->value.item();
    if (!std::isfinite(lv)) {
      res.finite = false;
      return res;
    }
    const auto grads = ag::backward(loss, param_vars(model));
    sgd_step_vars(model, grads, ascent ? -cfg.lr : cfg.lr);
    loss_sum += lv;
    ++batches;
    ++res.steps;
  }
  res.mean_loss = batches > 0 ? loss_sum / batches : 0.0;
  return res;
}

UnlearnTrace make_trace(const UnlearnConfig& cfg) {
  UnlearnTrace t;
  t.method = to_string(cfg.method);
  t.lr = cfg.lr;
  t.stop_ratio = cfg.stop_ratio;
  t.kappa = cfg.kappa;
  return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// MU-Mis
// ---------------------------------------------------------------------------

UnlearnResult run_mumis(const nn::Model& pretrained, AuditedSource& forget,
                        const UnlearnConfig& cfg, const data::Dataset& dataset,
                        const std::optional<ProbeSets>& probes) {
  cfg.validate();
  UnlearnResult res{pretrained.clone(), make_trace(cfg), DataAccessAudit{}};
  nn::Model& model = res.model;
  const int num_classes = model.num_classes();
  if (num_classes < 2) throw ConfigError("unlearning needs at least 2 classes");

  Rng choice_rng(derive_seed(cfg.seed, "unlearn.choice"));
  Rng order_rng(derive_seed(cfg.seed, "unlearn.order"));

  Stopwatch clock;
  clock.start();
  const double m0 = monitor_norm(model, forget);
  res.trace.monitor_initial = m0;
  StopTracker tracker(m0);
  clock.stop();

  std::optional<Probe> probe;
  if (probes) probe = Probe{&dataset, &*probes, forget.granularity()};

  double first_loss = kNaN;
  long long steps = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    clock.start();
    double loss_sum = 0.0, tc_sum = 0.0, oc_sum = 0.0;
    int batches = 0;
    bool diverged = false;
    bool stop = false;
    double m = kNaN;
    for (auto& batch : forget.epoch_batches(cfg.batch_size, order_rng)) {
      // redraw one irrelevant class per sample, every time the loss is built
      std::vector<int> choices(batch.labels.size());
      for (std::size_t k = 0; k < choices.size(); ++k) {
        const int y = batch.labels[k];
        int c = static_cast<int>(choice_rng.uniform_index(
            static_cast<std::size_t>(num_classes - 1)));
        if (c >= y) ++c;
        choices[k] = c;
      }
      sensitivity::LossValue lv;
      try {
        auto [value, grads] = sensitivity::mumis_loss_and_grads(
            model, batch.x, batch.labels, choices, cfg.kappa, cfg.switch_mode, cfg.variant);
        lv = value;
        if (!std::isfinite(lv.total)) throw NumericalError("non-finite loss");
        sgd_step(model, grads, cfg.lr);
      } catch (const NumericalError&) {
        diverged = true;
        break;
      }
      if (std::isnan(first_loss)) first_loss = lv.total;
      loss_sum += lv.total;
      tc_sum += lv.tc_term;
      oc_sum += lv.oc_term;
      ++batches;
      ++steps;

      if (cfg.stop_check_per_step) {
        m = monitor_norm(model, forget);
        if (tracker.observe(m, cfg.stop_ratio)) {
          stop = true;
          break;
        }
      }
    }

    const double mean_loss = batches > 0 ? loss_sum / batches : kNaN;
    if (!diverged && !cfg.stop_check_per_step) {
      m = monitor_norm(model, forget);
      stop = tracker.observe(m, cfg.stop_ratio);
    }
    clock.stop();

    TraceRecord rec;
    rec.epoch = epoch;
    rec.steps = steps;
    rec.loss = mean_loss;
    rec.tc_term = batches > 0 ? tc_sum / batches : kNaN;
    rec.oc_term = batches > 0 ? oc_sum / batches : kNaN;
    rec.monitor_norm = m;
    rec.epsilon = tracker.epsilon();
    rec.ratio = m0 > 0.0 ? m / m0 : kNaN;
    rec.elapsed_s = clock.seconds();
    if (probe) probe->fill(model, rec);
    res.trace.records.push_back(rec);

    if (diverged) {
      res.trace.stop_reason = StopReason::Diverged;
      break;
    }
    if (std::isfinite(first_loss) && std::abs(mean_loss) >
            kDivergenceFactor * std::max(std::abs(first_loss), 1e-12)) {
      res.trace.stop_reason = StopReason::Diverged;
      break;
    }
    if (stop) {
      res.trace.stop_reason = StopReason::ThresholdMet;
      break;
    }
  }
  res.trace.rte_seconds = clock.seconds();
  return res;
}

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

namespace {

UnlearnResult run_ce_baseline(const nn::Model& pretrained, AuditedSource& source,
                              const UnlearnConfig& cfg, const data::Dataset& dataset,
                              const std::optional<ProbeSets>& probes, bool ascent,
                              bool relabel) {
  cfg.validate();
  UnlearnResult res{pretrained.clone(), make_trace(cfg), DataAccessAudit{}};
  nn::Model& model = res.model;
  res.trace.monitor_initial = kNaN;

  Rng order_rng(derive_seed(cfg.seed, "unlearn.order"));
  Rng label_rng(derive_seed(cfg.seed, "unlearn.relabel"));
  const int num_classes = model.num_classes();

  // RL: wrong labels fixed per run (indexed by dataset index), redrawn per
  // epoch only when configured.
  std::vector<int> relabels;
  auto draw_relabels = [&]() {
    relabels.assign(static_cast<std::size_t>(
                        source.split() == data::Split::Train ? dataset.train_size()
                                                             : dataset.test_size()),
                    -1);
    for (int idx : source.indices()) {
      const int y = dataset.label_of(source.split(), idx, source.granularity());
      int c = static_cast<int>(label_rng.uniform_index(
          static_cast<std::size_t>(num_classes - 1)));
      if (c >= y) ++c;
      relabels[static_cast<std::size_t>(idx)] = c;
    }
  };
  if (relabel) draw_relabels();

  std::optional<Probe> probe;
  if (probes) probe = Probe{&dataset, &*probes, source.granularity()};

  Stopwatch clock;
  double first_loss = kNaN;
  long long steps = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    clock.start();
    if (relabel && cfg.relabel_per_epoch && epoch > 1) draw_relabels();
    const CeEpochResult er =
        ce_epoch(model, source, cfg, order_rng, ascent, relabel ? &relabels : nullptr);
    clock.stop();
    steps += er.steps;

    TraceRecord rec;
    rec.epoch = epoch;
    rec.steps = steps;
    rec.loss = er.mean_loss;
    rec.tc_term = kNaN;
    rec.oc_term = kNaN;
    rec.monitor_norm = kNaN;
    rec.epsilon = kNaN;
    rec.ratio = kNaN;
    rec.elapsed_s = clock.seconds();
    if (probe) probe->fill(model, rec);
    res.trace.records.push_back(rec);

    if (!er.finite) {
      res.trace.stop_reason = StopReason::Diverged;
      break;
    }
    if (std::isnan(first_loss)) first_loss = er.mean_loss;
    if (std::abs(er.mean_loss) > kDivergenceFactor * std::max(std::abs(first_loss), 1e-12)) {
      res.trace.stop_reason = StopReason::Diverged;
      break;
    }
  }
  if (res.trace.stop_reason != StopReason::Diverged)
    res.trace.stop_reason = StopReason::MaxEpochs;
  res.trace.rte_seconds = clock.seconds();
  return res;
}

}  // namespace

UnlearnResult run_ng(const nn::Model& pretrained, AuditedSource& forget,
                     const UnlearnConfig& cfg, const data::Dataset& dataset,
                     const std::optional<ProbeSets>& probes) {
  return run_ce_baseline(pretrained, forget, cfg, dataset, probes, /*ascent=*/true,
                         /*relabel=*/false);
}

UnlearnResult run_rl(const nn::Model& pretrained, AuditedSource& forget,
                     const UnlearnConfig& cfg, const data::Dataset& dataset,
                     const std::optional<ProbeSets>& probes) {
  return run_ce_baseline(pretrained, forget, cfg, dataset, probes, /*ascent=*/false,
                         /*relabel=*/true);
}

UnlearnResult run_ft(const nn::Model& pretrained, AuditedSource& remain,
                     const UnlearnConfig& cfg, const data::Dataset& dataset,
                     const std::optional<ProbeSets>& probes) {
  return run_ce_baseline(pretrained, remain, cfg, dataset, probes, /*ascent=*/false,
                         /*relabel=*/false);
}

UnlearnResult run_unlearn(const nn::Model& pretrained, const data::Dataset& dataset,
                          const tasks::SplitIndices& split, const tasks::TaskSpec& spec,
                          const UnlearnConfig& cfg, const std::optional<ProbeSets>& probes) {
  (void)spec;
  DataAccessAudit audit;
  std::optional<UnlearnResult> res;

  if (cfg.method == Method::Ft) {
    AuditedSource remain(dataset, data::Split::Train, split.remain, split.granularity,
                         &audit.remain);
    res = run_ft(pretrained, remain, cfg, dataset, probes);
  } else {
    AuditedSource forget(dataset, data::Split::Train, split.forget, split.granularity,
                         &audit.forget);
    // Fault-injection hook used by the audit-contract tests: simulates a
    // defective driver that reads remaining data.
    if (env_or("MUMIS_FAULT_TOUCH_REMAIN", "") == "1") {
      AuditedSource remain(dataset, data::Split::Train, split.remain, split.granularity,
                           &audit.remain);
      remain.full_batch();
    }
    switch (cfg.method) {
      case Method::MuMis:
        res = run_mumis(pretrained, forget, cfg, dataset, probes);
        break;
      case Method::Ng:
        res = run_ng(pretrained, forget, cfg, dataset, probes);
        break;
      case Method::Rl:
        res = run_rl(pretrained, forget, cfg, dataset, probes);
        break;
      case Method::Ft:
        break;
    }
  }
  res->audit = audit;
  return std::move(*res);
}

ProbeSets make_probe_sets(const data::Dataset& dataset, const tasks::SplitIndices& split,
                          const tasks::TaskSpec& spec, int subsample, std::uint64_t seed) {
  ProbeSets out;
  Rng rng(derive_seed(seed, "probe"));
  auto cap = [&](std::vector<int> v) {
    if (subsample > 0 && static_cast<int>(v.size()) > subsample) {
      rng.shuffle(v);
      v.resize(static_cast<std::size_t>(subsample));
      std::sort(v.begin(), v.end());
    }
    return v;
  };
  if (spec.mode == tasks::TaskMode::RandomSubset) {
    // FA and RA are computed on the train split for random-subset tasks
    out.fa_split = data::Split::Train;
    out.forget_valid = cap(split.forget);
    out.remain_eval = cap(split.remain);
    out.remain_split = data::Split::Train;
  } else {
    // class-wise tasks: held-out split, with the forgotten classes dropped
    // from the RA pool
    out.fa_split = data::Split::Test;
    out.forget_valid = dataset.test_indices_of(split.forget_classes);
    std::vector<char> dropped(static_cast<std::size_t>(dataset.num_fine), 0);
    for (int c : split.forget_classes) dropped[static_cast<std::size_t>(c)] = 1;
    for (int c : split.excluded_classes) dropped[static_cast<std::size_t>(c)] = 1;
    std::vector<int> remain_valid;
    for (int i : split.test) {
      if (!dropped[static_cast<std::size_t>(dataset.test_labels[static_cast<std::size_t>(i)])])
        remain_valid.push_back(i);
    }
    out.remain_eval = cap(remain_valid);
    out.remain_split = data::Split::Test;
  }
  out.test_eval = cap(split.test);
  return out;
}

void to_json(json& j, const UnlearnConfig& c) {
  j = json{{"method", to_string(c.method)},
           {"lr", c.lr},
           {"stop_ratio", c.stop_ratio},
           {"kappa", c.kappa},
           {"batch_size", c.batch_size},
           {"max_epochs", c.max_epochs},
           {"seed", c.seed},
           {"switch_mode",
            c.switch_mode == sensitivity::SwitchMode::BatchMean ? "batch_mean" : "per_sample"},
           {"variant", c.variant == sensitivity::LossVariant::Full
                           ? "full"
                           : (c.variant == sensitivity::LossVariant::TcOnly ? "tc_only"
                                                                            : "oc_only")},
           {"stop_check_per_step", c.stop_check_per_step},
           {"relabel_per_epoch", c.relabel_per_epoch},
           {"probe_metrics", c.probe_metrics},
           {"probe_subsample", c.probe_subsample}};
}

void from_json(const json& j, UnlearnConfig& c) {
  c = UnlearnConfig{};
  c.method = method_from_string(j.value("method", std::string("mumis")));
  c.lr = j.value("lr", c.lr);
  c.stop_ratio = j.value("stop_ratio", c.stop_ratio);
  c.kappa = j.value("kappa", c.kappa);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.seed = j.value("seed", c.seed);
  const std::string sw = j.value("switch_mode", std::string("batch_mean"));
  c.switch_mode = sw == "per_sample" ? sensitivity::SwitchMode::PerSample
                                     : sensitivity::SwitchMode::BatchMean;
  const std::string var = j.value("variant", std::string("full"));
  c.variant = var == "tc_only" ? sensitivity::LossVariant::TcOnly
                               : (var == "oc_only" ? sensitivity::LossVariant::OcOnly
                                                   : sensitivity::LossVariant::Full);
  c.stop_check_per_step = j.value("stop_check_per_step", false);
  c.relabel_per_epoch = j.value("relabel_per_epoch", false);
  c.probe_metrics = j.value("probe_metrics", false);
  c.probe_subsample = j.value("probe_subsample", 400);
}

void to_json(json& j, const DataAccessAudit& a) {
  j = json{{"forget", a.forget}, {"remain", a.remain}, {"test", a.test}};
}

void from_json(const json& j, DataAccessAudit& a) {
  a.forget = j.value("forget", 0LL);
  a.remain = j.value("remain", 0LL);
  a.test = j.value("test", 0LL);
}

}  // namespace mumis::unlearn
