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
#include "mumis/experiment.hpp"

#include <algorithm>
#include <iostream>
#include <nlohmann/json.hpp>
#include <set>

#include "mumis/plot.hpp"
#include "mumis/util.hpp"

namespace mumis::experiment {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  if (!file_exists(path)) throw ConfigError("config file not found: " + path);
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return from_json_value(j);
}

ExperimentConfig ExperimentConfig::from_json_value(const json& j) {
  ExperimentConfig cfg;
  try {
    cfg.schema_version = j.value("schema_version", 1);
    if (cfg.schema_version != 1)
      throw ConfigError("unsupported schema_version " + std::to_string(cfg.schema_version));
    if (j.contains("dataset")) data::from_json(j.at("dataset"), cfg.dataset);
    if (j.contains("task")) tasks::from_json(j.at("task"), cfg.task);
    if (j.contains("arch")) zoo::from_json(j.at("arch"), cfg.arch);
    if (j.contains("train_recipe")) zoo::from_json(j.at("train_recipe"), cfg.train_recipe);
    if (j.contains("unlearn")) unlearn::from_json(j.at("unlearn"), cfg.unlearn_cfg);
    if (j.contains("eval")) {
      cfg.eval.mia_pool_size = j.at("eval").value("mia_pool_size", cfg.eval.mia_pool_size);
      cfg.eval.seed = j.at("eval").value("seed", cfg.eval.seed);
    }
    if (j.contains("analysis")) {
      const auto& a = j.at("analysis");
      cfg.analysis.sweep_stop_ratios =
          a.value("sweep_stop_ratios", cfg.analysis.sweep_stop_ratios);
      cfg.analysis.sweep_lrs = a.value("sweep_lrs", cfg.analysis.sweep_lrs);
      cfg.analysis.saliency_count = a.value("saliency_count", cfg.analysis.saliency_count);
      cfg.analysis.similarity_samples =
          a.value("similarity_samples", cfg.analysis.similarity_samples);
    }
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    cfg.seed = j.value("seed", cfg.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config schema violation: ") + e.what());
  }
  cfg.finalize();
  return cfg;
}

void ExperimentConfig::finalize() {
  if (dataset.seed == 0) dataset.seed = derive_seed(seed, "dataset");
  if (task.seed == 0) task.seed = derive_seed(seed, "task");
  if (train_recipe.seed == 0) train_recipe.seed = derive_seed(seed, "train");
  if (unlearn_cfg.seed == 0) unlearn_cfg.seed = derive_seed(seed, "unlearn");
  if (eval.seed == 0) eval.seed = derive_seed(seed, "mia");

  // Resolve the architecture against the dataset geometry and task
  // granularity.
  const data::Granularity g = task.mode == tasks::TaskMode::SubClass ||
                                      (task.mode == tasks::TaskMode::Sequential &&
                                       !task.sequence.empty() &&
                                       task.sequence.front().mode == tasks::TaskMode::SubClass)
                                  ? data::Granularity::Coarse
                                  : data::Granularity::Fine;
  const int classes = g == data::Granularity::Coarse
                          ? (dataset.coarse == 0 ? dataset.classes : dataset.coarse)
                          : dataset.classes;
  arch.num_classes = classes;
  if (arch.tag == "smallconv") {
    arch.in_channels = 1;
    arch.height = dataset.image_size;
    arch.width = dataset.image_size;
  } else if (arch.tag == "mlp" && arch.in_dim == 0) {
    arch.in_dim = dataset.image_size * dataset.image_size;
  }
}

json ExperimentConfig::to_json_value() const {
  json j;
  j["schema_version"] = schema_version;
  data::to_json(j["dataset"], dataset);
  tasks::to_json(j["task"], task);
  zoo::to_json(j["arch"], arch);
  zoo::to_json(j["train_recipe"], train_recipe);
  unlearn::to_json(j["unlearn"], unlearn_cfg);
  j["eval"] = json{{"mia_pool_size", eval.mia_pool_size}, {"seed", eval.seed}};
  j["analysis"] = json{{"sweep_stop_ratios", analysis.sweep_stop_ratios},
                       {"sweep_lrs", analysis.sweep_lrs},
                       {"saliency_count", analysis.saliency_count},
                       {"similarity_samples", analysis.similarity_samples}};
  j["output_dir"] = output_dir;
  j["seed"] = seed;
  return j;
}

std::string ExperimentConfig::config_hash() const {
  return hash_hex(fnv1a64(to_json_value().dump()));
}

std::string ExperimentConfig::data_dir() const {
  return env_or("MUMIS_DATA_DIR", output_dir + "/data");
}

// ---------------------------------------------------------------------------
// Splits and artifact naming
// ---------------------------------------------------------------------------

tasks::SplitIndices resolve_split(const ExperimentConfig& cfg) {
  const data::Dataset dataset = data::make_dataset(cfg.dataset);
  return tasks::build_split_cached(cfg.task, dataset, cfg.data_dir() + "/splits");
}

tasks::SplitIndices sequential_step_split(const tasks::TaskSpec& seq, int step,
                                          const data::Dataset& dataset) {
  const tasks::SequenceStep st = tasks::advance_sequence(seq, step);
  tasks::SplitIndices split = tasks::build_split(st.request, dataset);
  split.excluded_classes = st.cumulative;
  if (!st.cumulative.empty()) {
    std::set<int> excluded(st.cumulative.begin(), st.cumulative.end());
    std::vector<int> remain;
    for (int i : split.remain) {
      if (excluded.count(dataset.train_labels[static_cast<std::size_t>(i)]) == 0)
        remain.push_back(i);
    }
    split.remain = std::move(remain);
  }
  return split;
}

namespace {

std::string indices_hash(const std::vector<int>& idx) {
  return hash_hex(fnv1a64(idx.data(), idx.size() * sizeof(int)));
}

json train_artifact_key(const ExperimentConfig& cfg, const std::vector<int>& indices,
                        data::Granularity g) {
  json key;
  data::to_json(key["dataset"], cfg.dataset);
  zoo::to_json(key["arch"], cfg.arch);
  zoo::to_json(key["recipe"], cfg.train_recipe);
  key["granularity"] = g == data::Granularity::Coarse ? "coarse" : "fine";
  key["indices"] = indices_hash(indices);
  return key;
}

void write_manifest(const std::string& dir, const std::string& kind, const json& key,
                    const json& extra) {
  json m;
  m["kind"] = kind;
  m["key"] = key;
  m["key_hash"] = hash_hex(fnv1a64(key.dump()));
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
  write_text_file(dir + "/manifest.json", m.dump(2) + "\n");
}

bool artifact_ready(const std::string& dir) { return file_exists(dir + "/manifest.json"); }

std::string short_hash(const json& key) { return hash_hex(fnv1a64(key.dump())).substr(0, 12); }

/// Train-or-load with content addressing.
std::string train_cached(const ExperimentConfig& cfg, const data::Dataset& dataset,
                         const std::vector<int>& indices, data::Granularity g,
                         const std::string& kind, bool force) {
  const json key = train_artifact_key(cfg, indices, g);
  const std::string dir = cfg.output_dir + "/" + kind + "-" + short_hash(key);
  if (!force && artifact_ready(dir)) return dir;

  nn::Model model = zoo::train(dataset, indices, g, cfg.arch, cfg.train_recipe);
  zoo::CheckpointMeta meta;
  meta.arch = cfg.arch;
  meta.label_space.resize(static_cast<std::size_t>(cfg.arch.num_classes));
  for (int i = 0; i < cfg.arch.num_classes; ++i) meta.label_space[static_cast<std::size_t>(i)] = i;
  meta.train_seed = cfg.train_recipe.seed;
  meta.dataset_id = dataset.id;
  meta.recipe = cfg.train_recipe;
  zoo::save_checkpoint(dir, model, meta);
  write_manifest(dir, kind, key,
                 json{{"checkpoint_id", zoo::checkpoint_id(model)},
                      {"dataset_id", dataset.id},
                      {"config_hash", cfg.config_hash()}});
  return dir;
}

data::Granularity task_granularity(const ExperimentConfig& cfg, const data::Dataset& dataset) {
  (void)dataset;
  if (cfg.task.mode == tasks::TaskMode::SubClass) return data::Granularity::Coarse;
  if (cfg.task.mode == tasks::TaskMode::Sequential && !cfg.task.sequence.empty() &&
      cfg.task.sequence.front().mode == tasks::TaskMode::SubClass)
    return data::Granularity::Coarse;
  return data::Granularity::Fine;
}

}  // namespace

std::string pretrain_dir_for(const ExperimentConfig& cfg) {
  const data::Dataset dataset = data::make_dataset(cfg.dataset);
  const json key =
      train_artifact_key(cfg, dataset.all_train_indices(), task_granularity(cfg, dataset));
  return cfg.output_dir + "/pretrain-" + short_hash(key);
}

std::string retrain_dir_for(const ExperimentConfig& cfg, int seq_step) {
  const data::Dataset dataset = data::make_dataset(cfg.dataset);
  tasks::SplitIndices split;
  if (cfg.task.mode == tasks::TaskMode::Sequential) {
    const int step = seq_step < 0 ? 0 : seq_step;
    split = sequential_step_split(cfg.task, step, dataset);
  } else {
    split = tasks::build_split(cfg.task, dataset);
  }
  const json key = train_artifact_key(cfg, split.remain, split.granularity);
  return cfg.output_dir + "/retrain-" + short_hash(key);
}

std::string cmd_train(const ExperimentConfig& cfg, bool retrain, int seq_step, bool force) {
  const data::Dataset dataset = data::make_dataset(cfg.dataset);
  ensure_dir(cfg.output_dir);
  if (!retrain) {
    return train_cached(cfg, dataset, dataset.all_train_indices(),
                        task_granularity(cfg, dataset), "pretrain", force);
  }
  tasks::SplitIndices split;
  if (cfg.task.mode == tasks::TaskMode::Sequential) {
    const int step = seq_step < 0 ? 0 : seq_step;
    split = sequential_step_split(cfg.task, step, dataset);
  } else {
    split = tasks::build_split_cached(cfg.task, dataset, cfg.data_dir() + "/splits");
  }
  return train_cached(cfg, dataset, split.remain, split.granularity, "retrain", force);
}

std::string unlearn_dir_for(const ExperimentConfig& cfg, const std::string& pretrained_dir) {
  json key;
  unlearn::to_json(key["unlearn"], cfg.unlearn_cfg);
  tasks::to_json(key["task"], cfg.task);
  key["pretrained"] = pretrained_dir;
  data::to_json(key["dataset"], cfg.dataset);
  return cfg.output_dir + "/unlearn-" + to_string(cfg.unlearn_cfg.method) + "-" +
         short_hash(key);
}

UnlearnArtifacts cmd_unlearn(const ExperimentConfig& cfg, const std::string& pretrained_dir,
                             bool force) {
  const data::Dataset dataset = data::make_dataset(cfg.dataset);
  const std::string pre_dir = pretrained_dir.empty() ? pretrain_dir_for(cfg) : pretrained_dir;
  if (!artifact_ready(pre_dir))
    throw ConfigError("pre-trained checkpoint not found at " + pre_dir +
                      " (run `mumis train` first)");
  zoo::Checkpoint pre = zoo::load_checkpoint(pre_dir);

  const tasks::SplitIndices split =
      tasks::build_split_cached(cfg.task, dataset, cfg.data_dir() + "/splits");

  UnlearnArtifacts art;
  const std::string dir = unlearn_dir_for(cfg, pre_dir);
  art.checkpoint_dir = dir;
  art.trace_csv = dir + "/trace.csv";
  art.summary_json = dir + "/trace_summary.json";
  art.audit_json = dir + "/audit.json";

  if (!force && artifact_ready(dir)) {
    unlearn::from_json(json::parse(read_text_file(art.audit_json)), art.audit);
    unlearn::enforce_audit(cfg.unlearn_cfg.method, art.audit);
    return art;
  }

  std::optional<unlearn::ProbeSets> probes;
  if (cfg.unlearn_cfg.probe_metrics)
    probes = unlearn::make_probe_sets(dataset, split, cfg.task, cfg.unlearn_cfg.probe_subsample,
                                      cfg.unlearn_cfg.seed);

  auto result = unlearn::run_unlearn(pre.model, dataset, split, cfg.task, cfg.unlearn_cfg, probes);

  ensure_dir(dir);
  zoo::CheckpointMeta meta = pre.meta;
  meta.train_seed = cfg.unlearn_cfg.seed;
  zoo::save_checkpoint(dir, result.model, meta);
  result.trace.write_csv(art.trace_csv);
  write_text_file(art.summary_json, result.trace.summary().dump(2) + "\n");
  json audit_j;
  unlearn::to_json(audit_j, result.audit);
  write_text_file(art.audit_json, audit_j.dump(2) + "\n");

  json key;
  unlearn::to_json(key["unlearn"], cfg.unlearn_cfg);
  tasks::to_json(key["task"], cfg.task);
  key["pretrained"] = pre_dir;
  data::to_json(key["dataset"], cfg.dataset);
  write_manifest(dir, "unlearn", key,
                 json{{"checkpoint_id", zoo::checkpoint_id(result.model)},
                      {"dataset_id", dataset.id},
                      {"config_hash", cfg.config_hash()},
                      {"stop_reason", to_string(result.trace.stop_reason)}});

  art.audit = result.audit;
  unlearn::enforce_audit(cfg.unlearn_cfg.method, art.audit);
  return art;
}

std::string cmd_evaluate(const ExperimentConfig& cfg, const std::string& unlearned_dir,
                         const std::string& retrain_dir, const std::string& pretrained_dir,
                         bool force) {
  const data::Dataset dataset = data::make_dataset(cfg.dataset);
  const tasks::SplitIndices split =
      tasks::build_split_cached(cfg.task, dataset, cfg.data_dir() + "/splits");

  const std::string pre_dir = pretrained_dir.empty() ? pretrain_dir_for(cfg) : pretrained_dir;
  const std::string re_dir = retrain_dir.empty() ? retrain_dir_for(cfg) : retrain_dir;
  const std::string un_dir =
      unlearned_dir.empty() ? unlearn_dir_for(cfg, pre_dir) : unlearned_dir;
  for (const auto& d : {pre_dir, re_dir, un_dir}) {
    if (!artifact_ready(d)) throw ConfigError("checkpoint not found at " + d);
  }

  zoo::Checkpoint pre = zoo::load_checkpoint(pre_dir);
  zoo::Checkpoint re = zoo::load_checkpoint(re_dir);
  zoo::Checkpoint un = zoo::load_checkpoint(un_dir);
  if (pre.meta.arch.num_classes != re.meta.arch.num_classes ||
      pre.meta.arch.num_classes != un.meta.arch.num_classes ||
      pre.meta.arch.tag != un.meta.arch.tag)
    throw ConfigError("checkpoints do not share an architecture/label space");

  double rte = std::numeric_limits<double>::quiet_NaN();
  if (file_exists(un_dir + "/trace_summary.json"))
    rte = json::parse(read_text_file(un_dir + "/trace_summary.json"))
              .value("rte_seconds", rte);

  metrics::MetricsReport report =
      metrics::evaluate_model(un.model, re.model, dataset, split, cfg.task, cfg.eval.seed,
                              cfg.eval.mia_pool_size, rte, to_string(cfg.unlearn_cfg.method));

  metrics::MetricsReport pre_row =
      metrics::evaluate_model(pre.model, re.model, dataset, split, cfg.task, cfg.eval.seed,
                              cfg.eval.mia_pool_size,
                              std::numeric_limits<double>::quiet_NaN(), "pretrain");
  metrics::MetricsReport re_row =
      metrics::evaluate_model(re.model, re.model, dataset, split, cfg.task, cfg.eval.seed,
                              cfg.eval.mia_pool_size,
                              std::numeric_limits<double>::quiet_NaN(), "retrain");

  json key;
  key["unlearned"] = un_dir;
  key["retrain"] = re_dir;
  key["pretrained"] = pre_dir;
  key["eval"] = json{{"mia_pool_size", cfg.eval.mia_pool_size}, {"seed", cfg.eval.seed}};
  const std::string dir = cfg.output_dir + "/eval-" + short_hash(key);
  const std::string report_path = dir + "/report.json";
  const std::vector<metrics::MetricsReport> rows = {pre_row, re_row, report};
  const std::string table = metrics::render_table(rows);
  std::cout << table;

  if (force || !artifact_ready(dir)) {
    ensure_dir(dir);
    json rj;
    metrics::to_json(rj, report);
    write_text_file(report_path, rj.dump(2) + "\n");
    write_text_file(dir + "/table.txt", table);
    write_text_file(dir + "/table.csv", metrics::render_table_csv(rows));
    write_manifest(dir, "eval", key, json{{"config_hash", cfg.config_hash()}});
  }
  return report_path;
}

// ---------------------------------------------------------------------------
// Sequential protocol
// ---------------------------------------------------------------------------

SequentialOutcome cmd_sequential(const ExperimentConfig& cfg, bool force) {
  if (cfg.task.mode != tasks::TaskMode::Sequential)
    throw ConfigError("cmd_sequential requires a sequential task");
  const data::Dataset dataset = data::make_dataset(cfg.dataset);
  ensure_dir(cfg.output_dir);

  SequentialOutcome outcome;
  json key;
  tasks::to_json(key["task"], cfg.task);
  data::to_json(key["dataset"], cfg.dataset);
  unlearn::to_json(key["unlearn"], cfg.unlearn_cfg);
  outcome.report_dir = cfg.output_dir + "/sequential-" + short_hash(key);
  ensure_dir(outcome.report_dir);

  const std::string pre_dir = cmd_train(cfg, false, -1, false);
  zoo::Checkpoint current = zoo::load_checkpoint(pre_dir);
  zoo::Checkpoint pretrained = zoo::load_checkpoint(pre_dir);

  const int steps = static_cast<int>(cfg.task.sequence.size());
  for (int step = 0; step < steps; ++step) {
    const tasks::SequenceStep st = tasks::advance_sequence(cfg.task, step);
    tasks::SplitIndices split = sequential_step_split(cfg.task, step, dataset);

    // retrain oracle for everything forgotten up to and including this step
    const std::string oracle_dir = train_cached(cfg, dataset, split.remain, split.granularity,
                                                "retrain-seq" + std::to_string(step), force);
    zoo::Checkpoint oracle = zoo::load_checkpoint(oracle_dir);

    // unlearn the current request starting from the previous step's model
    unlearn::UnlearnConfig ucfg = cfg.unlearn_cfg;
    ucfg.seed = derive_seed(cfg.unlearn_cfg.seed, "seq" + std::to_string(step));
    auto result = unlearn::run_unlearn(current.model, dataset, split, st.request, ucfg);
    unlearn::enforce_audit(ucfg.method, result.audit);

    const std::string step_dir = outcome.report_dir + "/step_" + std::to_string(step);
    ensure_dir(step_dir);
    zoo::CheckpointMeta meta = current.meta;
    meta.train_seed = ucfg.seed;
    zoo::save_checkpoint(step_dir + "/checkpoint", result.model, meta);
    result.trace.write_csv(step_dir + "/trace.csv");
    write_text_file(step_dir + "/trace_summary.json", result.trace.summary().dump(2) + "\n");
    json audit_j;
    unlearn::to_json(audit_j, result.audit);
    write_text_file(step_dir + "/audit.json", audit_j.dump(2) + "\n");

    SequentialStepOutcome so;
    so.step = step;
    so.cumulative = st.cumulative;
    so.unlearned_dir = step_dir + "/checkpoint";
    so.retrain_dir = oracle_dir;
    so.report = metrics::evaluate_model(result.model, oracle.model, dataset, split, st.request,
                                        cfg.eval.seed, cfg.eval.mia_pool_size,
                                        result.trace.rte_seconds,
                                        to_string(ucfg.method) + "-step" + std::to_string(step));
    so.kl_pretrain = metrics::kl_divergence(oracle.model, pretrained.model, dataset);
    if (!st.cumulative.empty()) {
      const auto res = metrics::resilience_metrics(result.model, oracle.model, dataset,
                                                   st.cumulative, split.granularity);
      so.report.fgta = res.fgta;
      so.report.fgva = res.fgva;
      so.report.resilience_avg_gap = res.resilience_avg_gap;
    }
    json rj;
    metrics::to_json(rj, so.report);
    rj["cumulative_forgotten"] = st.cumulative;
    rj["kl_pretrain_to_retrain"] = so.kl_pretrain;
    write_text_file(step_dir + "/report.json", rj.dump(2) + "\n");

    current.model = std::move(result.model);
    outcome.steps.push_back(std::move(so));
  }

  // per-step charts: utility gap, resilience gap, KL
  std::vector<double> xs, util, resil, kls, kls_pre;
  for (const auto& s : outcome.steps) {
    xs.push_back(static_cast<double>(s.step + 1));
    util.push_back(s.report.avg_gap);
    resil.push_back(s.report.resilience_avg_gap.value_or(
        std::numeric_limits<double>::quiet_NaN()));
    kls.push_back(s.report.kl_div);
    kls_pre.push_back(s.kl_pretrain);
  }
  plot::ChartOptions opts;
  opts.xlabel = "request";
  opts.title = "Utility Avg. Gap per request";
  opts.ylabel = "Avg. Gap";
  plot::line_chart(outcome.report_dir + "/utility_gap", {{"unlearned", xs, util}}, opts);
  opts.title = "Resilience Avg. Gap per request";
  opts.ylabel = "Resilience Avg. Gap";
  plot::line_chart(outcome.report_dir + "/resilience_gap", {{"unlearned", xs, resil}}, opts);
  opts.title = "KL divergence to the retrain oracle";
  opts.ylabel = "KL";
  plot::line_chart(outcome.report_dir + "/kl_divergence",
                   {{"unlearned", xs, kls}, {"pretrained", xs, kls_pre}}, opts);
  return outcome;
}

// ---------------------------------------------------------------------------
// Analyses
// ---------------------------------------------------------------------------

namespace {

std::vector<int> sample_indices(Rng& rng, int universe, int count) {
  std::vector<int> all(static_cast<std::size_t>(universe));
  std::iota(all.begin(), all.end(), 0);
  rng.shuffle(all);
  all.resize(static_cast<std::size_t>(std::min(universe, count)));
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace

int cmd_analyze(const ExperimentConfig& cfg, const std::string& what,
                const std::string& checkpoint_dir, bool force) {
  const data::Dataset dataset = data::make_dataset(cfg.dataset);
  const std::string out = cfg.output_dir + "/analysis";
  ensure_dir(out);
  const std::string pre_dir =
      checkpoint_dir.empty() ? pretrain_dir_for(cfg) : checkpoint_dir;

  const std::string task_tag = tasks::to_string(cfg.task.mode);
  const std::string stem =
      task_tag + "_" + to_string(cfg.unlearn_cfg.method) + "_" + what + "_" +
      std::to_string(cfg.seed);

  if (what == "rise_fall") {
    const tasks::SplitIndices split =
        tasks::build_split_cached(cfg.task, dataset, cfg.data_dir() + "/splits");
    zoo::Checkpoint pre = zoo::load_checkpoint(pre_dir);
    zoo::Checkpoint re = zoo::load_checkpoint(retrain_dir_for(cfg));
    const Tensor x = dataset.batch(data::Split::Train, split.forget);
    const auto labels =
        dataset.batch_labels(data::Split::Train, split.forget, split.granularity);
    const auto rec_pre = sensitivity::sensitivity_records(pre.model, x, labels, split.forget);
    const auto rec_re = sensitivity::sensitivity_records(re.model, x, labels, split.forget);
    sensitivity::export_records_csv(out + "/" + stem + "_pretrain.csv", rec_pre);
    sensitivity::export_records_csv(out + "/" + stem + "_retrain.csv", rec_re);

    json j;
    for (auto q : {analysis::Quantity::TargetNorm, analysis::Quantity::IrrelevantMeanNorm,
                   analysis::Quantity::Gap}) {
      const auto s = analysis::rise_fall(rec_re, rec_pre, q);
      j[analysis::to_string(q)] =
          json{{"rise_pct", s.rise_pct}, {"fall_pct", s.fall_pct}, {"n", s.n}};
      std::cout << analysis::to_string(q) << ": rise " << s.rise_pct << "% fall " << s.fall_pct
                << "% over " << s.n << " samples\n";
    }
    // report the retrain-generalization regime for sub-class scenarios
    if (cfg.task.mode == tasks::TaskMode::SubClass) {
      const auto fa = zoo::evaluate_accuracy(
          re.model, dataset, data::Split::Test,
          dataset.test_indices_of(split.forget_classes), split.granularity);
      j["retrain_fa"] = fa;
      j["retrain_generalization"] = fa >= 50.0 ? "high" : "low";
    }
    write_text_file(out + "/" + stem + ".json", j.dump(2) + "\n");
    return 0;
  }

  if (what == "before_after") {
    zoo::Checkpoint pre = zoo::load_checkpoint(pre_dir);
    nn::Model initial(pre.meta.arch, derive_seed(cfg.train_recipe.seed, "init"));
    Rng rng(derive_seed(cfg.seed, "analysis.before_after"));
    const auto subset = sample_indices(rng, dataset.train_size(), 512);
    const auto rep = analysis::before_after_norm_report(initial, pre.model, dataset, subset,
                                                        out + "/" + stem);
    json j;
    j["before"] = json{{"mean", rep.before.mean}, {"median", rep.before.median},
                       {"q10", rep.before.q10},   {"q90", rep.before.q90},
                       {"min", rep.before.min},   {"max", rep.before.max}};
    j["after"] = json{{"mean", rep.after.mean}, {"median", rep.after.median},
                      {"q10", rep.after.q10},   {"q90", rep.after.q90},
                      {"min", rep.after.min},   {"max", rep.after.max}};
    j["growth_factor"] = rep.before.mean > 0 ? rep.after.mean / rep.before.mean : 0.0;
    write_text_file(out + "/" + stem + ".json", j.dump(2) + "\n");
    std::cout << "mean ||df/dx||_F grew from " << rep.before.mean << " to " << rep.after.mean
              << "\n";
    return 0;
  }

  if (what == "ablation") {
    const tasks::SplitIndices split =
        tasks::build_split_cached(cfg.task, dataset, cfg.data_dir() + "/splits");
    zoo::Checkpoint pre = zoo::load_checkpoint(pre_dir);
    zoo::Checkpoint re = zoo::load_checkpoint(retrain_dir_for(cfg));
    std::vector<metrics::MetricsReport> rows;
    for (auto variant : {sensitivity::LossVariant::TcOnly, sensitivity::LossVariant::OcOnly,
                         sensitivity::LossVariant::Full}) {
      rows.push_back(analysis::ablation_run(pre.model, re.model, dataset, split, cfg.task,
                                            cfg.unlearn_cfg, variant, cfg.eval.seed,
                                            cfg.eval.mia_pool_size));
    }
    const std::string table = metrics::render_table(rows);
    std::cout << table;
    write_text_file(out + "/" + stem + ".txt", table);
    write_text_file(out + "/" + stem + ".csv", metrics::render_table_csv(rows));
    return 0;
  }

  if (what == "sweep") {
    const tasks::SplitIndices split =
        tasks::build_split_cached(cfg.task, dataset, cfg.data_dir() + "/splits");
    zoo::Checkpoint pre = zoo::load_checkpoint(pre_dir);
    zoo::Checkpoint re = zoo::load_checkpoint(retrain_dir_for(cfg));
    std::vector<double> lrs = cfg.analysis.sweep_lrs;
    if (lrs.empty()) lrs = {cfg.unlearn_cfg.lr};
    analysis::sweep_stop_ratio(pre.model, re.model, dataset, split, cfg.task, cfg.unlearn_cfg,
                               cfg.analysis.sweep_stop_ratios, lrs, cfg.eval.seed,
                               cfg.eval.mia_pool_size, out + "/" + stem);
    std::cout << "sweep written to " << out << "/" << stem << ".csv\n";
    return 0;
  }

  if (what == "saliency") {
    const tasks::SplitIndices split =
        tasks::build_split_cached(cfg.task, dataset, cfg.data_dir() + "/splits");
    zoo::Checkpoint ckpt = zoo::load_checkpoint(pre_dir);
    Rng rng(derive_seed(cfg.seed, "analysis.saliency"));
    std::vector<int> forget = split.forget;
    rng.shuffle(forget);
    forget.resize(std::min<std::size_t>(forget.size(),
                                        static_cast<std::size_t>(cfg.analysis.saliency_count)));
    const Tensor x = dataset.batch(data::Split::Train, forget);
    const auto labels = dataset.batch_labels(data::Split::Train, forget, split.granularity);
    analysis::saliency_export(ckpt.model, x, labels, out, stem + "_");
    std::cout << "saliency maps written to " << out << "\n";
    return 0;
  }

  if (what == "similarity") {
    zoo::Checkpoint ckpt = zoo::load_checkpoint(pre_dir);
    Rng rng(derive_seed(cfg.seed, "analysis.similarity"));
    const auto subset = sample_indices(rng, dataset.train_size(), cfg.analysis.similarity_samples);
    const data::Granularity g = task_granularity(cfg, dataset);
    const Tensor x = dataset.batch(data::Split::Train, subset);
    const auto labels = dataset.batch_labels(data::Split::Train, subset, g);
    json j;
    const std::pair<sensitivity::GradMetric, std::string> metrics_list[] = {
        {sensitivity::GradMetric::CeLoss, "ce_loss"},
        {sensitivity::GradMetric::Logit, "logit"},
        {sensitivity::GradMetric::TcSens, "tc_sens"},
        {sensitivity::GradMetric::OcSens, "oc_sens"},
    };
    for (const auto& [metric, name] : metrics_list) {
      const auto sim = sensitivity::pairwise_grad_similarity(ckpt.model, x, labels, metric);
      analysis::export_similarity(sim, out + "/" + stem + "_" + name);
      const auto summary = analysis::summarize_similarity(sim, labels);
      j[name] = json{{"inter_mean_abs", summary.inter_mean_abs},
                     {"intra_mean", summary.intra_mean},
                     {"flagged", sim.flagged.size()}};
      std::cout << name << ": inter |cos| " << summary.inter_mean_abs << ", intra cos "
                << summary.intra_mean << "\n";
    }
    write_text_file(out + "/" + stem + ".json", j.dump(2) + "\n");
    return 0;
  }

  (void)force;
  throw ConfigError("unknown analysis: " + what +
                    " (expected rise_fall|before_after|ablation|sweep|saliency|similarity)");
}

}  // namespace mumis::experiment
