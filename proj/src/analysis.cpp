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
#include "mumis/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "mumis/plot.hpp"
#include "mumis/util.hpp"

namespace mumis::analysis {

std::string to_string(Quantity q) {
  switch (q) {
    case Quantity::TargetNorm: return "target_norm";
    case Quantity::IrrelevantMeanNorm: return "irrelevant_mean_norm";
    case Quantity::Gap: return "gap";
  }
  return "unknown";
}

namespace {

double pick_quantity(const sensitivity::SensitivityRecord& r, Quantity q) {
  switch (q) {
    case Quantity::TargetNorm: return r.target_norm;
    case Quantity::IrrelevantMeanNorm: return r.irrelevant_mean_norm;
    case Quantity::Gap: return r.gap;
  }
  return 0.0;
}

}  // namespace

RiseFallSummary rise_fall(const std::vector<sensitivity::SensitivityRecord>& retrain_records,
                          const std::vector<sensitivity::SensitivityRecord>& pretrain_records,
                          Quantity quantity) {
  if (retrain_records.size() != pretrain_records.size() || retrain_records.empty())
    throw ConfigError("rise_fall: record lists must be non-empty and aligned");
  int rises = 0;
  for (std::size_t i = 0; i < retrain_records.size(); ++i) {
    if (retrain_records[i].sample_id != pretrain_records[i].sample_id)
      throw ConfigError("rise_fall: sample ids are misaligned at position " + std::to_string(i));
    const double delta =
        pick_quantity(retrain_records[i], quantity) - pick_quantity(pretrain_records[i], quantity);
    if (delta > 0.0) ++rises;  // ties count as fall
  }
  RiseFallSummary s;
  s.quantity = quantity;
  s.n = static_cast<int>(retrain_records.size());
  s.rise_pct = 100.0 * rises / s.n;
  s.fall_pct = 100.0 - s.rise_pct;
  return s;
}

DistributionStats summarize(std::vector<double> values) {
  if (values.empty()) throw ConfigError("summarize: empty value list");
  DistributionStats s;
  std::sort(values.begin(), values.end());
  s.min = values.front();
  s.max = values.back();
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  auto quantile = [&](double q) {
    const double pos = q * (static_cast<double>(values.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(values.size() - 1, lo + 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
  };
  s.median = quantile(0.5);
  s.q10 = quantile(0.1);
  s.q90 = quantile(0.9);
  return s;
}

NormReport before_after_norm_report(nn::Model& initial, nn::Model& trained,
                                    const data::Dataset& dataset,
                                    const std::vector<int>& train_subset,
                                    const std::string& out_prefix) {
  if (train_subset.empty()) throw ConfigError("before_after_norm_report: empty subset");
  if (initial.arch().tag != trained.arch().tag ||
      initial.num_classes() != trained.num_classes() ||
      initial.arch().input_numel() != trained.arch().input_numel())
    throw ConfigError("before_after_norm_report: architecture mismatch");

  NormReport rep;
  constexpr std::size_t kChunk = 128;
  for (std::size_t i = 0; i < train_subset.size(); i += kChunk) {
    const std::size_t end = std::min(train_subset.size(), i + kChunk);
    const std::vector<int> chunk(train_subset.begin() + static_cast<std::ptrdiff_t>(i),
                                 train_subset.begin() + static_cast<std::ptrdiff_t>(end));
    const Tensor x = dataset.batch(data::Split::Train, chunk);
    for (double v : sensitivity::jacobian_fro_norms(initial, x)) rep.before_norms.push_back(v);
    for (double v : sensitivity::jacobian_fro_norms(trained, x)) rep.after_norms.push_back(v);
  }
  rep.before = summarize(rep.before_norms);
  rep.after = summarize(rep.after_norms);

  if (!out_prefix.empty()) {
    plot::ChartOptions opts;
    opts.title = "Input sensitivity before and after training";
    opts.xlabel = "||df/dx||_F";
    opts.ylabel = "count";
    opts.log_x = true;
    plot::histogram_panels(out_prefix, rep.before_norms, rep.after_norms, "initial", "trained",
                           30, opts);
  }
  return rep;
}

metrics::MetricsReport ablation_run(const nn::Model& pretrained, nn::Model& retrain_oracle,
                                    const data::Dataset& dataset,
                                    const tasks::SplitIndices& split,
                                    const tasks::TaskSpec& spec, unlearn::UnlearnConfig cfg,
                                    sensitivity::LossVariant variant, std::uint64_t eval_seed,
                                    int mia_pool_size) {
  cfg.method = unlearn::Method::MuMis;
  cfg.variant = variant;
  auto result = unlearn::run_unlearn(pretrained, dataset, split, spec, cfg);
  const std::string name =
      variant == sensitivity::LossVariant::Full
          ? "mumis"
          : (variant == sensitivity::LossVariant::TcOnly ? "tc_only" : "oc_only");
  return metrics::evaluate_model(result.model, retrain_oracle, dataset, split, spec, eval_seed,
                                 mia_pool_size, result.trace.rte_seconds, name);
}

SweepResult sweep_stop_ratio(const nn::Model& pretrained, nn::Model& retrain_oracle,
                             const data::Dataset& dataset, const tasks::SplitIndices& split,
                             const tasks::TaskSpec& spec, const unlearn::UnlearnConfig& base_cfg,
                             const std::vector<double>& stop_ratios,
                             const std::vector<double>& lrs, std::uint64_t eval_seed,
                             int mia_pool_size, const std::string& out_prefix) {
  if (stop_ratios.empty() || lrs.empty()) throw ConfigError("sweep grids must be non-empty");
  SweepResult res;
  res.stop_ratios = stop_ratios;
  res.lrs = lrs;
  for (double lr : lrs) {
    for (double delta : stop_ratios) {
      SweepCell cell;
      cell.stop_ratio = delta;
      cell.lr = lr;
      try {
        unlearn::UnlearnConfig cfg = base_cfg;
        cfg.lr = lr;
        cfg.stop_ratio = delta;
        auto run = unlearn::run_unlearn(pretrained, dataset, split, spec, cfg);
        if (run.trace.stop_reason == unlearn::StopReason::Diverged)
          throw TrainError("unlearning diverged");
        cell.report =
            metrics::evaluate_model(run.model, retrain_oracle, dataset, split, spec, eval_seed,
                                    mia_pool_size, run.trace.rte_seconds, "mumis");
      } catch (const std::exception& e) {
        cell.failed = true;
        cell.error = e.what();
      }
      res.cells.push_back(std::move(cell));
    }
  }

  if (!out_prefix.empty()) {
    std::ofstream csv(out_prefix + ".csv", std::ios::trunc);
    csv << "lr,stop_ratio,failed,avg_gap,fa,ra,ta,mia,rte_seconds,error\n";
    for (const auto& c : res.cells) {
      csv << format_double(c.lr, 10) << ',' << format_double(c.stop_ratio, 10) << ','
          << (c.failed ? 1 : 0) << ',';
      if (c.report) {
        csv << format_double(c.report->avg_gap, 10) << ',' << format_double(c.report->fa, 10)
            << ',' << format_double(c.report->ra, 10) << ',' << format_double(c.report->ta, 10)
            << ',' << format_double(c.report->mia, 10) << ','
            << format_double(c.report->rte_seconds, 10) << ',';
      } else {
        csv << ",,,,,,";
      }
      csv << c.error << '\n';
    }

    std::vector<plot::Series> series;
    std::size_t pos = 0;
    for (double lr : lrs) {
      plot::Series s;
      s.label = "lr=" + format_double(lr, 6);
      for (double delta : stop_ratios) {
        const SweepCell& c = res.cells[pos++];
        if (c.report) {
          s.x.push_back(delta);
          s.y.push_back(c.report->avg_gap);
        }
      }
      series.push_back(std::move(s));
    }
    plot::ChartOptions opts;
    opts.title = "Avg. Gap vs stopping threshold ratio";
    opts.xlabel = "stop ratio";
    opts.ylabel = "Avg. Gap";
    plot::line_chart(out_prefix, series, opts);
  }
  return res;
}

std::vector<std::vector<double>> saliency_export(nn::Model& model, const Tensor& samples,
                                                 const std::vector<int>& labels,
                                                 const std::string& dir,
                                                 const std::string& stem_prefix) {
  if (samples.ndim() != 4)
    throw ConfigError("saliency_export expects image batches [N, C, H, W]");
  const int n = samples.dim(0);
  const int h = samples.dim(2), w = samples.dim(3);
  const int c = samples.dim(1);
  if (!dir.empty()) ensure_dir(dir);

  // per-sample |input gradient| of the selected logit
  auto xv = ag::leaf(samples, true);
  const auto logits = model.forward(xv, false);
  auto table = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    (*table)[static_cast<std::size_t>(i)] =
        static_cast<std::int64_t>(i) * model.num_classes() + labels[static_cast<std::size_t>(i)];
  const auto sel = ag::gather(logits, table, {n});
  const auto grad = ag::backward(ag::sum_all(sel), {xv})[0];

  std::vector<std::vector<double>> maps;
  maps.reserve(static_cast<std::size_t>(n));
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  for (int i = 0; i < n; ++i) {
    std::vector<double> heat(static_cast<std::size_t>(plane), 0.0);
    // channel-wise max of |grad|
    for (int ch = 0; ch < c; ++ch) {
      const double* g = grad->value.data() + (static_cast<std::int64_t>(i) * c + ch) * plane;
      for (std::int64_t p = 0; p < plane; ++p)
        heat[static_cast<std::size_t>(p)] = std::max(heat[static_cast<std::size_t>(p)], std::abs(g[p]));
    }
    const double mx = *std::max_element(heat.begin(), heat.end());
    if (mx > 0.0) {
      for (double& v : heat) v /= mx;
    }
    if (!dir.empty()) {
      const std::string stem = dir + "/" + stem_prefix + std::to_string(i);
      plot::save_heatmap_png(stem + "_saliency.png", heat, w, h);
      // normalized input image next to it
      std::vector<double> img(static_cast<std::size_t>(plane));
      const double* x0 = samples.data() + static_cast<std::int64_t>(i) * c * plane;
      double lo = x0[0], hi = x0[0];
      for (std::int64_t p = 0; p < plane; ++p) {
        lo = std::min(lo, x0[p]);
        hi = std::max(hi, x0[p]);
      }
      const double span = hi > lo ? hi - lo : 1.0;
      for (std::int64_t p = 0; p < plane; ++p)
        img[static_cast<std::size_t>(p)] = (x0[p] - lo) / span;
      plot::save_grayscale_png(stem + "_input.png", img, w, h);
    }
    maps.push_back(std::move(heat));
  }
  return maps;
}

void export_similarity(const sensitivity::SimilarityResult& sim, const std::string& prefix) {
  const auto n = sim.cosine.rows();
  std::vector<double> heat(static_cast<std::size_t>(n * n), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = sim.cosine(i, j);
      heat[static_cast<std::size_t>(i * n + j)] = std::isnan(v) ? 0.5 : (v + 1.0) / 2.0;
    }
  }
  plot::save_heatmap_png(prefix + ".png", heat, static_cast<int>(n), static_cast<int>(n), 6);
  std::ofstream csv(prefix + ".csv", std::ios::trunc);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      csv << format_double(sim.cosine(i, j), 8);
      csv << (j + 1 == n ? '\n' : ',');
    }
  }
}

SimilaritySummary summarize_similarity(const sensitivity::SimilarityResult& sim,
                                       const std::vector<int>& labels) {
  const auto n = sim.cosine.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw ConfigError("summarize_similarity: labels do not match matrix size");
  double inter = 0.0, intra = 0.0;
  std::int64_t n_inter = 0, n_intra = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = sim.cosine(i, j);
      if (std::isnan(v)) continue;
      if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]) {
        intra += v;
        ++n_intra;
      } else {
        inter += std::abs(v);
        ++n_inter;
      }
    }
  }
  SimilaritySummary s;
  s.inter_mean_abs = n_inter > 0 ? inter / static_cast<double>(n_inter) : 0.0;
  s.intra_mean = n_intra > 0 ? intra / static_cast<double>(n_intra) : 0.0;
  return s;
}

}  // namespace mumis::analysis
