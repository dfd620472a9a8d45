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
#include "mumis/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <sstream>

#include "mumis/modelzoo.hpp"
#include "mumis/util.hpp"

namespace mumis::metrics {

using nlohmann::json;

double avg_gap(const AccTriple& a, const AccTriple& b) {
  return (std::abs(a.fa - b.fa) + std::abs(a.ra - b.ra) + std::abs(a.ta - b.ta)) / 3.0;
}

AccTriple accuracy_triple(nn::Model& model, const data::Dataset& dataset,
                          const tasks::SplitIndices& split, const tasks::TaskSpec& spec) {
  AccTriple t;
  const data::Granularity g = split.granularity;
  if (spec.mode == tasks::TaskMode::RandomSubset) {
    t.fa = zoo::evaluate_accuracy(model, dataset, data::Split::Train, split.forget, g);
    t.ra = zoo::evaluate_accuracy(model, dataset, data::Split::Train, split.remain, g);
  } else {
    const auto forget_valid = dataset.test_indices_of(split.forget_classes);
    // RA on the held-out split, excluding the forgotten classes and any class
    // already removed by earlier sequential requests.
    std::vector<int> dropped = split.forget_classes;
    dropped.insert(dropped.end(), split.excluded_classes.begin(),
                   split.excluded_classes.end());
    std::vector<char> is_dropped(static_cast<std::size_t>(dataset.num_fine), 0);
    for (int c : dropped) is_dropped[static_cast<std::size_t>(c)] = 1;
    std::vector<int> remain_valid;
    for (int i : split.test) {
      if (!is_dropped[static_cast<std::size_t>(
              dataset.test_labels[static_cast<std::size_t>(i)])])
        remain_valid.push_back(i);
    }
    t.fa = zoo::evaluate_accuracy(model, dataset, data::Split::Test, forget_valid, g);
    t.ra = zoo::evaluate_accuracy(model, dataset, data::Split::Test, remain_valid, g);
  }
  t.ta = zoo::evaluate_accuracy(model, dataset, data::Split::Test, split.test, g);
  return t;
}

// ---------------------------------------------------------------------------
// Membership inference
// ---------------------------------------------------------------------------

namespace {

/// Per-sample attack features: max softmax probability, prediction entropy,
/// cross-entropy loss against the true label.
Eigen::MatrixXd attack_features(nn::Model& model, const data::Dataset& dataset,
                                data::Split split, const std::vector<int>& indices,
                                data::Granularity granularity) {
  const int c = model.num_classes();
  Eigen::MatrixXd feats(static_cast<Eigen::Index>(indices.size()), 3);
  constexpr std::size_t kChunk = 256;
  for (std::size_t i = 0; i < indices.size(); i += kChunk) {
    const std::size_t end = std::min(indices.size(), i + kChunk);
    const std::vector<int> chunk(indices.begin() + static_cast<std::ptrdiff_t>(i),
                                 indices.begin() + static_cast<std::ptrdiff_t>(end));
    const Tensor probs = model.predict_probs(dataset.batch(split, chunk));
    const auto labels = dataset.batch_labels(split, chunk, granularity);
    for (std::size_t k = 0; k < chunk.size(); ++k) {
      const double* p = probs.data() + static_cast<std::int64_t>(k) * c;
      double mx = 0.0, ent = 0.0;
      for (int j = 0; j < c; ++j) {
        mx = std::max(mx, p[j]);
        if (p[j] > 0.0) ent -= p[j] * std::log(p[j]);
      }
      const double ce = -std::log(std::max(p[labels[k]], 1e-300));
      const auto row = static_cast<Eigen::Index>(i + k);
      feats(row, 0) = mx;
      feats(row, 1) = ent;
      feats(row, 2) = ce;
    }
  }
  return feats;
}

struct Logistic {
  Eigen::VectorXd w;  // includes bias as last component
  Eigen::VectorXd mean, stdev;
  bool degenerate = false;

  Eigen::VectorXd apply(const Eigen::MatrixXd& feats) const {
    Eigen::MatrixXd z = feats;
    for (Eigen::Index j = 0; j < z.cols(); ++j)
      z.col(j) = (z.col(j).array() - mean(j)) / stdev(j);
    Eigen::VectorXd logits = z * w.head(w.size() - 1);
    logits.array() += w(w.size() - 1);
    return (1.0 / (1.0 + (-logits.array()).exp())).matrix();
  }
};

/// Ridge-stabilized Newton iterations; deterministic.
Logistic fit_logistic(const Eigen::MatrixXd& x_raw, const Eigen::VectorXd& y) {
  Logistic model;
  const Eigen::Index n = x_raw.rows(), d = x_raw.cols();
  model.mean = x_raw.colwise().mean();
  model.stdev.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double var =
        (x_raw.col(j).array() - model.mean(j)).square().sum() / std::max<Eigen::Index>(1, n - 1);
    model.stdev(j) = std::sqrt(var);
    if (!(model.stdev(j) > 1e-12)) {
      model.stdev(j) = 1.0;
      model.degenerate = true;
    }
  }
  if (y.minCoeff() == y.maxCoeff()) model.degenerate = true;

  Eigen::MatrixXd x(n, d + 1);
  for (Eigen::Index j = 0; j < d; ++j)
    x.col(j) = (x_raw.col(j).array() - model.mean(j)) / model.stdev(j);
  x.col(d).setOnes();

  Eigen::VectorXd w = Eigen::VectorXd::Zero(d + 1);
  constexpr double kRidge = 1e-4;
  for (int iter = 0; iter < 50; ++iter) {
    Eigen::VectorXd p = (1.0 / (1.0 + (-(x * w).array()).exp())).matrix();
    Eigen::VectorXd grad = x.transpose() * (p - y) + kRidge * w;
    Eigen::VectorXd s = (p.array() * (1.0 - p.array())).max(1e-9).matrix();
    Eigen::MatrixXd h = x.transpose() * s.asDiagonal() * x;
    h.diagonal().array() += kRidge;
    const Eigen::VectorXd delta = h.ldlt().solve(grad);
    w -= delta;
    if (delta.norm() < 1e-10) break;
  }
  model.w = w;
  return model;
}

}  // namespace

MiaResult mia_score(nn::Model& attacked, const data::Dataset& dataset,
                    const std::vector<int>& forget_train, const std::vector<int>& member_pool,
                    const std::vector<int>& nonmember_pool, data::Granularity granularity,
                    std::uint64_t seed) {
  if (member_pool.empty() || nonmember_pool.empty())
    throw ConfigError("mia_score: attack pools must be non-empty");
  if (forget_train.empty()) throw ConfigError("mia_score: forget set must be non-empty");

  // balance pools
  Rng rng(derive_seed(seed, "mia.pools"));
  std::vector<int> members = member_pool, nonmembers = nonmember_pool;
  const std::size_t pool = std::min(members.size(), nonmembers.size());
  auto shrink = [&](std::vector<int>& v) {
    if (v.size() > pool) {
      rng.shuffle(v);
      v.resize(pool);
      std::sort(v.begin(), v.end());
    }
  };
  shrink(members);
  shrink(nonmembers);

  const Eigen::MatrixXd fm =
      attack_features(attacked, dataset, data::Split::Train, members, granularity);
  const Eigen::MatrixXd fn =
      attack_features(attacked, dataset, data::Split::Test, nonmembers, granularity);
  Eigen::MatrixXd x(fm.rows() + fn.rows(), fm.cols());
  x << fm, fn;
  Eigen::VectorXd y(x.rows());
  y.head(fm.rows()).setOnes();
  y.tail(fn.rows()).setZero();

  const Logistic attacker = fit_logistic(x, y);
  const Eigen::MatrixXd ff =
      attack_features(attacked, dataset, data::Split::Train, forget_train, granularity);
  const Eigen::VectorXd p = attacker.apply(ff);
  const double hits = (p.array() > 0.5).count();
  MiaResult r;
  r.score = 100.0 * hits / static_cast<double>(p.size());
  r.degenerate = attacker.degenerate;
  return r;
}

double kl_divergence(nn::Model& retrained, nn::Model& unlearned, const data::Dataset& dataset) {
  if (retrained.num_classes() != unlearned.num_classes())
    throw ConfigError("kl_divergence: label spaces differ");
  const int c = retrained.num_classes();
  constexpr double kClamp = 1e-12;
  double total = 0.0;
  std::int64_t count = 0;
  constexpr std::size_t kChunk = 256;
  for (data::Split split : {data::Split::Train, data::Split::Test}) {
    const auto indices = split == data::Split::Train ? dataset.all_train_indices()
                                                     : dataset.all_test_indices();
    for (std::size_t i = 0; i < indices.size(); i += kChunk) {
      const std::size_t end = std::min(indices.size(), i + kChunk);
      const std::vector<int> chunk(indices.begin() + static_cast<std::ptrdiff_t>(i),
                                   indices.begin() + static_cast<std::ptrdiff_t>(end));
      const Tensor batch = dataset.batch(split, chunk);
      const Tensor p = retrained.predict_probs(batch);
      const Tensor q = unlearned.predict_probs(batch);
      for (std::size_t k = 0; k < chunk.size(); ++k) {
        for (int j = 0; j < c; ++j) {
          const double pv = std::max(p.at(static_cast<std::int64_t>(k) * c + j), kClamp);
          const double qv = std::max(q.at(static_cast<std::int64_t>(k) * c + j), kClamp);
          total += pv * std::log(pv / qv);
        }
        ++count;
      }
    }
  }
  return total / static_cast<double>(count);
}

ResilienceMetrics resilience_metrics(nn::Model& model, nn::Model& oracle,
                                     const data::Dataset& dataset,
                                     const std::vector<int>& cumulative_classes,
                                     data::Granularity granularity) {
  if (cumulative_classes.empty())
    throw ConfigError("resilience metrics need a non-empty cumulative forgotten set");
  const auto train_idx = dataset.train_indices_of(cumulative_classes);
  const auto test_idx = dataset.test_indices_of(cumulative_classes);
  ResilienceMetrics r;
  r.fgta = zoo::evaluate_accuracy(model, dataset, data::Split::Train, train_idx, granularity);
  r.fgva = zoo::evaluate_accuracy(model, dataset, data::Split::Test, test_idx, granularity);
  const double o_fgta =
      zoo::evaluate_accuracy(oracle, dataset, data::Split::Train, train_idx, granularity);
  const double o_fgva =
      zoo::evaluate_accuracy(oracle, dataset, data::Split::Test, test_idx, granularity);
  r.resilience_avg_gap = (std::abs(r.fgta - o_fgta) + std::abs(r.fgva - o_fgva)) / 2.0;
  return r;
}

MetricsReport evaluate_model(nn::Model& model, nn::Model& retrain_oracle,
                             const data::Dataset& dataset, const tasks::SplitIndices& split,
                             const tasks::TaskSpec& spec, std::uint64_t seed, int mia_pool_size,
                             double rte_seconds, const std::string& method_name) {
  MetricsReport rep;
  rep.method = method_name;
  const AccTriple mine = accuracy_triple(model, dataset, split, spec);
  const AccTriple ref = accuracy_triple(retrain_oracle, dataset, split, spec);
  rep.fa = mine.fa;
  rep.ra = mine.ra;
  rep.ta = mine.ta;
  rep.avg_gap = avg_gap(mine, ref);

  // MIA pools: member = remaining train data, non-member = held-out split.
  Rng rng(derive_seed(seed, "mia.subsample"));
  auto cap = [&](std::vector<int> v) {
    if (mia_pool_size > 0 && static_cast<int>(v.size()) > mia_pool_size) {
      rng.shuffle(v);
      v.resize(static_cast<std::size_t>(mia_pool_size));
      std::sort(v.begin(), v.end());
    }
    return v;
  };
  const auto members = cap(split.remain);
  const auto nonmembers = cap(split.test);
  const MiaResult mia =
      mia_score(model, dataset, split.forget, members, nonmembers, split.granularity, seed);
  rep.mia = mia.score;
  rep.mia_degenerate = mia.degenerate;

  rep.kl_div = kl_divergence(retrain_oracle, model, dataset);
  rep.rte_seconds = rte_seconds;
  rep.reference_retrain_id = zoo::checkpoint_id(retrain_oracle);
  return rep;
}

namespace {

std::string fmt_cell(double v, int prec = 2) {
  if (!std::isfinite(v)) return "-";
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(prec) << v;
  return ss.str();
}

}  // namespace

std::string render_table(const std::vector<MetricsReport>& rows) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"Method", "RA", "FA", "TA", "Avg. Gap", "MIA", "RTE"});
  for (const auto& r : rows) {
    cells.push_back({r.method, fmt_cell(r.ra), fmt_cell(r.fa), fmt_cell(r.ta),
                     fmt_cell(r.avg_gap), fmt_cell(r.mia), fmt_cell(r.rte_seconds, 1)});
  }
  std::vector<std::size_t> widths(cells[0].size(), 0);
  for (const auto& row : cells)
    for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
  std::ostringstream out;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t i = 0; i < cells[r].size(); ++i) {
      out << std::setw(static_cast<int>(widths[i]) + (i == 0 ? 0 : 2))
          << (i == 0 ? std::left : std::right) << cells[r][i];
      if (i == 0) out << std::right;
    }
    out << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t w : widths) total += w + 2;
      out << std::string(total, '-') << '\n';
    }
  }
  return out.str();
}

std::string render_table_csv(const std::vector<MetricsReport>& rows) {
  std::ostringstream out;
  out << "method,ra,fa,ta,avg_gap,mia,rte_seconds\n";
  for (const auto& r : rows) {
    out << r.method << ',' << format_double(r.ra, 10) << ',' << format_double(r.fa, 10) << ','
        << format_double(r.ta, 10) << ',' << format_double(r.avg_gap, 10) << ','
        << format_double(r.mia, 10) << ',' << format_double(r.rte_seconds, 10) << '\n';
  }
  return out.str();
}

void to_json(json& j, const MetricsReport& r) {
  j = json{{"method", r.method},
           {"fa", r.fa},
           {"ra", r.ra},
           {"ta", r.ta},
           {"avg_gap", r.avg_gap},
           {"mia", r.mia},
           {"mia_degenerate", r.mia_degenerate},
           {"kl_div", r.kl_div},
           {"rte_seconds", r.rte_seconds},
           {"reference_retrain_id", r.reference_retrain_id}};
  if (r.fgta) j["fgta"] = *r.fgta;
  if (r.fgva) j["fgva"] = *r.fgva;
  if (r.resilience_avg_gap) j["resilience_avg_gap"] = *r.resilience_avg_gap;
}

void from_json(const json& j, MetricsReport& r) {
  r = MetricsReport{};
  r.method = j.value("method", std::string());
  r.fa = j.value("fa", 0.0);
  r.ra = j.value("ra", 0.0);
  r.ta = j.value("ta", 0.0);
  r.avg_gap = j.value("avg_gap", 0.0);
  r.mia = j.value("mia", 0.0);
  r.mia_degenerate = j.value("mia_degenerate", false);
  r.kl_div = j.value("kl_div", 0.0);
  r.rte_seconds = j.value("rte_seconds", 0.0);
  r.reference_retrain_id = j.value("reference_retrain_id", std::string());
  if (j.contains("fgta")) r.fgta = j.at("fgta").get<double>();
  if (j.contains("fgva")) r.fgva = j.at("fgva").get<double>();
  if (j.contains("resilience_avg_gap"))
    r.resilience_avg_gap = j.at("resilience_avg_gap").get<double>();
}

}  // namespace mumis::metrics
