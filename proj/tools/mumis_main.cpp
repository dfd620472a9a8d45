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

// Config-driven experiment runner. Exit codes: 0 success, 2 config error,
// 3 training/optimization failure, 4 data-access audit violation.

#include <CLI11.hpp>
#include <iostream>

#include "mumis/experiment.hpp"
#include "mumis/util.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string output;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool force = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config JSON")->required();
  cmd->add_option("--output", args.output, "override output directory");
  cmd->add_option("--seed", args.seed, "override the top-level seed")
      ->each([&](const std::string&) { args.seed_set = true; });
  cmd->add_flag("--force", args.force, "recompute even if outputs exist");
}

mumis::experiment::ExperimentConfig load_config(const CommonArgs& args) {
  auto cfg = mumis::experiment::ExperimentConfig::load(args.config_path);
  if (args.seed_set) {
    cfg.seed = args.seed;
    cfg.dataset.seed = 0;
    cfg.task.seed = 0;
    cfg.train_recipe.seed = 0;
    cfg.unlearn_cfg.seed = 0;
    cfg.eval.seed = 0;
    cfg.finalize();
  }
  if (!args.output.empty()) cfg.output_dir = args.output;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mumis: machine unlearning by input-sensitivity suppression"};
  app.require_subcommand(1);

  CommonArgs train_args, unlearn_args, eval_args, seq_args, analyze_args;
  bool retrain = false;
  int seq_step = -1;
  std::string pretrained_dir, retrain_dir, unlearned_dir, what, checkpoint_dir;

  auto* train = app.add_subcommand("train", "train the pre-trained model or a retrain oracle");
  add_common(train, train_args);
  train->add_flag("--retrain", retrain, "train the retrain oracle (remaining data only)");
  train->add_option("--step", seq_step, "sequential step for the retrain oracle");

  auto* unlearn_cmd = app.add_subcommand("unlearn", "run the configured unlearning method");
  add_common(unlearn_cmd, unlearn_args);
  unlearn_cmd->add_option("--pretrained", pretrained_dir, "pre-trained checkpoint directory");

  auto* evaluate = app.add_subcommand("evaluate", "metric suite for a checkpoint triple");
  add_common(evaluate, eval_args);
  evaluate->add_option("--unlearned", unlearned_dir, "unlearned checkpoint directory");
  evaluate->add_option("--retrain", retrain_dir, "retrain oracle checkpoint directory");
  evaluate->add_option("--pretrained", pretrained_dir, "pre-trained checkpoint directory");

  auto* sequential = app.add_subcommand("sequential", "run a sequential unlearning protocol");
  add_common(sequential, seq_args);

  auto* analyze = app.add_subcommand("analyze", "diagnostic studies");
  add_common(analyze, analyze_args);
  analyze
      ->add_option("--what", what,
                   "rise_fall|before_after|ablation|sweep|saliency|similarity")
      ->required();
  analyze->add_option("--checkpoint", checkpoint_dir, "checkpoint directory to analyze");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      const auto cfg = load_config(train_args);
      const std::string dir =
          mumis::experiment::cmd_train(cfg, retrain, seq_step, train_args.force);
      std::cout << dir << "\n";
    } else if (unlearn_cmd->parsed()) {
      const auto cfg = load_config(unlearn_args);
      const auto art = mumis::experiment::cmd_unlearn(cfg, pretrained_dir, unlearn_args.force);
      std::cout << art.checkpoint_dir << "\n" << art.trace_csv << "\n";
    } else if (evaluate->parsed()) {
      const auto cfg = load_config(eval_args);
      const std::string path = mumis::experiment::cmd_evaluate(
          cfg, unlearned_dir, retrain_dir, pretrained_dir, eval_args.force);
      std::cout << path << "\n";
    } else if (sequential->parsed()) {
      const auto cfg = load_config(seq_args);
      const auto outcome = mumis::experiment::cmd_sequential(cfg, seq_args.force);
      std::cout << outcome.report_dir << "\n";
    } else if (analyze->parsed()) {
      const auto cfg = load_config(analyze_args);
      return mumis::experiment::cmd_analyze(cfg, what, checkpoint_dir, analyze_args.force);
    }
  } catch (const mumis::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const mumis::TrainError& e) {
    std::cerr << "training error: " << e.what() << "\n";
    return 3;
  } catch (const mumis::AuditError& e) {
    std::cerr << "audit violation: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
