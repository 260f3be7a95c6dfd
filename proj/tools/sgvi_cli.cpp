// Command-line driver: generate | train | infer | evaluate | ablate.

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "sgvi/experiment.hpp"

namespace {

using sgvi::Command;
using sgvi::ExperimentConfig;

void add_data_flags(CLI::App* sub, ExperimentConfig& cfg, bool needs_model) {
  sub->add_option("--data", cfg.data_dir, "Dataset directory (from `generate`)")->required();
  if (needs_model) sub->add_option("--model", cfg.model_path, "Model or checkpoint JSON")->required();
}

void add_ranking_flags(CLI::App* sub, ExperimentConfig& cfg) {
  sub->add_option("--ks", cfg.ks, "Recall cut-offs")->capture_default_str();
  sub->add_flag("!--no-graph-constraint", cfg.graph_constraint,
                "Rank every predicate label instead of only the MAP label");
  sub->add_option("--head-threshold", cfg.head_threshold, "Head group: count > this")
      ->capture_default_str();
  sub->add_option("--tail-threshold", cfg.tail_threshold, "Tail group: count < this")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained mean-field inference for scene-graph factor models"};
  app.set_config("--config", "", "Key-value config file (INI/TOML)");
  app.require_subcommand(1);

  ExperimentConfig cfg;
  std::string setting = "predcls";
  std::string optimizer = "adam";
  std::string pairwise = "factorized";
  std::string init = "random";

  app.add_option("--seed", cfg.seed, "Master seed")->required();
  app.add_option("--workers", cfg.workers, "Worker threads for per-node inference")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--emd-iters", cfg.emd.max_iterations, "Mirror descent iterations T")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--emd-eps", cfg.emd.tolerance, "Early-stopping tolerance")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--emd-lr", cfg.emd.initial_learning_rate, "Initial mirror descent step")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--emd-init", init, "Initial distribution: random | uniform")
      ->capture_default_str()
      ->check(CLI::IsMember({"random", "uniform"}));
  app.add_option("--setting", setting, "predcls | sgcls | sgdet")
      ->capture_default_str()
      ->check(CLI::IsMember({"predcls", "sgcls", "sgdet"}));
  app.add_option("--out", cfg.out_dir, "Output directory")->required();

  auto* gen = app.add_subcommand("generate", "Write a synthetic planted dataset");
  gen->add_option("--num-instances", cfg.num_instances)->capture_default_str();
  gen->add_option("--eval-fraction", cfg.eval_fraction)->capture_default_str();
  gen->add_option("--min-objects", cfg.generator.min_objects)->capture_default_str();
  gen->add_option("--max-objects", cfg.generator.max_objects)->capture_default_str();
  gen->add_option("--density", cfg.generator.predicate_density)->capture_default_str();
  gen->add_option("--v-o", cfg.generator.vocab.objects)->capture_default_str();
  gen->add_option("--v-p", cfg.generator.vocab.predicates)->capture_default_str();
  gen->add_option("--v-g", cfg.generator.vocab.globals)->capture_default_str();
  gen->add_option("--dim", cfg.generator.feature_dim)->capture_default_str();
  gen->add_option("--globals", cfg.generator.num_globals)->capture_default_str();
  gen->add_option("--zipf", cfg.generator.zipf_exponent)->capture_default_str();
  gen->add_option("--margin", cfg.generator.class_margin)->capture_default_str();

  auto* trn = app.add_subcommand("train", "Fit the score networks by cross-entropy");
  trn->add_option("--data", cfg.data_dir, "Dataset directory")->required();
  trn->add_option("--epochs", cfg.train.epochs)->capture_default_str();
  trn->add_option("--batch-size", cfg.train.batch_size)->capture_default_str();
  trn->add_option("--lr", cfg.train.learning_rate)->capture_default_str();
  trn->add_option("--optimizer", optimizer)->capture_default_str()->check(CLI::IsMember({"sgd", "adam"}));
  trn->add_option("--hidden-width", cfg.hidden_width)->capture_default_str();
  trn->add_option("--hidden", cfg.hidden, "Explicit hidden widths (overrides --hidden-width)");
  trn->add_option("--pairwise", pairwise)->capture_default_str()->check(CLI::IsMember({"factorized", "label_table"}));
  trn->add_option("--clip", cfg.train.gradient_clip, "Gradient norm clip");
  trn->add_flag("--resample", cfg.resample, "Bi-level resampling of the training set");
  trn->add_option("--repeat-factor", cfg.resample_config.repeat_factor)->capture_default_str();
  trn->add_option("--drop-rate", cfg.resample_config.drop_rate)->capture_default_str();
  trn->add_option("--head-threshold", cfg.head_threshold)->capture_default_str();
  trn->add_option("--tail-threshold", cfg.tail_threshold)->capture_default_str();

  auto* inf = app.add_subcommand("infer", "Per-node posteriors for the evaluation split");
  add_data_flags(inf, cfg, true);

  auto* evl = app.add_subcommand("evaluate", "R@K, mR@K and group means on the evaluation split");
  add_data_flags(evl, cfg, true);
  add_ranking_flags(evl, cfg);

  auto* abl = app.add_subcommand("ablate", "Sweep mirror descent iterations T");
  add_data_flags(abl, cfg, true);
  add_ranking_flags(abl, cfg);
  abl->add_option("--iterations", cfg.ablation_iterations)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    cfg.setting = sgvi::setting_from_string(setting);
    cfg.train.optimizer = sgvi::optimizer_from_string(optimizer);
    cfg.pairwise = sgvi::pairwise_form_from_string(pairwise);
    cfg.emd.init = init == "uniform" ? sgvi::InitMode::Uniform : sgvi::InitMode::SeededRandom;
    if (gen->parsed()) cfg.command = Command::Generate;
    if (trn->parsed()) cfg.command = Command::Train;
    if (inf->parsed()) cfg.command = Command::Infer;
    if (evl->parsed()) cfg.command = Command::Evaluate;
    if (abl->parsed()) cfg.command = Command::Ablate;
    sgvi::run_pipeline(cfg);
  } catch (const std::exception& e) {
    std::cerr << R"({"error": )" << sgvi::Json(e.what()).dump() << R"(, "command": ")"
              << sgvi::to_string(cfg.command) << "\"}\n";
    return 1;
  }
  return 0;
}
