#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "sgvi/inference.hpp"
#include "sgvi/io.hpp"
#include "sgvi/learning.hpp"
#include "sgvi/metrics.hpp"
#include "sgvi/synthdata.hpp"

namespace sgvi {

enum class Command { Generate, Train, Infer, Evaluate, Ablate };

/// Which labels are clamped to ground truth at inference time:
/// PredCls clamps objects, SGCls and SGDet leave everything free. SGDet
/// additionally selects the deeper (three-layer) score networks.
enum class Setting { PredCls, SGCls, SGDet };

std::string_view to_string(Command c);
std::string_view to_string(Setting s);
Setting setting_from_string(std::string_view name);

struct ExperimentConfig {
  Command command = Command::Generate;
  std::uint64_t seed = 0;
  int workers = 1;
  std::filesystem::path out_dir;
  std::filesystem::path data_dir;
  std::filesystem::path model_path;

  // generate
  GeneratorConfig generator;
  Index num_instances = 240;
  double eval_fraction = 0.25;

  // train
  TrainConfig train;
  std::vector<Index> hidden;  // empty: 1 hidden layer, 2 for SGDet
  Index hidden_width = 32;
  PairwiseForm pairwise = PairwiseForm::Factorized;
  bool resample = false;
  ResampleConfig resample_config;

  // infer / evaluate / ablate
  EMDConfig emd;
  Setting setting = Setting::PredCls;
  std::vector<Index> ks{20, 50, 100};
  bool graph_constraint = true;
  long head_threshold = 10000;
  long tail_threshold = 500;
  std::vector<int> ablation_iterations{5, 10, 15, 20};
};

Json config_to_json(const ExperimentConfig& config);

/// Hidden widths implied by the config and setting.
std::vector<Index> hidden_layers(const ExperimentConfig& config);

/// Posterior of one instance with the setting's clamping applied.
GraphPosterior infer_with_setting(const FeatureModel& model, const LabeledInstance& sample,
                                  const ExperimentConfig& config, std::uint64_t seed);

/// Recall report of `model` over `samples`.
RecallReport evaluate_model(const FeatureModel& model, const std::vector<LabeledInstance>& samples,
                            const ExperimentConfig& config,
                            const std::optional<GroupSplit>& split = std::nullopt);

struct AblationRow {
  int iterations;
  std::map<Index, double> mean_recall;  // K -> mR@K
  double median_iterations_used;
};

std::vector<AblationRow> ablate_iterations(const FeatureModel& model,
                                           const std::vector<LabeledInstance>& samples,
                                           const ExperimentConfig& config);

std::string ablation_to_csv(const std::vector<AblationRow>& rows, const std::vector<Index>& ks);

void run_generate(const ExperimentConfig& config);
TrainResult run_train(const ExperimentConfig& config);
void run_infer(const ExperimentConfig& config);
RecallReport run_evaluate(const ExperimentConfig& config);
std::vector<AblationRow> run_ablate_iterations(const ExperimentConfig& config);

/// Executes config.command, writing outputs and resolved_config.json under
/// config.out_dir. Throws on failure.
void run_pipeline(const ExperimentConfig& config);

}  // namespace sgvi
