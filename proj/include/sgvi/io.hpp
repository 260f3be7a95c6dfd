#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "sgvi/factor_graph.hpp"
#include "sgvi/inference.hpp"
#include "sgvi/learning.hpp"
#include "sgvi/metrics.hpp"
#include "sgvi/scoring.hpp"
#include "sgvi/synthdata.hpp"

namespace sgvi {

using Json = nlohmann::ordered_json;

// Scene graph instances -----------------------------------------------------

Json instance_to_json(const SceneGraphInstance& instance,
                      const LabelAssignment* ground_truth = nullptr);

struct ParsedInstance {
  SceneGraphInstance instance;
  std::optional<LabelAssignment> ground_truth;
};

/// Parses and validates; throws std::invalid_argument on schema errors.
ParsedInstance instance_from_json(const Json& j);

// Feature models and optimiser state ----------------------------------------

Json model_to_json(const FeatureModel& model);
FeatureModel model_from_json(const Json& j);

Json optimizer_to_json(const OptimizerState& state);
OptimizerState optimizer_from_json(const Json& j);

// Reports ---------------------------------------------------------------------

/// Per-node inference report, nodes in id order.
Json posterior_to_json(const SceneGraphInstance& instance, const GraphPosterior& posterior);

Json recall_report_to_json(const RecallReport& report);

/// One row per (K, category) plus aggregate rows.
std::string recall_report_to_csv(const RecallReport& report);

std::string loss_curve_to_csv(const std::vector<EpochLoss>& curve);

// Files -----------------------------------------------------------------------

Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

struct DatasetManifest {
  std::uint64_t seed = 0;
  GeneratorConfig generator;
  std::vector<std::string> files;
  std::vector<Index> train;
  std::vector<Index> eval;
  std::map<Index, long> category_counts;  // over the training split
};

Json generator_to_json(const GeneratorConfig& config);
GeneratorConfig generator_from_json(const Json& j);

/// Writes instances/NNNNNN.json files plus manifest.json under `dir`.
void write_dataset(const std::filesystem::path& dir, const std::vector<LabeledInstance>& dataset,
                   DatasetManifest manifest);

struct LoadedDataset {
  DatasetManifest manifest;
  std::vector<LabeledInstance> instances;

  std::vector<LabeledInstance> subset(const std::vector<Index>& ids) const;
};

LoadedDataset read_dataset(const std::filesystem::path& dir);

}  // namespace sgvi
