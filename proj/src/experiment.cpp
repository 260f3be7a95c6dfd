#include "sgvi/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "sgvi/random.hpp"

namespace sgvi {

namespace fs = std::filesystem;

std::string_view to_string(Command c) {
  switch (c) {
    case Command::Generate: return "generate";
    case Command::Train: return "train";
    case Command::Infer: return "infer";
    case Command::Evaluate: return "evaluate";
    case Command::Ablate: return "ablate";
  }
  return "?";
}

std::string_view to_string(Setting s) {
  switch (s) {
    case Setting::PredCls: return "predcls";
    case Setting::SGCls: return "sgcls";
    case Setting::SGDet: return "sgdet";
  }
  return "?";
}

Setting setting_from_string(std::string_view name) {
  if (name == "predcls") return Setting::PredCls;
  if (name == "sgcls") return Setting::SGCls;
  if (name == "sgdet") return Setting::SGDet;
  throw std::invalid_argument("unknown setting '" + std::string(name) + "'");
}

Json config_to_json(const ExperimentConfig& c) {
  Json j;
  j["command"] = std::string(to_string(c.command));
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["out"] = c.out_dir.generic_string();
  j["data"] = c.data_dir.generic_string();
  j["model"] = c.model_path.generic_string();
  j["generator"] = generator_to_json(c.generator);
  j["num_instances"] = c.num_instances;
  j["eval_fraction"] = c.eval_fraction;
  Json t;
  t["epochs"] = c.train.epochs;
  t["batch_size"] = c.train.batch_size;
  t["learning_rate"] = c.train.learning_rate;
  t["optimizer"] = std::string(to_string(c.train.optimizer));
  t["seed"] = c.train.seed;
  t["gradient_clip"] = c.train.gradient_clip ? Json(*c.train.gradient_clip) : Json(nullptr);
  t["hidden"] = hidden_layers(c);
  t["pairwise"] = std::string(to_string(c.pairwise));
  t["resample"] = c.resample;
  t["repeat_factor"] = c.resample_config.repeat_factor;
  t["drop_rate"] = c.resample_config.drop_rate;
  j["train"] = std::move(t);
  j["emd"] = {{"max_iterations", c.emd.max_iterations},
              {"initial_learning_rate", c.emd.initial_learning_rate},
              {"tolerance", c.emd.tolerance},
              {"init", c.emd.init == InitMode::Uniform ? "uniform" : "random"}};
  j["setting"] = std::string(to_string(c.setting));
  j["ks"] = c.ks;
  j["graph_constraint"] = c.graph_constraint;
  j["head_threshold"] = c.head_threshold;
  j["tail_threshold"] = c.tail_threshold;
  j["ablation_iterations"] = c.ablation_iterations;
  return j;
}

std::vector<Index> hidden_layers(const ExperimentConfig& config) {
  if (!config.hidden.empty()) return config.hidden;
  if (config.setting == Setting::SGDet) return {config.hidden_width, config.hidden_width};
  return {config.hidden_width};
}

GraphPosterior infer_with_setting(const FeatureModel& model, const LabeledInstance& sample,
                                  const ExperimentConfig& config, std::uint64_t seed) {
  GraphInferenceOptions options{config.emd, seed, config.workers};
  GraphPosterior posterior = infer_graph(model, sample.instance, options);
  if (config.setting == Setting::PredCls)
    for (Index i = 0; i < sample.instance.num_objects(); ++i)
      clamp_posterior(posterior.at(sample.instance.object_node(i)),
                      sample.labels.objects[static_cast<std::size_t>(i)]);
  return posterior;
}

RecallReport evaluate_model(const FeatureModel& model, const std::vector<LabeledInstance>& samples,
                            const ExperimentConfig& config, const std::optional<GroupSplit>& split) {
  RecallAccumulator acc(config.ks);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto posterior = infer_with_setting(model, samples[k], config, config.seed + k);
    acc.add(rank_triplets(posterior, samples[k].instance, {config.graph_constraint}),
            ground_truth_triplets(samples[k].instance, samples[k].labels));
  }
  return acc.report(split);
}

std::vector<AblationRow> ablate_iterations(const FeatureModel& model,
                                           const std::vector<LabeledInstance>& samples,
                                           const ExperimentConfig& config) {
  std::vector<AblationRow> rows;
  for (int iterations : config.ablation_iterations) {
    ExperimentConfig swept = config;
    swept.emd.max_iterations = iterations;
    swept.emd.tolerance = 1e-4;
    RecallAccumulator acc(config.ks);
    std::vector<double> used;
    for (std::size_t k = 0; k < samples.size(); ++k) {
      const auto posterior = infer_with_setting(model, samples[k], swept, config.seed + k);
      for (const auto& [id, p] : posterior)
        if (!p.clamped) used.push_back(p.iterations_used);
      acc.add(rank_triplets(posterior, samples[k].instance, {config.graph_constraint}),
              ground_truth_triplets(samples[k].instance, samples[k].labels));
    }
    std::sort(used.begin(), used.end());
    double median = 0;
    if (!used.empty()) {
      const std::size_t mid = used.size() / 2;
      median = used.size() % 2 ? used[mid] : 0.5 * (used[mid - 1] + used[mid]);
    }
    rows.push_back({iterations, acc.report().mean_recall, median});
  }
  return rows;
}

std::string ablation_to_csv(const std::vector<AblationRow>& rows, const std::vector<Index>& ks) {
  std::ostringstream out;
  out << "iterations";
  for (Index k : ks) out << ",mR@" << k;
  out << ",median_iterations_used\n";
  out << std::fixed << std::setprecision(2);
  for (const auto& row : rows) {
    out << row.iterations;
    for (Index k : ks) out << ',' << 100.0 * row.mean_recall.at(k);
    out << ',' << row.median_iterations_used << '\n';
  }
  return out.str();
}

namespace {

void require(const fs::path& path, const char* what) {
  if (path.empty()) throw std::invalid_argument(std::string("missing ") + what + " path");
  if (!fs::exists(path)) throw std::invalid_argument(std::string(what) + " not found: " + path.string());
}

FeatureModel load_model(const ExperimentConfig& config) {
  require(config.model_path, "model");
  const Json j = read_json(config.model_path);
  // Accept either a bare model file or a checkpoint holding one.
  return model_from_json(j.contains("model") ? j.at("model") : j);
}

std::optional<GroupSplit> dataset_split(const LoadedDataset& data, const ExperimentConfig& config) {
  return group_split(data.manifest.category_counts, config.head_threshold, config.tail_threshold);
}

}  // namespace

void run_generate(const ExperimentConfig& config) {
  if (config.num_instances < 1) throw std::invalid_argument("generate: need at least one instance");
  if (!(config.eval_fraction >= 0 && config.eval_fraction < 1))
    throw std::invalid_argument("generate: eval fraction must lie in [0, 1)");
  GeneratorConfig gen = config.generator;
  gen.seed = config.seed;
  const auto dataset = generate_dataset(gen, config.num_instances);

  DatasetManifest manifest;
  manifest.seed = config.seed;
  manifest.generator = gen;
  const auto n_eval = static_cast<Index>(std::floor(config.eval_fraction * static_cast<double>(config.num_instances)));
  const Index n_train = config.num_instances - n_eval;
  for (Index k = 0; k < config.num_instances; ++k) (k < n_train ? manifest.train : manifest.eval).push_back(k);
  std::vector<LabeledInstance> train_part(dataset.begin(), dataset.begin() + n_train);
  manifest.category_counts = category_counts(train_part, gen.vocab.predicates);
  write_dataset(config.out_dir, dataset, std::move(manifest));
}

TrainResult run_train(const ExperimentConfig& config) {
  require(config.data_dir, "data");
  const LoadedDataset data = read_dataset(config.data_dir);
  const auto train_set = data.subset(data.manifest.train);
  const auto eval_set = data.subset(data.manifest.eval);

  ModelShape shape{data.manifest.generator.feature_dim, data.manifest.generator.vocab,
                   hidden_layers(config), config.pairwise};
  TrainConfig tc = config.train;
  tc.seed = config.seed;
  if (config.resample) tc.resample = config.resample_config;
  tc.head_threshold = config.head_threshold;
  tc.tail_threshold = config.tail_threshold;

  TrainResult result = train(random_feature_model(shape, config.seed), train_set, tc,
                             eval_set.empty() ? nullptr : &eval_set);
  write_json(config.out_dir / "model.json", model_to_json(result.model));
  Json checkpoint;
  checkpoint["model"] = model_to_json(result.model);
  checkpoint["optimizer"] = optimizer_to_json(result.optimizer);
  write_json(config.out_dir / "checkpoint.json", checkpoint);
  write_text(config.out_dir / "loss_curve.csv", loss_curve_to_csv(result.curve));
  return result;
}

void run_infer(const ExperimentConfig& config) {
  require(config.data_dir, "data");
  const FeatureModel model = load_model(config);
  const LoadedDataset data = read_dataset(config.data_dir);
  Json report = Json::array();
  for (Index id : data.manifest.eval) {
    const auto& sample = data.instances.at(static_cast<std::size_t>(id));
    const auto posterior =
        infer_with_setting(model, sample, config, config.seed + static_cast<std::uint64_t>(id));
    report.push_back({{"instance", data.manifest.files.at(static_cast<std::size_t>(id))},
                      {"nodes", posterior_to_json(sample.instance, posterior)}});
  }
  write_json(config.out_dir / "inference_report.json", report);
}

RecallReport run_evaluate(const ExperimentConfig& config) {
  require(config.data_dir, "data");
  const FeatureModel model = load_model(config);
  const LoadedDataset data = read_dataset(config.data_dir);
  const RecallReport report =
      evaluate_model(model, data.subset(data.manifest.eval), config, dataset_split(data, config));
  write_json(config.out_dir / "recall_report.json", recall_report_to_json(report));
  write_text(config.out_dir / "recall_report.csv", recall_report_to_csv(report));
  return report;
}

std::vector<AblationRow> run_ablate_iterations(const ExperimentConfig& config) {
  require(config.data_dir, "data");
  const FeatureModel model = load_model(config);
  const LoadedDataset data = read_dataset(config.data_dir);
  const auto rows = ablate_iterations(model, data.subset(data.manifest.eval), config);
  write_text(config.out_dir / "ablation_iterations.csv", ablation_to_csv(rows, config.ks));
  Json j = Json::array();
  for (const auto& row : rows) {
    Json r;
    r["iterations"] = row.iterations;
    for (Index k : config.ks) r["mR@" + std::to_string(k)] = row.mean_recall.at(k);
    r["median_iterations_used"] = row.median_iterations_used;
    j.push_back(std::move(r));
  }
  write_json(config.out_dir / "ablation_iterations.json", j);
  return rows;
}

void run_pipeline(const ExperimentConfig& config) {
  if (config.out_dir.empty()) throw std::invalid_argument("missing output directory");
  fs::create_directories(config.out_dir);
  write_json(config.out_dir / "resolved_config.json", config_to_json(config));
  switch (config.command) {
    case Command::Generate: run_generate(config); break;
    case Command::Train: run_train(config); break;
    case Command::Infer: run_infer(config); break;
    case Command::Evaluate: run_evaluate(config); break;
    case Command::Ablate: run_ablate_iterations(config); break;
  }
}

}  // namespace sgvi
