#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "sgvi/factor_graph.hpp"
#include "sgvi/scoring.hpp"
#include "sgvi/synthdata.hpp"
#include "sgvi/types.hpp"

namespace sgvi {

enum class OptimizerKind { Sgd, Adam };

std::string_view to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(std::string_view name);

struct TrainConfig {
  int epochs = 50;
  Index batch_size = 12;
  double learning_rate = 0.01;
  OptimizerKind optimizer = OptimizerKind::Adam;
  std::uint64_t seed = 0;
  std::optional<double> gradient_clip;  // max global L2 norm
  std::optional<ResampleConfig> resample;
  long head_threshold = 10000;  // group thresholds used by instance dropping
  long tail_threshold = 500;

  void validate() const;

  /// Two-layer settings: SGD at 0.008 x batch size.
  static TrainConfig sgd_two_layer_preset();
  /// Three-layer settings: SGD at 0.005 x batch size.
  static TrainConfig sgd_three_layer_preset();
  /// Adam at 1e-4.
  static TrainConfig adam_preset();
};

/// d(loss)/d(parameters), shaped like FeatureModel.
struct GradientSet {
  std::array<Mlp::Gradient, kNumScoreFunctions> functions;

  static GradientSet zeros_like(const FeatureModel& model);
  GradientSet& operator+=(const GradientSet& other);
  GradientSet& operator*=(double factor);
  bool all_finite() const;
};

/// Flattened parameter vector; order: functions, layers, weights
/// (column-major) then bias.
Vector flatten(const FeatureModel& model);
Vector flatten(const GradientSet& grad);
void assign_parameters(FeatureModel& model, const Vector& flat);

/// Mean over labelled nodes of -log_posterior[ground truth].
double cross_entropy_loss(const std::map<NodeId, Vector>& log_posteriors,
                          const SceneGraphInstance& instance, const LabelAssignment& ground_truth);

/// Log-softmax of every object and predicate node's marginal log score;
/// the value entropic mirror descent converges to.
std::map<NodeId, Vector> closed_form_log_posteriors(const FeatureModel& model,
                                                    const SceneGraphInstance& instance);

/// cross_entropy_loss over closed_form_log_posteriors.
double instance_loss(const FeatureModel& model, const SceneGraphInstance& instance,
                     const LabelAssignment& ground_truth);

/// Analytic gradient of instance_loss by reverse accumulation.
GradientSet backward(const FeatureModel& model, const SceneGraphInstance& instance,
                     const LabelAssignment& ground_truth);

double dataset_loss(const FeatureModel& model, const std::vector<LabeledInstance>& dataset);

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::Adam;
  long step = 0;
  Vector first_moment;
  Vector second_moment;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

/// One optimiser update of `model` in place.
void apply_update(FeatureModel& model, const GradientSet& grad, const TrainConfig& config,
                  OptimizerState& state);

struct EpochLoss {
  int epoch;
  double train_loss;
  std::optional<double> eval_loss;
};

struct TrainResult {
  FeatureModel model;
  std::vector<EpochLoss> curve;  // entry 0 is the untrained model
  OptimizerState optimizer;
};

/// Mini-batch training; throws std::runtime_error if the loss diverges.
TrainResult train(FeatureModel model, const std::vector<LabeledInstance>& dataset,
                  const TrainConfig& config,
                  const std::vector<LabeledInstance>* eval_set = nullptr);

}  // namespace sgvi
