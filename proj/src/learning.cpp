#include "sgvi/learning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "sgvi/simplex.hpp"

namespace sgvi {

std::string_view to_string(OptimizerKind kind) { return kind == OptimizerKind::Sgd ? "sgd" : "adam"; }

OptimizerKind optimizer_from_string(std::string_view name) {
  if (name == "sgd") return OptimizerKind::Sgd;
  if (name == "adam") return OptimizerKind::Adam;
  throw std::invalid_argument("unknown optimizer '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("train: batch size must be >= 1");
  if (!(learning_rate >= 0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("train: learning rate must be finite and non-negative");
  if (gradient_clip && !(*gradient_clip > 0))
    throw std::invalid_argument("train: gradient clip must be positive");
  if (resample) resample->validate();
}

TrainConfig TrainConfig::sgd_two_layer_preset() {
  TrainConfig c;
  c.optimizer = OptimizerKind::Sgd;
  c.learning_rate = 0.008 * static_cast<double>(c.batch_size);
  return c;
}

TrainConfig TrainConfig::sgd_three_layer_preset() {
  TrainConfig c;
  c.optimizer = OptimizerKind::Sgd;
  c.learning_rate = 0.005 * static_cast<double>(c.batch_size);
  return c;
}

TrainConfig TrainConfig::adam_preset() {
  TrainConfig c;
  c.optimizer = OptimizerKind::Adam;
  c.learning_rate = 1e-4;
  return c;
}

GradientSet GradientSet::zeros_like(const FeatureModel& model) {
  GradientSet g;
  for (std::size_t f = 0; f < kNumScoreFunctions; ++f)
    g.functions[f] = model.functions[f].zero_gradient();
  return g;
}

GradientSet& GradientSet::operator+=(const GradientSet& other) {
  for (std::size_t f = 0; f < kNumScoreFunctions; ++f) {
    auto& mine = functions[f];
    const auto& theirs = other.functions[f];
    for (std::size_t k = 0; k < mine.weights.size(); ++k) {
      mine.weights[k] += theirs.weights[k];
      mine.bias[k] += theirs.bias[k];
    }
  }
  return *this;
}

GradientSet& GradientSet::operator*=(double factor) {
  for (auto& g : functions)
    for (std::size_t k = 0; k < g.weights.size(); ++k) {
      g.weights[k] *= factor;
      g.bias[k] *= factor;
    }
  return *this;
}

bool GradientSet::all_finite() const {
  for (const auto& g : functions)
    for (std::size_t k = 0; k < g.weights.size(); ++k)
      if (!g.weights[k].allFinite() || !g.bias[k].allFinite()) return false;
  return true;
}

Vector flatten(const FeatureModel& model) {
  Vector flat(static_cast<Index>(model.parameter_count()));
  Index at = 0;
  for (const auto& net : model.functions)
    for (const auto& layer : net.layers()) {
      flat.segment(at, layer.weights.size()) = layer.weights.reshaped();
      at += layer.weights.size();
      flat.segment(at, layer.bias.size()) = layer.bias;
      at += layer.bias.size();
    }
  return flat;
}

Vector flatten(const GradientSet& grad) {
  Index total = 0;
  for (const auto& g : grad.functions)
    for (std::size_t k = 0; k < g.weights.size(); ++k) total += g.weights[k].size() + g.bias[k].size();
  Vector flat(total);
  Index at = 0;
  for (const auto& g : grad.functions)
    for (std::size_t k = 0; k < g.weights.size(); ++k) {
      flat.segment(at, g.weights[k].size()) = g.weights[k].reshaped();
      at += g.weights[k].size();
      flat.segment(at, g.bias[k].size()) = g.bias[k];
      at += g.bias[k].size();
    }
  return flat;
}

void assign_parameters(FeatureModel& model, const Vector& flat) {
  if (flat.size() != static_cast<Index>(model.parameter_count()))
    throw std::invalid_argument("assign_parameters: parameter count mismatch");
  Index at = 0;
  for (auto& net : model.functions)
    for (auto& layer : net.layers()) {
      layer.weights.reshaped() = flat.segment(at, layer.weights.size());
      at += layer.weights.size();
      layer.bias = flat.segment(at, layer.bias.size());
      at += layer.bias.size();
    }
}

double cross_entropy_loss(const std::map<NodeId, Vector>& log_posteriors,
                          const SceneGraphInstance& instance, const LabelAssignment& ground_truth) {
  validate_assignment(instance, ground_truth);
  const Index labelled = instance.num_objects() + instance.num_predicates();
  if (labelled == 0) return 0;
  double total = 0;
  for (NodeId node = 0; node < labelled; ++node) {
    const auto it = log_posteriors.find(node);
    if (it == log_posteriors.end())
      throw std::invalid_argument("cross_entropy_loss: no posterior for node " + std::to_string(node));
    const Index label = label_of(instance, ground_truth, node);
    if (label >= it->second.size())
      throw std::invalid_argument("cross_entropy_loss: label outside posterior support");
    total -= it->second(label);
  }
  return total / static_cast<double>(labelled);
}

std::map<NodeId, Vector> closed_form_log_posteriors(const FeatureModel& model,
                                                    const SceneGraphInstance& instance) {
  std::map<NodeId, Vector> out;
  const Index labelled = instance.num_objects() + instance.num_predicates();
  for (NodeId node = 0; node < labelled; ++node)
    out.emplace(node, log_softmax(node_marginal_log_score(model, instance, node)));
  return out;
}

double instance_loss(const FeatureModel& model, const SceneGraphInstance& instance,
                     const LabelAssignment& ground_truth) {
  return cross_entropy_loss(closed_form_log_posteriors(model, instance), instance, ground_truth);
}

GradientSet backward(const FeatureModel& model, const SceneGraphInstance& instance,
                     const LabelAssignment& ground_truth) {
  validate_assignment(instance, ground_truth);
  GradientSet grad = GradientSet::zeros_like(model);
  const Index labelled = instance.num_objects() + instance.num_predicates();
  if (labelled == 0) return grad;
  const double inv_nodes = 1.0 / static_cast<double>(labelled);

  struct Incoming {
    ScoreFunction function;
    Index source_vocab;
    Mlp::Cache cache;
  };

  for (NodeId node = 0; node < labelled; ++node) {
    const ScoreFunction unary_fn = instance.kind(node) == NodeKind::Object
                                       ? ScoreFunction::UnaryObject
                                       : ScoreFunction::UnaryPredicate;
    Mlp::Cache unary_cache;
    Vector total = model[unary_fn].forward_cached(instance.features(node), unary_cache);

    std::vector<Incoming> incoming;
    for (const auto& nb : instance.neighbors(node)) {
      Incoming in{function_for(nb.kind), instance.vocab_size(nb.id), {}};
      const Vector out =
          model[in.function].forward_cached(pair_input(instance, node, nb.id, nb.kind), in.cache);
      if (model.pairwise == PairwiseForm::Factorized)
        total += static_cast<double>(in.source_vocab) * out;
      else
        total += Eigen::Map<const Matrix>(out.data(), in.source_vocab, total.size())
                     .colwise()
                     .sum()
                     .transpose();
      incoming.push_back(std::move(in));
    }

    // scores = -total; d(loss)/d(scores) = (softmax - onehot) / N.
    Vector d_scores = softmax(Vector(-total));
    d_scores(label_of(instance, ground_truth, node)) -= 1.0;
    d_scores *= inv_nodes;
    const Vector d_total = -d_scores;

    model[unary_fn].backward(unary_cache, d_total,
                             grad.functions[static_cast<std::size_t>(unary_fn)]);
    for (const auto& in : incoming) {
      Vector upstream;
      if (model.pairwise == PairwiseForm::Factorized) {
        upstream = static_cast<double>(in.source_vocab) * d_total;
      } else {
        upstream.resize(d_total.size() * in.source_vocab);
        for (Index zt = 0; zt < d_total.size(); ++zt)
          upstream.segment(zt * in.source_vocab, in.source_vocab).setConstant(d_total(zt));
      }
      model[in.function].backward(in.cache, upstream,
                                  grad.functions[static_cast<std::size_t>(in.function)]);
    }
  }
  return grad;
}

double dataset_loss(const FeatureModel& model, const std::vector<LabeledInstance>& dataset) {
  if (dataset.empty()) return 0;
  double total = 0;
  for (const auto& sample : dataset) total += instance_loss(model, sample.instance, sample.labels);
  return total / static_cast<double>(dataset.size());
}

void apply_update(FeatureModel& model, const GradientSet& grad, const TrainConfig& config,
                  OptimizerState& state) {
  Vector g = flatten(grad);
  if (config.gradient_clip) {
    const double norm = g.norm();
    if (norm > *config.gradient_clip) g *= *config.gradient_clip / norm;
  }
  Vector theta = flatten(model);
  ++state.step;
  state.kind = config.optimizer;
  if (config.optimizer == OptimizerKind::Sgd) {
    theta -= config.learning_rate * g;
  } else {
    if (state.first_moment.size() != g.size()) {
      state.first_moment = Vector::Zero(g.size());
      state.second_moment = Vector::Zero(g.size());
    }
    state.first_moment = kAdamBeta1 * state.first_moment + (1 - kAdamBeta1) * g;
    state.second_moment =
        kAdamBeta2 * state.second_moment + (1 - kAdamBeta2) * g.cwiseProduct(g);
    const double t = static_cast<double>(state.step);
    const double c1 = 1 - std::pow(kAdamBeta1, t);
    const double c2 = 1 - std::pow(kAdamBeta2, t);
    theta.array() -= config.learning_rate * (state.first_moment.array() / c1) /
                     ((state.second_moment.array() / c2).sqrt() + kAdamEpsilon);
  }
  assign_parameters(model, theta);
}

TrainResult train(FeatureModel model, const std::vector<LabeledInstance>& dataset,
                  const TrainConfig& config, const std::vector<LabeledInstance>* eval_set) {
  config.validate();
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  validate_model(model);

  std::mt19937_64 rng(config.seed);
  const Index categories = model.vocab.predicates;
  std::vector<Index> plan(dataset.size());
  std::iota(plan.begin(), plan.end(), Index{0});
  Vector drop_probs;
  if (config.resample) {
    plan = oversample_plan(dataset, *config.resample, categories);
    const auto counts = category_counts(dataset, categories);
    drop_probs = drop_probabilities(category_frequencies(counts, categories),
                                    group_split(counts, config.head_threshold, config.tail_threshold),
                                    *config.resample);
  }

  auto record = [&](int epoch) {
    EpochLoss entry{epoch, dataset_loss(model, dataset), std::nullopt};
    if (eval_set && !eval_set->empty()) entry.eval_loss = dataset_loss(model, *eval_set);
    if (!std::isfinite(entry.train_loss)) {
      std::ostringstream msg;
      msg << "train: loss diverged at epoch " << epoch << " (loss = " << entry.train_loss << ")";
      throw std::runtime_error(msg.str());
    }
    return entry;
  };

  TrainResult result{model, {}, {config.optimizer, 0, {}, {}}};
  result.curve.push_back(record(0));
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(plan.begin(), plan.end(), rng);
    for (std::size_t start = 0; start < plan.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(plan.size(), start + static_cast<std::size_t>(config.batch_size));
      GradientSet batch = GradientSet::zeros_like(model);
      for (std::size_t k = start; k < stop; ++k) {
        const auto& sample = dataset[static_cast<std::size_t>(plan[k])];
        if (config.resample) {
          const LabeledInstance thinned = drop_instances(sample, drop_probs, rng);
          batch += backward(model, thinned.instance, thinned.labels);
        } else {
          batch += backward(model, sample.instance, sample.labels);
        }
      }
      batch *= 1.0 / static_cast<double>(stop - start);
      if (!batch.all_finite())
        throw std::runtime_error("train: non-finite gradient at epoch " + std::to_string(epoch));
      apply_update(model, batch, config, result.optimizer);
    }
    result.curve.push_back(record(epoch));
  }
  result.model = std::move(model);
  return result;
}

}  // namespace sgvi
