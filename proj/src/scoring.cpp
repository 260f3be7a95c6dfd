#include "sgvi/scoring.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>
#include <string>

namespace sgvi {

namespace {

constexpr std::array<std::string_view, kNumScoreFunctions> kFunctionNames = {
    "h_o", "h_p", "g_op", "g_oo", "g_og", "g_po", "g_pg"};

Index label_vocab(ScoreFunction f, const Vocabulary& vocab) {
  switch (f) {
    case ScoreFunction::UnaryObject:
    case ScoreFunction::ObjectPredicate:
    case ScoreFunction::ObjectObject:
    case ScoreFunction::ObjectGlobal: return vocab.objects;
    case ScoreFunction::UnaryPredicate:
    case ScoreFunction::PredicateObject:
    case ScoreFunction::PredicateGlobal: return vocab.predicates;
  }
  return 0;
}

bool is_unary(ScoreFunction f) {
  return f == ScoreFunction::UnaryObject || f == ScoreFunction::UnaryPredicate;
}

Index pair_source_vocab(ScoreFunction f, const Vocabulary& vocab) {
  switch (f) {
    case ScoreFunction::ObjectPredicate: return vocab.predicates;
    case ScoreFunction::ObjectObject:
    case ScoreFunction::PredicateObject: return vocab.objects;
    case ScoreFunction::ObjectGlobal:
    case ScoreFunction::PredicateGlobal: return vocab.globals;
    default: return 1;
  }
}

FeatureModel shaped_model(const ModelShape& shape) {
  if (shape.feature_dim < 1) throw std::invalid_argument("feature model: feature dimension must be positive");
  FeatureModel model;
  model.vocab = shape.vocab;
  model.pairwise = shape.pairwise;
  for (std::size_t f = 0; f < kNumScoreFunctions; ++f) {
    const auto fn = static_cast<ScoreFunction>(f);
    std::vector<Index> widths;
    widths.push_back(is_unary(fn) ? shape.feature_dim : 2 * shape.feature_dim);
    widths.insert(widths.end(), shape.hidden.begin(), shape.hidden.end());
    widths.push_back(output_width(fn, shape.vocab, shape.pairwise));
    model.functions[f] = Mlp(widths);
  }
  return model;
}

}  // namespace

std::string_view to_string(ScoreFunction f) { return kFunctionNames[static_cast<std::size_t>(f)]; }

std::optional<ScoreFunction> score_function_from_string(std::string_view name) {
  for (std::size_t f = 0; f < kNumScoreFunctions; ++f)
    if (kFunctionNames[f] == name) return static_cast<ScoreFunction>(f);
  return std::nullopt;
}

std::string_view to_string(PairwiseForm form) {
  return form == PairwiseForm::Factorized ? "factorized" : "label_table";
}

PairwiseForm pairwise_form_from_string(std::string_view name) {
  if (name == "factorized") return PairwiseForm::Factorized;
  if (name == "label_table") return PairwiseForm::LabelTable;
  throw std::invalid_argument("unknown pairwise form '" + std::string(name) + "'");
}

std::size_t FeatureModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& f : functions) n += f.parameter_count();
  return n;
}

Index output_width(ScoreFunction f, const Vocabulary& vocab, PairwiseForm form) {
  const Index v = label_vocab(f, vocab);
  if (is_unary(f) || form == PairwiseForm::Factorized) return v;
  return v * pair_source_vocab(f, vocab);
}

FeatureModel zero_feature_model(const ModelShape& shape) { return shaped_model(shape); }

FeatureModel random_feature_model(const ModelShape& shape, std::uint64_t seed) {
  FeatureModel model = shaped_model(shape);
  model.seed = seed;
  std::mt19937_64 rng(seed);
  for (auto& f : model.functions) f.randomize(rng);
  return model;
}

void validate_model(const FeatureModel& model) {
  const Index d = model.feature_dim();
  for (std::size_t f = 0; f < kNumScoreFunctions; ++f) {
    const auto fn = static_cast<ScoreFunction>(f);
    const Mlp& net = model.functions[f];
    const std::string name(to_string(fn));
    if (net.depth() == 0) throw std::invalid_argument("feature model: " + name + " has no layers");
    // Re-run the constructor's chain check.
    [[maybe_unused]] const Mlp checked{std::vector<Mlp::Layer>(net.layers())};
    if (net.input_width() != (is_unary(fn) ? d : 2 * d))
      throw std::invalid_argument("feature model: " + name + " input width mismatch");
    if (net.output_width() != output_width(fn, model.vocab, model.pairwise))
      throw std::invalid_argument("feature model: " + name + " output width mismatch");
  }
}

ScoreFunction function_for(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::ObjectPredicate: return ScoreFunction::ObjectPredicate;
    case EdgeKind::ObjectObject: return ScoreFunction::ObjectObject;
    case EdgeKind::ObjectGlobal: return ScoreFunction::ObjectGlobal;
    case EdgeKind::PredicateObject: return ScoreFunction::PredicateObject;
    case EdgeKind::PredicateGlobal: return ScoreFunction::PredicateGlobal;
    default: break;
  }
  throw std::invalid_argument("edge kind '" + std::string(to_string(kind)) + "' carries no message");
}

Index source_vocab(EdgeKind kind, const Vocabulary& vocab) {
  return pair_source_vocab(function_for(kind), vocab);
}

Vector mlp_forward(const Mlp& params, const Eigen::Ref<const Vector>& input) {
  return params.forward(input);
}

void check_message_edge(const SceneGraphInstance& instance, NodeId target, NodeId source,
                        EdgeKind kind) {
  function_for(kind);
  const auto& adj = instance.neighbors(target);
  if (std::find(adj.begin(), adj.end(), Neighbor{source, kind}) == adj.end())
    throw std::invalid_argument("no " + std::string(to_string(kind)) + " edge from node " +
                                std::to_string(source) + " to node " + std::to_string(target));
}

Vector pair_input(const SceneGraphInstance& instance, NodeId target, NodeId source, EdgeKind kind) {
  const Index d = instance.feature_dim();
  Vector x(2 * d);
  if (kind == EdgeKind::PredicateObject) {
    x << instance.features(source), instance.features(target);
  } else {
    x << instance.features(target), instance.features(source);
  }
  return x;
}

Vector unary_potential(const FeatureModel& model, const SceneGraphInstance& instance, NodeId node) {
  switch (instance.kind(node)) {
    case NodeKind::Object: return model[ScoreFunction::UnaryObject].forward(instance.features(node));
    case NodeKind::Predicate:
      return model[ScoreFunction::UnaryPredicate].forward(instance.features(node));
    case NodeKind::Global: break;
  }
  throw std::invalid_argument("global nodes have no unary potential");
}

double pairwise_potential(const FeatureModel& model, const SceneGraphInstance& instance,
                          NodeId target, NodeId source, EdgeKind kind, Index target_label,
                          Index source_label) {
  check_message_edge(instance, target, source, kind);
  const Index vt = instance.vocab_size(target);
  const Index vs = instance.vocab_size(source);
  if (target_label < 0 || target_label >= vt || source_label < 0 || source_label >= vs)
    throw std::invalid_argument("pairwise potential: label out of range");
  const Vector out = model[function_for(kind)].forward(pair_input(instance, target, source, kind));
  if (model.pairwise == PairwiseForm::Factorized) return out(target_label);
  return out(target_label * vs + source_label);
}

Vector message_term(const FeatureModel& model, const SceneGraphInstance& instance,
                    NodeId target, NodeId source, EdgeKind kind) {
  check_message_edge(instance, target, source, kind);
  const Index vs = instance.vocab_size(source);
  const Vector out = model[function_for(kind)].forward(pair_input(instance, target, source, kind));
  if (model.pairwise == PairwiseForm::Factorized) return static_cast<double>(vs) * out;
  const Index vt = instance.vocab_size(target);
  // Row z_t of the row-major v_t x v_s table, summed over z_s.
  return Eigen::Map<const Matrix>(out.data(), vs, vt).colwise().sum().transpose();
}

Vector node_marginal_log_score(const FeatureModel& model, const SceneGraphInstance& instance,
                               NodeId node) {
  if (instance.kind(node) == NodeKind::Global)
    throw std::invalid_argument("global nodes have no marginal log score");
  Vector total = unary_potential(model, instance, node);
  for (const auto& nb : instance.neighbors(node))
    total += message_term(model, instance, node, nb.id, nb.kind);
  return -total;
}

double joint_log_score(const FeatureModel& model, const SceneGraphInstance& instance,
                       const LabelAssignment& assignment) {
  validate_assignment(instance, assignment, /*require_globals=*/true);
  double total = 0;
  const Index labelled = instance.num_objects() + instance.num_predicates();
  for (NodeId t = 0; t < labelled; ++t) {
    const Index zt = label_of(instance, assignment, t);
    total += unary_potential(model, instance, t)(zt);
    for (const auto& nb : instance.neighbors(t))
      total += pairwise_potential(model, instance, t, nb.id, nb.kind, zt,
                                  label_of(instance, assignment, nb.id));
  }
  return -total;
}

PotentialSet compute_potentials(const FeatureModel& model, const SceneGraphInstance& instance) {
  PotentialSet set;
  const Index labelled = instance.num_objects() + instance.num_predicates();
  for (NodeId t = 0; t < labelled; ++t) {
    set.unary.emplace(t, unary_potential(model, instance, t));
    for (const auto& nb : instance.neighbors(t))
      set.messages.emplace(PotentialSet::MessageKey{t, nb.kind, nb.id},
                           message_term(model, instance, t, nb.id, nb.kind));
  }
  return set;
}

}  // namespace sgvi
