#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string_view>
#include <tuple>
#include <vector>

#include "sgvi/factor_graph.hpp"
#include "sgvi/mlp.hpp"
#include "sgvi/types.hpp"

namespace sgvi {

/// The seven score-producing networks.
enum class ScoreFunction : std::size_t {
  UnaryObject = 0,     // h^o(y_i)
  UnaryPredicate,      // h^p(y_j)
  ObjectPredicate,     // g^op(y_i, y_j)
  ObjectObject,        // g^oo(y_i, y_l)
  ObjectGlobal,        // g^og(y_i, y_k)
  PredicateObject,     // g^po(y_i, y_j)
  PredicateGlobal,     // g^pg(y_j, y_k)
};
inline constexpr std::size_t kNumScoreFunctions = 7;

std::string_view to_string(ScoreFunction f);
std::optional<ScoreFunction> score_function_from_string(std::string_view name);

/// How a pair network's output becomes a binary potential.
///  - Factorized: psi(z_t, z_s) = g(y)[z_t], independent of the source label.
///  - LabelTable: g outputs v_t * v_s scores and psi(z_t, z_s) = g(y)[z_t * v_s + z_s].
enum class PairwiseForm { Factorized, LabelTable };

std::string_view to_string(PairwiseForm form);
PairwiseForm pairwise_form_from_string(std::string_view name);

struct ModelShape {
  Index feature_dim = 0;
  Vocabulary vocab;
  std::vector<Index> hidden;  // one entry per hidden layer
  PairwiseForm pairwise = PairwiseForm::Factorized;
};

/// Parameters of every score function.
struct FeatureModel {
  std::array<Mlp, kNumScoreFunctions> functions;
  Vocabulary vocab;
  PairwiseForm pairwise = PairwiseForm::Factorized;
  std::uint64_t seed = 0;

  const Mlp& operator[](ScoreFunction f) const { return functions[static_cast<std::size_t>(f)]; }
  Mlp& operator[](ScoreFunction f) { return functions[static_cast<std::size_t>(f)]; }

  Index feature_dim() const { return functions[0].input_width(); }
  std::size_t parameter_count() const;

  friend bool operator==(const FeatureModel&, const FeatureModel&) = default;
};

/// All-zero model of the given shape.
FeatureModel zero_feature_model(const ModelShape& shape);

/// Seeded fan-in-scaled uniform initialisation.
FeatureModel random_feature_model(const ModelShape& shape, std::uint64_t seed);

/// Throws std::invalid_argument unless widths chain and output widths match
/// the vocabularies.
void validate_model(const FeatureModel& model);

/// Expected output width of a score function.
Index output_width(ScoreFunction f, const Vocabulary& vocab, PairwiseForm form);

ScoreFunction function_for(EdgeKind kind);

/// Vocabulary size of the label summed out by a message of this kind.
Index source_vocab(EdgeKind kind, const Vocabulary& vocab);

/// Raw network output; thin wrapper over Mlp::forward.
Vector mlp_forward(const Mlp& params, const Eigen::Ref<const Vector>& input);

/// Concatenated pair features in the argument order of the pair network:
/// op (object, predicate), oo (object, object), og (object, global),
/// po (object, predicate), pg (predicate, global).
Vector pair_input(const SceneGraphInstance& instance, NodeId target, NodeId source, EdgeKind kind);

/// Throws std::invalid_argument unless `source` is a neighbour of `target`
/// with the given message kind.
void check_message_edge(const SceneGraphInstance& instance, NodeId target, NodeId source,
                        EdgeKind kind);

Vector unary_potential(const FeatureModel& model, const SceneGraphInstance& instance, NodeId node);

/// Single binary potential psi_b(z_target, z_source) of one directed edge.
double pairwise_potential(const FeatureModel& model, const SceneGraphInstance& instance,
                          NodeId target, NodeId source, EdgeKind kind, Index target_label,
                          Index source_label);

/// Message over target labels: the binary potential summed over all source
/// labels.
Vector message_term(const FeatureModel& model, const SceneGraphInstance& instance,
                    NodeId target, NodeId source, EdgeKind kind);

/// -(unary + sum of incoming messages) over the node's labels.
Vector node_marginal_log_score(const FeatureModel& model, const SceneGraphInstance& instance,
                               NodeId node);

/// Log score of a complete labelling; global labels are required.
double joint_log_score(const FeatureModel& model, const SceneGraphInstance& instance,
                       const LabelAssignment& assignment);

/// Materialised unary vectors and messages for one instance.
struct PotentialSet {
  using MessageKey = std::tuple<NodeId, EdgeKind, NodeId>;  // target, kind, source
  std::map<NodeId, Vector> unary;
  std::map<MessageKey, Vector> messages;
};

PotentialSet compute_potentials(const FeatureModel& model, const SceneGraphInstance& instance);

}  // namespace sgvi
