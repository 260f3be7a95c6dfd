#pragma once

#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "sgvi/types.hpp"

namespace sgvi {

enum class NodeKind { Object, Predicate, Global };

/// Directed edge kinds as seen from the target node. The first five are the
/// message kinds gathered by object and predicate nodes; GlobalObject and
/// GlobalPredicate are the mirrored view from a global node.
enum class EdgeKind {
  ObjectPredicate,   // op: predicate -> object
  ObjectObject,      // oo: object -> object
  ObjectGlobal,      // og: global -> object
  PredicateObject,   // po: object -> predicate
  PredicateGlobal,   // pg: global -> predicate
  GlobalObject,      // object seen from a global
  GlobalPredicate,   // predicate seen from a global
};

std::string_view to_string(NodeKind kind);
std::string_view to_string(EdgeKind kind);

/// Kind of the same edge viewed from the other endpoint.
EdgeKind mirror(EdgeKind kind);

struct Neighbor {
  NodeId id;
  EdgeKind kind;
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Ordered (subject, object) endpoint pair of a predicate, as object indices.
struct PredicateEndpoints {
  Index subject;
  Index object;
  friend bool operator==(const PredicateEndpoints&, const PredicateEndpoints&) = default;
};

struct Vocabulary {
  Index objects = 0;
  Index predicates = 0;
  Index globals = 1;
  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;
};

/// Everything needed to construct an instance. Feature matrices store one
/// node per column.
struct InstanceSpec {
  Index feature_dim = 0;
  Vocabulary vocab;
  Matrix object_features;     // d x m
  Matrix predicate_features;  // d x n
  Matrix global_features;     // d x t
  std::vector<PredicateEndpoints> predicates;
  std::vector<std::pair<Index, Index>> object_edges;
};

/// Immutable, validated scene-graph factor model.
class SceneGraphInstance {
 public:
  /// Validates `spec`; throws std::invalid_argument on any violation.
  explicit SceneGraphInstance(InstanceSpec spec);

  Index feature_dim() const { return spec_.feature_dim; }
  const Vocabulary& vocab() const { return spec_.vocab; }

  Index num_objects() const { return spec_.object_features.cols(); }
  Index num_predicates() const { return spec_.predicate_features.cols(); }
  Index num_globals() const { return spec_.global_features.cols(); }
  Index num_nodes() const { return num_objects() + num_predicates() + num_globals(); }

  NodeId object_node(Index i) const { return i; }
  NodeId predicate_node(Index j) const { return num_objects() + j; }
  NodeId global_node(Index k) const { return num_objects() + num_predicates() + k; }

  NodeKind kind(NodeId id) const;
  /// Position of the node within its own kind.
  Index local_index(NodeId id) const;
  /// Vocabulary size of the node's label variable.
  Index vocab_size(NodeId id) const;

  Eigen::Ref<const Vector> features(NodeId id) const;

  const std::vector<PredicateEndpoints>& predicates() const { return spec_.predicates; }
  const std::vector<std::pair<Index, Index>>& object_edges() const { return spec_.object_edges; }
  const InstanceSpec& spec() const { return spec_; }

  /// Neighbours of a node in deterministic order; throws std::out_of_range
  /// for unknown ids.
  const std::vector<Neighbor>& neighbors(NodeId id) const;

  friend bool operator==(const SceneGraphInstance& a, const SceneGraphInstance& b);

 private:
  void check_id(NodeId id) const;

  InstanceSpec spec_;
  std::vector<std::vector<Neighbor>> adjacency_;
};

/// Builds an instance from endpoint lists and per-kind feature columns.
SceneGraphInstance build_instance(Index num_objects,
                                  const std::vector<PredicateEndpoints>& predicates,
                                  Index num_globals, const Vocabulary& vocab,
                                  const Matrix& object_features,
                                  const Matrix& predicate_features,
                                  const Matrix& global_features,
                                  std::vector<std::pair<Index, Index>> object_edges = {});

/// Unordered object pairs linked by at least one predicate, sorted.
std::vector<std::pair<Index, Index>> default_object_edges(
    const std::vector<PredicateEndpoints>& predicates);

struct LabelAssignment {
  std::vector<Index> objects;
  std::vector<Index> predicates;
  std::optional<std::vector<Index>> globals;
  friend bool operator==(const LabelAssignment&, const LabelAssignment&) = default;
};

/// Throws std::invalid_argument unless `labels` covers exactly the instance's
/// objects and predicates (and globals, when `require_globals`) with
/// in-vocabulary indices.
void validate_assignment(const SceneGraphInstance& instance, const LabelAssignment& labels,
                         bool require_globals = false);

/// An instance together with its planted labels.
struct LabeledInstance {
  SceneGraphInstance instance;
  LabelAssignment labels;
};

/// Label of a node under an assignment; globals require global labels.
Index label_of(const SceneGraphInstance& instance, const LabelAssignment& labels, NodeId id);

}  // namespace sgvi
