#include "sgvi/factor_graph.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>

namespace sgvi {

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Object: return "object";
    case NodeKind::Predicate: return "predicate";
    case NodeKind::Global: return "global";
  }
  return "?";
}

std::string_view to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::ObjectPredicate: return "op";
    case EdgeKind::ObjectObject: return "oo";
    case EdgeKind::ObjectGlobal: return "og";
    case EdgeKind::PredicateObject: return "po";
    case EdgeKind::PredicateGlobal: return "pg";
    case EdgeKind::GlobalObject: return "go";
    case EdgeKind::GlobalPredicate: return "gp";
  }
  return "?";
}

EdgeKind mirror(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::ObjectPredicate: return EdgeKind::PredicateObject;
    case EdgeKind::PredicateObject: return EdgeKind::ObjectPredicate;
    case EdgeKind::ObjectObject: return EdgeKind::ObjectObject;
    case EdgeKind::ObjectGlobal: return EdgeKind::GlobalObject;
    case EdgeKind::GlobalObject: return EdgeKind::ObjectGlobal;
    case EdgeKind::PredicateGlobal: return EdgeKind::GlobalPredicate;
    case EdgeKind::GlobalPredicate: return EdgeKind::PredicateGlobal;
  }
  return kind;
}

namespace {

void fail(const std::string& what) { throw std::invalid_argument("scene graph: " + what); }

}  // namespace

SceneGraphInstance::SceneGraphInstance(InstanceSpec spec) : spec_(std::move(spec)) {
  const Index d = spec_.feature_dim;
  const Index m = spec_.object_features.cols();
  const Index n = spec_.predicate_features.cols();
  const Index t = spec_.global_features.cols();

  if (d < 1) fail("feature dimension must be positive");
  if (spec_.vocab.objects < 2) fail("object vocabulary must have at least 2 labels");
  if (spec_.vocab.predicates < 2) fail("predicate vocabulary must have at least 2 labels");
  if (spec_.vocab.globals < 1) fail("global vocabulary must have at least 1 label");
  if ((m > 0 && spec_.object_features.rows() != d) ||
      (n > 0 && spec_.predicate_features.rows() != d) ||
      (t > 0 && spec_.global_features.rows() != d))
    fail("feature dimension mismatch");
  if (!spec_.object_features.allFinite() || !spec_.predicate_features.allFinite() ||
      !spec_.global_features.allFinite())
    fail("non-finite feature value");
  if (static_cast<Index>(spec_.predicates.size()) != n)
    fail("predicate endpoint count differs from predicate feature count");
  if (n > m * m - m) fail("too many predicates: n must not exceed m^2 - m");

  std::set<std::pair<Index, Index>> seen;
  for (const auto& p : spec_.predicates) {
    if (p.subject < 0 || p.subject >= m || p.object < 0 || p.object >= m)
      fail("predicate endpoint out of range");
    if (p.subject == p.object) fail("predicate endpoints must be distinct objects");
    if (!seen.emplace(p.subject, p.object).second) fail("duplicate predicate endpoints");
  }

  std::set<std::pair<Index, Index>> links;
  for (auto& [a, b] : spec_.object_edges) {
    if (a < 0 || a >= m || b < 0 || b >= m) fail("object edge out of range");
    if (a == b) fail("object edge must join distinct objects");
    if (a > b) std::swap(a, b);
    if (!links.emplace(a, b).second) fail("duplicate object edge");
  }

  // Adjacency lists: objects see predicates, then linked objects, then
  // globals; predicates see subject, object, then globals.
  adjacency_.assign(static_cast<std::size_t>(m + n + t), {});
  std::vector<std::vector<Index>> object_preds(static_cast<std::size_t>(m));
  std::vector<std::vector<Index>> object_links(static_cast<std::size_t>(m));
  for (Index j = 0; j < n; ++j) {
    const auto& p = spec_.predicates[static_cast<std::size_t>(j)];
    object_preds[static_cast<std::size_t>(p.subject)].push_back(j);
    object_preds[static_cast<std::size_t>(p.object)].push_back(j);
  }
  for (const auto& [a, b] : links) {
    object_links[static_cast<std::size_t>(a)].push_back(b);
    object_links[static_cast<std::size_t>(b)].push_back(a);
  }
  for (Index i = 0; i < m; ++i) {
    auto& adj = adjacency_[static_cast<std::size_t>(object_node(i))];
    for (Index j : object_preds[static_cast<std::size_t>(i)])
      adj.push_back({predicate_node(j), EdgeKind::ObjectPredicate});
    auto& others = object_links[static_cast<std::size_t>(i)];
    std::sort(others.begin(), others.end());
    for (Index l : others) adj.push_back({object_node(l), EdgeKind::ObjectObject});
    for (Index k = 0; k < t; ++k) adj.push_back({global_node(k), EdgeKind::ObjectGlobal});
  }
  for (Index j = 0; j < n; ++j) {
    const auto& p = spec_.predicates[static_cast<std::size_t>(j)];
    auto& adj = adjacency_[static_cast<std::size_t>(predicate_node(j))];
    adj.push_back({object_node(p.subject), EdgeKind::PredicateObject});
    adj.push_back({object_node(p.object), EdgeKind::PredicateObject});
    for (Index k = 0; k < t; ++k) adj.push_back({global_node(k), EdgeKind::PredicateGlobal});
  }
  for (Index k = 0; k < t; ++k) {
    auto& adj = adjacency_[static_cast<std::size_t>(global_node(k))];
    for (Index i = 0; i < m; ++i) adj.push_back({object_node(i), EdgeKind::GlobalObject});
    for (Index j = 0; j < n; ++j) adj.push_back({predicate_node(j), EdgeKind::GlobalPredicate});
  }
}

void SceneGraphInstance::check_id(NodeId id) const {
  if (id < 0 || id >= num_nodes())
    throw std::out_of_range("scene graph: unknown node id " + std::to_string(id));
}

NodeKind SceneGraphInstance::kind(NodeId id) const {
  check_id(id);
  if (id < num_objects()) return NodeKind::Object;
  if (id < num_objects() + num_predicates()) return NodeKind::Predicate;
  return NodeKind::Global;
}

Index SceneGraphInstance::local_index(NodeId id) const {
  switch (kind(id)) {
    case NodeKind::Object: return id;
    case NodeKind::Predicate: return id - num_objects();
    case NodeKind::Global: return id - num_objects() - num_predicates();
  }
  return -1;
}

Index SceneGraphInstance::vocab_size(NodeId id) const {
  switch (kind(id)) {
    case NodeKind::Object: return spec_.vocab.objects;
    case NodeKind::Predicate: return spec_.vocab.predicates;
    case NodeKind::Global: return spec_.vocab.globals;
  }
  return 0;
}

Eigen::Ref<const Vector> SceneGraphInstance::features(NodeId id) const {
  const Index local = local_index(id);
  switch (kind(id)) {
    case NodeKind::Object: return spec_.object_features.col(local);
    case NodeKind::Predicate: return spec_.predicate_features.col(local);
    case NodeKind::Global: break;
  }
  return spec_.global_features.col(local);
}

const std::vector<Neighbor>& SceneGraphInstance::neighbors(NodeId id) const {
  check_id(id);
  return adjacency_[static_cast<std::size_t>(id)];
}

bool operator==(const SceneGraphInstance& a, const SceneGraphInstance& b) {
  const auto& x = a.spec_;
  const auto& y = b.spec_;
  return x.feature_dim == y.feature_dim && x.vocab == y.vocab &&
         x.object_features == y.object_features &&
         x.predicate_features == y.predicate_features &&
         x.global_features == y.global_features && x.predicates == y.predicates &&
         x.object_edges == y.object_edges;
}

SceneGraphInstance build_instance(Index num_objects,
                                  const std::vector<PredicateEndpoints>& predicates,
                                  Index num_globals, const Vocabulary& vocab,
                                  const Matrix& object_features,
                                  const Matrix& predicate_features,
                                  const Matrix& global_features,
                                  std::vector<std::pair<Index, Index>> object_edges) {
  if (object_features.cols() != num_objects)
    fail("object feature count differs from object count");
  if (global_features.cols() != num_globals)
    fail("global feature count differs from global count");
  InstanceSpec spec;
  spec.feature_dim = object_features.rows() > 0 ? object_features.rows()
                                                : predicate_features.rows();
  if (spec.feature_dim == 0) spec.feature_dim = global_features.rows();
  spec.vocab = vocab;
  spec.object_features = object_features;
  spec.predicate_features = predicate_features;
  spec.global_features = global_features;
  spec.predicates = predicates;
  spec.object_edges = std::move(object_edges);
  return SceneGraphInstance(std::move(spec));
}

std::vector<std::pair<Index, Index>> default_object_edges(
    const std::vector<PredicateEndpoints>& predicates) {
  std::set<std::pair<Index, Index>> links;
  for (const auto& p : predicates)
    links.emplace(std::min(p.subject, p.object), std::max(p.subject, p.object));
  return {links.begin(), links.end()};
}

void validate_assignment(const SceneGraphInstance& instance, const LabelAssignment& labels,
                         bool require_globals) {
  auto check = [](const std::vector<Index>& v, Index count, Index vocab, const char* what) {
    if (static_cast<Index>(v.size()) != count)
      throw std::invalid_argument(std::string("assignment: wrong number of ") + what + " labels");
    for (Index z : v)
      if (z < 0 || z >= vocab)
        throw std::invalid_argument(std::string("assignment: ") + what + " label out of range");
  };
  check(labels.objects, instance.num_objects(), instance.vocab().objects, "object");
  check(labels.predicates, instance.num_predicates(), instance.vocab().predicates, "predicate");
  if (labels.globals)
    check(*labels.globals, instance.num_globals(), instance.vocab().globals, "global");
  else if (require_globals && instance.num_globals() > 0)
    throw std::invalid_argument("assignment: global labels required");
}

Index label_of(const SceneGraphInstance& instance, const LabelAssignment& labels, NodeId id) {
  const auto at = [](const std::vector<Index>& v, Index i) {
    return v.at(static_cast<std::size_t>(i));
  };
  const Index local = instance.local_index(id);
  switch (instance.kind(id)) {
    case NodeKind::Object: return at(labels.objects, local);
    case NodeKind::Predicate: return at(labels.predicates, local);
    case NodeKind::Global: break;
  }
  if (!labels.globals) throw std::invalid_argument("assignment: global labels required");
  return at(*labels.globals, local);
}

}  // namespace sgvi
