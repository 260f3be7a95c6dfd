#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "sgvi/factor_graph.hpp"
#include "sgvi/scoring.hpp"
#include "sgvi/types.hpp"

namespace sgvi {

/// A probability vector on the simplex.
using Distribution = Vector;

enum class InitMode { Uniform, SeededRandom };

struct EMDConfig {
  int max_iterations = 50;           // T
  double initial_learning_rate = 1.0;  // alpha_0; step i uses alpha_0 / sqrt(i)
  double tolerance = 1e-4;           // epsilon of the stopping rule
  InitMode init = InitMode::SeededRandom;

  void validate() const;
};

struct TraceEntry {
  int iteration;
  double elbo;
  double learning_rate;
};

struct VariationalState {
  Distribution q;
  std::vector<TraceEntry> trace;  // objective at each iteration's current q
  bool converged = false;
  int iterations_used = 0;
  double final_elbo = 0;  // objective at the returned q
  double best_elbo = 0;   // maximum objective over all evaluated iterates
};

/// Smallest probability kept by the iterative solvers so log q stays finite.
inline constexpr double kProbabilityFloor = 1e-12;

/// Objective E_q[scores] - E_q[log q]; throws if q is off the simplex.
double elbo(const Vector& scores, const Distribution& q);

/// Multiplicative update q * exp(alpha * g - max(alpha * g)), renormalised.
Distribution emd_step(const Distribution& q, const Vector& gradient, double learning_rate);

/// Gradient of the objective with respect to q: scores - log q - 1.
Vector elbo_gradient(const Vector& scores, const Distribution& q);

/// Entropic mirror descent maximisation of elbo(scores, .) over the simplex.
VariationalState emd_infer(const Vector& scores, const EMDConfig& config, std::mt19937_64& rng);

/// Projected (Euclidean) gradient ascent baseline with the same stopping rule.
VariationalState pgd_infer(const Vector& scores, const EMDConfig& config, std::mt19937_64& rng);

/// Closed-form maximiser of elbo(scores, .): softmax(scores).
Distribution softmax_oracle(const Vector& scores);

Distribution initial_distribution(Index size, InitMode mode, std::mt19937_64& rng);

/// phi = scores - elbo_max.
Vector surrogate_logit(const Vector& scores, double elbo_max);

struct NodePosterior {
  Vector surrogate_logit;
  Vector log_posterior;
  Index map_label = 0;
  int iterations_used = 0;
  std::vector<TraceEntry> trace;
  bool clamped = false;
};

struct LogPosterior {
  Vector log_probs;
  Index map_label;
};

/// phi - log ||exp(phi)||_1 and its argmax (lowest index on ties).
LogPosterior log_posterior(const Vector& phi);

/// One posterior per object and predicate node, keyed by node id.
using GraphPosterior = std::map<NodeId, NodePosterior>;

struct GraphInferenceOptions {
  EMDConfig emd;
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Per-node RNG stream derived from a master seed; independent of scheduling.
std::mt19937_64 node_rng(std::uint64_t seed, NodeId node);

NodePosterior infer_node(const Vector& scores, const EMDConfig& config, std::mt19937_64& rng);

GraphPosterior infer_graph(const FeatureModel& model, const SceneGraphInstance& instance,
                           const GraphInferenceOptions& options);

/// Replaces a node's posterior by a point mass on `label`.
void clamp_posterior(NodePosterior& posterior, Index label);

/// Largest joint labelling space exact_gibbs_marginals will enumerate.
inline constexpr double kMaxEnumeration = 1e7;

/// Exact marginals of the Gibbs distribution exp(joint_log_score) by
/// enumerating every labelling of objects, predicates and globals.
std::map<NodeId, Distribution> exact_gibbs_marginals(const FeatureModel& model,
                                                     const SceneGraphInstance& instance);

}  // namespace sgvi
