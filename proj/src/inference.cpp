#include "sgvi/inference.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>

#include "sgvi/random.hpp"
#include "sgvi/simplex.hpp"

namespace sgvi {

void EMDConfig::validate() const {
  if (max_iterations < 1) throw std::invalid_argument("emd: max_iterations must be >= 1");
  if (!(initial_learning_rate > 0) || !std::isfinite(initial_learning_rate))
    throw std::invalid_argument("emd: initial learning rate must be positive");
  if (!(tolerance > 0)) throw std::invalid_argument("emd: tolerance must be positive");
}

double elbo(const Vector& scores, const Distribution& q) { return sgvi::elbo(scores, q, 1e-9); }

Distribution emd_step(const Distribution& q, const Vector& gradient, double learning_rate) {
  return entropic_step(q, gradient, learning_rate);
}

Vector elbo_gradient(const Vector& scores, const Distribution& q) {
  return scores.array() - q.array().max(kProbabilityFloor).log() - 1.0;
}

Distribution softmax_oracle(const Vector& scores) { return softmax(scores); }

namespace {

Distribution floor_and_normalize(Distribution q) {
  q = q.cwiseMax(kProbabilityFloor);
  return q / q.sum();
}

void check_scores(const Vector& scores) {
  if (scores.size() == 0) throw std::invalid_argument("inference: empty score vector");
  if (!scores.allFinite()) throw std::invalid_argument("inference: non-finite scores");
}

// Shared driver for the two solvers: evaluate, record, test the stopping
// rule against the previous objective, then update.
template <typename Update>
VariationalState ascend(const Vector& scores, const EMDConfig& config, std::mt19937_64& rng,
                        Update update) {
  check_scores(scores);
  config.validate();
  VariationalState state;
  state.q = initial_distribution(scores.size(), config.init, rng);
  double previous = std::numeric_limits<double>::infinity();
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 1; i <= config.max_iterations; ++i) {
    const double value = elbo(scores, state.q);
    const double rate = config.initial_learning_rate / std::sqrt(static_cast<double>(i));
    state.trace.push_back({i, value, rate});
    best = std::max(best, value);
    if (std::abs(value - previous) < config.tolerance) {
      state.converged = true;
      break;
    }
    previous = value;
    state.q = floor_and_normalize(update(state.q, elbo_gradient(scores, state.q), rate));
  }
  state.iterations_used = static_cast<int>(state.trace.size());
  state.final_elbo = elbo(scores, state.q);
  state.best_elbo = std::max(best, state.final_elbo);
  return state;
}

}  // namespace

Distribution initial_distribution(Index size, InitMode mode, std::mt19937_64& rng) {
  if (size < 1) throw std::invalid_argument("inference: distribution size must be positive");
  if (mode == InitMode::Uniform) return Distribution::Constant(size, 1.0 / static_cast<double>(size));
  // Flat Dirichlet: normalised unit exponentials.
  std::exponential_distribution<double> unit(1.0);
  Distribution q(size);
  for (Index i = 0; i < size; ++i) q(i) = unit(rng);
  return floor_and_normalize(q / q.sum());
}

VariationalState emd_infer(const Vector& scores, const EMDConfig& config, std::mt19937_64& rng) {
  return ascend(scores, config, rng, [](const Distribution& q, const Vector& g, double rate) {
    return emd_step(q, g, rate);
  });
}

VariationalState pgd_infer(const Vector& scores, const EMDConfig& config, std::mt19937_64& rng) {
  return ascend(scores, config, rng, [](const Distribution& q, const Vector& g, double rate) {
    return Distribution(project_to_simplex(q + rate * g));
  });
}

Vector surrogate_logit(const Vector& scores, double elbo_max) {
  if (!std::isfinite(elbo_max)) throw std::invalid_argument("surrogate_logit: non-finite elbo maximum");
  return scores.array() - elbo_max;
}

LogPosterior log_posterior(const Vector& phi) {
  check_scores(phi);
  return {log_softmax(phi), argmax(phi)};
}

std::mt19937_64 node_rng(std::uint64_t seed, NodeId node) {
  return stream_rng(seed, static_cast<std::uint64_t>(node));
}

NodePosterior infer_node(const Vector& scores, const EMDConfig& config, std::mt19937_64& rng) {
  VariationalState state = emd_infer(scores, config, rng);
  NodePosterior out;
  out.surrogate_logit = surrogate_logit(scores, state.best_elbo);
  auto [log_probs, label] = log_posterior(out.surrogate_logit);
  out.log_posterior = std::move(log_probs);
  out.map_label = label;
  out.iterations_used = state.iterations_used;
  out.trace = std::move(state.trace);
  return out;
}

GraphPosterior infer_graph(const FeatureModel& model, const SceneGraphInstance& instance,
                           const GraphInferenceOptions& options) {
  if (!(model.vocab == instance.vocab()) || model.feature_dim() != instance.feature_dim())
    throw std::invalid_argument("infer_graph: model and instance shapes differ");
  options.emd.validate();
  const Index count = instance.num_objects() + instance.num_predicates();
  std::vector<NodePosterior> results(static_cast<std::size_t>(count));

  auto run_range = [&](Index begin, Index end) {
    for (NodeId node = begin; node < end; ++node) {
      auto rng = node_rng(options.seed, node);
      results[static_cast<std::size_t>(node)] =
          infer_node(node_marginal_log_score(model, instance, node), options.emd, rng);
    }
  };

  const Index workers = std::max<Index>(1, std::min<Index>(options.workers, count));
  if (workers == 1) {
    run_range(0, count);
  } else {
    std::vector<std::thread> pool;
    const Index chunk = (count + workers - 1) / workers;
    for (Index w = 0; w < workers; ++w)
      pool.emplace_back(run_range, w * chunk, std::min(count, (w + 1) * chunk));
    for (auto& t : pool) t.join();
  }

  GraphPosterior out;
  for (NodeId node = 0; node < count; ++node)
    out.emplace(node, std::move(results[static_cast<std::size_t>(node)]));
  return out;
}

void clamp_posterior(NodePosterior& posterior, Index label) {
  const Index v = posterior.log_posterior.size();
  if (label < 0 || label >= v) throw std::invalid_argument("clamp_posterior: label out of range");
  posterior.log_posterior.setConstant(-std::numeric_limits<double>::infinity());
  posterior.log_posterior(label) = 0;
  posterior.surrogate_logit = posterior.log_posterior;
  posterior.map_label = label;
  posterior.clamped = true;
}

std::map<NodeId, Distribution> exact_gibbs_marginals(const FeatureModel& model,
                                                     const SceneGraphInstance& instance) {
  const Index nodes = instance.num_nodes();
  double space = 1;
  for (NodeId v = 0; v < nodes; ++v) space *= static_cast<double>(instance.vocab_size(v));
  if (space > kMaxEnumeration)
    throw std::invalid_argument("exact_gibbs_marginals: labelling space of " +
                                std::to_string(space) + " exceeds the enumeration limit");

  // Tabulate every term of the joint score once.
  struct EdgeTable {
    NodeId target;
    NodeId source;
    Matrix psi;  // v_target x v_source
  };
  const Index labelled = instance.num_objects() + instance.num_predicates();
  std::vector<Vector> unary;
  std::vector<EdgeTable> edges;
  for (NodeId t = 0; t < labelled; ++t) {
    unary.push_back(unary_potential(model, instance, t));
    for (const auto& nb : instance.neighbors(t)) {
      Matrix psi(instance.vocab_size(t), instance.vocab_size(nb.id));
      for (Index a = 0; a < psi.rows(); ++a)
        for (Index b = 0; b < psi.cols(); ++b)
          psi(a, b) = pairwise_potential(model, instance, t, nb.id, nb.kind, a, b);
      edges.push_back({t, nb.id, std::move(psi)});
    }
  }

  std::vector<Index> labels(static_cast<std::size_t>(nodes), 0);
  auto score = [&] {
    double s = 0;
    for (NodeId t = 0; t < labelled; ++t)
      s += unary[static_cast<std::size_t>(t)](labels[static_cast<std::size_t>(t)]);
    for (const auto& e : edges)
      s += e.psi(labels[static_cast<std::size_t>(e.target)], labels[static_cast<std::size_t>(e.source)]);
    return -s;
  };
  auto advance = [&] {
    for (NodeId v = 0; v < nodes; ++v) {
      auto& z = labels[static_cast<std::size_t>(v)];
      if (++z < instance.vocab_size(v)) return true;
      z = 0;
    }
    return false;
  };

  double peak = -std::numeric_limits<double>::infinity();
  do {
    peak = std::max(peak, score());
  } while (advance());

  std::map<NodeId, Distribution> marginals;
  for (NodeId v = 0; v < nodes; ++v) marginals[v] = Distribution::Zero(instance.vocab_size(v));
  std::fill(labels.begin(), labels.end(), 0);
  do {
    const double w = std::exp(score() - peak);
    for (NodeId v = 0; v < nodes; ++v) marginals[v](labels[static_cast<std::size_t>(v)]) += w;
  } while (advance());
  for (auto& [id, p] : marginals) p /= p.sum();
  return marginals;
}

}  // namespace sgvi
