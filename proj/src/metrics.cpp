#include "sgvi/metrics.hpp"

#include <algorithm>
#include <stdexcept>
#include <tuple>

namespace sgvi {

std::vector<TripletPrediction> rank_triplets(const GraphPosterior& posteriors,
                                             const SceneGraphInstance& instance,
                                             const RankOptions& options) {
  auto posterior = [&](NodeId id) -> const NodePosterior& {
    const auto it = posteriors.find(id);
    if (it == posteriors.end())
      throw std::invalid_argument("rank_triplets: no posterior for node " + std::to_string(id));
    return it->second;
  };

  std::vector<TripletPrediction> out;
  for (Index j = 0; j < instance.num_predicates(); ++j) {
    const auto& ends = instance.predicates()[static_cast<std::size_t>(j)];
    const NodeId pred = instance.predicate_node(j);
    const auto& s = posterior(instance.object_node(ends.subject));
    const auto& o = posterior(instance.object_node(ends.object));
    const auto& p = posterior(pred);
    const double endpoints = s.log_posterior(s.map_label) + o.log_posterior(o.map_label);
    if (options.graph_constraint) {
      out.push_back({s.map_label, p.map_label, o.map_label,
                     endpoints + p.log_posterior(p.map_label), pred});
    } else {
      for (Index label = 0; label < p.log_posterior.size(); ++label)
        out.push_back({s.map_label, label, o.map_label, endpoints + p.log_posterior(label), pred});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.predicate_node < b.predicate_node;
  });
  return out;
}

std::vector<GroundTruthTriplet> ground_truth_triplets(const SceneGraphInstance& instance,
                                                      const LabelAssignment& labels) {
  validate_assignment(instance, labels);
  std::vector<GroundTruthTriplet> out;
  for (Index j = 0; j < instance.num_predicates(); ++j) {
    const auto& ends = instance.predicates()[static_cast<std::size_t>(j)];
    out.push_back({instance.predicate_node(j), labels.objects[static_cast<std::size_t>(ends.subject)],
                   labels.predicates[static_cast<std::size_t>(j)],
                   labels.objects[static_cast<std::size_t>(ends.object)]});
  }
  return out;
}

RecallAtK recall_at_k(const std::vector<TripletPrediction>& predictions,
                      const std::vector<GroundTruthTriplet>& ground_truth, Index k) {
  if (k < 1) throw std::invalid_argument("recall_at_k: K must be >= 1");
  if (ground_truth.empty()) throw std::invalid_argument("recall_at_k: empty ground truth");
  RecallAtK result;
  std::vector<bool> consumed(predictions.size(), false);
  const std::size_t top = std::min(predictions.size(), static_cast<std::size_t>(k));
  long matched = 0;
  for (const auto& gt : ground_truth) {
    auto& cat = result.per_category[gt.predicate_label];
    ++cat.total;
    for (std::size_t r = 0; r < top; ++r) {
      const auto& p = predictions[r];
      if (consumed[r] || p.predicate_node != gt.predicate_node) continue;
      if (std::tie(p.subject_label, p.predicate_label, p.object_label) ==
          std::tie(gt.subject_label, gt.predicate_label, gt.object_label)) {
        consumed[r] = true;
        ++cat.matched;
        ++matched;
        break;
      }
    }
  }
  result.recall = static_cast<double>(matched) / static_cast<double>(ground_truth.size());
  return result;
}

double mean_recall(const std::map<Index, double>& per_category) {
  if (per_category.empty()) throw std::invalid_argument("mean_recall: no categories");
  double total = 0;
  for (const auto& [category, recall] : per_category) total += recall;
  return total / static_cast<double>(per_category.size());
}

GroupMeans group_means(const std::map<Index, double>& per_category, const GroupSplit& split) {
  auto mean_over = [&](const std::set<Index>& members) -> std::optional<double> {
    double total = 0;
    long count = 0;
    for (Index c : members)
      if (const auto it = per_category.find(c); it != per_category.end()) {
        total += it->second;
        ++count;
      }
    if (count == 0) return std::nullopt;
    return total / static_cast<double>(count);
  };
  return {mean_over(split.head), mean_over(split.body), mean_over(split.tail)};
}

double weighted_score(double recall_at_50, double wmap_rel, double wmap_phr) {
  return 0.2 * recall_at_50 + 0.4 * wmap_rel + 0.4 * wmap_phr;
}

RecallAccumulator::RecallAccumulator(std::vector<Index> ks) : ks_(std::move(ks)) {
  if (ks_.empty()) throw std::invalid_argument("recall: need at least one K");
  for (Index k : ks_)
    if (k < 1) throw std::invalid_argument("recall: K must be >= 1");
}

void RecallAccumulator::add(const std::vector<TripletPrediction>& predictions,
                            const std::vector<GroundTruthTriplet>& ground_truth) {
  if (ground_truth.empty()) return;  // images without relations carry no recall
  ++images_;
  for (Index k : ks_) {
    const RecallAtK r = recall_at_k(predictions, ground_truth, k);
    recall_sum_[k] += r.recall;
    for (const auto& [category, counts] : r.per_category) {
      auto& slot = category_sum_[k][category];
      slot.first += counts.recall();
      ++slot.second;
    }
  }
}

RecallReport RecallAccumulator::report(const std::optional<GroupSplit>& split) const {
  RecallReport report;
  report.ks = ks_;
  report.images = images_;
  for (Index k : ks_) {
    report.recall[k] = images_ > 0 ? recall_sum_.at(k) / static_cast<double>(images_) : 0.0;
    auto& cats = report.per_category[k];
    if (const auto it = category_sum_.find(k); it != category_sum_.end())
      for (const auto& [category, slot] : it->second)
        cats[category] = slot.first / static_cast<double>(slot.second);
    report.mean_recall[k] = cats.empty() ? 0.0 : mean_recall(cats);
    if (split) report.groups[k] = group_means(cats, *split);
  }
  return report;
}

}  // namespace sgvi
