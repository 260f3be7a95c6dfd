#pragma once

#include <map>
#include <optional>
#include <vector>

#include "sgvi/factor_graph.hpp"
#include "sgvi/inference.hpp"
#include "sgvi/synthdata.hpp"
#include "sgvi/types.hpp"

namespace sgvi {

struct TripletPrediction {
  Index subject_label;
  Index predicate_label;
  Index object_label;
  double confidence;
  NodeId predicate_node;
};

struct GroundTruthTriplet {
  NodeId predicate_node;
  Index subject_label;
  Index predicate_label;
  Index object_label;
};

struct RankOptions {
  /// With the graph constraint each predicate node contributes only its MAP
  /// triplet; without it every predicate label of every node is ranked.
  bool graph_constraint = true;
};

/// Predictions ordered by descending confidence (sum of the three nodes' log
/// posteriors), ties broken by predicate node id.
std::vector<TripletPrediction> rank_triplets(const GraphPosterior& posteriors,
                                             const SceneGraphInstance& instance,
                                             const RankOptions& options = {});

std::vector<GroundTruthTriplet> ground_truth_triplets(const SceneGraphInstance& instance,
                                                      const LabelAssignment& labels);

struct CategoryRecall {
  long matched = 0;
  long total = 0;
  double recall() const { return total > 0 ? static_cast<double>(matched) / static_cast<double>(total) : 0.0; }
};

struct RecallAtK {
  double recall = 0;
  std::map<Index, CategoryRecall> per_category;  // categories present in ground truth
};

/// A ground-truth triplet counts as recalled when a top-K prediction on the
/// same predicate node carries the same labels; each prediction consumes at
/// most one ground-truth triplet.
RecallAtK recall_at_k(const std::vector<TripletPrediction>& predictions,
                      const std::vector<GroundTruthTriplet>& ground_truth, Index k);

/// Unweighted mean of per-category recalls.
double mean_recall(const std::map<Index, double>& per_category);

struct GroupMeans {
  std::optional<double> head;
  std::optional<double> body;
  std::optional<double> tail;
};

/// Mean recall of each group over its categories present in `per_category`.
GroupMeans group_means(const std::map<Index, double>& per_category, const GroupSplit& split);

/// 0.2 * R@50 + 0.4 * wmAP_rel + 0.4 * wmAP_phr. Inputs must share one scale.
double weighted_score(double recall_at_50, double wmap_rel, double wmap_phr);

struct RecallReport {
  std::vector<Index> ks;
  std::map<Index, double> recall;                              // K -> R@K
  std::map<Index, double> mean_recall;                         // K -> mR@K
  std::map<Index, std::map<Index, double>> per_category;       // K -> category -> recall
  std::map<Index, GroupMeans> groups;                          // K -> group means
  long images = 0;
};

/// Dataset-level aggregation: R@K is averaged over images; each category's
/// recall is averaged over the images containing it, and mR@K is the mean of
/// those category recalls.
class RecallAccumulator {
 public:
  explicit RecallAccumulator(std::vector<Index> ks);

  void add(const std::vector<TripletPrediction>& predictions,
           const std::vector<GroundTruthTriplet>& ground_truth);

  RecallReport report(const std::optional<GroupSplit>& split = std::nullopt) const;

 private:
  std::vector<Index> ks_;
  std::map<Index, double> recall_sum_;
  std::map<Index, std::map<Index, std::pair<double, long>>> category_sum_;
  long images_ = 0;
};

}  // namespace sgvi
