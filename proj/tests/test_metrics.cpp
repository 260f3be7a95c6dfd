#include "doctest.h"

#include <cmath>

#include "sgvi/metrics.hpp"

using namespace sgvi;
using doctest::Approx;

namespace {

NodePosterior posterior(std::initializer_list<double> probs) {
  NodePosterior p;
  p.log_posterior.resize(static_cast<Index>(probs.size()));
  Index i = 0;
  for (double x : probs) p.log_posterior(i++) = std::log(x);
  p.map_label = 0;
  for (Index k = 1; k < p.log_posterior.size(); ++k)
    if (p.log_posterior(k) > p.log_posterior(p.map_label)) p.map_label = k;
  return p;
}

// Three objects, predicates 0->1, 1->2, 0->2 (nodes 3, 4, 5).
SceneGraphInstance three_predicates() {
  return build_instance(3, {{0, 1}, {1, 2}, {0, 2}}, 0, {2, 2, 1}, Matrix::Zero(1, 3), Matrix::Zero(1, 3),
                        Matrix(1, 0));
}

GraphPosterior three_predicate_posteriors() {
  return {{0, posterior({0.8, 0.2})}, {1, posterior({0.4, 0.6})}, {2, posterior({0.9, 0.1})},
          {3, posterior({0.7, 0.3})}, {4, posterior({0.5, 0.5})}, {5, posterior({0.1, 0.9})}};
}

}  // namespace

TEST_CASE("ranking") {
  SUBCASE("single predicate") {
    const auto inst = build_instance(2, {{0, 1}}, 0, {2, 2, 1}, Matrix::Zero(1, 2), Matrix::Zero(1, 1), Matrix(1, 0));
    const GraphPosterior post{{0, posterior({0.5, 0.5})}, {1, posterior({0.5, 0.5})}, {2, posterior({0.3, 0.7})}};
    const auto ranked = rank_triplets(post, inst);
    REQUIRE(ranked.size() == 1);
    CHECK(ranked[0].predicate_label == 1);
    CHECK(ranked[0].confidence == Approx(std::log(0.5 * 0.5 * 0.7)));
  }
  SUBCASE("equal confidences fall back to node order") {
    const auto inst = build_instance(2, {{1, 0}, {0, 1}}, 0, {2, 2, 1}, Matrix::Zero(1, 2), Matrix::Zero(1, 2),
                                     Matrix(1, 0));
    const GraphPosterior post{{0, posterior({0.5, 0.5})}, {1, posterior({0.5, 0.5})},
                              {2, posterior({0.6, 0.4})}, {3, posterior({0.4, 0.6})}};
    const auto ranked = rank_triplets(post, inst);
    REQUIRE(ranked.size() == 2);
    CHECK(ranked[0].predicate_node == 2);
    CHECK(ranked[1].predicate_node == 3);
  }
  SUBCASE("hand-computed three-predicate order") {
    // Confidences: node 3 -> .8*.6*.7 = .336, node 4 -> .6*.9*.5 = .27, node 5 -> .8*.9*.9 = .648.
    const auto ranked = rank_triplets(three_predicate_posteriors(), three_predicates());
    REQUIRE(ranked.size() == 3);
    CHECK(ranked[0].predicate_node == 5);
    CHECK(ranked[1].predicate_node == 3);
    CHECK(ranked[2].predicate_node == 4);
    CHECK(ranked[0].confidence == Approx(std::log(0.648)));
    CHECK(ranked[1].confidence == Approx(std::log(0.336)));
    CHECK(ranked[2].confidence == Approx(std::log(0.27)));
    CHECK(ranked[0].subject_label == 0);
    CHECK(ranked[0].predicate_label == 1);
    CHECK(ranked[0].object_label == 0);
  }
  SUBCASE("without the graph constraint every predicate label is ranked") {
    const auto ranked = rank_triplets(three_predicate_posteriors(), three_predicates(), {false});
    CHECK(ranked.size() == 6);
    for (std::size_t i = 1; i < ranked.size(); ++i) CHECK(ranked[i - 1].confidence >= ranked[i].confidence);
  }
  SUBCASE("missing posterior") {
    CHECK_THROWS_AS(rank_triplets({}, three_predicates()), std::invalid_argument);
  }
}

TEST_CASE("recall at K") {
  const auto inst = three_predicates();
  const auto ranked = rank_triplets(three_predicate_posteriors(), inst);
  // Ground truth: node 5 (0,1,0) and node 3 (0,0,1) are ranked first and second;
  // node 4 (1,0,0) is ranked third.
  const auto gt = ground_truth_triplets(inst, {{0, 1, 0}, {0, 0, 1}, std::nullopt});

  SUBCASE("two of three in the top two") {
    const auto r = recall_at_k(ranked, gt, 2);
    CHECK(r.recall == 2.0 / 3.0);
    CHECK(r.per_category.at(0).matched == 1);
    CHECK(r.per_category.at(0).total == 2);
    CHECK(r.per_category.at(1).matched == 1);
    CHECK(r.per_category.at(1).total == 1);
    CHECK(recall_at_k(ranked, gt, 3).recall == 1.0);
    CHECK(recall_at_k(ranked, gt, 1).recall == 1.0 / 3.0);
  }
  SUBCASE("monotone in K") {
    double last = 0;
    for (Index k = 1; k <= 5; ++k) {
      const double r = recall_at_k(ranked, gt, k).recall;
      CHECK(r >= last);
      last = r;
    }
  }
  SUBCASE("disjoint predictions") {
    const auto other = ground_truth_triplets(inst, {{1, 0, 1}, {1, 1, 0}, std::nullopt});
    CHECK(recall_at_k(ranked, other, 3).recall == 0.0);
  }
  SUBCASE("a superset recovers everything") {
    auto superset = rank_triplets(three_predicate_posteriors(), inst, {false});
    const auto r = recall_at_k(superset, gt, 6);
    CHECK(r.recall == 1.0);
    for (const auto& [c, counts] : r.per_category) CHECK(counts.recall() == 1.0);
  }
  SUBCASE("a prediction matches at most one ground truth") {
    std::vector<GroundTruthTriplet> doubled{gt[0], gt[0]};
    CHECK(recall_at_k(ranked, doubled, 3).recall == 0.5);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(recall_at_k(ranked, {}, 2), std::invalid_argument);
    CHECK_THROWS_AS(recall_at_k(ranked, gt, 0), std::invalid_argument);
  }
}

TEST_CASE("mean recall") {
  CHECK(mean_recall({{3, 0.4}}) == 0.4);
  CHECK(mean_recall({{0, 1.0}, {1, 0.0}}) == 0.5);
  CHECK_THROWS_AS(mean_recall({}), std::invalid_argument);

  SUBCASE("duplicating a category's instances leaves it unchanged") {
    std::vector<TripletPrediction> preds{{0, 0, 1, -1.0, 10}, {0, 1, 1, -2.0, 11}};
    std::vector<GroundTruthTriplet> gt{{10, 0, 0, 1}, {11, 0, 1, 0}};
    const auto base = recall_at_k(preds, gt, 10);
    // Copy category 0's instance onto a new node together with its prediction.
    preds.push_back({0, 0, 1, -1.0, 12});
    gt.push_back({12, 0, 0, 1});
    const auto dup = recall_at_k(preds, gt, 10);
    CHECK(base.per_category.at(0).recall() == dup.per_category.at(0).recall());
    CHECK(base.per_category.at(1).recall() == dup.per_category.at(1).recall());
  }
}

TEST_CASE("group means") {
  const std::map<Index, double> cats{{0, 0.9}, {1, 0.8}, {2, 0.5}, {3, 0.1}, {4, 0.3}};
  const auto split = group_split({{0, 20000}, {1, 15000}, {2, 700}, {3, 10}, {4, 20}}, 10000, 500);
  const auto g = group_means(cats, split);
  CHECK(*g.head == Approx(0.85));
  CHECK(*g.body == Approx(0.5));
  CHECK(*g.tail == Approx(0.2));
  // Size-weighted group means give back the category mean.
  CHECK((2 * *g.head + 1 * *g.body + 2 * *g.tail) / 5 == Approx(mean_recall(cats)));
  const auto empty = group_means({{0, 1.0}}, split);
  CHECK(empty.head.has_value());
  CHECK_FALSE(empty.body.has_value());
}

TEST_CASE("weighted score") {
  CHECK(std::abs(weighted_score(75.44, 34.30, 35.38) - 42.96) < 0.15);
  CHECK(weighted_score(1, 1, 1) == Approx(1.0));
  CHECK(weighted_score(40, 0, 0) == Approx(8.0));
}

TEST_CASE("recall accumulator averages over images") {
  RecallAccumulator acc({1, 3});
  const auto inst = three_predicates();
  const auto ranked = rank_triplets(three_predicate_posteriors(), inst);
  acc.add(ranked, ground_truth_triplets(inst, {{0, 1, 0}, {0, 0, 1}, std::nullopt}));
  acc.add(ranked, ground_truth_triplets(inst, {{0, 1, 0}, {1, 1, 1}, std::nullopt}));
  acc.add(ranked, {});  // no relations: ignored
  const auto report = acc.report();
  CHECK(report.images == 2);
  // Image one: R@1 = 1/3, R@3 = 1. Image two matches only node 5 (0,1,0).
  CHECK(report.recall.at(1) == Approx((1.0 / 3 + 1.0 / 3) / 2));
  CHECK(report.recall.at(3) == Approx((1.0 + 1.0 / 3) / 2));
  // Category 1 at K=3: image one 1/1, image two 1/3.
  CHECK(report.per_category.at(3).at(1) == Approx((1.0 + 1.0 / 3) / 2));
  CHECK(report.per_category.at(3).at(0) == Approx(1.0));
  CHECK(report.mean_recall.at(3) == Approx((1.0 + 2.0 / 3) / 2));
  CHECK_THROWS_AS(RecallAccumulator({}), std::invalid_argument);
}
