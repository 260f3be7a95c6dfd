#include "doctest.h"

#include <cmath>

#include "sgvi/inference.hpp"
#include "sgvi/learning.hpp"
#include "sgvi/synthdata.hpp"

using namespace sgvi;
using doctest::Approx;

namespace {

// Instance with one predicate per entry of `labels`, on enough objects.
LabeledInstance with_predicates(const std::vector<Index>& labels, Index v_p) {
  const Index m = 4;
  std::vector<PredicateEndpoints> pairs;
  for (Index s = 0; s < m && pairs.size() < labels.size(); ++s)
    for (Index o = 0; o < m && pairs.size() < labels.size(); ++o)
      if (s != o) pairs.push_back({s, o});
  const auto n = static_cast<Index>(pairs.size());
  Matrix pf(2, n);
  for (Index j = 0; j < n; ++j) pf.col(j).setConstant(static_cast<double>(j));
  LabelAssignment gt{std::vector<Index>(m, 0), labels, std::nullopt};
  return {build_instance(m, pairs, 1, {2, v_p, 1}, Matrix::Zero(2, m), pf, Matrix::Zero(2, 1)), gt};
}

}  // namespace

TEST_CASE("generated instances validate and are reproducible") {
  GeneratorConfig gen;
  gen.seed = 12;
  gen.min_objects = 2;
  gen.max_objects = 7;
  gen.predicate_density = 1.0;
  const auto a = generate_dataset(gen, 40);
  const auto b = generate_dataset(gen, 40);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].instance == b[k].instance);
    CHECK(a[k].labels.predicates == b[k].labels.predicates);
    const auto& inst = a[k].instance;
    CHECK(inst.num_predicates() <= inst.num_objects() * inst.num_objects() - inst.num_objects());
    CHECK_NOTHROW(SceneGraphInstance(inst.spec()));
    CHECK_NOTHROW(validate_assignment(inst, a[k].labels, true));
    // Global feature is the mean of object and predicate features.
    const Vector mean = (inst.spec().object_features.rowwise().sum() + inst.spec().predicate_features.rowwise().sum()) /
                        static_cast<double>(inst.num_objects() + inst.num_predicates());
    CHECK((inst.spec().global_features.col(0) - mean).norm() < 1e-12);
  }
  GeneratorConfig bad = gen;
  bad.predicate_density = 1.5;
  CHECK_THROWS_AS(generate_dataset(bad, 1), std::invalid_argument);
  bad = gen;
  bad.class_margin = -1;
  CHECK_THROWS_AS(generate_dataset(bad, 1), std::invalid_argument);
}

TEST_CASE("class means are margin apart") {
  GeneratorConfig gen;
  gen.class_margin = 7;
  const auto means = class_means(gen);
  for (Index a = 0; a < gen.vocab.objects; ++a)
    for (Index b = a + 1; b < gen.vocab.objects; ++b)
      CHECK((means.objects.col(a) - means.objects.col(b)).norm() == Approx(7.0));
}

TEST_CASE("zipf law") {
  SUBCASE("exponent zero is uniform") {
    CHECK(zipf_probabilities(6, 0.0).isApprox(Vector::Constant(6, 1.0 / 6)));
    GeneratorConfig gen;
    gen.seed = 2;
    gen.zipf_exponent = 0;
    gen.vocab.predicates = 5;
    const auto counts = category_counts(generate_dataset(gen, 2000), 5);
    long total = 0;
    for (const auto& [c, n] : counts) total += n;
    const double expected = static_cast<double>(total) / 5;
    const double se = std::sqrt(expected * (1 - 0.2));
    for (const auto& [c, n] : counts) CHECK(std::abs(static_cast<double>(n) - expected) < 4 * se);
  }
  SUBCASE("exponent 1.5 over 10k draws") {
    GeneratorConfig gen;
    gen.seed = 3;
    gen.zipf_exponent = 1.5;
    gen.vocab.predicates = 50;
    gen.min_objects = gen.max_objects = 6;  // 9 predicates each
    const auto data = generate_dataset(gen, 1112);
    std::vector<double> hist(50, 0.0);
    long draws = 0;
    for (const auto& s : data)
      for (Index label : s.labels.predicates)
        if (draws < 10000) {
          hist[static_cast<std::size_t>(label)] += 1;
          ++draws;
        }
    REQUIRE(draws == 10000);
    const Vector p = zipf_probabilities(50, 1.5);
    for (Index c = 0; c < 50; ++c) {
      const double se = std::sqrt(p(c) * (1 - p(c)) / 10000.0);
      CHECK(std::abs(hist[static_cast<std::size_t>(c)] / 10000.0 - p(c)) <= 3 * se + 1e-12);
    }
  }
}

TEST_CASE("margin zero carries no signal") {
  GeneratorConfig gen;
  gen.seed = 8;
  gen.class_margin = 0;
  gen.vocab = {5, 4, 2};
  gen.feature_dim = 8;
  gen.zipf_exponent = 0;
  const auto train_set = generate_dataset(gen, 60);
  gen.seed = 9;
  const auto test_set = generate_dataset(gen, 60);
  TrainConfig cfg;
  cfg.epochs = 20;
  const auto model = train(random_feature_model({8, gen.vocab, {8}, PairwiseForm::Factorized}, 1), train_set, cfg).model;
  long hits = 0, total = 0;
  for (const auto& s : test_set) {
    const auto post = infer_graph(model, s.instance, {});
    for (Index i = 0; i < s.instance.num_objects(); ++i, ++total)
      hits += post.at(i).map_label == s.labels.objects[static_cast<std::size_t>(i)];
  }
  const double accuracy = static_cast<double>(hits) / static_cast<double>(total);
  const double chance = 0.2;
  const double se = std::sqrt(chance * (1 - chance) / static_cast<double>(total));
  CHECK(accuracy < chance + 4 * se);
}

TEST_CASE("group split") {
  SUBCASE("fixture") {
    const auto split = group_split({{0, 20000}, {1, 5000}, {2, 100}}, 10000, 500);
    CHECK(split.head == std::set<Index>{0});
    CHECK(split.body == std::set<Index>{1});
    CHECK(split.tail == std::set<Index>{2});
  }
  SUBCASE("bounds are inclusive for the body") {
    const auto split = group_split({{0, 10000}, {1, 10000}, {2, 500}}, 10000, 500);
    CHECK(split.head.empty());
    CHECK(split.body == std::set<Index>{0, 1, 2});
    CHECK(split.tail.empty());
  }
  SUBCASE("empty counts") {
    const auto split = group_split({}, 10000, 500);
    CHECK(split.head.empty());
    CHECK(split.body.empty());
    CHECK(split.tail.empty());
  }
  SUBCASE("bad thresholds") { CHECK_THROWS_AS(group_split({}, 500, 500), std::invalid_argument); }
}

TEST_CASE("oversampling plan") {
  SUBCASE("small t gives the identity") {
    std::vector<LabeledInstance> data{with_predicates({0, 1}, 3), with_predicates({2}, 3), with_predicates({0}, 3)};
    CHECK(oversample_plan(data, {1e-3, 0.7}, 3) == std::vector<Index>{0, 1, 2});
  }
  SUBCASE("single category repeats uniformly") {
    std::vector<LabeledInstance> data{with_predicates({0}, 2), with_predicates({0, 0}, 2)};
    // f = 1, r = t.
    CHECK(oversample_plan(data, {2.5, 0.7}, 2) == std::vector<Index>{0, 0, 0, 1, 1, 1});
  }
  SUBCASE("two categories at 0.9 / 0.1") {
    std::vector<LabeledInstance> data;
    for (int k = 0; k < 9; ++k) data.push_back(with_predicates({0}, 2));
    data.push_back(with_predicates({1}, 2));
    const Vector f = category_frequencies(category_counts(data, 2), 2);
    CHECK(f(0) == Approx(0.9));
    const Vector r = category_repeat_factors(f, 0.07);
    CHECK(r(0) == Approx(0.07 / std::sqrt(0.9)));
    CHECK(r(1) == Approx(0.07 * std::sqrt(10.0)));
    // Both below one, so every instance appears once.
    CHECK(oversample_plan(data, {0.07, 0.7}, 2) == std::vector<Index>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
    // With t = 1: ceil(1/sqrt(0.9)) = 2 and ceil(sqrt(10)) = 4.
    const auto plan = oversample_plan(data, {1.0, 0.7}, 2);
    CHECK(plan.size() == 9 * 2 + 4);
    CHECK(std::count(plan.begin(), plan.end(), 9) == 4);
  }
}

TEST_CASE("instance dropping") {
  const GroupSplit split = group_split({{0, 20000}, {1, 100}}, 10000, 500);
  const Vector f = category_frequencies({{0, 20000}, {1, 100}}, 2);

  SUBCASE("zero drop rate keeps everything") {
    const Vector p = drop_probabilities(f, split, {0.07, 0.0});
    CHECK(p.isZero(0));
    const auto sample = with_predicates({0, 1, 0, 0}, 2);
    std::mt19937_64 rng(1);
    const auto out = drop_instances(sample, p, rng);
    CHECK(out.instance == sample.instance);
    CHECK(out.labels.predicates == sample.labels.predicates);
  }
  SUBCASE("only head categories drop") {
    const Vector p = drop_probabilities(f, split, {0.07, 0.7});
    const double r0 = 0.07 / std::sqrt(f(0));
    const double r1 = 0.07 / std::sqrt(f(1));
    CHECK(p(0) == Approx(0.7 * (1 - r0 / r1)));
    CHECK(p(1) == 0.0);
  }
  SUBCASE("extreme imbalance approaches certain dropping") {
    const std::map<Index, long> counts{{0, 1000000000000L}, {1, 1}};
    const Vector p = drop_probabilities(category_frequencies(counts, 2), group_split(counts, 10000, 500), {0.07, 1.0});
    CHECK(p(0) > 1 - 1e-5);
    CHECK(p(0) <= 1.0);
    std::mt19937_64 rng(3);
    long dropped = 0;
    const auto sample = with_predicates({0}, 2);
    for (int trial = 0; trial < 10000; ++trial) dropped += drop_instances(sample, p, rng).instance.num_predicates() == 0;
    CHECK(dropped >= 9990);
    // A certain drop removes every predicate of the category.
    const auto all = drop_instances(with_predicates({0, 0, 1, 0}, 2), Vector((Vector(2) << 1.0, 0.0).finished()), rng);
    CHECK(all.labels.predicates == std::vector<Index>{1});
    CHECK(all.instance.num_predicates() == 1);
    CHECK(all.instance.spec().predicate_features(0, 0) == 2.0);
  }
  SUBCASE("monte carlo rates") {
    const Vector p = drop_probabilities(f, split, {0.07, 0.7});
    const auto sample = with_predicates({0, 1}, 2);
    std::mt19937_64 rng(5);
    long drops0 = 0, drops1 = 0;
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) {
      const auto out = drop_instances(sample, p, rng);
      const auto& kept = out.labels.predicates;
      drops0 += std::count(kept.begin(), kept.end(), 0) == 0;
      drops1 += std::count(kept.begin(), kept.end(), 1) == 0;
    }
    CHECK(std::abs(static_cast<double>(drops0) / trials - p(0)) <= 0.05 * p(0));
    CHECK(drops1 == 0);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(drop_probabilities(f, split, {0.07, 1.5}), std::invalid_argument);
    CHECK_THROWS_AS(drop_probabilities(f, split, {0.0, 0.5}), std::invalid_argument);
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(drop_instances(with_predicates({2}, 3), Vector::Zero(2), rng), std::invalid_argument);
  }
}
