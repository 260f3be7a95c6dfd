#include "doctest.h"

#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "sgvi/io.hpp"

using namespace sgvi;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("sgvi_test_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("instance JSON round-trips") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const auto inst = oracle::random_tiny_instance(rng, 4, {4, 3, 2});
    const Json j = instance_to_json(inst);
    const auto parsed = instance_from_json(Json::parse(j.dump()));
    CHECK(parsed.instance == inst);
    CHECK_FALSE(parsed.ground_truth.has_value());
  }
  GeneratorConfig gen;
  gen.seed = 4;
  for (const auto& sample : generate_dataset(gen, 5)) {
    const auto parsed = instance_from_json(Json::parse(instance_to_json(sample.instance, &sample.labels).dump()));
    CHECK(parsed.instance == sample.instance);
    REQUIRE(parsed.ground_truth.has_value());
    CHECK(parsed.ground_truth->objects == sample.labels.objects);
    CHECK(parsed.ground_truth->predicates == sample.labels.predicates);
  }
}

TEST_CASE("instance JSON schema") {
  const auto inst = oracle::triplet_fixture(2, {3, 2, 1}, 1);
  const Json j = instance_to_json(inst);
  CHECK(j.at("d") == 2);
  CHECK(j.at("v_o") == 3);
  CHECK(j.at("objects").size() == 2);
  CHECK(j.at("predicates")[0].at("subject") == 0);
  CHECK(j.at("predicates")[0].at("object") == 1);
  CHECK(j.at("globals").size() == 1);
  CHECK(j.at("object_edges")[0] == Json::array({0, 1}));

  SUBCASE("missing field") {
    Json bad = j;
    bad.erase("v_p");
    CHECK_THROWS(instance_from_json(bad));
  }
  SUBCASE("feature length mismatch") {
    Json bad = j;
    bad["objects"][0]["features"] = Json::array({1.0});
    CHECK_THROWS_AS(instance_from_json(bad), std::invalid_argument);
  }
  SUBCASE("ids out of order") {
    Json bad = j;
    bad["objects"][0]["id"] = 1;
    bad["objects"][1]["id"] = 0;
    CHECK_THROWS_AS(instance_from_json(bad), std::invalid_argument);
  }
  SUBCASE("duplicate predicate") {
    Json bad = j;
    Json copy = bad["predicates"][0];
    copy["id"] = 1;
    bad["predicates"].push_back(copy);
    CHECK_THROWS_AS(instance_from_json(bad), std::invalid_argument);
  }
  SUBCASE("ground truth label out of range") {
    Json bad = j;
    bad["ground_truth"] = {{"objects", {0, 3}}, {"predicates", {0}}};
    CHECK_THROWS_AS(instance_from_json(bad), std::invalid_argument);
  }
}

TEST_CASE("model JSON round-trips") {
  for (auto form : {PairwiseForm::Factorized, PairwiseForm::LabelTable}) {
    const auto model = random_feature_model({5, {4, 3, 2}, {6, 3}, form}, 77);
    const Json j = model_to_json(model);
    CHECK(j.at("seed") == 77);
    CHECK(j.at("functions").contains("g_po"));
    const auto back = model_from_json(Json::parse(j.dump()));
    CHECK(back == model);
  }
  SUBCASE("row-major weights") {
    auto model = zero_feature_model({2, {2, 2, 1}, {}, PairwiseForm::Factorized});
    model[ScoreFunction::UnaryObject].layers()[0].weights << 1, 2, 3, 4;
    const Json w = model_to_json(model).at("functions").at("h_o").at("layers")[0].at("weights");
    CHECK(w == Json::array({1.0, 2.0, 3.0, 4.0}));
  }
  SUBCASE("shape errors") {
    Json j = model_to_json(random_feature_model({2, {2, 2, 1}, {3}, PairwiseForm::Factorized}, 1));
    j["functions"]["h_o"]["layers"][0]["weights"].erase(0);
    CHECK_THROWS(model_from_json(j));
    Json k = model_to_json(random_feature_model({2, {2, 2, 1}, {3}, PairwiseForm::Factorized}, 1));
    k["v_o"] = 5;
    CHECK_THROWS_AS(model_from_json(k), std::invalid_argument);
  }
}

TEST_CASE("optimizer state round-trips") {
  OptimizerState s{OptimizerKind::Adam, 7, Vector::LinSpaced(4, 0.1, 0.4), Vector::LinSpaced(4, 1e-3, 4e-3)};
  const auto back = optimizer_from_json(Json::parse(optimizer_to_json(s).dump()));
  CHECK(back.kind == s.kind);
  CHECK(back.step == 7);
  CHECK(back.first_moment == s.first_moment);
  CHECK(back.second_moment == s.second_moment);
}

TEST_CASE("reports") {
  SUBCASE("loss curve csv") {
    const std::string csv = loss_curve_to_csv({{0, 2.5, std::nullopt}, {1, 1.25, 1.5}});
    CHECK(csv == "epoch,train_loss,eval_loss\n0,2.5,\n1,1.25,1.5\n");
  }
  SUBCASE("clamped nodes write null log-probabilities") {
    const auto inst = oracle::triplet_fixture(2, {3, 2, 1}, 1);
    GraphPosterior post;
    for (NodeId id = 0; id < 3; ++id) {
      NodePosterior p;
      p.log_posterior = Vector::Constant(inst.vocab_size(id), -1.0);
      post[id] = p;
    }
    clamp_posterior(post[0], 1);
    const Json j = posterior_to_json(inst, post);
    REQUIRE(j.size() == 3);
    CHECK(j[0].at("log_posterior")[0].is_null());
    CHECK(j[0].at("log_posterior")[1] == 0.0);
    CHECK(j[0].at("kind") == "object");
    CHECK(j[2].at("kind") == "predicate");
  }
  SUBCASE("recall csv has one row per category plus aggregates") {
    RecallReport r;
    r.ks = {2};
    r.recall[2] = 0.5;
    r.mean_recall[2] = 0.25;
    r.per_category[2] = {{0, 0.5}, {3, 0.0}};
    const std::string csv = recall_report_to_csv(r);
    CHECK(csv.rfind("k,row,category,value\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') >= 5);
  }
}

TEST_CASE("dataset directory round-trips") {
  const auto dir = scratch("dataset");
  GeneratorConfig gen;
  gen.seed = 2;
  const auto data = generate_dataset(gen, 6);
  DatasetManifest m;
  m.seed = 2;
  m.generator = gen;
  m.train = {0, 1, 2, 3};
  m.eval = {4, 5};
  m.category_counts = category_counts({data.begin(), data.begin() + 4}, gen.vocab.predicates);
  write_dataset(dir, data, m);
  const auto loaded = read_dataset(dir);
  CHECK(loaded.instances.size() == 6);
  CHECK(loaded.manifest.files.size() == 6);
  CHECK(loaded.manifest.train == m.train);
  CHECK(loaded.manifest.eval == m.eval);
  CHECK(loaded.manifest.category_counts == m.category_counts);
  CHECK(loaded.manifest.generator.vocab == gen.vocab);
  for (std::size_t k = 0; k < data.size(); ++k) {
    CHECK(loaded.instances[k].instance == data[k].instance);
    CHECK(loaded.instances[k].labels.predicates == data[k].labels.predicates);
  }
  CHECK(loaded.subset({5}).size() == 1);
  CHECK_THROWS(loaded.subset({6}));
  CHECK_THROWS(read_dataset(dir / "missing"));
  fs::remove_all(dir);
}
