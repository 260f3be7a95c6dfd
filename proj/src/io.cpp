#include "sgvi/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace sgvi {

namespace fs = std::filesystem;

namespace {

Json vector_json(const Eigen::Ref<const Vector>& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

/// Log-probabilities may hold -inf for clamped nodes; JSON has no infinity,
/// so those entries are written as null.
Json log_vector_json(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i)
    if (std::isfinite(v(i)))
      a.push_back(v(i));
    else
      a.push_back(nullptr);
  return a;
}

Vector vector_from(const Json& j, const char* what) {
  if (!j.is_array()) throw std::invalid_argument(std::string("json: ") + what + " must be an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw std::invalid_argument(std::string("json: ") + what + " must hold numbers");
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  return v;
}

std::vector<Index> index_list(const Json& j, const char* what) {
  if (!j.is_array()) throw std::invalid_argument(std::string("json: ") + what + " must be an array");
  std::vector<Index> out;
  for (const auto& e : j) {
    if (!e.is_number_integer()) throw std::invalid_argument(std::string("json: ") + what + " must hold integers");
    out.push_back(e.get<Index>());
  }
  return out;
}

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw std::invalid_argument(std::string("json: missing field '") + key + "'");
  return j.at(key);
}

Index int_field(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number_integer()) throw std::invalid_argument(std::string("json: field '") + key + "' must be an integer");
  return v.get<Index>();
}

// Node records must list ids 0..count-1 in order.
Matrix node_features(const Json& records, Index d, const char* what) {
  if (!records.is_array()) throw std::invalid_argument(std::string("json: ") + what + " must be an array");
  Matrix out(d, static_cast<Index>(records.size()));
  for (std::size_t k = 0; k < records.size(); ++k) {
    if (int_field(records[k], "id") != static_cast<Index>(k))
      throw std::invalid_argument(std::string("json: ") + what + " ids must be dense and ordered");
    const Vector f = vector_from(field(records[k], "features"), "features");
    if (f.size() != d) throw std::invalid_argument("scene graph: feature dimension mismatch");
    out.col(static_cast<Index>(k)) = f;
  }
  return out;
}

Json node_records(const Matrix& features) {
  Json a = Json::array();
  for (Index k = 0; k < features.cols(); ++k) {
    Json r;
    r["id"] = k;
    r["features"] = vector_json(features.col(k));
    a.push_back(std::move(r));
  }
  return a;
}

std::string format_number(double x) {
  std::ostringstream s;
  s << std::setprecision(17) << x;
  return s.str();
}

}  // namespace

Json instance_to_json(const SceneGraphInstance& instance, const LabelAssignment* ground_truth) {
  const auto& spec = instance.spec();
  Json j;
  j["d"] = spec.feature_dim;
  j["v_o"] = spec.vocab.objects;
  j["v_p"] = spec.vocab.predicates;
  j["v_g"] = spec.vocab.globals;
  j["objects"] = node_records(spec.object_features);
  Json preds = Json::array();
  for (Index k = 0; k < instance.num_predicates(); ++k) {
    const auto& p = spec.predicates[static_cast<std::size_t>(k)];
    Json r;
    r["id"] = k;
    r["subject"] = p.subject;
    r["object"] = p.object;
    r["features"] = vector_json(spec.predicate_features.col(k));
    preds.push_back(std::move(r));
  }
  j["predicates"] = std::move(preds);
  Json edges = Json::array();
  for (const auto& [a, b] : spec.object_edges) edges.push_back({a, b});
  j["object_edges"] = std::move(edges);
  j["globals"] = node_records(spec.global_features);
  if (ground_truth) {
    Json gt;
    gt["objects"] = ground_truth->objects;
    gt["predicates"] = ground_truth->predicates;
    if (ground_truth->globals) gt["globals"] = *ground_truth->globals;
    j["ground_truth"] = std::move(gt);
  }
  return j;
}

ParsedInstance instance_from_json(const Json& j) {
  InstanceSpec spec;
  spec.feature_dim = int_field(j, "d");
  spec.vocab = {int_field(j, "v_o"), int_field(j, "v_p"), int_field(j, "v_g")};
  if (spec.feature_dim < 1) throw std::invalid_argument("scene graph: feature dimension must be positive");
  spec.object_features = node_features(field(j, "objects"), spec.feature_dim, "objects");
  spec.global_features = node_features(field(j, "globals"), spec.feature_dim, "globals");

  const Json& preds = field(j, "predicates");
  if (!preds.is_array()) throw std::invalid_argument("json: predicates must be an array");
  spec.predicate_features = node_features(preds, spec.feature_dim, "predicates");
  for (const auto& r : preds)
    spec.predicates.push_back({int_field(r, "subject"), int_field(r, "object")});

  const Json& edges = field(j, "object_edges");
  if (!edges.is_array()) throw std::invalid_argument("json: object_edges must be an array");
  for (const auto& e : edges) {
    const auto pair = index_list(e, "object edge");
    if (pair.size() != 2) throw std::invalid_argument("json: object edge must have two endpoints");
    spec.object_edges.emplace_back(pair[0], pair[1]);
  }

  ParsedInstance out{SceneGraphInstance(std::move(spec)), std::nullopt};
  if (j.contains("ground_truth")) {
    const Json& gt = j.at("ground_truth");
    LabelAssignment labels;
    labels.objects = index_list(field(gt, "objects"), "ground_truth.objects");
    labels.predicates = index_list(field(gt, "predicates"), "ground_truth.predicates");
    if (gt.contains("globals")) labels.globals = index_list(gt.at("globals"), "ground_truth.globals");
    validate_assignment(out.instance, labels);
    out.ground_truth = std::move(labels);
  }
  return out;
}

Json model_to_json(const FeatureModel& model) {
  Json j;
  j["seed"] = model.seed;
  j["v_o"] = model.vocab.objects;
  j["v_p"] = model.vocab.predicates;
  j["v_g"] = model.vocab.globals;
  j["pairwise"] = std::string(to_string(model.pairwise));
  Json functions;
  for (std::size_t f = 0; f < kNumScoreFunctions; ++f) {
    Json layers = Json::array();
    for (const auto& layer : model.functions[f].layers()) {
      Json l;
      l["in"] = layer.weights.cols();
      l["out"] = layer.weights.rows();
      // Row-major weights.
      Json w = Json::array();
      for (Index r = 0; r < layer.weights.rows(); ++r)
        for (Index c = 0; c < layer.weights.cols(); ++c) w.push_back(layer.weights(r, c));
      l["weights"] = std::move(w);
      l["bias"] = vector_json(layer.bias);
      layers.push_back(std::move(l));
    }
    functions[std::string(to_string(static_cast<ScoreFunction>(f)))]["layers"] = std::move(layers);
  }
  j["functions"] = std::move(functions);
  return j;
}

FeatureModel model_from_json(const Json& j) {
  FeatureModel model;
  model.seed = field(j, "seed").get<std::uint64_t>();
  model.vocab = {int_field(j, "v_o"), int_field(j, "v_p"), int_field(j, "v_g")};
  model.pairwise = pairwise_form_from_string(field(j, "pairwise").get<std::string>());
  const Json& functions = field(j, "functions");
  for (std::size_t f = 0; f < kNumScoreFunctions; ++f) {
    const std::string name(to_string(static_cast<ScoreFunction>(f)));
    std::vector<Mlp::Layer> layers;
    for (const auto& l : field(field(functions, name.c_str()), "layers")) {
      const Index in = int_field(l, "in");
      const Index out = int_field(l, "out");
      const Vector w = vector_from(field(l, "weights"), "weights");
      if (in < 1 || out < 1 || w.size() != in * out)
        throw std::invalid_argument("feature model: " + name + " weight array has wrong size");
      Mlp::Layer layer{Matrix(out, in), vector_from(field(l, "bias"), "bias")};
      for (Index r = 0; r < out; ++r)
        for (Index c = 0; c < in; ++c) layer.weights(r, c) = w(r * in + c);
      layers.push_back(std::move(layer));
    }
    model.functions[f] = Mlp(std::move(layers));
  }
  validate_model(model);
  return model;
}

Json optimizer_to_json(const OptimizerState& state) {
  Json j;
  j["optimizer"] = std::string(to_string(state.kind));
  j["step"] = state.step;
  j["first_moment"] = vector_json(state.first_moment);
  j["second_moment"] = vector_json(state.second_moment);
  return j;
}

OptimizerState optimizer_from_json(const Json& j) {
  OptimizerState state;
  state.kind = optimizer_from_string(field(j, "optimizer").get<std::string>());
  state.step = field(j, "step").get<long>();
  state.first_moment = vector_from(field(j, "first_moment"), "first_moment");
  state.second_moment = vector_from(field(j, "second_moment"), "second_moment");
  return state;
}

Json posterior_to_json(const SceneGraphInstance& instance, const GraphPosterior& posterior) {
  Json nodes = Json::array();
  for (const auto& [id, p] : posterior) {
    Json n;
    n["id"] = id;
    n["kind"] = std::string(to_string(instance.kind(id)));
    n["map_label"] = p.map_label;
    n["log_posterior"] = log_vector_json(p.log_posterior);
    n["iterations_used"] = p.iterations_used;
    Json trace = Json::array();
    for (const auto& t : p.trace) trace.push_back(t.elbo);
    n["elbo_trace"] = std::move(trace);
    if (p.clamped) n["clamped"] = true;
    nodes.push_back(std::move(n));
  }
  return nodes;
}

namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

Json recall_report_to_json(const RecallReport& report) {
  Json j;
  j["images"] = report.images;
  j["ks"] = report.ks;
  Json per_k = Json::array();
  for (Index k : report.ks) {
    Json r;
    r["k"] = k;
    r["recall"] = report.recall.at(k);
    r["mean_recall"] = report.mean_recall.at(k);
    Json cats = Json::array();
    for (const auto& [c, v] : report.per_category.at(k)) cats.push_back({{"category", c}, {"recall", v}});
    r["per_category"] = std::move(cats);
    if (const auto it = report.groups.find(k); it != report.groups.end()) {
      r["groups"] = {{"head", optional_number(it->second.head)},
                     {"body", optional_number(it->second.body)},
                     {"tail", optional_number(it->second.tail)}};
    }
    per_k.push_back(std::move(r));
  }
  j["results"] = std::move(per_k);
  return j;
}

std::string recall_report_to_csv(const RecallReport& report) {
  std::ostringstream out;
  out << "k,row,category,value\n";
  for (Index k : report.ks) {
    for (const auto& [c, v] : report.per_category.at(k))
      out << k << ",category," << c << ',' << format_number(v) << '\n';
    out << k << ",R@K,," << format_number(report.recall.at(k)) << '\n';
    out << k << ",mR@K,," << format_number(report.mean_recall.at(k)) << '\n';
    if (const auto it = report.groups.find(k); it != report.groups.end()) {
      const auto row = [&](const char* name, const std::optional<double>& v) {
        out << k << ',' << name << ",," << (v ? format_number(*v) : std::string()) << '\n';
      };
      row("head", it->second.head);
      row("body", it->second.body);
      row("tail", it->second.tail);
    }
  }
  return out.str();
}

std::string loss_curve_to_csv(const std::vector<EpochLoss>& curve) {
  std::ostringstream out;
  out << "epoch,train_loss,eval_loss\n";
  for (const auto& e : curve)
    out << e.epoch << ',' << format_number(e.train_loss) << ','
        << (e.eval_loss ? format_number(*e.eval_loss) : std::string()) << '\n';
  return out.str();
}

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

Json generator_to_json(const GeneratorConfig& c) {
  Json j;
  j["min_objects"] = c.min_objects;
  j["max_objects"] = c.max_objects;
  j["predicate_density"] = c.predicate_density;
  j["v_o"] = c.vocab.objects;
  j["v_p"] = c.vocab.predicates;
  j["v_g"] = c.vocab.globals;
  j["d"] = c.feature_dim;
  j["num_globals"] = c.num_globals;
  j["zipf_exponent"] = c.zipf_exponent;
  j["class_margin"] = c.class_margin;
  j["seed"] = c.seed;
  return j;
}

GeneratorConfig generator_from_json(const Json& j) {
  GeneratorConfig c;
  c.min_objects = int_field(j, "min_objects");
  c.max_objects = int_field(j, "max_objects");
  c.predicate_density = field(j, "predicate_density").get<double>();
  c.vocab = {int_field(j, "v_o"), int_field(j, "v_p"), int_field(j, "v_g")};
  c.feature_dim = int_field(j, "d");
  c.num_globals = int_field(j, "num_globals");
  c.zipf_exponent = field(j, "zipf_exponent").get<double>();
  c.class_margin = field(j, "class_margin").get<double>();
  c.seed = field(j, "seed").get<std::uint64_t>();
  return c;
}

void write_dataset(const fs::path& dir, const std::vector<LabeledInstance>& dataset,
                   DatasetManifest manifest) {
  fs::create_directories(dir / "instances");
  manifest.files.clear();
  for (std::size_t k = 0; k < dataset.size(); ++k) {
    std::ostringstream name;
    name << "instances/" << std::setw(6) << std::setfill('0') << k << ".json";
    manifest.files.push_back(name.str());
    write_json(dir / name.str(), instance_to_json(dataset[k].instance, &dataset[k].labels));
  }
  Json j;
  j["seed"] = manifest.seed;
  j["num_instances"] = dataset.size();
  j["generator"] = generator_to_json(manifest.generator);
  j["files"] = manifest.files;
  j["splits"] = {{"train", manifest.train}, {"eval", manifest.eval}};
  Json counts = Json::object();
  for (const auto& [c, n] : manifest.category_counts) counts[std::to_string(c)] = n;
  j["category_counts"] = std::move(counts);
  write_json(dir / "manifest.json", j);
}

std::vector<LabeledInstance> LoadedDataset::subset(const std::vector<Index>& ids) const {
  std::vector<LabeledInstance> out;
  for (Index id : ids) out.push_back(instances.at(static_cast<std::size_t>(id)));
  return out;
}

LoadedDataset read_dataset(const fs::path& dir) {
  const Json j = read_json(dir / "manifest.json");
  LoadedDataset data;
  data.manifest.seed = field(j, "seed").get<std::uint64_t>();
  data.manifest.generator = generator_from_json(field(j, "generator"));
  data.manifest.files = field(j, "files").get<std::vector<std::string>>();
  data.manifest.train = index_list(field(field(j, "splits"), "train"), "splits.train");
  data.manifest.eval = index_list(field(field(j, "splits"), "eval"), "splits.eval");
  for (const auto& [c, n] : field(j, "category_counts").items())
    data.manifest.category_counts[std::stol(c)] = n.get<long>();
  for (const auto& file : data.manifest.files) {
    ParsedInstance parsed = instance_from_json(read_json(dir / file));
    if (!parsed.ground_truth) throw std::invalid_argument(file + ": dataset instance lacks ground truth");
    data.instances.push_back({std::move(parsed.instance), std::move(*parsed.ground_truth)});
  }
  return data;
}

}  // namespace sgvi
