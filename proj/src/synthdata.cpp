#include "sgvi/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sgvi/random.hpp"

namespace sgvi {

namespace {

// Stream reserved for dataset-wide draws (class means); instance streams
// count up from zero.
constexpr std::uint64_t kMeansStream = ~std::uint64_t{0};

Matrix spread_means(Index dim, Index classes, double margin, std::mt19937_64& rng) {
  const double radius = margin / std::sqrt(2.0);
  Matrix means = Matrix::Zero(dim, classes);
  if (dim >= classes) {
    for (Index c = 0; c < classes; ++c) means(c, c) = radius;
    return means;
  }
  // Too few dimensions for orthogonal means: random directions on the sphere.
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index c = 0; c < classes; ++c) {
    for (Index r = 0; r < dim; ++r) means(r, c) = normal(rng);
    means.col(c) *= radius / means.col(c).norm();
  }
  return means;
}

}  // namespace

void GeneratorConfig::validate() const {
  if (min_objects < 2 || max_objects < min_objects)
    throw std::invalid_argument("generator: need 2 <= min_objects <= max_objects");
  if (!(predicate_density > 0 && predicate_density <= 1))
    throw std::invalid_argument("generator: predicate density must lie in (0, 1]");
  if (vocab.objects < 2 || vocab.predicates < 2 || vocab.globals < 1)
    throw std::invalid_argument("generator: vocabulary sizes below minimum");
  if (feature_dim < 1) throw std::invalid_argument("generator: feature dimension must be positive");
  if (num_globals < 0) throw std::invalid_argument("generator: negative global count");
  if (!(class_margin >= 0)) throw std::invalid_argument("generator: class margin must be >= 0");
  if (!(zipf_exponent >= 0)) throw std::invalid_argument("generator: zipf exponent must be >= 0");
}

Vector zipf_probabilities(Index categories, double exponent) {
  Vector p(categories);
  for (Index c = 0; c < categories; ++c) p(c) = std::pow(static_cast<double>(c + 1), -exponent);
  return p / p.sum();
}

ClassMeans class_means(const GeneratorConfig& config) {
  auto rng = stream_rng(config.seed, kMeansStream);
  ClassMeans means;
  means.objects = spread_means(config.feature_dim, config.vocab.objects, config.class_margin, rng);
  means.predicates =
      spread_means(config.feature_dim, config.vocab.predicates, config.class_margin, rng);
  return means;
}

LabeledInstance sample_instance(const GeneratorConfig& config, std::mt19937_64& rng) {
  config.validate();
  const ClassMeans means = class_means(config);
  const Index d = config.feature_dim;

  const Index m = std::uniform_int_distribution<Index>(config.min_objects, config.max_objects)(rng);
  const Index capacity = m * m - m;
  const Index n = std::clamp<Index>(
      static_cast<Index>(std::llround(config.predicate_density * static_cast<double>(capacity))), 1,
      capacity);

  std::vector<PredicateEndpoints> pairs;
  for (Index s = 0; s < m; ++s)
    for (Index o = 0; o < m; ++o)
      if (s != o) pairs.push_back({s, o});
  // Partial Fisher-Yates: the first n entries are a uniform sample without
  // replacement.
  for (Index k = 0; k < n; ++k) {
    const Index pick = std::uniform_int_distribution<Index>(k, capacity - 1)(rng);
    std::swap(pairs[static_cast<std::size_t>(k)], pairs[static_cast<std::size_t>(pick)]);
  }
  pairs.resize(static_cast<std::size_t>(n));

  LabelAssignment labels;
  std::uniform_int_distribution<Index> object_label(0, config.vocab.objects - 1);
  const Vector zipf = zipf_probabilities(config.vocab.predicates, config.zipf_exponent);
  std::discrete_distribution<Index> predicate_label(zipf.data(), zipf.data() + zipf.size());
  std::normal_distribution<double> noise(0.0, 1.0);
  auto noisy = [&](const Eigen::Ref<const Vector>& mean) {
    Vector x(d);
    for (Index r = 0; r < d; ++r) x(r) = mean(r) + noise(rng);
    return x;
  };

  Matrix objects(d, m);
  for (Index i = 0; i < m; ++i) {
    labels.objects.push_back(object_label(rng));
    objects.col(i) = noisy(means.objects.col(labels.objects.back()));
  }
  Matrix predicates(d, n);
  for (Index j = 0; j < n; ++j) {
    labels.predicates.push_back(predicate_label(rng));
    predicates.col(j) = noisy(means.predicates.col(labels.predicates.back()));
  }
  const Vector pooled =
      (objects.rowwise().sum() + predicates.rowwise().sum()) / static_cast<double>(m + n);
  Matrix globals = pooled.replicate(1, config.num_globals);
  labels.globals = std::vector<Index>(static_cast<std::size_t>(config.num_globals), 0);

  auto edges = default_object_edges(pairs);
  return {build_instance(m, pairs, config.num_globals, config.vocab, objects, predicates, globals,
                         std::move(edges)),
          std::move(labels)};
}

std::vector<LabeledInstance> generate_dataset(const GeneratorConfig& config, Index count) {
  config.validate();
  std::vector<LabeledInstance> out;
  out.reserve(static_cast<std::size_t>(count));
  for (Index k = 0; k < count; ++k) {
    auto rng = stream_rng(config.seed, static_cast<std::uint64_t>(k));
    out.push_back(sample_instance(config, rng));
  }
  return out;
}

std::map<Index, long> category_counts(const std::vector<LabeledInstance>& dataset,
                                      Index num_categories) {
  std::map<Index, long> counts;
  for (Index c = 0; c < num_categories; ++c) counts[c] = 0;
  for (const auto& sample : dataset)
    for (Index label : sample.labels.predicates) {
      if (label < 0 || label >= num_categories)
        throw std::invalid_argument("category_counts: predicate label out of range");
      ++counts[label];
    }
  return counts;
}

GroupSplit group_split(const std::map<Index, long>& counts, long hi, long lo) {
  if (hi <= lo) throw std::invalid_argument("group_split: need hi > lo");
  GroupSplit split;
  split.hi = hi;
  split.lo = lo;
  for (const auto& [category, count] : counts) {
    if (count < 0) throw std::invalid_argument("group_split: negative count");
    if (count > hi)
      split.head.insert(category);
    else if (count >= lo)
      split.body.insert(category);
    else
      split.tail.insert(category);
  }
  return split;
}

void ResampleConfig::validate() const {
  if (!(repeat_factor > 0)) throw std::invalid_argument("resample: repeat factor must be positive");
  if (!(drop_rate >= 0 && drop_rate <= 1))
    throw std::invalid_argument("resample: drop rate must lie in [0, 1]");
}

Vector category_frequencies(const std::map<Index, long>& counts, Index num_categories) {
  Vector f = Vector::Zero(num_categories);
  double total = 0;
  for (const auto& [category, count] : counts) {
    if (category < 0 || category >= num_categories)
      throw std::invalid_argument("category_frequencies: category out of range");
    f(category) = static_cast<double>(count);
    total += static_cast<double>(count);
  }
  return total > 0 ? Vector(f / total) : f;
}

Vector category_repeat_factors(const Vector& frequencies, double repeat_factor) {
  Vector r = Vector::Zero(frequencies.size());
  for (Index c = 0; c < frequencies.size(); ++c)
    if (frequencies(c) > 0) r(c) = repeat_factor * std::sqrt(1.0 / frequencies(c));
  return r;
}

std::vector<Index> oversample_plan(const std::vector<LabeledInstance>& dataset,
                                   const ResampleConfig& config, Index num_categories) {
  config.validate();
  const Vector r = category_repeat_factors(
      category_frequencies(category_counts(dataset, num_categories), num_categories),
      config.repeat_factor);
  std::vector<Index> plan;
  for (std::size_t k = 0; k < dataset.size(); ++k) {
    double factor = 0;
    for (Index label : dataset[k].labels.predicates) factor = std::max(factor, r(label));
    const auto repeats = std::max<long>(1, static_cast<long>(std::ceil(factor)));
    plan.insert(plan.end(), static_cast<std::size_t>(repeats), static_cast<Index>(k));
  }
  return plan;
}

Vector drop_probabilities(const Vector& frequencies, const GroupSplit& split,
                          const ResampleConfig& config) {
  config.validate();
  const Vector r = category_repeat_factors(frequencies, config.repeat_factor);
  const double max_r = r.size() > 0 ? r.maxCoeff() : 0.0;
  Vector p = Vector::Zero(frequencies.size());
  if (max_r <= 0) return p;
  for (Index c : split.head)
    if (c >= 0 && c < p.size() && frequencies(c) > 0)
      p(c) = std::clamp(config.drop_rate * (1.0 - r(c) / max_r), 0.0, 1.0);
  return p;
}

LabeledInstance drop_instances(const LabeledInstance& sample, const Vector& drop_probs,
                               std::mt19937_64& rng) {
  const auto& inst = sample.instance;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<PredicateEndpoints> kept;
  std::vector<Index> kept_labels;
  std::vector<Index> kept_columns;
  for (Index j = 0; j < inst.num_predicates(); ++j) {
    const Index label = sample.labels.predicates[static_cast<std::size_t>(j)];
    if (label < 0 || label >= drop_probs.size())
      throw std::invalid_argument("drop_instances: predicate label outside drop table");
    // Always draw so the stream position does not depend on the table.
    const double u = unit(rng);
    if (u < drop_probs(label)) continue;
    kept.push_back(inst.predicates()[static_cast<std::size_t>(j)]);
    kept_labels.push_back(label);
    kept_columns.push_back(j);
  }
  InstanceSpec spec = inst.spec();
  spec.predicates = kept;
  spec.predicate_features = inst.spec().predicate_features(Eigen::all, kept_columns);
  LabelAssignment labels = sample.labels;
  labels.predicates = std::move(kept_labels);
  return {SceneGraphInstance(std::move(spec)), std::move(labels)};
}

}  // namespace sgvi
