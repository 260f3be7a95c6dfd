#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "sgvi/factor_graph.hpp"
#include "sgvi/types.hpp"

namespace sgvi {

struct GeneratorConfig {
  Index min_objects = 3;
  Index max_objects = 6;
  double predicate_density = 0.3;  // fraction of the m^2 - m ordered pairs
  Vocabulary vocab{10, 8, 16};
  Index feature_dim = 16;
  Index num_globals = 1;
  double zipf_exponent = 1.0;
  double class_margin = 10.0;  // distance between neighbouring class means
  std::uint64_t seed = 0;

  void validate() const;
};

/// Normalised Zipf law p_c proportional to (c + 1)^-exponent.
Vector zipf_probabilities(Index categories, double exponent);

/// Class means for objects (d x v_o) and predicates (d x v_p). Means are a
/// function of config.seed alone so every instance of a dataset shares them.
struct ClassMeans {
  Matrix objects;
  Matrix predicates;
};
ClassMeans class_means(const GeneratorConfig& config);

/// One planted instance: uniform object labels, Zipf predicate labels,
/// features = class mean + unit Gaussian noise, one global holding the mean
/// of all object and predicate features.
LabeledInstance sample_instance(const GeneratorConfig& config, std::mt19937_64& rng);

/// `count` instances; instance k draws from stream k of config.seed.
std::vector<LabeledInstance> generate_dataset(const GeneratorConfig& config, Index count);

/// Number of predicate instances per category, every category included.
std::map<Index, long> category_counts(const std::vector<LabeledInstance>& dataset,
                                      Index num_categories);

struct GroupSplit {
  std::set<Index> head;
  std::set<Index> body;
  std::set<Index> tail;
  long hi = 0;
  long lo = 0;
};

/// count > hi -> head, lo <= count <= hi -> body, count < lo -> tail.
GroupSplit group_split(const std::map<Index, long>& counts, long hi, long lo);

struct ResampleConfig {
  double repeat_factor = 0.07;  // t
  double drop_rate = 0.7;       // gamma_d

  void validate() const;
};

/// Share of all predicate instances carried by each category.
Vector category_frequencies(const std::map<Index, long>& counts, Index num_categories);

/// r_c = t * sqrt(1 / f_c); zero for categories that never occur.
Vector category_repeat_factors(const Vector& frequencies, double repeat_factor);

/// Instance ids, each repeated max(1, ceil(max_c r_c)) times over the
/// categories present in it; ids ascending.
std::vector<Index> oversample_plan(const std::vector<LabeledInstance>& dataset,
                                   const ResampleConfig& config, Index num_categories);

/// Per-category predicate drop probability: head categories get
/// clamp(gamma_d * (1 - r_c / max_r), 0, 1), all others zero.
Vector drop_probabilities(const Vector& frequencies, const GroupSplit& split,
                          const ResampleConfig& config);

/// Drops each predicate independently with its category's probability.
/// Objects, globals and object edges are kept.
LabeledInstance drop_instances(const LabeledInstance& sample, const Vector& drop_probs,
                               std::mt19937_64& rng);

}  // namespace sgvi
