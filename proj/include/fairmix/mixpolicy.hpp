#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fairmix/distmix.hpp"
#include "fairmix/rng.hpp"
#include "json.hpp"

namespace fairmix {

// Attribute value standing for "not recorded". Unknown attributes are
// excluded from fair sampling and exempt from skewing.
inline constexpr int kUnknownAttr = -1;

enum class Origin { real, generated };

struct LabeledExample {
  std::vector<double> features;
  int label = 0;                  // hard class index
  std::vector<double> soft;       // optional soft label over C classes
  std::vector<int> attrs;         // one value per attribute axis, or kUnknownAttr
  Origin origin = Origin::real;

  bool has_soft() const { return !soft.empty(); }

  void validate_soft() const {
    if (soft.empty()) return;
    double total = 0.0;
    for (double v : soft) {
      if (!(v >= 0.0)) throw std::invalid_argument("negative soft label");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-6)
      throw std::invalid_argument("soft label does not sum to 1");
  }
};

struct AttributeSchema {
  std::string name;
  std::vector<std::string> values;
};

struct Dataset {
  std::vector<LabeledExample> examples;
  std::vector<std::string> class_names;
  std::vector<AttributeSchema> attribute_schemas;

  std::size_t size() const { return examples.size(); }
  int num_classes() const { return static_cast<int>(class_names.size()); }

  void validate() const {
    for (const auto& ex : examples) {
      if (ex.label < 0 || ex.label >= num_classes())
        throw std::invalid_argument("label out of schema range");
      if (ex.attrs.size() != attribute_schemas.size())
        throw std::invalid_argument("attribute count mismatch");
      for (std::size_t a = 0; a < ex.attrs.size(); ++a)
        if (ex.attrs[a] != kUnknownAttr &&
            (ex.attrs[a] < 0 ||
             ex.attrs[a] >= static_cast<int>(attribute_schemas[a].values.size())))
          throw std::invalid_argument("attribute value out of schema range");
      ex.validate_soft();
    }
  }
};

// Sampling and weighting policy for mixed real/generated batches.
struct MixPolicy {
  double alpha_real = 1.0;        // probability a batch slot draws real data
  double equality_level_l = 0.0;  // exponent on the importance ratio
  int filter_top_k = 0;           // generated labels in the top-k are dropped
  int fair_attribute_axis = -1;   // -1 = no fairness axis

  void validate() const {
    if (!(alpha_real >= 0.0 && alpha_real <= 1.0))
      throw std::invalid_argument("alpha_real must lie in [0, 1]");
    if (!(equality_level_l >= 0.0))
      throw std::invalid_argument("equality_level_l must be >= 0");
    if (filter_top_k < 0)
      throw std::invalid_argument("filter_top_k must be >= 0");
  }
};

// ---- JSON Lines dataset serialization --------------------------------------

inline nlohmann::json example_to_json(const LabeledExample& ex,
                                      const Dataset& d) {
  nlohmann::json j;
  j["features"] = ex.features;
  if (ex.has_soft())
    j["soft"] = ex.soft;
  else
    j["label"] = ex.label;
  nlohmann::json attrs = nlohmann::json::object();
  for (std::size_t a = 0; a < ex.attrs.size(); ++a) {
    const auto& schema = d.attribute_schemas[a];
    attrs[schema.name] = ex.attrs[a] == kUnknownAttr
                             ? std::string("UNKNOWN")
                             : schema.values[ex.attrs[a]];
  }
  j["attrs"] = attrs;
  j["origin"] = ex.origin == Origin::real ? "real" : "generated";
  return j;
}

inline void save_jsonl(const Dataset& d, std::ostream& out) {
  nlohmann::json header;
  header["classes"] = d.class_names;
  nlohmann::json schemas = nlohmann::json::array();
  for (const auto& s : d.attribute_schemas)
    schemas.push_back({{"name", s.name}, {"values", s.values}});
  header["attributes"] = schemas;
  out << header.dump() << "\n";
  for (const auto& ex : d.examples) out << example_to_json(ex, d).dump() << "\n";
}

inline Dataset load_jsonl(std::istream& in) {
  Dataset d;
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument("load_jsonl: missing header line");
  const auto header = nlohmann::json::parse(line);
  d.class_names = header.at("classes").get<std::vector<std::string>>();
  for (const auto& s : header.at("attributes")) {
    AttributeSchema schema;
    schema.name = s.at("name").get<std::string>();
    schema.values = s.at("values").get<std::vector<std::string>>();
    d.attribute_schemas.push_back(std::move(schema));
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::invalid_argument("load_jsonl: parse error at line " +
                                  std::to_string(line_no) + ": " + e.what());
    }
    LabeledExample ex;
    ex.features = j.at("features").get<std::vector<double>>();
    if (j.contains("soft")) {
      ex.soft = j.at("soft").get<std::vector<double>>();
      ex.label = static_cast<int>(
          std::max_element(ex.soft.begin(), ex.soft.end()) - ex.soft.begin());
    } else {
      ex.label = j.at("label").get<int>();
    }
    ex.origin = j.at("origin").get<std::string>() == "generated"
                    ? Origin::generated
                    : Origin::real;
    ex.attrs.assign(d.attribute_schemas.size(), kUnknownAttr);
    for (std::size_t a = 0; a < d.attribute_schemas.size(); ++a) {
      const auto& schema = d.attribute_schemas[a];
      const std::string v = j.at("attrs").at(schema.name).get<std::string>();
      if (v == "UNKNOWN") continue;
      const auto it = std::find(schema.values.begin(), schema.values.end(), v);
      if (it == schema.values.end())
        throw std::invalid_argument("load_jsonl: unknown attribute value '" +
                                    v + "' at line " + std::to_string(line_no));
      ex.attrs[a] = static_cast<int>(it - schema.values.begin());
    }
    d.examples.push_back(std::move(ex));
  }
  d.validate();
  return d;
}

// ---- Sampling spec and loss weights ----------------------------------------

// Empirical label distribution of the dataset.
inline CategoricalDist label_distribution(const Dataset& d) {
  if (d.examples.empty()) throw std::invalid_argument("empty dataset");
  std::vector<double> counts(d.num_classes(), 0.0);
  for (const auto& ex : d.examples) counts[ex.label] += 1.0;
  for (double& c : counts) c /= static_cast<double>(d.size());
  CategoricalDist out;
  out.probs = std::move(counts);
  return out;
}

// Target sampling distribution for generated data: the empirical label
// marginal times a uniform distribution over known attribute values.
inline JointDist fair_sampling_spec(const Dataset& train, int axis) {
  if (train.examples.empty())
    throw std::invalid_argument("fair_sampling_spec: empty dataset");
  if (axis < 0 || axis >= static_cast<int>(train.attribute_schemas.size()))
    throw std::invalid_argument("fair_sampling_spec: invalid axis");
  const CategoricalDist py = label_distribution(train);
  const std::size_t A = train.attribute_schemas[axis].values.size();
  if (A == 0) throw std::invalid_argument("fair_sampling_spec: empty attribute");
  JointDist out;
  out.table.assign(py.size(), std::vector<double>(A, 0.0));
  for (std::size_t y = 0; y < py.size(); ++y)
    for (std::size_t a = 0; a < A; ++a)
      out.table[y][a] = py[y] / static_cast<double>(A);
  return out;
}

// Importance weight (p_fair(a|y) / p_train(a|y))^l.
inline double weight_w1(double p_fair_a_given_y, double p_train_a_given_y,
                        double l) {
  if (l < 0.0) throw std::invalid_argument("weight_w1: l must be >= 0");
  if (!(p_train_a_given_y > 0.0))
    throw std::invalid_argument("weight_w1: p_train(a|y) must be > 0");
  return std::pow(p_fair_a_given_y / p_train_a_given_y, l);
}

// Class indices ranked by descending training frequency (ties by index).
inline std::vector<int> prevalence_ranking(const Dataset& d) {
  std::vector<double> counts(d.num_classes(), 0.0);
  for (const auto& ex : d.examples) counts[ex.label] += 1.0;
  std::vector<int> rank(d.num_classes());
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(),
                   [&](int a, int b) { return counts[a] > counts[b]; });
  return rank;
}

// Filter weight: 0 for labels among the k most prevalent classes, else 1.
inline double weight_w2(int label, const std::vector<int>& prevalence_rank,
                        int k) {
  if (label < 0 || label >= static_cast<int>(prevalence_rank.size()))
    throw std::invalid_argument("weight_w2: invalid label");
  for (int i = 0; i < k && i < static_cast<int>(prevalence_rank.size()); ++i)
    if (prevalence_rank[i] == label) return 0.0;
  return 1.0;
}

using GeneratorFn = std::function<LabeledExample(int label, int attr)>;

namespace mixdetail {

// Empirical conditional p_train(a | y) over known attribute values.
inline std::vector<std::vector<double>> train_conditional(const Dataset& d,
                                                          int axis) {
  const int C = d.num_classes();
  const int A = static_cast<int>(d.attribute_schemas[axis].values.size());
  std::vector<std::vector<double>> cond(C, std::vector<double>(A, 0.0));
  std::vector<double> totals(C, 0.0);
  for (const auto& ex : d.examples) {
    const int a = ex.attrs[axis];
    if (a == kUnknownAttr) continue;
    cond[ex.label][a] += 1.0;
    totals[ex.label] += 1.0;
  }
  for (int y = 0; y < C; ++y)
    if (totals[y] > 0.0)
      for (int a = 0; a < A; ++a) cond[y][a] /= totals[y];
  return cond;
}

}  // namespace mixdetail

// Build one training batch: each slot independently draws real data with
// probability alpha_real (weighted by w1) or a generated example for a
// (label, attribute) pair from the fair sampling spec (weighted by w2).
inline std::vector<std::pair<LabeledExample, double>> build_batch(
    const Dataset& real, const GeneratorFn& generator, const MixPolicy& policy,
    std::size_t batch, std::uint64_t seed) {
  policy.validate();
  if (batch < 1) throw std::invalid_argument("build_batch: batch must be >= 1");
  if (real.examples.empty()) throw std::invalid_argument("build_batch: empty dataset");
  if (policy.alpha_real < 1.0 && !generator)
    throw std::invalid_argument("build_batch: generator required when alpha_real < 1");

  const int axis = policy.fair_attribute_axis;
  const bool has_axis = axis >= 0;
  JointDist fair_spec;
  std::vector<std::vector<double>> train_cond;
  if (has_axis) {
    fair_spec = fair_sampling_spec(real, axis);
    train_cond = mixdetail::train_conditional(real, axis);
  }
  const std::vector<int> ranking = prevalence_ranking(real);

  // Flattened fair (y, a) distribution for generated draws.
  std::vector<double> fair_flat;
  std::size_t A = 1;
  if (has_axis) {
    A = fair_spec.attrs();
    for (const auto& row : fair_spec.table)
      for (double v : row) fair_flat.push_back(v);
  } else {
    const auto py = label_distribution(real);
    fair_flat = py.probs;
  }

  Rng rng(seed);
  std::vector<std::pair<LabeledExample, double>> out;
  out.reserve(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    if (rng.uniform() < policy.alpha_real) {
      const auto& ex = real.examples[rng.uniform_index(real.size())];
      double w = 1.0;
      if (has_axis && policy.equality_level_l > 0.0) {
        const int a = ex.attrs[axis];
        // Unknown attributes carry no importance ratio; weight stays 1.
        if (a != kUnknownAttr && train_cond[ex.label][a] > 0.0) {
          const double fair_cond =
              1.0 / static_cast<double>(fair_spec.attrs());
          w = weight_w1(fair_cond, train_cond[ex.label][a],
                        policy.equality_level_l);
        }
      }
      out.emplace_back(ex, w);
    } else {
      const std::size_t cell = rng.categorical(fair_flat);
      const int y = static_cast<int>(cell / A);
      const int a = has_axis ? static_cast<int>(cell % A) : kUnknownAttr;
      LabeledExample gen = generator(y, a);
      gen.origin = Origin::generated;
      out.emplace_back(std::move(gen), weight_w2(y, ranking, policy.filter_top_k));
    }
  }
  return out;
}

// Cap subgroup counts along one attribute axis by uniform subsampling.
// Examples with unknown attribute values are never removed.
inline Dataset skew_dataset(const Dataset& d, int axis,
                            const std::map<int, std::size_t>& caps,
                            std::uint64_t seed) {
  if (axis < 0 || axis >= static_cast<int>(d.attribute_schemas.size()))
    throw std::invalid_argument("skew_dataset: invalid axis");
  Rng rng(seed);
  std::vector<bool> keep(d.size(), true);
  for (const auto& [value, cap] : caps) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < d.size(); ++i)
      if (d.examples[i].attrs[axis] == value) members.push_back(i);
    if (members.size() <= cap) continue;
    rng.shuffle(members);
    for (std::size_t j = cap; j < members.size(); ++j) keep[members[j]] = false;
  }
  Dataset out;
  out.class_names = d.class_names;
  out.attribute_schemas = d.attribute_schemas;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (keep[i]) out.examples.push_back(d.examples[i]);
  return out;
}

// ---- Soft-label aggregation -------------------------------------------------

using RaterDiagnosis = std::vector<std::pair<int, int>>;  // (condition, conf 1-5)

// Per rater, conditions are ranked by descending confidence (listing order
// breaks ties) and weighted 1/rank; weights are summed across raters and
// normalized to 1.
inline std::vector<double> aggregate_soft_labels(
    const std::vector<RaterDiagnosis>& ratings, int class_count) {
  if (ratings.empty())
    throw std::invalid_argument("aggregate_soft_labels: empty ratings");
  std::vector<double> weights(class_count, 0.0);
  for (const auto& rater : ratings) {
    if (rater.empty() || rater.size() > 3)
      throw std::invalid_argument("aggregate_soft_labels: each rater lists 1-3 conditions");
    std::vector<std::size_t> order(rater.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return rater[a].second > rater[b].second;
    });
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      const auto& [cond, conf] = rater[order[rank]];
      if (cond < 0 || cond >= class_count)
        throw std::invalid_argument("aggregate_soft_labels: condition out of range");
      if (conf < 1 || conf > 5)
        throw std::invalid_argument("aggregate_soft_labels: confidence must be 1-5");
      weights[cond] += 1.0 / static_cast<double>(rank + 1);
    }
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double& w : weights) w /= total;
  return weights;
}

// Examples whose soft label for the class reaches the threshold t.
inline Dataset threshold_confident(const Dataset& d, int cls, double t) {
  if (cls < 0 || cls >= d.num_classes())
    throw std::invalid_argument("threshold_confident: class out of range");
  if (!(t > 0.0 && t <= 1.0))
    throw std::invalid_argument("threshold_confident: t must lie in (0, 1]");
  Dataset out;
  out.class_names = d.class_names;
  out.attribute_schemas = d.attribute_schemas;
  for (const auto& ex : d.examples) {
    const double s = ex.has_soft() ? ex.soft[cls] : (ex.label == cls ? 1.0 : 0.0);
    if (s >= t) out.examples.push_back(ex);
  }
  return out;
}

}  // namespace fairmix
