#pragma once

#include "vquant/quantifier.hpp"
#include "vquant/random.hpp"

#include <Eigen/Dense>

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vquant {

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// PMI assigned to pairs never seen together (or involving an unseen word).
inline constexpr double kUnseenPmi = 0.01;
/// Lower clip applied to PMI before it is used as a sampling weight.
inline constexpr double kMinDistractorWeight = 0.01;

struct Query {
  int object = -1;
  int property = -1;

  friend auto operator<=>(const Query&, const Query&) = default;
};

struct CatalogConfig {
  int objects = 160;
  int properties = 24;
  double mean_plausible = 8.0;
  int topics = 10;
  double unseen_fraction = 0.05;
};

/**
 * Concept inventory with the plausibility relation and caption statistics
 * used for distractor selection: pair co-occurrence f(o1, o2), unigram
 * frequency f(o), and corpus size N.
 */
struct Catalog {
  std::vector<std::string> object_names;
  std::vector<std::string> property_names;
  std::vector<std::vector<int>> plausible;  // sorted property ids per object
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> cooccurrence;
  std::vector<std::int64_t> frequency;
  std::int64_t corpus_size = 0;

  int num_objects() const { return static_cast<int>(object_names.size()); }
  int num_properties() const { return static_cast<int>(property_names.size()); }
  bool is_plausible(int object, int property) const;
  std::vector<Query> plausible_queries() const;
  /// Throws GenerationError when an invariant does not hold.
  void validate() const;
};

Catalog make_catalog(const CatalogConfig& config, std::uint64_t seed);

/// Natural-log PMI from caption counts; unseen pairs get kUnseenPmi.
double pmi(int o1, int o2, const Catalog& catalog);

struct EmbeddingConfig {
  int dim = 32;
  double sigma = 0.05;
  // Weight of a direction shared by every concept vector. Stands in for the
  // nonzero mean of rectified CNN features; 0 gives isotropic vectors.
  double offset = 1.0;
};

/// One fixed unit vector per object and per property, shared by vision and language.
struct EmbeddingTables {
  Eigen::MatrixXd objects;     // [objects x d]
  Eigen::MatrixXd properties;  // [properties x d]
  std::optional<std::string> warning;

  int dim() const { return static_cast<int>(objects.cols()); }
};

EmbeddingTables synth_embeddings(const Catalog& catalog, const EmbeddingConfig& config,
                                 std::uint64_t seed);

/// Draws instance vectors normalize(e_object + sum e_property + noise).
class InstanceSampler {
 public:
  InstanceSampler(const EmbeddingTables& tables, double sigma);

  Eigen::VectorXd sample(int object, std::span<const int> properties, Rng& rng) const;
  double sigma() const { return sigma_; }
  int dim() const { return tables_->dim(); }

 private:
  const EmbeddingTables* tables_;
  double sigma_;
};

struct ObjectSlot {
  int object = -1;
  std::vector<int> properties;
};

struct Scenario {
  std::vector<ObjectSlot> slots;
  Eigen::MatrixXd embeddings;  // [slots x d], row i embeds slots[i]
};

struct Datapoint {
  std::int64_t id = 0;
  Query query;
  Quantifier label = Quantifier::no;
  SetCounts counts;
  int distractors_with_scope = 0;
  Scenario scenario;
};

struct ScenarioConfig {
  int slots = 16;
  int min_restrictor = 6;
  int max_instance_properties = 3;
};

/**
 * Builds one datapoint for `query` whose ground truth is `target`.
 *
 * (m, k) is drawn uniformly from the feasible pairs for the label; m restrictor
 * instances are created (k with the scope property), the remaining slots are
 * distractor objects drawn with probability proportional to their clipped PMI
 * with the restrictor, and the slot order is shuffled.
 */
Datapoint assemble_scenario(const Query& query, Quantifier target, const Catalog& catalog,
                            const InstanceSampler& sampler, const ScenarioConfig& config,
                            std::uint64_t seed, std::int64_t id = 0);

struct CorpusConfig {
  CatalogConfig catalog;
  EmbeddingConfig embedding;
  ScenarioConfig scenario;
  int per_quantifier = 2000;
};

struct Corpus {
  CorpusConfig config;
  std::uint64_t seed = 0;
  Catalog catalog;
  EmbeddingTables words;
  std::vector<Datapoint> datapoints;

  const Datapoint& by_id(std::int64_t id) const;
};

/// Exactly n datapoints per label over uniformly sampled plausible queries.
std::vector<Datapoint> generate_datapoints(int per_quantifier, const Catalog& catalog,
                                           const InstanceSampler& sampler,
                                           const ScenarioConfig& config, std::uint64_t seed);

/// Catalog, embeddings and datapoints from one seed.
Corpus generate_corpus(const CorpusConfig& config, std::uint64_t seed);

struct LabeledQuery {
  Query query;
  Quantifier label;
};

struct BoxStats {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

struct QueryBias {
  Query query;
  int count = 0;
  std::array<double, kNumQuantifiers> ratio{};
};

struct LabelBiasSummary {
  double mean = 0, min = 0, max = 0;
  BoxStats box;
};

struct BiasReport {
  std::vector<QueryBias> queries;  // sorted by query
  std::array<LabelBiasSummary, kNumQuantifiers> labels{};
  double max_ratio = 0;
};

BiasReport audit_bias(std::span<const LabeledQuery> records);
BiasReport audit_bias(const Corpus& corpus);

// Corpus directory layout: corpus.jsonl (header line, then one record per
// datapoint), vectors.f32 (little-endian float32), catalog.json.
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus read_corpus(const std::filesystem::path& dir);

}  // namespace vquant
