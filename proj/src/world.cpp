#include "vquant/world.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vquant {

namespace {

Eigen::MatrixXd concept_vectors(int count, const EmbeddingConfig& config, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(config.dim)));
  const Eigen::VectorXd shared =
      Eigen::VectorXd::Constant(config.dim, 1.0 / std::sqrt(static_cast<double>(config.dim)));
  Eigen::MatrixXd out(count, config.dim);
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd v = config.offset * shared;
    for (int j = 0; j < config.dim; ++j) v[j] += gauss(rng);
    out.row(i) = v.normalized().transpose();
  }
  return out;
}

template <typename T>
std::vector<T> sample_without_replacement(std::vector<T> pool, std::size_t n, Rng& rng) {
  n = std::min(n, pool.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(n);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

EmbeddingTables synth_embeddings(const Catalog& catalog, const EmbeddingConfig& config,
                                 std::uint64_t seed) {
  if (config.dim < 4) throw GenerationError("embedding dimension must be at least 4");
  if (config.sigma < 0) throw GenerationError("noise sigma must be nonnegative");
  Rng rng = make_rng(seed, Stream::embeddings);
  EmbeddingTables t;
  t.objects = concept_vectors(catalog.num_objects(), config, rng);
  t.properties = concept_vectors(catalog.num_properties(), config, rng);
  // Random directions in d dimensions stay quasi-orthogonal for roughly
  // n <= exp(d / 4) vectors; below that the concepts start to blur.
  const double n = catalog.num_objects() + catalog.num_properties();
  if (config.dim <= 4.0 * std::log(n)) {
    t.warning = "embedding dimension " + std::to_string(config.dim) + " is too small to keep " +
                std::to_string(static_cast<int>(n)) + " concept directions quasi-orthogonal";
  }
  return t;
}

InstanceSampler::InstanceSampler(const EmbeddingTables& tables, double sigma)
    : tables_(&tables), sigma_(sigma) {}

Eigen::VectorXd InstanceSampler::sample(int object, std::span<const int> properties, Rng& rng) const {
  Eigen::VectorXd v = tables_->objects.row(object).transpose();
  for (int p : properties) v += tables_->properties.row(p).transpose();
  if (sigma_ > 0) {
    std::normal_distribution<double> noise(0.0, sigma_);
    for (Eigen::Index j = 0; j < v.size(); ++j) v[j] += noise(rng);
  }
  return v.normalized();
}

Datapoint assemble_scenario(const Query& query, Quantifier target, const Catalog& catalog,
                            const InstanceSampler& sampler, const ScenarioConfig& config,
                            std::uint64_t seed, std::int64_t id) {
  if (!catalog.is_plausible(query.object, query.property)) {
    throw GenerationError("query pairs " + std::to_string(query.object) +
                          " with an implausible property " + std::to_string(query.property));
  }
  const auto feasible = feasible_counts(target, config.min_restrictor, config.slots);
  if (feasible.empty()) {
    throw GenerationError("label '" + std::string(to_string(target)) +
                          "' is unreachable with " + std::to_string(config.slots) + " slots");
  }
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick_counts(0, feasible.size() - 1);
  const SetCounts counts = feasible[pick_counts(rng)];
  std::uniform_int_distribution<int> how_many(1, std::max(1, config.max_instance_properties));

  const auto& restrictor_props = catalog.plausible[static_cast<std::size_t>(query.object)];
  std::vector<int> others;
  std::copy_if(restrictor_props.begin(), restrictor_props.end(), std::back_inserter(others),
               [&](int p) { return p != query.property; });

  Datapoint dp;
  dp.id = id;
  dp.query = query;
  dp.counts = counts;
  dp.label = quantize_ratio(counts);
  auto& slots = dp.scenario.slots;
  slots.reserve(static_cast<std::size_t>(config.slots));

  // The property count is drawn before target status is applied, so targets
  // and non-targets carry the same number of properties on average.
  for (int i = 0; i < counts.m; ++i) {
    const auto n = static_cast<std::size_t>(how_many(rng));
    ObjectSlot s{query.object, {}};
    if (i < counts.k) {
      s.properties = sample_without_replacement(others, n - 1, rng);
      s.properties.insert(std::lower_bound(s.properties.begin(), s.properties.end(), query.property),
                          query.property);
    } else {
      s.properties = sample_without_replacement(others, n, rng);
    }
    slots.push_back(std::move(s));
  }

  std::vector<int> candidates;
  std::vector<double> weights;
  for (int o = 0; o < catalog.num_objects(); ++o) {
    if (o == query.object) continue;
    candidates.push_back(o);
    weights.push_back(std::max(pmi(query.object, o, catalog), kMinDistractorWeight));
  }
  std::discrete_distribution<std::size_t> pick_distractor(weights.begin(), weights.end());
  for (int i = counts.m; i < config.slots; ++i) {
    const int o = candidates[pick_distractor(rng)];
    const auto n = static_cast<std::size_t>(how_many(rng));
    ObjectSlot s{o, sample_without_replacement(catalog.plausible[static_cast<std::size_t>(o)], n, rng)};
    if (std::binary_search(s.properties.begin(), s.properties.end(), query.property)) {
      ++dp.distractors_with_scope;
    }
    slots.push_back(std::move(s));
  }

  std::shuffle(slots.begin(), slots.end(), rng);
  dp.scenario.embeddings.resize(config.slots, sampler.dim());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    dp.scenario.embeddings.row(static_cast<Eigen::Index>(i)) =
        sampler.sample(slots[i].object, slots[i].properties, rng).transpose();
  }
  return dp;
}

}  // namespace vquant
