#include "vquant/world.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace vquant {

namespace {

std::string numbered(const char* stem, int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%03d", stem, i);
  return buf;
}

}  // namespace

bool Catalog::is_plausible(int object, int property) const {
  if (object < 0 || object >= num_objects()) return false;
  const auto& ps = plausible[static_cast<std::size_t>(object)];
  return std::binary_search(ps.begin(), ps.end(), property);
}

std::vector<Query> Catalog::plausible_queries() const {
  std::vector<Query> out;
  for (int o = 0; o < num_objects(); ++o) {
    for (int p : plausible[static_cast<std::size_t>(o)]) out.push_back({o, p});
  }
  return out;
}

void Catalog::validate() const {
  const auto n = static_cast<std::size_t>(num_objects());
  if (plausible.size() != n || frequency.size() != n) {
    throw GenerationError("catalog tables disagree on object count");
  }
  if (cooccurrence.rows() != num_objects() || cooccurrence.cols() != num_objects()) {
    throw GenerationError("co-occurrence matrix has wrong shape");
  }
  std::int64_t total = 0;
  for (std::size_t o = 0; o < n; ++o) {
    if (plausible[o].empty()) throw GenerationError(object_names[o] + " has no plausible property");
    for (int p : plausible[o]) {
      if (p < 0 || p >= num_properties()) throw GenerationError("plausible property out of range");
    }
    if (frequency[o] < 0) throw GenerationError("negative unigram frequency");
    total += frequency[o];
  }
  if ((cooccurrence.array() < 0).any()) throw GenerationError("negative co-occurrence count");
  if (corpus_size < total) throw GenerationError("corpus size smaller than total frequency");
}

Catalog make_catalog(const CatalogConfig& config, std::uint64_t seed) {
  if (config.objects < 2 || config.properties < 1) {
    throw GenerationError("catalog needs at least two objects and one property");
  }
  if (config.topics < 1) throw GenerationError("catalog needs at least one topic");
  Rng rng = make_rng(seed, Stream::catalog);
  Catalog c;
  for (int o = 0; o < config.objects; ++o) c.object_names.push_back(numbered("object", o));
  for (int p = 0; p < config.properties; ++p) c.property_names.push_back(numbered("property", p));

  const double keep = std::clamp(config.mean_plausible / config.properties, 0.0, 1.0);
  std::bernoulli_distribution take(keep);
  std::uniform_int_distribution<int> any_property(0, config.properties - 1);
  c.plausible.resize(static_cast<std::size_t>(config.objects));
  for (auto& ps : c.plausible) {
    for (int p = 0; p < config.properties; ++p) {
      if (take(rng)) ps.push_back(p);
    }
    if (ps.empty()) ps.push_back(any_property(rng));
  }
  // Every property must be usable as a scope somewhere.
  std::uniform_int_distribution<int> any_object(0, config.objects - 1);
  for (int p = 0; p < config.properties; ++p) {
    const bool used = std::any_of(c.plausible.begin(), c.plausible.end(), [p](const auto& ps) {
      return std::binary_search(ps.begin(), ps.end(), p);
    });
    if (!used) {
      auto& ps = c.plausible[static_cast<std::size_t>(any_object(rng))];
      ps.insert(std::lower_bound(ps.begin(), ps.end(), p), p);
    }
  }

  // Caption statistics: objects sharing a latent scene topic co-occur more.
  std::uniform_int_distribution<int> any_topic(0, config.topics - 1);
  std::vector<int> topic(static_cast<std::size_t>(config.objects));
  for (auto& t : topic) t = any_topic(rng);
  std::bernoulli_distribution unseen(config.unseen_fraction);
  std::lognormal_distribution<double> freq(6.0, 1.0);
  c.frequency.resize(static_cast<std::size_t>(config.objects));
  for (auto& f : c.frequency) {
    f = unseen(rng) ? 0 : std::max<std::int64_t>(1, std::llround(freq(rng)));
  }
  const std::int64_t total = std::accumulate(c.frequency.begin(), c.frequency.end(), std::int64_t{0});
  c.corpus_size = 20 * std::max<std::int64_t>(total, 1);

  c.cooccurrence.setZero(config.objects, config.objects);
  for (int a = 0; a < config.objects; ++a) {
    for (int b = a + 1; b < config.objects; ++b) {
      const auto fa = c.frequency[static_cast<std::size_t>(a)];
      const auto fb = c.frequency[static_cast<std::size_t>(b)];
      if (fa == 0 || fb == 0) continue;
      const double lift = topic[static_cast<std::size_t>(a)] == topic[static_cast<std::size_t>(b)]
                              ? std::exp(2.5)
                              : std::exp(0.5);
      const double lambda = static_cast<double>(fa) * static_cast<double>(fb) /
                            static_cast<double>(c.corpus_size) * lift;
      std::poisson_distribution<std::int64_t> draw(std::max(lambda, 1e-12));
      const auto f = draw(rng);
      c.cooccurrence(a, b) = f;
      c.cooccurrence(b, a) = f;
    }
  }
  c.validate();
  return c;
}

double pmi(int o1, int o2, const Catalog& catalog) {
  if (o1 < 0 || o2 < 0 || o1 >= catalog.num_objects() || o2 >= catalog.num_objects()) {
    throw std::out_of_range("pmi: object id outside catalog");
  }
  const auto f12 = catalog.cooccurrence(o1, o2);
  const auto f1 = catalog.frequency[static_cast<std::size_t>(o1)];
  const auto f2 = catalog.frequency[static_cast<std::size_t>(o2)];
  if (f12 <= 0 || f1 <= 0 || f2 <= 0) return kUnseenPmi;
  return std::log(static_cast<double>(f12) * static_cast<double>(catalog.corpus_size) /
                  (static_cast<double>(f1) * static_cast<double>(f2)));
}

}  // namespace vquant
