#include "doctest.h"
#include "fixtures.hpp"
#include "generators.hpp"

#include "vquant/world.hpp"

#include <cmath>
#include <filesystem>
#include <map>
#include <set>

using namespace vquant;

namespace {

// Six objects, two properties. Counts chosen so the PMIs of object 0 are known:
// with 1: ln(50 * 1000 / (10 * 10)) = ln 500, with 2: ln 10, with 3: unseen
// pair, with 4: unseen word, with 5: ln(1 * 1000 / (10 * 200)) < 0.
Catalog hand_catalog() {
  Catalog c;
  c.object_names = {"o0", "o1", "o2", "o3", "o4", "o5"};
  c.property_names = {"p0", "p1"};
  c.plausible = {{0, 1}, {0}, {1}, {0, 1}, {0}, {1}};
  c.frequency = {10, 10, 20, 5, 0, 200};
  c.corpus_size = 1000;
  c.cooccurrence.setZero(6, 6);
  auto set = [&c](int a, int b, std::int64_t f) { c.cooccurrence(a, b) = c.cooccurrence(b, a) = f; };
  set(0, 1, 50);
  set(0, 2, 2);
  set(0, 5, 1);
  set(1, 2, 4);  // 4 * 1000 / (10 * 20) = 20
  set(2, 5, 4);  // exactly f2 * f5 / N: independent
  return c;
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("vquant_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

// Upper 1% point of chi-square with `df` degrees of freedom (Wilson-Hilferty).
double chi2_critical(int df) {
  const double z = 2.326348;
  const double k = df;
  return k * std::pow(1 - 2 / (9 * k) + z * std::sqrt(2 / (9 * k)), 3);
}

}  // namespace

TEST_CASE("pmi from caption counts") {
  const Catalog c = hand_catalog();
  CHECK(pmi(0, 1, c) == doctest::Approx(std::log(500.0)).epsilon(1e-12));
  CHECK(pmi(0, 1, c) == doctest::Approx(6.2146).epsilon(1e-4));
  CHECK(pmi(1, 0, c) == pmi(0, 1, c));
  CHECK(pmi(0, 2, c) == doctest::Approx(std::log(10.0)).epsilon(1e-12));
  CHECK(pmi(0, 3, c) == kUnseenPmi);
  CHECK(pmi(0, 4, c) == kUnseenPmi);
  CHECK(pmi(2, 5, c) == doctest::Approx(0.0));
  CHECK(pmi(0, 5, c) < 0);
  CHECK_THROWS_AS(pmi(0, 6, c), std::out_of_range);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("catalog invariants hold over seeds") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CatalogConfig cfg;
    cfg.objects = 40;
    cfg.properties = 12;
    const Catalog c = make_catalog(cfg, seed);
    CHECK_NOTHROW(c.validate());
    CHECK(c.num_objects() == 40);
    std::set<int> used;
    for (const auto& ps : c.plausible) {
      CHECK(std::is_sorted(ps.begin(), ps.end()));
      CHECK(std::adjacent_find(ps.begin(), ps.end()) == ps.end());
      used.insert(ps.begin(), ps.end());
    }
    CHECK(used.size() == 12u);
    CHECK(c.cooccurrence == c.cooccurrence.transpose());
    CHECK(c.cooccurrence.diagonal().isZero());
  }
  CHECK_THROWS_AS(make_catalog(CatalogConfig{1, 3, 2.0, 1, 0.0}, 0), GenerationError);
}

TEST_CASE("a broken catalog is rejected") {
  Catalog c = hand_catalog();
  c.plausible[3].clear();
  CHECK_THROWS_AS(c.validate(), GenerationError);
  c = hand_catalog();
  c.corpus_size = 100;
  CHECK_THROWS_AS(c.validate(), GenerationError);
  c = hand_catalog();
  c.cooccurrence(0, 1) = -1;
  CHECK_THROWS_AS(c.validate(), GenerationError);
}

TEST_CASE("concept vectors are unit length with the expected pairwise cosines") {
  const Catalog c = make_catalog(CatalogConfig{200, 40, 8.0, 10, 0.05}, 3);
  for (double offset : {0.0, 1.0}) {
    CAPTURE(offset);
    const int d = 64;
    const auto t = synth_embeddings(c, EmbeddingConfig{d, 0.05, offset}, 3);
    CHECK((t.objects.rowwise().norm().array() - 1).abs().maxCoeff() < 1e-6);
    CHECK((t.properties.rowwise().norm().array() - 1).abs().maxCoeff() < 1e-6);
    // v = offset * u + g with g ~ N(0, I/d): cos ~ offset^2 / (offset^2 + 1), spread ~ 1/sqrt(d)
    const Eigen::MatrixXd G = t.objects * t.objects.transpose();
    double sum = 0, sq = 0;
    int n = 0;
    for (Eigen::Index i = 0; i < G.rows(); ++i)
      for (Eigen::Index j = i + 1; j < G.cols(); ++j, ++n) {
        sum += G(i, j);
        sq += G(i, j) * G(i, j);
      }
    const double mean = sum / n, var = sq / n - mean * mean;
    const double target = offset * offset / (offset * offset + 1);
    CHECK(mean == doctest::Approx(target).epsilon(0.03).scale(1));
    if (offset == 0.0) CHECK(var == doctest::Approx(1.0 / d).epsilon(0.15));
  }
}

TEST_CASE("small embedding dimensions raise a warning") {
  const Catalog c = make_catalog(CatalogConfig{160, 24, 8.0, 10, 0.05}, 1);
  // 4 ln(184) is about 20.9
  CHECK(synth_embeddings(c, EmbeddingConfig{16, 0.05, 1.0}, 1).warning.has_value());
  CHECK(synth_embeddings(c, EmbeddingConfig{20, 0.05, 1.0}, 1).warning.has_value());
  CHECK_FALSE(synth_embeddings(c, EmbeddingConfig{21, 0.05, 1.0}, 1).warning.has_value());
  CHECK_FALSE(synth_embeddings(c, EmbeddingConfig{32, 0.05, 1.0}, 1).warning.has_value());
  CHECK_THROWS_AS(synth_embeddings(c, EmbeddingConfig{3, 0.05, 1.0}, 1), GenerationError);
  CHECK_THROWS_AS(synth_embeddings(c, EmbeddingConfig{8, -1.0, 1.0}, 1), GenerationError);
}

TEST_CASE("noise-free instances are the normalised concept sum") {
  const Catalog c = hand_catalog();
  const auto t = synth_embeddings(c, EmbeddingConfig{8, 0.0, 1.0}, 2);
  const InstanceSampler sampler(t, 0.0);
  auto r = gen::rng(1);
  const std::vector<int> props = {0, 1};
  const Eigen::VectorXd expected =
      (t.objects.row(3) + t.properties.row(0) + t.properties.row(1)).transpose().normalized();
  CHECK((sampler.sample(3, props, r) - expected).cwiseAbs().maxCoeff() < 1e-6);

  // with noise the instance moves away from the sum by about sigma per coordinate
  const InstanceSampler noisy(t, 0.05);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(8);
  for (int i = 0; i < 2000; ++i) mean += noisy.sample(3, props, r);
  mean /= 2000;
  CHECK((mean.normalized() - expected).norm() < 0.01);
}

TEST_CASE("scenarios realise their label with the intended slot contents") {
  const auto& corpus = fixtures::small_corpus();
  std::array<int, kNumQuantifiers> per_label{};
  for (const auto& d : corpus.datapoints) {
    CAPTURE(d.id);
    ++per_label[static_cast<std::size_t>(ordinal(d.label))];
    CHECK(quantize_ratio(d.counts) == d.label);
    CHECK(d.counts.m >= 6);
    REQUIRE(d.scenario.slots.size() == 16u);
    CHECK(d.scenario.embeddings.rows() == 16);
    int m = 0, k = 0, distractors_with_scope = 0;
    for (const auto& s : d.scenario.slots) {
      CHECK(std::is_sorted(s.properties.begin(), s.properties.end()));
      CHECK(s.properties.size() <= 3u);
      const bool has_scope = std::binary_search(s.properties.begin(), s.properties.end(), d.query.property);
      for (int p : s.properties) CHECK(corpus.catalog.is_plausible(s.object, p));
      if (s.object == d.query.object) {
        ++m;
        k += has_scope;
      } else {
        distractors_with_scope += has_scope;
      }
    }
    CHECK(m == d.counts.m);
    CHECK(k == d.counts.k);
    CHECK(distractors_with_scope == d.distractors_with_scope);
  }
  for (int n : per_label) CHECK(n == corpus.config.per_quantifier);
}

TEST_CASE("the chosen (m, k) pair covers the label's feasible set") {
  const Catalog c = hand_catalog();
  const auto t = synth_embeddings(c, EmbeddingConfig{8, 0.05, 1.0}, 2);
  const InstanceSampler sampler(t, 0.05);
  const ScenarioConfig cfg;
  for (auto q : kAllQuantifiers) {
    std::map<std::pair<int, int>, int> seen;
    for (std::uint64_t s = 0; s < 1500; ++s) {
      const auto d = assemble_scenario({0, 1}, q, c, sampler, cfg, s);
      ++seen[{d.counts.m, d.counts.k}];
    }
    const auto feasible = feasible_counts(q, 6, 16);
    CHECK(seen.size() == feasible.size());
    // uniform over the feasible pairs: chi-square goodness of fit
    const double expected = 1500.0 / static_cast<double>(feasible.size());
    double chi2 = 0;
    for (const auto& [mk, n] : seen) chi2 += (n - expected) * (n - expected) / expected;
    CHECK(chi2 < chi2_critical(static_cast<int>(feasible.size()) - 1));
  }
}

TEST_CASE("distractors follow clipped pmi with the restrictor") {
  const Catalog c = hand_catalog();
  const auto t = synth_embeddings(c, EmbeddingConfig{8, 0.05, 1.0}, 2);
  const InstanceSampler sampler(t, 0.05);
  const ScenarioConfig cfg;
  std::array<int, 6> drawn{};
  int total = 0;
  for (std::uint64_t s = 0; total < 10000; ++s) {
    const auto d = assemble_scenario({0, 1}, Quantifier::some, c, sampler, cfg, s);
    for (const auto& slot : d.scenario.slots)
      if (slot.object != 0) {
        ++drawn[static_cast<std::size_t>(slot.object)];
        ++total;
      }
  }
  CHECK(drawn[0] == 0);
  // weights max(pmi, 0.01); the three 0.01 objects are pooled into one cell
  const double w1 = std::log(500.0), w2 = std::log(10.0), rest = 0.03, wsum = w1 + w2 + rest;
  const std::array<double, 3> expected = {total * w1 / wsum, total * w2 / wsum, total * rest / wsum};
  const std::array<int, 3> observed = {drawn[1], drawn[2], drawn[3] + drawn[4] + drawn[5]};
  double chi2 = 0;
  for (std::size_t i = 0; i < 3; ++i) chi2 += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
  CHECK(chi2 < chi2_critical(2));
  // the clipped objects are equally likely among themselves
  CHECK(drawn[3] > 0);
  CHECK(drawn[4] > 0);
  CHECK(drawn[5] > 0);
}

TEST_CASE("scenario assembly rejects implausible queries") {
  const Catalog c = hand_catalog();
  const auto t = synth_embeddings(c, EmbeddingConfig{8, 0.05, 1.0}, 2);
  const InstanceSampler sampler(t, 0.05);
  CHECK_THROWS_AS(assemble_scenario({1, 1}, Quantifier::all, c, sampler, ScenarioConfig{}, 0), GenerationError);
  ScenarioConfig tiny;
  tiny.slots = 4;
  tiny.min_restrictor = 2;
  // few needs k / m <= 17%, impossible with m <= 4
  CHECK_THROWS_AS(assemble_scenario({0, 1}, Quantifier::few, c, sampler, tiny, 0), GenerationError);
}

TEST_CASE("corpus generation is deterministic in its seed") {
  CorpusConfig cfg = fixtures::small_corpus().config;
  const Corpus a = generate_corpus(cfg, 17), b = generate_corpus(cfg, 17), c = generate_corpus(cfg, 18);
  REQUIRE(a.datapoints.size() == b.datapoints.size());
  CHECK(a.words.objects == b.words.objects);
  for (std::size_t i = 0; i < a.datapoints.size(); ++i) {
    CHECK(a.datapoints[i].query == b.datapoints[i].query);
    CHECK(a.datapoints[i].scenario.embeddings == b.datapoints[i].scenario.embeddings);
  }
  CHECK(a.words.objects != c.words.objects);
}

TEST_CASE("corpora survive a disk round trip") {
  const auto& a = fixtures::small_corpus();
  const auto dir = scratch_dir("corpus");
  write_corpus(a, dir);
  const Corpus b = read_corpus(dir);
  CHECK(b.seed == a.seed);
  CHECK(b.config.catalog.objects == a.config.catalog.objects);
  CHECK(b.config.embedding.offset == a.config.embedding.offset);
  CHECK(b.catalog.plausible == a.catalog.plausible);
  CHECK(b.catalog.cooccurrence == a.catalog.cooccurrence);
  CHECK(b.catalog.frequency == a.catalog.frequency);
  // stored as f32 and renormalised on load
  CHECK((b.words.objects - a.words.objects).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((b.words.properties - a.words.properties).cwiseAbs().maxCoeff() < 1e-6);
  REQUIRE(b.datapoints.size() == a.datapoints.size());
  for (std::size_t i = 0; i < a.datapoints.size(); ++i) {
    const auto &x = a.datapoints[i], &y = b.datapoints[i];
    CHECK(x.id == y.id);
    CHECK(x.label == y.label);
    CHECK(x.counts == y.counts);
    CHECK(x.distractors_with_scope == y.distractors_with_scope);
    CHECK((x.scenario.embeddings - y.scenario.embeddings).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((y.scenario.embeddings.rowwise().norm().array() - 1).abs().maxCoeff() < 1e-9);
    for (std::size_t s = 0; s < x.scenario.slots.size(); ++s) {
      CHECK(x.scenario.slots[s].object == y.scenario.slots[s].object);
      CHECK(x.scenario.slots[s].properties == y.scenario.slots[s].properties);
    }
  }
  CHECK(b.by_id(7).id == 7);
  CHECK_THROWS_AS(b.by_id(100000), std::out_of_range);
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(read_corpus(dir), GenerationError);
}

TEST_CASE("bias audit on hand-made records") {
  const std::vector<LabeledQuery> records = {
      {{0, 0}, Quantifier::no},   {{0, 0}, Quantifier::no},  {{0, 0}, Quantifier::all}, {{0, 0}, Quantifier::few},
      {{1, 2}, Quantifier::some}, {{1, 2}, Quantifier::most}};
  const BiasReport r = audit_bias(records);
  REQUIRE(r.queries.size() == 2u);
  CHECK(r.queries[0].count == 4);
  CHECK(r.queries[0].ratio[0] == doctest::Approx(0.5));
  CHECK(r.queries[1].ratio[2] == doctest::Approx(0.5));
  CHECK(r.max_ratio == doctest::Approx(0.5));
  const auto& no = r.labels[0];
  CHECK(no.mean == doctest::Approx(0.25));
  CHECK(no.min == 0.0);
  CHECK(no.max == doctest::Approx(0.5));
  CHECK(no.box.median == doctest::Approx(0.25));
  CHECK(no.box.q1 == doctest::Approx(0.125));
}

TEST_CASE("a balanced corpus shows no per-query label preference on average") {
  const auto r = audit_bias(fixtures::small_corpus());
  for (const auto& l : r.labels) CHECK(l.mean == doctest::Approx(0.2).epsilon(0.35));
  double total = 0;
  for (const auto& l : r.labels) total += l.mean;
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("instance embeddings are unit vectors and lean toward their properties") {
  const Catalog c = make_catalog(CatalogConfig{40, 12, 6.0, 5, 0.05}, 8);
  const auto t = synth_embeddings(c, EmbeddingConfig{32, 0.1, 1.0}, 8);
  const InstanceSampler sampler(t, 0.1);
  auto r = gen::rng(2);
  double with = 0, without = 0;
  for (int i = 0; i < 1000; ++i) {
    const int o = gen::integer(r, 0, 39);
    const int p = gen::integer(r, 0, 11);
    int other = gen::integer(r, 0, 10);
    if (other >= p) ++other;
    const std::vector<int> has = {p}, lacks = {other};
    const auto a = sampler.sample(o, has, r), b = sampler.sample(o, lacks, r);
    CHECK(std::abs(a.norm() - 1) <= 1e-9);
    CHECK(std::abs(b.norm() - 1) <= 1e-9);
    with += a.dot(t.properties.row(p).transpose());
    without += b.dot(t.properties.row(p).transpose());
  }
  CHECK(with / 1000 > without / 1000);

  // without noise two draws of the same instance coincide
  const InstanceSampler exact(t, 0.0);
  const std::vector<int> props = {1, 4};
  CHECK(exact.sample(3, props, r) == exact.sample(3, props, r));
}

TEST_CASE("a generated corpus has the requested size and sensible cardinalities") {
  CorpusConfig cfg;
  cfg.catalog.objects = 20;
  cfg.catalog.properties = 6;
  cfg.embedding.dim = 16;
  cfg.per_quantifier = 200;
  const Corpus c = generate_corpus(cfg, 4);
  CHECK(c.datapoints.size() == 1000u);
  double m = 0;
  std::set<std::int64_t> ids;
  for (const auto& d : c.datapoints) {
    m += d.counts.m;
    ids.insert(d.id);
    CHECK(c.catalog.is_plausible(d.query.object, d.query.property));
    if (d.label == Quantifier::all)
      for (const auto& s : d.scenario.slots)
        if (s.object == d.query.object) CHECK(std::binary_search(s.properties.begin(), s.properties.end(), d.query.property));
  }
  CHECK(ids.size() == 1000u);
  m /= 1000;
  CHECK(m >= 6);
  CHECK(m <= 16);
}

TEST_CASE("bias audit examples") {
  std::vector<LabeledQuery> even;
  for (int i = 0; i < 10; ++i) even.push_back({{2, 3}, kAllQuantifiers[static_cast<std::size_t>(i % 5)]});
  const auto a = audit_bias(even);
  for (double v : a.queries[0].ratio) CHECK(v == doctest::Approx(0.2));

  const std::vector<LabeledQuery> once = {{{1, 1}, Quantifier::most}};
  const auto b = audit_bias(once);
  CHECK(b.queries[0].ratio[3] == 1.0);
  CHECK(b.max_ratio == 1.0);

  // a generated corpus with at least 50 occurrences per query
  CorpusConfig cfg;
  cfg.catalog.objects = 6;
  cfg.catalog.properties = 3;
  cfg.catalog.mean_plausible = 1.5;
  cfg.embedding.dim = 8;
  cfg.per_quantifier = 400;
  const auto corpus = generate_corpus(cfg, 6);
  const auto rep = audit_bias(corpus);
  for (const auto& q : rep.queries) REQUIRE(q.count >= 50);
  for (const auto& l : rep.labels) CHECK(std::abs(l.mean - 0.2) <= 0.05);
}
