#pragma once

#include "vquant/dots.hpp"
#include "vquant/models.hpp"
#include "vquant/world.hpp"

// A small generated corpus shared by tests that need realistic datapoints.
namespace fixtures {

inline const vquant::Corpus& small_corpus() {
  static const vquant::Corpus c = [] {
    vquant::CorpusConfig cfg;
    cfg.catalog.objects = 30;
    cfg.catalog.properties = 10;
    cfg.catalog.mean_plausible = 4;
    cfg.embedding.dim = 8;
    cfg.per_quantifier = 8;
    return vquant::generate_corpus(cfg, 17);
  }();
  return c;
}

inline const vquant::Dataset& small_dataset() {
  static const vquant::Dataset d = vquant::make_dataset(small_corpus());
  return d;
}

inline vquant::ModelSpec tiny_spec(vquant::Architecture a, std::uint64_t seed = 3) {
  vquant::ModelSpec s;
  s.arch = a;
  s.seed = seed;
  s.d_embed = 6;
  s.d_hidden = 5;
  s.d_mem = 4;
  s.filters = 3;
  s.receptive = 3;
  s.stride = 2;
  return s;
}

inline const vquant::Dataset& small_dots() {
  static const vquant::Dataset d = [] {
    vquant::DotCorpusConfig cfg;
    cfg.render.height = 24;
    cfg.render.width = 24;
    cfg.render.radius = 1;
    cfg.per_quantifier = 2;
    const auto corpus = vquant::generate_dot_corpus(cfg, 5);
    std::vector<std::int64_t> ids;
    for (const auto& p : corpus.datapoints) ids.push_back(p.id);
    return vquant::make_dataset(corpus, ids);
  }();
  return d;
}

/// Dataset and input shape that suit the architecture.
inline const vquant::Dataset& data_for(vquant::Architecture a) {
  return a == vquant::Architecture::dot_cnn ? small_dots() : small_dataset();
}

}  // namespace fixtures
