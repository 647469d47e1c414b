#include "vquant/dataset.hpp"

namespace vquant {

Example make_example(const Datapoint& d) {
  Example e;
  e.id = d.id;
  e.restrictor = d.query.object;
  e.scope = d.query.property;
  e.label = d.label;
  e.counts = d.counts;
  e.distractors_with_scope = d.distractors_with_scope;
  e.visual = Tensor<double>::from_matrix(d.scenario.embeddings);
  return e;
}

Dataset make_dataset(const Corpus& corpus) {
  Dataset ds;
  ds.object_vectors = corpus.words.objects;
  ds.property_vectors = corpus.words.properties;
  ds.examples.reserve(corpus.datapoints.size());
  for (const auto& d : corpus.datapoints) ds.examples.push_back(make_example(d));
  return ds;
}

Dataset make_dataset(const Corpus& corpus, std::span<const std::int64_t> ids) {
  Dataset ds;
  ds.object_vectors = corpus.words.objects;
  ds.property_vectors = corpus.words.properties;
  ds.examples.reserve(ids.size());
  for (auto id : ids) ds.examples.push_back(make_example(corpus.by_id(id)));
  return ds;
}

}  // namespace vquant
