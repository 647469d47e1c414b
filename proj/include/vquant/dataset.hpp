#pragma once

#include "vquant/tensor.hpp"
#include "vquant/world.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace vquant {

/**
 * What a classifier sees for one datapoint. `visual` holds the scenario as a
 * [slots x d] matrix for the concept models, or the raw [H x W] raster for the
 * dot classifier (whose restrictor/scope are -1).
 */
struct Example {
  std::int64_t id = 0;
  int restrictor = -1;
  int scope = -1;
  Quantifier label = Quantifier::no;
  SetCounts counts;
  int distractors_with_scope = 0;
  Tensor<double> visual;
};

struct Dataset {
  Eigen::MatrixXd object_vectors;    // frozen word vectors, empty for dot data
  Eigen::MatrixXd property_vectors;
  std::vector<Example> examples;

  std::size_t size() const { return examples.size(); }
};

Example make_example(const Datapoint& d);
Dataset make_dataset(const Corpus& corpus);
Dataset make_dataset(const Corpus& corpus, std::span<const std::int64_t> ids);

}  // namespace vquant
