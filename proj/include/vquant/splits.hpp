#pragma once

#include "vquant/world.hpp"

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vquant {

class SplitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// UNC holds out nothing; the others hold out objects, properties, or object-property pairs.
enum class Setting { unc, uns_obj, uns_prop, uns_que };

std::string_view to_string(Setting s);
Setting parse_setting(std::string_view name);

struct SplitSpec {
  Setting setting = Setting::unc;
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;
  std::uint64_t seed = 0;
  // UnsObj only: also drop training scenarios that show a held-out object as a distractor.
  bool exclude_heldout_distractors = false;

  void validate() const;
};

/// The per-datapoint facts a split needs; dot corpora provide restrictor = scope = -1.
struct SplitRecord {
  std::int64_t id = 0;
  Quantifier label = Quantifier::no;
  Query query;
  std::vector<int> slot_objects;
};

struct Split {
  SplitSpec spec;
  std::vector<std::int64_t> train, val, test;
  std::vector<int> heldout_objects;
  std::vector<int> heldout_properties;
  std::vector<Query> heldout_queries;
};

std::vector<SplitRecord> split_records(const Corpus& corpus);

/**
 * Partitions records into train/val/test for the given setting. Every
 * partition is label-balanced (each label truncated to the scarcest one).
 * Vocabulary held out by UnsObj/UnsProp/UnsQue is ceil-rounded in favour of
 * train; its datapoints are halved into val and test, which stay
 * datapoint-disjoint. The val/test fractions only shape UNC splits.
 */
Split make_split(std::span<const SplitRecord> records, const SplitSpec& spec);
Split make_split(const Corpus& corpus, const SplitSpec& spec);

/// Leakage and balance violations; empty when the split is sound.
std::vector<std::string> check_split(std::span<const SplitRecord> records, const Split& split);

// Manifests: train.txt / val.txt / test.txt hold one datapoint id per line after
// a '#' header; split.json records the spec and held-out vocabulary.
void write_split(const Split& split, const std::filesystem::path& dir);
Split read_split(const std::filesystem::path& dir);

}  // namespace vquant
