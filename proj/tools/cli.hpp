#pragma once

#include "vquant/dots.hpp"
#include "vquant/report.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace vquant::cli {

/// Runs the command line; returns the process exit status (0 ok, 1 failure, 2 usage).
int run(int argc, char** argv);

/// A concept corpus or a dot corpus, whichever the directory holds.
struct AnyCorpus {
  std::optional<Corpus> concepts;
  std::optional<DotCorpus> dots;

  std::uint64_t seed() const;
  std::vector<SplitRecord> records() const;
  Dataset dataset(std::span<const std::int64_t> ids) const;
  json provenance() const;  // kind, seed and generation config
};

AnyCorpus load_corpus(const std::filesystem::path& dir);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Training settings the repro recipes use for each architecture.
TrainConfig recipe_train_config(Architecture arch);

}  // namespace vquant::cli
