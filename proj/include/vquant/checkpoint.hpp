#pragma once

#include "vquant/autodiff.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace vquant {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Named, ordered collection of trainable tensors owned by a model.
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    Var<double> var;
  };

  Var<double> add(std::string name, Tensor<double> init);

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Var<double>> vars() const;
  const Var<double>& at(const std::string& name) const;

  std::size_t scalar_count() const;
  void zero_grad();

 private:
  std::vector<Entry> entries_;
};

struct NamedTensor {
  std::string name;
  Tensor<double> tensor;
};

/**
 * On-disk layout, all integers little-endian uint32, reals little-endian IEEE
 * binary64:
 *
 *   "VQCK" | version | tensor count | metadata length | metadata bytes
 *   per tensor: name length | name bytes | rank | dims... | values...
 *
 * Metadata is free text (the models layer stores key=value lines).
 */
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::string metadata;
  std::vector<NamedTensor> tensors;

  static Checkpoint capture(const ParameterSet& params, std::string metadata);
  /// Copies stored values into matching parameters; names and shapes must agree.
  void restore(ParameterSet& params) const;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace vquant
