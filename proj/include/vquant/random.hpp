#pragma once

#include <cstdint>
#include <random>

namespace vquant {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; decorrelates a base seed from a stream index.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Stream ids for the independent random sources of a run.
enum class Stream : std::uint64_t {
  catalog = 1,
  embeddings = 2,
  corpus = 3,
  split = 4,
  init = 5,
  shuffle = 6,
  dots = 7,
};

inline Rng make_rng(std::uint64_t base, Stream s) {
  return Rng(derive_seed(base, static_cast<std::uint64_t>(s)));
}

}  // namespace vquant
