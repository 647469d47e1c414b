#pragma once

#include "vquant/dataset.hpp"
#include "vquant/quantifier.hpp"
#include "vquant/random.hpp"
#include "vquant/splits.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

namespace vquant {

class RenderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kBackground = 0.5;
inline constexpr double kWhite = 1.0;
inline constexpr double kBlack = 0.0;

/// Gray raster with k white dots (restrictor ∩ scope) and m - k black ones.
struct DotImage {
  RowMatrix<double> pixels;  // [H x W], values in {0, .5, 1}
  int white = 0;
  int black = 0;

  SetCounts counts() const { return {white + black, white}; }
  Quantifier label() const { return quantize_ratio(counts()); }
};

struct RenderConfig {
  int height = 64;
  int width = 64;
  int radius = 3;
  int gap = 1;  // background pixels kept between neighbouring dots
  int max_attempts = 10000;
};

/**
 * Places dots with integer centers by rejection sampling. A dot covers the
 * pixels within `radius` of its center; dots lie fully inside the frame and
 * centers are at least 2 * radius + 1 + gap apart.
 */
DotImage render_dots(int white, int black, const RenderConfig& config, Rng& rng);
DotImage render_dots(int white, int black, const RenderConfig& config, std::uint64_t seed);

struct DotCorpusConfig {
  RenderConfig render;
  int per_quantifier = 1500;
  int min_restrictor = 6;
  int max_restrictor = 16;
};

struct DotDatapoint {
  std::int64_t id = 0;
  Quantifier label = Quantifier::no;
  DotImage image;
};

struct DotCorpus {
  DotCorpusConfig config;
  std::uint64_t seed = 0;
  std::vector<DotDatapoint> datapoints;
};

/// Exactly per_quantifier images per label; (m, k) uniform over the label's feasible pairs.
DotCorpus generate_dot_corpus(const DotCorpusConfig& config, std::uint64_t seed);

std::vector<SplitRecord> split_records(const DotCorpus& corpus);
Example make_example(const DotDatapoint& d);
Dataset make_dataset(const DotCorpus& corpus, std::span<const std::int64_t> ids);

// One image on disk: "VQDI" | u32 H | u32 W | u32 white | u32 black | H*W bytes,
// little-endian, pixel byte = round(v * 254) so that gray is exactly 127.
std::vector<std::uint8_t> encode_image(const DotImage& image);
DotImage decode_image(std::span<const std::uint8_t> bytes, std::size_t* consumed = nullptr);

// dots.jsonl (header, then one record per image) and images.bin.
void write_dot_corpus(const DotCorpus& corpus, const std::filesystem::path& dir);
DotCorpus read_dot_corpus(const std::filesystem::path& dir);

}  // namespace vquant
