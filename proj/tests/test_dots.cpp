#include "doctest.h"
#include "generators.hpp"

#include "vquant/dots.hpp"
#include "vquant/ops.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <set>

using namespace vquant;

namespace {

// 4-connected components of pixels equal to `value`, with their sizes.
std::vector<int> components(const RowMatrix<double>& px, double value) {
  const auto H = px.rows(), W = px.cols();
  std::vector<char> seen(static_cast<std::size_t>(H * W), 0);
  std::vector<int> sizes;
  for (Eigen::Index y0 = 0; y0 < H; ++y0)
    for (Eigen::Index x0 = 0; x0 < W; ++x0) {
      if (px(y0, x0) != value || seen[static_cast<std::size_t>(y0 * W + x0)]) continue;
      int size = 0;
      std::vector<std::pair<Eigen::Index, Eigen::Index>> stack{{y0, x0}};
      seen[static_cast<std::size_t>(y0 * W + x0)] = 1;
      while (!stack.empty()) {
        auto [y, x] = stack.back();
        stack.pop_back();
        ++size;
        const std::array<std::pair<int, int>, 4> steps = {{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
        for (auto [dy, dx] : steps) {
          const auto ny = y + dy, nx = x + dx;
          if (ny < 0 || nx < 0 || ny >= H || nx >= W) continue;
          auto& s = seen[static_cast<std::size_t>(ny * W + nx)];
          if (!s && px(ny, nx) == value) {
            s = 1;
            stack.emplace_back(ny, nx);
          }
        }
      }
      sizes.push_back(size);
    }
  return sizes;
}

std::set<double> distinct(const RowMatrix<double>& px) { return {px.data(), px.data() + px.size()}; }

}  // namespace

TEST_CASE("an image with no white dots has no white pixels") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto img = render_dots(0, 8, RenderConfig{}, s);
    CHECK((img.pixels.array() == kWhite).count() == 0);
    CHECK(img.label() == Quantifier::no);
  }
}

TEST_CASE("pixels take exactly the three intended values") {
  const auto img = render_dots(5, 7, RenderConfig{}, 1);
  CHECK(distinct(img.pixels) == std::set<double>{kBlack, kBackground, kWhite});
  CHECK(distinct(render_dots(4, 0, RenderConfig{}, 2).pixels) == std::set<double>{kBackground, kWhite});
}

TEST_CASE("every dot is a separate blob of disc area") {
  auto r = gen::rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    RenderConfig cfg;
    cfg.radius = gen::integer(r, 1, 4);
    const int m = gen::integer(r, 1, 16), k = gen::integer(r, 0, m);
    const auto img = render_dots(k, m - k, cfg, static_cast<std::uint64_t>(trial));
    const auto white = components(img.pixels, kWhite), black = components(img.pixels, kBlack);
    CHECK(static_cast<int>(white.size()) == k);
    CHECK(static_cast<int>(black.size()) == m - k);
    const double disc = std::numbers::pi * cfg.radius * cfg.radius;
    for (const auto& blobs : {white, black})
      for (int a : blobs) CHECK(std::abs(a - disc) <= 0.15 * disc + 4.0 / cfg.radius);
    // all blobs of one image have the same raster shape
    std::set<int> areas(white.begin(), white.end());
    areas.insert(black.begin(), black.end());
    CHECK(areas.size() <= 1u);
  }
}

TEST_CASE("radius-3 dots are within 15% of the disc area") {
  const auto img = render_dots(1, 0, RenderConfig{}, 9);
  const auto blobs = components(img.pixels, kWhite);
  REQUIRE(blobs.size() == 1u);
  CHECK(std::abs(blobs[0] - 9 * std::numbers::pi) / (9 * std::numbers::pi) <= 0.15);
}

TEST_CASE("dots stay inside the frame and keep their distance") {
  // with gap g no two blobs touch, even diagonally
  const auto img = render_dots(8, 8, RenderConfig{32, 32, 2, 1, 100000}, 4);
  RowMatrix<double> ink = (img.pixels.array() != kBackground).cast<double>();
  const auto blobs = components(ink, 1.0);
  CHECK(blobs.size() == 16u);
  // a clipped dot would lose pixels; a radius-2 disc has 13
  for (int a : blobs) CHECK(a == 13);
  CHECK_THROWS_AS(render_dots(40, 40, RenderConfig{16, 16, 3, 1, 500}, 0), RenderError);
  CHECK_THROWS_AS(render_dots(0, 0, RenderConfig{}, 0), RenderError);
  CHECK_THROWS_AS(render_dots(-1, 3, RenderConfig{}, 0), RenderError);
  CHECK_THROWS_AS(render_dots(1, 0, RenderConfig{4, 4, 3, 1, 10}, 0), RenderError);
}

TEST_CASE("dot corpora are balanced, labelled by their counts and deterministic") {
  DotCorpusConfig cfg;
  cfg.per_quantifier = 30;
  const auto a = generate_dot_corpus(cfg, 12);
  const auto b = generate_dot_corpus(cfg, 12);
  std::array<int, kNumQuantifiers> n{};
  for (std::size_t i = 0; i < a.datapoints.size(); ++i) {
    const auto& d = a.datapoints[i];
    ++n[static_cast<std::size_t>(ordinal(d.label))];
    CHECK(d.image.label() == d.label);
    const int m = d.image.white + d.image.black;
    CHECK(m >= 6);
    CHECK(m <= 16);
    CHECK(d.image.pixels == b.datapoints[i].image.pixels);
  }
  for (int c : n) CHECK(c == 30);
  CHECK(generate_dot_corpus(cfg, 13).datapoints[0].image.pixels != a.datapoints[0].image.pixels);
}

TEST_CASE("image bytes round-trip exactly") {
  const auto img = render_dots(3, 9, RenderConfig{}, 5);
  const auto bytes = encode_image(img);
  CHECK(bytes.size() == 20u + 64u * 64u);
  std::size_t used = 0;
  const auto back = decode_image(bytes, &used);
  CHECK(used == bytes.size());
  CHECK(back.pixels == img.pixels);
  CHECK(back.white == 3);
  CHECK(back.black == 9);
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_image(bad), RenderError);
  bad = bytes;
  bad.resize(100);
  CHECK_THROWS_AS(decode_image(bad), RenderError);
}

TEST_CASE("dot corpora round-trip through disk") {
  DotCorpusConfig cfg;
  cfg.per_quantifier = 4;
  cfg.render.height = cfg.render.width = 40;
  cfg.render.radius = 2;
  const auto a = generate_dot_corpus(cfg, 3);
  const auto dir = std::filesystem::temp_directory_path() / "vquant_test_dots";
  std::filesystem::remove_all(dir);
  write_dot_corpus(a, dir);
  const auto b = read_dot_corpus(dir);
  CHECK(b.seed == 3u);
  CHECK(b.config.render.height == 40);
  CHECK(b.config.per_quantifier == 4);
  REQUIRE(b.datapoints.size() == a.datapoints.size());
  for (std::size_t i = 0; i < a.datapoints.size(); ++i) {
    CHECK(b.datapoints[i].label == a.datapoints[i].label);
    CHECK(b.datapoints[i].image.pixels == a.datapoints[i].image.pixels);
  }
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(read_dot_corpus(dir), RenderError);
}

TEST_CASE("dot datasets carry the raster and counts") {
  DotCorpusConfig cfg;
  cfg.per_quantifier = 2;
  const auto c = generate_dot_corpus(cfg, 1);
  const std::vector<std::int64_t> ids = {3, 0};
  const auto ds = make_dataset(c, ids);
  REQUIRE(ds.size() == 2u);
  CHECK(ds.examples[0].id == 3);
  CHECK(ds.examples[0].visual.shape() == Shape{64, 64});
  CHECK(ds.examples[0].counts == c.datapoints[3].image.counts());
  CHECK(ds.examples[0].restrictor == -1);
  CHECK(ds.object_vectors.size() == 0);
  const std::vector<std::int64_t> missing = {99};
  CHECK_THROWS_AS(make_dataset(c, missing), std::out_of_range);
  for (const auto& r : split_records(c)) CHECK(r.query.object == -1);
}

TEST_CASE("a flat image gives a flat response map") {
  auto r = gen::rng(8);
  const auto K = Var<double>::constant(gen::tensor(r, {4, 5, 5}));
  const auto b = Var<double>::constant(gen::tensor(r, {4}));
  const auto out = conv2d(Var<double>::constant(Tensor<double>::from_matrix(RowMatrix<double>::Constant(20, 20, kBackground))), K, b, 2).value();
  for (Eigen::Index f = 0; f < 4; ++f) {
    const double expected = kBackground * K.value().matrix().row(f).sum() + b.value()[f];
    const auto map = out.matrix().row(f);
    CHECK((map.array() - expected).abs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("shifting the image by the stride shifts the response by one cell") {
  auto r = gen::rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const int stride = gen::integer(r, 1, 3), R = gen::integer(r, 1, 5);
    const auto K = Var<double>::constant(gen::tensor(r, {2, R, R}));
    const auto b = Var<double>::constant(gen::tensor(r, {2}));
    const Tensor<double> img = gen::tensor(r, {24, 24});
    // shifted(y, x) = img(y + stride, x + stride): cropped view moved up-left by one stride
    RowMatrix<double> shifted = RowMatrix<double>::Zero(24, 24);
    shifted.topLeftCorner(24 - stride, 24 - stride) = img.matrix().bottomRightCorner(24 - stride, 24 - stride);
    const auto a = conv2d(Var<double>::constant(img), K, b, stride).value();
    const auto s = conv2d(Var<double>::constant(Tensor<double>::from_matrix(shifted)), K, b, stride).value();
    const auto Ho = a.dim(1), Wo = a.dim(2);
    double worst = 0;
    for (Eigen::Index f = 0; f < 2; ++f)
      for (Eigen::Index y = 0; y + 1 < Ho; ++y)
        for (Eigen::Index x = 0; x + 1 < Wo; ++x) {
          // only cells whose window stays inside the copied region
          if ((y + 1) * stride + R > 24 || (x + 1) * stride + R > 24) continue;
          if (y * stride + R > 24 - stride || x * stride + R > 24 - stride) continue;
          worst = std::max(worst, std::abs(s[(f * Ho + y) * Wo + x] - a[(f * Ho + y + 1) * Wo + x + 1]));
        }
    CHECK(worst < 1e-12);
  }
}
