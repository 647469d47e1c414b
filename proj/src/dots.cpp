#include "vquant/dots.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iterator>

namespace vquant {

using nlohmann::json;

namespace {

constexpr std::array<std::uint8_t, 4> kImageMagic = {'V', 'Q', 'D', 'I'};
constexpr std::size_t kImageHeader = 4 + 4 * 4;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(in[at + static_cast<std::size_t>(b)]) << (8 * b);
  return v;
}

json render_to_json(const DotCorpusConfig& c) {
  return {{"height", c.render.height},       {"width", c.render.width},
          {"radius", c.render.radius},       {"gap", c.render.gap},
          {"max_attempts", c.render.max_attempts}, {"per_quantifier", c.per_quantifier},
          {"min_restrictor", c.min_restrictor},    {"max_restrictor", c.max_restrictor}};
}

DotCorpusConfig render_from_json(const json& j) {
  DotCorpusConfig c;
  c.render.height = j.at("height");
  c.render.width = j.at("width");
  c.render.radius = j.at("radius");
  c.render.gap = j.at("gap");
  c.render.max_attempts = j.at("max_attempts");
  c.per_quantifier = j.at("per_quantifier");
  c.min_restrictor = j.at("min_restrictor");
  c.max_restrictor = j.at("max_restrictor");
  return c;
}

}  // namespace

DotImage render_dots(int white, int black, const RenderConfig& cfg, Rng& rng) {
  if (white < 0 || black < 0 || white + black < 1) throw RenderError("need at least one dot and no negative counts");
  if (cfg.radius < 0 || cfg.gap < 0) throw RenderError("radius and gap must be non-negative");
  const int r = cfg.radius;
  if (cfg.height < 2 * r + 1 || cfg.width < 2 * r + 1) throw RenderError("frame smaller than one dot");

  const int n = white + black;
  const int min_sep = 2 * r + 1 + cfg.gap;
  std::uniform_int_distribution<int> cy(r, cfg.height - 1 - r);
  std::uniform_int_distribution<int> cx(r, cfg.width - 1 - r);
  std::vector<std::pair<int, int>> centers;
  int attempts = 0;
  while (static_cast<int>(centers.size()) < n) {
    if (++attempts > cfg.max_attempts) {
      throw RenderError("could not place " + std::to_string(n) + " dots of radius " + std::to_string(r) + " in " +
                        std::to_string(cfg.height) + "x" + std::to_string(cfg.width) + " after " +
                        std::to_string(cfg.max_attempts) + " attempts");
    }
    const int y = cy(rng), x = cx(rng);
    bool clear = true;
    for (const auto& [py, px] : centers) {
      const int dy = y - py, dx = x - px;
      if (dy * dy + dx * dx < min_sep * min_sep) {
        clear = false;
        break;
      }
    }
    if (clear) centers.emplace_back(y, x);
  }

  DotImage img;
  img.white = white;
  img.black = black;
  img.pixels = RowMatrix<double>::Constant(cfg.height, cfg.width, kBackground);
  for (int i = 0; i < n; ++i) {
    const auto [y0, x0] = centers[static_cast<std::size_t>(i)];
    const double v = i < white ? kWhite : kBlack;
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx)
        if (dy * dy + dx * dx <= r * r) img.pixels(y0 + dy, x0 + dx) = v;
  }
  return img;
}

DotImage render_dots(int white, int black, const RenderConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  return render_dots(white, black, config, rng);
}

DotCorpus generate_dot_corpus(const DotCorpusConfig& config, std::uint64_t seed) {
  if (config.per_quantifier < 1) throw RenderError("need at least one image per quantifier");
  DotCorpus c;
  c.config = config;
  c.seed = seed;
  std::array<std::vector<SetCounts>, kNumQuantifiers> feasible;
  for (auto q : kAllQuantifiers) {
    feasible[static_cast<std::size_t>(ordinal(q))] = feasible_counts(q, config.min_restrictor, config.max_restrictor);
    if (feasible[static_cast<std::size_t>(ordinal(q))].empty())
      throw RenderError("no feasible counts for " + std::string(to_string(q)));
  }
  const std::int64_t total = static_cast<std::int64_t>(config.per_quantifier) * kNumQuantifiers;
  c.datapoints.reserve(static_cast<std::size_t>(total));
  for (std::int64_t id = 0; id < total; ++id) {
    const Quantifier label = kAllQuantifiers[static_cast<std::size_t>(id % kNumQuantifiers)];
    Rng rng(derive_seed(derive_seed(seed, static_cast<std::uint64_t>(Stream::dots)), static_cast<std::uint64_t>(id)));
    const auto& options = feasible[static_cast<std::size_t>(ordinal(label))];
    const SetCounts sc = options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng)];
    c.datapoints.push_back({id, label, render_dots(sc.k, sc.m - sc.k, config.render, rng)});
  }
  return c;
}

std::vector<SplitRecord> split_records(const DotCorpus& corpus) {
  std::vector<SplitRecord> out;
  out.reserve(corpus.datapoints.size());
  for (const auto& d : corpus.datapoints) out.push_back({d.id, d.label, {-1, -1}, {}});
  return out;
}

Example make_example(const DotDatapoint& d) {
  Example e;
  e.id = d.id;
  e.label = d.label;
  e.counts = d.image.counts();
  e.visual = Tensor<double>::from_matrix(d.image.pixels);
  return e;
}

Dataset make_dataset(const DotCorpus& corpus, std::span<const std::int64_t> ids) {
  Dataset ds;
  ds.examples.reserve(ids.size());
  for (auto id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= corpus.datapoints.size() ||
        corpus.datapoints[static_cast<std::size_t>(id)].id != id)
      throw std::out_of_range("no dot image with id " + std::to_string(id));
    ds.examples.push_back(make_example(corpus.datapoints[static_cast<std::size_t>(id)]));
  }
  return ds;
}

std::vector<std::uint8_t> encode_image(const DotImage& image) {
  std::vector<std::uint8_t> out(kImageMagic.begin(), kImageMagic.end());
  put_u32(out, static_cast<std::uint32_t>(image.pixels.rows()));
  put_u32(out, static_cast<std::uint32_t>(image.pixels.cols()));
  put_u32(out, static_cast<std::uint32_t>(image.white));
  put_u32(out, static_cast<std::uint32_t>(image.black));
  const auto* p = image.pixels.data();
  for (Eigen::Index i = 0; i < image.pixels.size(); ++i)
    out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(p[i], 0.0, 1.0) * 254.0)));
  return out;
}

DotImage decode_image(std::span<const std::uint8_t> bytes, std::size_t* consumed) {
  if (bytes.size() < kImageHeader || !std::equal(kImageMagic.begin(), kImageMagic.end(), bytes.begin()))
    throw RenderError("not a dot image");
  const std::uint32_t h = get_u32(bytes, 4), w = get_u32(bytes, 8);
  const std::size_t n = static_cast<std::size_t>(h) * w;
  if (h == 0 || w == 0 || bytes.size() < kImageHeader + n) throw RenderError("truncated dot image");
  DotImage img;
  img.white = static_cast<int>(get_u32(bytes, 12));
  img.black = static_cast<int>(get_u32(bytes, 16));
  img.pixels.resize(h, w);
  for (std::size_t i = 0; i < n; ++i) img.pixels.data()[i] = bytes[kImageHeader + i] / 254.0;
  if (consumed) *consumed = kImageHeader + n;
  return img;
}

void write_dot_corpus(const DotCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream bin(dir / "images.bin", std::ios::binary | std::ios::trunc);
  std::ofstream idx(dir / "dots.jsonl", std::ios::trunc);
  if (!bin || !idx) throw RenderError("cannot write dot corpus to " + dir.string());
  idx << json{{"format", "vquant-dots"},
              {"version", 1},
              {"seed", corpus.seed},
              {"config", render_to_json(corpus.config)},
              {"images", corpus.datapoints.size()}}
             .dump()
      << '\n';
  std::uint64_t offset = 0;
  for (const auto& d : corpus.datapoints) {
    const auto bytes = encode_image(d.image);
    bin.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    idx << json{{"id", d.id},
                {"label", std::string(to_string(d.label))},
                {"m", d.image.white + d.image.black},
                {"k", d.image.white},
                {"offset", offset}}
               .dump()
        << '\n';
    offset += bytes.size();
  }
}

DotCorpus read_dot_corpus(const std::filesystem::path& dir) {
  std::ifstream idx(dir / "dots.jsonl");
  std::ifstream bin(dir / "images.bin", std::ios::binary);
  if (!idx || !bin) throw RenderError("cannot read dot corpus in " + dir.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
  std::string line;
  if (!std::getline(idx, line)) throw RenderError("empty dots.jsonl");
  const json header = json::parse(line);
  if (header.value("format", "") != "vquant-dots") throw RenderError("not a dot corpus index");
  DotCorpus c;
  c.seed = header.at("seed");
  c.config = render_from_json(header.at("config"));
  while (std::getline(idx, line)) {
    if (line.empty()) continue;
    const json rec = json::parse(line);
    const std::size_t offset = rec.at("offset");
    if (offset >= bytes.size()) throw RenderError("image offset past end of images.bin");
    DotDatapoint d;
    d.id = rec.at("id");
    d.label = parse_quantifier(rec.at("label").get<std::string>());
    d.image = decode_image(std::span(bytes).subspan(offset));
    if (d.image.white != rec.at("k").get<int>() || d.image.white + d.image.black != rec.at("m").get<int>())
      throw RenderError("record " + std::to_string(d.id) + " disagrees with its image header");
    if (d.image.label() != d.label) throw RenderError("record " + std::to_string(d.id) + " label disagrees with counts");
    c.datapoints.push_back(std::move(d));
  }
  return c;
}

}  // namespace vquant
