#include "vquant/world.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <fstream>
#include <map>

namespace vquant {

using nlohmann::json;

const Datapoint& Corpus::by_id(std::int64_t id) const {
  // Ids are dense and ordered as generated.
  if (id >= 0 && static_cast<std::size_t>(id) < datapoints.size() &&
      datapoints[static_cast<std::size_t>(id)].id == id) {
    return datapoints[static_cast<std::size_t>(id)];
  }
  auto it = std::find_if(datapoints.begin(), datapoints.end(), [id](const auto& d) { return d.id == id; });
  if (it == datapoints.end()) throw std::out_of_range("no datapoint with id " + std::to_string(id));
  return *it;
}

std::vector<Datapoint> generate_datapoints(int per_quantifier, const Catalog& catalog,
                                           const InstanceSampler& sampler,
                                           const ScenarioConfig& config, std::uint64_t seed) {
  if (per_quantifier < 1) throw GenerationError("need at least one datapoint per quantifier");
  const auto queries = catalog.plausible_queries();
  if (queries.empty()) throw GenerationError("catalog has no plausible queries");
  Rng rng = make_rng(seed, Stream::corpus);
  std::uniform_int_distribution<std::size_t> pick_query(0, queries.size() - 1);
  std::vector<Datapoint> out;
  out.reserve(static_cast<std::size_t>(per_quantifier) * kNumQuantifiers);
  const std::int64_t total = static_cast<std::int64_t>(per_quantifier) * kNumQuantifiers;
  for (std::int64_t id = 0; id < total; ++id) {
    const Quantifier label = kAllQuantifiers[static_cast<std::size_t>(id % kNumQuantifiers)];
    const Query q = queries[pick_query(rng)];
    out.push_back(assemble_scenario(q, label, catalog, sampler, config,
                                    derive_seed(seed, 1000 + static_cast<std::uint64_t>(id)), id));
  }
  return out;
}

Corpus generate_corpus(const CorpusConfig& config, std::uint64_t seed) {
  Corpus c;
  c.config = config;
  c.seed = seed;
  c.catalog = make_catalog(config.catalog, seed);
  c.words = synth_embeddings(c.catalog, config.embedding, seed);
  const InstanceSampler sampler(c.words, config.embedding.sigma);
  c.datapoints = generate_datapoints(config.per_quantifier, c.catalog, sampler, config.scenario, seed);
  return c;
}

namespace {

BoxStats box_stats(std::vector<double> v) {
  BoxStats b;
  if (v.empty()) return b;
  std::sort(v.begin(), v.end());
  auto quantile = [&v](double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  b.min = v.front();
  b.q1 = quantile(0.25);
  b.median = quantile(0.5);
  b.q3 = quantile(0.75);
  b.max = v.back();
  return b;
}

}  // namespace

BiasReport audit_bias(std::span<const LabeledQuery> records) {
  std::map<Query, std::array<int, kNumQuantifiers>> tally;
  for (const auto& r : records) ++tally[r.query][static_cast<std::size_t>(ordinal(r.label))];
  BiasReport report;
  std::array<std::vector<double>, kNumQuantifiers> per_label;
  for (const auto& [q, counts] : tally) {
    QueryBias qb;
    qb.query = q;
    for (int c : counts) qb.count += c;
    for (std::size_t l = 0; l < kNumQuantifiers; ++l) {
      qb.ratio[l] = static_cast<double>(counts[l]) / qb.count;
      per_label[l].push_back(qb.ratio[l]);
      report.max_ratio = std::max(report.max_ratio, qb.ratio[l]);
    }
    report.queries.push_back(qb);
  }
  for (std::size_t l = 0; l < kNumQuantifiers; ++l) {
    auto& s = report.labels[l];
    const auto& v = per_label[l];
    if (v.empty()) continue;
    double total = 0;
    for (double x : v) total += x;
    s.mean = total / static_cast<double>(v.size());
    s.box = box_stats(v);
    s.min = s.box.min;
    s.max = s.box.max;
  }
  return report;
}

BiasReport audit_bias(const Corpus& corpus) {
  std::vector<LabeledQuery> records;
  records.reserve(corpus.datapoints.size());
  for (const auto& d : corpus.datapoints) records.push_back({d.query, d.label});
  return audit_bias(records);
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json config_to_json(const CorpusConfig& c) {
  return {{"objects", c.catalog.objects},
          {"properties", c.catalog.properties},
          {"mean_plausible", c.catalog.mean_plausible},
          {"topics", c.catalog.topics},
          {"unseen_fraction", c.catalog.unseen_fraction},
          {"dim", c.embedding.dim},
          {"sigma", c.embedding.sigma},
          {"offset", c.embedding.offset},
          {"slots", c.scenario.slots},
          {"min_restrictor", c.scenario.min_restrictor},
          {"max_instance_properties", c.scenario.max_instance_properties},
          {"per_quantifier", c.per_quantifier}};
}

CorpusConfig config_from_json(const json& j) {
  CorpusConfig c;
  c.catalog.objects = j.at("objects");
  c.catalog.properties = j.at("properties");
  c.catalog.mean_plausible = j.at("mean_plausible");
  c.catalog.topics = j.at("topics");
  c.catalog.unseen_fraction = j.at("unseen_fraction");
  c.embedding.dim = j.at("dim");
  c.embedding.sigma = j.at("sigma");
  c.embedding.offset = j.at("offset");
  c.scenario.slots = j.at("slots");
  c.scenario.min_restrictor = j.at("min_restrictor");
  c.scenario.max_instance_properties = j.at("max_instance_properties");
  c.per_quantifier = j.at("per_quantifier");
  return c;
}

void put_f32(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(b, 4);
}

class VectorWriter {
 public:
  explicit VectorWriter(std::ostream& out) : out_(out) {}
  /// Writes the matrix row-major; returns the float offset of its first element.
  std::int64_t write(const Eigen::MatrixXd& m) {
    const auto at = offset_;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) put_f32(out_, m(r, c));
    }
    offset_ += m.size();
    return at;
  }

 private:
  std::ostream& out_;
  std::int64_t offset_ = 0;
};

Eigen::MatrixXd read_block(const std::vector<float>& floats, std::int64_t offset, Eigen::Index rows,
                           Eigen::Index cols) {
  if (offset < 0 || offset + rows * cols > static_cast<std::int64_t>(floats.size())) {
    throw GenerationError("vector offset outside vectors.f32");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = floats[static_cast<std::size_t>(offset + r * cols + c)];
    }
  }
  // float32 storage loses ~1e-7 of the unit norm; restore it
  m.rowwise().normalize();
  return m;
}

std::vector<float> read_floats(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw GenerationError("cannot read " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % 4 != 0) throw GenerationError("vectors.f32 length is not a multiple of 4");
  std::vector<float> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[4 * i + static_cast<std::size_t>(b)]) << (8 * b);
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

}  // namespace

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream vec(dir / "vectors.f32", std::ios::binary | std::ios::trunc);
  std::ofstream idx(dir / "corpus.jsonl", std::ios::trunc);
  if (!vec || !idx) throw GenerationError("cannot write corpus to " + dir.string());
  VectorWriter writer(vec);

  json header = {{"format", "vquant-corpus"},
                 {"version", 1},
                 {"seed", corpus.seed},
                 {"config", config_to_json(corpus.config)},
                 {"dim", corpus.words.dim()},
                 {"slots", corpus.config.scenario.slots},
                 {"datapoints", corpus.datapoints.size()},
                 {"object_vectors_offset", writer.write(corpus.words.objects)},
                 {"property_vectors_offset", writer.write(corpus.words.properties)}};
  idx << header.dump() << '\n';

  for (const auto& d : corpus.datapoints) {
    json slots = json::array();
    for (const auto& s : d.scenario.slots) slots.push_back({{"object", s.object}, {"properties", s.properties}});
    json rec = {{"id", d.id},
                {"restrictor", d.query.object},
                {"scope", d.query.property},
                {"label", std::string(to_string(d.label))},
                {"m", d.counts.m},
                {"k", d.counts.k},
                {"distractors_with_scope", d.distractors_with_scope},
                {"slots", slots},
                {"offset", writer.write(d.scenario.embeddings)}};
    idx << rec.dump() << '\n';
  }

  const auto& cat = corpus.catalog;
  json cj = {{"objects", cat.object_names},
             {"properties", cat.property_names},
             {"plausible", cat.plausible},
             {"frequency", cat.frequency},
             {"corpus_size", cat.corpus_size}};
  json cooc = json::array();
  for (Eigen::Index r = 0; r < cat.cooccurrence.rows(); ++r) {
    std::vector<std::int64_t> row(static_cast<std::size_t>(cat.cooccurrence.cols()));
    for (Eigen::Index c = 0; c < cat.cooccurrence.cols(); ++c) row[static_cast<std::size_t>(c)] = cat.cooccurrence(r, c);
    cooc.push_back(row);
  }
  cj["cooccurrence"] = cooc;
  std::ofstream(dir / "catalog.json", std::ios::trunc) << cj.dump() << '\n';
}

Corpus read_corpus(const std::filesystem::path& dir) {
  std::ifstream idx(dir / "corpus.jsonl");
  if (!idx) throw GenerationError("cannot read " + (dir / "corpus.jsonl").string());
  const auto floats = read_floats(dir / "vectors.f32");
  std::string line;
  if (!std::getline(idx, line)) throw GenerationError("empty corpus index");
  const json header = json::parse(line);
  if (header.value("format", "") != "vquant-corpus") throw GenerationError("not a vquant corpus index");

  Corpus c;
  c.seed = header.at("seed");
  c.config = config_from_json(header.at("config"));
  const int dim = header.at("dim");
  const int slots = header.at("slots");

  std::ifstream cat_in(dir / "catalog.json");
  if (!cat_in) throw GenerationError("cannot read catalog.json");
  const json cj = json::parse(cat_in);
  auto& cat = c.catalog;
  cat.object_names = cj.at("objects").get<std::vector<std::string>>();
  cat.property_names = cj.at("properties").get<std::vector<std::string>>();
  cat.plausible = cj.at("plausible").get<std::vector<std::vector<int>>>();
  cat.frequency = cj.at("frequency").get<std::vector<std::int64_t>>();
  cat.corpus_size = cj.at("corpus_size");
  const auto cooc = cj.at("cooccurrence").get<std::vector<std::vector<std::int64_t>>>();
  cat.cooccurrence.resize(cat.num_objects(), cat.num_objects());
  for (int r = 0; r < cat.num_objects(); ++r) {
    for (int col = 0; col < cat.num_objects(); ++col) {
      cat.cooccurrence(r, col) = cooc.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(col));
    }
  }
  cat.validate();

  c.words.objects = read_block(floats, header.at("object_vectors_offset"), cat.num_objects(), dim);
  c.words.properties = read_block(floats, header.at("property_vectors_offset"), cat.num_properties(), dim);

  while (std::getline(idx, line)) {
    if (line.empty()) continue;
    const json rec = json::parse(line);
    Datapoint d;
    d.id = rec.at("id");
    d.query = {rec.at("restrictor"), rec.at("scope")};
    d.label = parse_quantifier(rec.at("label").get<std::string>());
    d.counts = {rec.at("m"), rec.at("k")};
    d.distractors_with_scope = rec.at("distractors_with_scope");
    for (const auto& s : rec.at("slots")) {
      d.scenario.slots.push_back({s.at("object"), s.at("properties").get<std::vector<int>>()});
    }
    if (static_cast<int>(d.scenario.slots.size()) != slots) throw GenerationError("slot count mismatch in record");
    d.scenario.embeddings = read_block(floats, rec.at("offset"), slots, dim);
    if (quantize_ratio(d.counts) != d.label) {
      throw GenerationError("record " + std::to_string(d.id) + " label disagrees with its counts");
    }
    c.datapoints.push_back(std::move(d));
  }
  return c;
}

}  // namespace vquant
