#include "vquant/splits.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace vquant {

using nlohmann::json;

std::string_view to_string(Setting s) {
  switch (s) {
    case Setting::unc: return "UNC";
    case Setting::uns_obj: return "UnsObj";
    case Setting::uns_prop: return "UnsProp";
    case Setting::uns_que: return "UnsQue";
  }
  return "?";
}

Setting parse_setting(std::string_view name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "unc") return Setting::unc;
  if (lower == "unsobj") return Setting::uns_obj;
  if (lower == "unsprop") return Setting::uns_prop;
  if (lower == "unsque") return Setting::uns_que;
  throw std::invalid_argument("unknown setting '" + std::string(name) + "' (UNC|UnsObj|UnsProp|UnsQue)");
}

void SplitSpec::validate() const {
  if (train <= 0 || val <= 0 || test <= 0) throw SplitError("split fractions must be positive");
  if (std::abs(train + val + test - 1.0) > 1e-9) throw SplitError("split fractions must sum to 1");
}

std::vector<SplitRecord> split_records(const Corpus& corpus) {
  std::vector<SplitRecord> out;
  out.reserve(corpus.datapoints.size());
  for (const auto& d : corpus.datapoints) {
    SplitRecord r{d.id, d.label, d.query, {}};
    for (const auto& s : d.scenario.slots) r.slot_objects.push_back(s.object);
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

using Ids = std::vector<std::int64_t>;

std::size_t ceil_fraction(std::size_t n, double fraction) {
  return static_cast<std::size_t>(std::ceil(static_cast<double>(n) * fraction - 1e-9));
}

/// Groups ids by label in shuffled order, each group truncated to the smallest.
std::array<Ids, kNumQuantifiers> balanced_groups(std::span<const SplitRecord> records,
                                                  const std::vector<std::size_t>& pool, Rng& rng) {
  std::array<Ids, kNumQuantifiers> groups;
  for (auto i : pool) groups[static_cast<std::size_t>(ordinal(records[i].label))].push_back(records[i].id);
  std::size_t n = groups[0].size();
  for (auto& g : groups) {
    std::shuffle(g.begin(), g.end(), rng);
    n = std::min(n, g.size());
  }
  for (auto& g : groups) g.resize(n);
  return groups;
}

void append_sorted(Ids& dst, Ids src) {
  dst.insert(dst.end(), src.begin(), src.end());
  std::sort(dst.begin(), dst.end());
}

/// Splits a held-out pool into equal val and test halves, per label (odd leftovers go to test).
void fill_heldout(std::span<const SplitRecord> records, const std::vector<std::size_t>& pool, Rng& rng,
                  Split& out) {
  auto groups = balanced_groups(records, pool, rng);
  for (auto& g : groups) {
    const auto n_val = g.size() / 2;
    append_sorted(out.val, Ids(g.begin(), g.begin() + static_cast<std::ptrdiff_t>(n_val)));
    append_sorted(out.test, Ids(g.begin() + static_cast<std::ptrdiff_t>(n_val), g.end()));
  }
}

void fill_train(std::span<const SplitRecord> records, const std::vector<std::size_t>& pool, Rng& rng,
                Split& out) {
  for (auto& g : balanced_groups(records, pool, rng)) append_sorted(out.train, std::move(g));
}

template <typename T>
std::pair<std::set<T>, std::set<T>> split_vocabulary(std::set<T> vocab, double train_fraction, Rng& rng,
                                                     const char* what) {
  if (vocab.size() < 2) throw SplitError(std::string("too few ") + what + " to split");
  std::vector<T> v(vocab.begin(), vocab.end());
  std::shuffle(v.begin(), v.end(), rng);
  const auto n_train = std::min(ceil_fraction(v.size(), train_fraction), v.size() - 1);
  return {std::set<T>(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n_train)),
          std::set<T>(v.begin() + static_cast<std::ptrdiff_t>(n_train), v.end())};
}

}  // namespace

Split make_split(std::span<const SplitRecord> records, const SplitSpec& spec) {
  spec.validate();
  if (records.empty()) throw SplitError("cannot split an empty corpus");
  Rng rng = make_rng(spec.seed, Stream::split);
  Split out;
  out.spec = spec;

  std::vector<std::size_t> all(records.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

  if (spec.setting == Setting::unc) {
    for (auto& g : balanced_groups(records, all, rng)) {
      const auto n = g.size();
      const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.train));
      const auto n_val = std::min(n - n_train, static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.val)));
      auto b = g.begin();
      append_sorted(out.train, Ids(b, b + static_cast<std::ptrdiff_t>(n_train)));
      append_sorted(out.val, Ids(b + static_cast<std::ptrdiff_t>(n_train), b + static_cast<std::ptrdiff_t>(n_train + n_val)));
      append_sorted(out.test, Ids(b + static_cast<std::ptrdiff_t>(n_train + n_val), g.end()));
    }
  } else {
    std::vector<std::size_t> train_pool, heldout_pool;
    if (spec.setting == Setting::uns_obj) {
      std::set<int> vocab;
      for (const auto& r : records) vocab.insert(r.query.object);
      auto [seen, held] = split_vocabulary(vocab, spec.train, rng, "objects");
      out.heldout_objects.assign(held.begin(), held.end());
      for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (held.count(r.query.object)) {
          heldout_pool.push_back(i);
        } else if (!spec.exclude_heldout_distractors ||
                   std::none_of(r.slot_objects.begin(), r.slot_objects.end(),
                                [&](int o) { return held.count(o) > 0; })) {
          train_pool.push_back(i);
        }
      }
    } else if (spec.setting == Setting::uns_prop) {
      std::set<int> vocab;
      for (const auto& r : records) vocab.insert(r.query.property);
      auto [seen, held] = split_vocabulary(vocab, spec.train, rng, "properties");
      out.heldout_properties.assign(held.begin(), held.end());
      for (std::size_t i = 0; i < records.size(); ++i) {
        (held.count(records[i].query.property) ? heldout_pool : train_pool).push_back(i);
      }
    } else {
      std::set<Query> vocab;
      for (const auto& r : records) vocab.insert(r.query);
      auto [seen, held] = split_vocabulary(vocab, spec.train, rng, "queries");
      // A held-out pair whose object or property never occurs in a training
      // pair cannot test composition; such pairs move to train until stable.
      for (bool moved = true; moved;) {
        moved = false;
        std::set<int> objs, props;
        for (const auto& q : seen) {
          objs.insert(q.object);
          props.insert(q.property);
        }
        for (auto it = held.begin(); it != held.end();) {
          if (!objs.count(it->object) || !props.count(it->property)) {
            seen.insert(*it);
            it = held.erase(it);
            moved = true;
          } else {
            ++it;
          }
        }
      }
      if (held.empty()) throw SplitError("no object-property pair can be held out");
      out.heldout_queries.assign(held.begin(), held.end());
      for (std::size_t i = 0; i < records.size(); ++i) {
        (held.count(records[i].query) ? heldout_pool : train_pool).push_back(i);
      }
    }
    if (train_pool.empty() || heldout_pool.empty()) throw SplitError("a partition would be empty");
    fill_train(records, train_pool, rng, out);
    fill_heldout(records, heldout_pool, rng, out);
  }
  if (out.train.empty() || out.val.empty() || out.test.empty()) {
    throw SplitError("split produced an empty partition");
  }
  return out;
}

Split make_split(const Corpus& corpus, const SplitSpec& spec) {
  return make_split(split_records(corpus), spec);
}

std::vector<std::string> check_split(std::span<const SplitRecord> records, const Split& split) {
  std::vector<std::string> problems;
  std::unordered_map<std::int64_t, const SplitRecord*> by_id;
  for (const auto& r : records) by_id[r.id] = &r;

  std::unordered_map<std::int64_t, int> owner;
  const std::array<const Ids*, 3> parts = {&split.train, &split.val, &split.test};
  const std::array<const char*, 3> names = {"train", "val", "test"};
  for (std::size_t p = 0; p < parts.size(); ++p) {
    std::array<std::size_t, kNumQuantifiers> per_label{};
    for (auto id : *parts[p]) {
      auto it = by_id.find(id);
      if (it == by_id.end()) {
        problems.push_back(std::string(names[p]) + " references unknown id " + std::to_string(id));
        continue;
      }
      if (!owner.emplace(id, static_cast<int>(p)).second) {
        problems.push_back("datapoint " + std::to_string(id) + " appears in more than one partition");
      }
      ++per_label[static_cast<std::size_t>(ordinal(it->second->label))];
    }
    const auto [lo, hi] = std::minmax_element(per_label.begin(), per_label.end());
    if (*hi - *lo > 1) problems.push_back(std::string(names[p]) + " is not label-balanced");
  }

  auto records_of = [&](const Ids& ids) {
    std::vector<const SplitRecord*> out;
    for (auto id : ids) {
      if (auto it = by_id.find(id); it != by_id.end()) out.push_back(it->second);
    }
    return out;
  };
  const auto train = records_of(split.train);
  auto heldout = records_of(split.val);
  const auto test = records_of(split.test);
  heldout.insert(heldout.end(), test.begin(), test.end());

  switch (split.spec.setting) {
    case Setting::unc:
      break;  // datapoint ids are scenario ids, so id disjointness covers scenario-query pairs
    case Setting::uns_obj: {
      const std::set<int> held(split.heldout_objects.begin(), split.heldout_objects.end());
      for (const auto* r : train) {
        if (held.count(r->query.object)) problems.push_back("held-out object used as a training restrictor");
        if (split.spec.exclude_heldout_distractors &&
            std::any_of(r->slot_objects.begin(), r->slot_objects.end(), [&](int o) { return held.count(o) > 0; })) {
          problems.push_back("held-out object appears in a training scenario");
        }
      }
      for (const auto* r : heldout) {
        if (!held.count(r->query.object)) problems.push_back("evaluation restrictor was not held out");
      }
      break;
    }
    case Setting::uns_prop: {
      const std::set<int> held(split.heldout_properties.begin(), split.heldout_properties.end());
      for (const auto* r : train) {
        if (held.count(r->query.property)) problems.push_back("held-out property used as a training scope");
      }
      for (const auto* r : heldout) {
        if (!held.count(r->query.property)) problems.push_back("evaluation scope was not held out");
      }
      break;
    }
    case Setting::uns_que: {
      std::set<Query> train_queries;
      std::set<int> objs, props;
      for (const auto* r : train) {
        train_queries.insert(r->query);
        objs.insert(r->query.object);
        props.insert(r->query.property);
      }
      for (const auto* r : heldout) {
        if (train_queries.count(r->query)) problems.push_back("evaluation query also occurs in train");
        if (!objs.count(r->query.object) || !props.count(r->query.property)) {
          problems.push_back("evaluation query has a word never seen in a training query");
        }
      }
      break;
    }
  }
  std::sort(problems.begin(), problems.end());
  problems.erase(std::unique(problems.begin(), problems.end()), problems.end());
  return problems;
}

namespace {

json spec_to_json(const SplitSpec& s) {
  return {{"setting", std::string(to_string(s.setting))},
          {"train", s.train},
          {"val", s.val},
          {"test", s.test},
          {"seed", s.seed},
          {"exclude_heldout_distractors", s.exclude_heldout_distractors}};
}

void write_ids(const std::filesystem::path& path, const Ids& ids, const SplitSpec& spec, const char* part) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw SplitError("cannot write " + path.string());
  out << "# partition=" << part << " " << spec_to_json(spec).dump() << '\n';
  for (auto id : ids) out << id << '\n';
}

Ids read_ids(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SplitError("cannot read " + path.string());
  Ids ids;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    ids.push_back(std::stoll(line));
  }
  return ids;
}

}  // namespace

void write_split(const Split& split, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_ids(dir / "train.txt", split.train, split.spec, "train");
  write_ids(dir / "val.txt", split.val, split.spec, "val");
  write_ids(dir / "test.txt", split.test, split.spec, "test");
  json held_queries = json::array();
  for (const auto& q : split.heldout_queries) held_queries.push_back({q.object, q.property});
  json j = {{"spec", spec_to_json(split.spec)},
            {"heldout_objects", split.heldout_objects},
            {"heldout_properties", split.heldout_properties},
            {"heldout_queries", held_queries},
            {"sizes", {{"train", split.train.size()}, {"val", split.val.size()}, {"test", split.test.size()}}}};
  std::ofstream(dir / "split.json", std::ios::trunc) << j.dump(2) << '\n';
}

Split read_split(const std::filesystem::path& dir) {
  std::ifstream in(dir / "split.json");
  if (!in) throw SplitError("cannot read " + (dir / "split.json").string());
  const json j = json::parse(in);
  Split s;
  const auto& js = j.at("spec");
  s.spec.setting = parse_setting(js.at("setting").get<std::string>());
  s.spec.train = js.at("train");
  s.spec.val = js.at("val");
  s.spec.test = js.at("test");
  s.spec.seed = js.at("seed");
  s.spec.exclude_heldout_distractors = js.at("exclude_heldout_distractors");
  s.heldout_objects = j.at("heldout_objects").get<std::vector<int>>();
  s.heldout_properties = j.at("heldout_properties").get<std::vector<int>>();
  for (const auto& q : j.at("heldout_queries")) s.heldout_queries.push_back({q.at(0), q.at(1)});
  s.train = read_ids(dir / "train.txt");
  s.val = read_ids(dir / "val.txt");
  s.test = read_ids(dir / "test.txt");
  return s;
}

}  // namespace vquant
