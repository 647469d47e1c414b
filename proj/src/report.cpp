#include "vquant/report.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace vquant {

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

json box_to_json(const BoxStats& b) {
  return {{"min", b.min}, {"q1", b.q1}, {"median", b.median}, {"q3", b.q3}, {"max", b.max}};
}

}  // namespace

json to_json(const ModelSpec& s) {
  return {{"arch", std::string(to_string(s.arch))},
          {"d_embed", s.d_embed},
          {"d_hidden", s.d_hidden},
          {"d_mem", s.d_mem},
          {"stacks", s.stacks},
          {"seed", s.seed},
          {"qmn_softmax_s2", s.qmn_softmax_s2},
          {"filters", s.filters},
          {"receptive", s.receptive},
          {"stride", s.stride}};
}

ModelSpec model_spec_from_json(const json& j) {
  ModelSpec s;
  s.arch = parse_architecture(j.at("arch").get<std::string>());
  s.d_embed = j.value("d_embed", s.d_embed);
  s.d_hidden = j.value("d_hidden", s.d_hidden);
  s.d_mem = j.value("d_mem", s.d_mem);
  s.stacks = j.value("stacks", s.stacks);
  s.seed = j.value("seed", s.seed);
  s.qmn_softmax_s2 = j.value("qmn_softmax_s2", s.qmn_softmax_s2);
  s.filters = j.value("filters", s.filters);
  s.receptive = j.value("receptive", s.receptive);
  s.stride = j.value("stride", s.stride);
  return s;
}

json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size}, {"max_epochs", c.max_epochs},
          {"patience", c.patience},           {"seed", c.seed},             {"momentum", c.momentum},
          {"optimizer", to_string(c.optimizer)}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  c.seed = j.value("seed", c.seed);
  c.momentum = j.value("momentum", c.momentum);
  if (j.contains("optimizer")) c.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
  return c;
}

json to_json(const SplitSpec& s) {
  return {{"setting", std::string(to_string(s.setting))},
          {"train", s.train},
          {"val", s.val},
          {"test", s.test},
          {"seed", s.seed},
          {"exclude_heldout_distractors", s.exclude_heldout_distractors}};
}

json to_json(const EvalReport& r) {
  json per_label = json::object();
  for (auto q : kAllQuantifiers) {
    const auto i = static_cast<std::size_t>(ordinal(q));
    per_label[std::string(to_string(q))] = {{"count", r.label_counts[i]},
                                            {"accuracy", optional_number(r.label_accuracy[i])}};
  }
  json confusion = json::array();
  for (const auto& row : r.confusion) confusion.push_back(row);
  json bins = json::array();
  for (const auto& b : r.ratio_bins) {
    bins.push_back({{"label", std::string(to_string(b.label))},
                    {"bin", b.index},
                    {"low", b.low},
                    {"high", b.high},
                    {"count", b.count},
                    {"correct", b.correct},
                    {"accuracy", optional_number(b.accuracy)}});
  }
  json distractors = json::array();
  for (const auto& d : r.distractors) {
    distractors.push_back(
        {{"cardinality", d.cardinality}, {"count", d.count}, {"correct", d.correct}, {"accuracy", d.accuracy}});
  }
  return {{"total", r.total},
          {"correct", r.correct},
          {"accuracy", r.accuracy},
          {"per_label", per_label},
          {"confusion", confusion},
          {"adjacency", r.adjacency},
          {"adjacent_error_share", adjacent_error_share(r)},
          {"ratio_bins", bins},
          {"boundary_dip", to_json(boundary_dip(r.ratio_bins))},
          {"distractors", distractors}};
}

json to_json(const BoundaryDip& dip) {
  json labels = json::array();
  for (const auto& l : dip.labels) {
    labels.push_back({{"label", std::string(to_string(l.label))},
                      {"boundary", optional_number(l.boundary)},
                      {"interior", optional_number(l.interior)},
                      {"dipped", l.dipped}});
  }
  return {{"labels", labels}, {"dipped_count", dip.dipped_count()}, {"holds", dip.holds()}};
}

json to_json(const TrainResult& t) {
  json hist = json::array();
  for (const auto& e : t.history) {
    hist.push_back({{"epoch", e.epoch},
                    {"train_loss", e.train_loss},
                    {"train_accuracy", e.train_accuracy},
                    {"val_accuracy", e.val_accuracy}});
  }
  return {{"best_epoch", t.best_epoch}, {"best_val_accuracy", t.best_val_accuracy}, {"history", hist}};
}

json to_json(const BiasReport& r) {
  json labels = json::object();
  for (auto q : kAllQuantifiers) {
    const auto& s = r.labels[static_cast<std::size_t>(ordinal(q))];
    labels[std::string(to_string(q))] = {{"mean", s.mean}, {"min", s.min}, {"max", s.max}, {"box", box_to_json(s.box)}};
  }
  json queries = json::array();
  for (const auto& qb : r.queries) {
    queries.push_back({{"restrictor", qb.query.object},
                       {"scope", qb.query.property},
                       {"count", qb.count},
                       {"ratio", qb.ratio}});
  }
  return {{"max_ratio", r.max_ratio}, {"labels", labels}, {"queries", queries}};
}

std::string ratio_bins_tsv(const EvalReport& r) {
  std::ostringstream os;
  os << "label\tbin\tlow\thigh\tcount\taccuracy\n";
  for (const auto& b : r.ratio_bins) {
    os << to_string(b.label) << '\t' << b.index << '\t' << fmt(b.low) << '\t' << fmt(b.high) << '\t' << b.count
       << '\t' << (b.accuracy ? fmt(*b.accuracy) : "NA") << '\n';
  }
  return os.str();
}

std::string distractors_tsv(const EvalReport& r) {
  std::ostringstream os;
  os << "cardinality\tcount\tcorrect\taccuracy\n";
  for (const auto& d : r.distractors)
    os << d.cardinality << '\t' << d.count << '\t' << d.correct << '\t' << fmt(d.accuracy) << '\n';
  return os.str();
}

std::string confusion_tsv(const EvalReport& r) {
  std::ostringstream os;
  os << "true\\predicted";
  for (auto q : kAllQuantifiers) os << '\t' << to_string(q);
  os << '\n';
  for (auto q : kAllQuantifiers) {
    os << to_string(q);
    for (int v : r.confusion[static_cast<std::size_t>(ordinal(q))]) os << '\t' << v;
    os << '\n';
  }
  return os.str();
}

std::string history_tsv(const TrainResult& t) {
  std::ostringstream os;
  os << "epoch\ttrain_loss\ttrain_accuracy\tval_accuracy\n";
  for (const auto& e : t.history)
    os << e.epoch << '\t' << fmt(e.train_loss) << '\t' << fmt(e.train_accuracy) << '\t' << fmt(e.val_accuracy) << '\n';
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
}

}  // namespace vquant
