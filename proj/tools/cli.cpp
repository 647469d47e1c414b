#include "cli.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace vquant::cli {

namespace fs = std::filesystem;

namespace {

class Failure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string default_out() {
  const char* env = std::getenv("VQUANT_OUT");
  return env && *env ? env : "vquant-out";
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2)); }

std::string hex(const unsigned char* p, unsigned n) {
  std::ostringstream os;
  for (unsigned i = 0; i < n; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(p[i]);
  return os.str();
}

// "# key=value ..." line put on top of TSV files so they carry their provenance.
std::string tsv_provenance(const json& j) { return "# " + j.dump() + "\n"; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// Stage options. Each subcommand fills one of these; repro fills several.

struct GenerateOptions {
  CorpusConfig config;
  std::uint64_t seed = 0;
  fs::path out;
};

struct DotsimOptions {
  DotCorpusConfig config;
  std::uint64_t seed = 0;
  fs::path out;
};

struct SplitOptions {
  fs::path corpus, out;
  SplitSpec spec;
  std::string setting = "unc";
};

struct TrainOptions {
  fs::path corpus, split, out;
  ModelSpec model;
  TrainConfig train;
  std::string arch = "qsan", optimizer = "sgd";
  bool verbose = false;
};

struct EvalOptions {
  fs::path checkpoint, corpus, split, out;
  std::string part = "test";
  int bins = 4;
};

struct AnalyzeOptions {
  fs::path checkpoint, corpus, split, out;
  std::string part = "test", kind = "ratio";
  int bins = 4;
};

struct AuditOptions {
  fs::path corpus, out;
};

// ---------------------------------------------------------------------------

json do_generate(const GenerateOptions& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const Corpus c = generate_corpus(o.config, o.seed);
  if (auto w = synth_embeddings(c.catalog, o.config.embedding, o.seed).warning) std::cerr << "warning: " << *w << "\n";
  write_corpus(c, o.out);
  std::cerr << "generated " << c.datapoints.size() << " datapoints in " << std::fixed << std::setprecision(1)
            << seconds_since(t0) << "s -> " << o.out.string() << "\n";
  return {{"datapoints", c.datapoints.size()}, {"dir", o.out.string()}};
}

json do_dotsim(const DotsimOptions& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const DotCorpus c = generate_dot_corpus(o.config, o.seed);
  write_dot_corpus(c, o.out);
  std::cerr << "rendered " << c.datapoints.size() << " images in " << std::fixed << std::setprecision(1)
            << seconds_since(t0) << "s -> " << o.out.string() << "\n";
  return {{"images", c.datapoints.size()}, {"dir", o.out.string()}};
}

json do_split(SplitOptions o) {
  o.spec.setting = parse_setting(o.setting);
  const AnyCorpus corpus = load_corpus(o.corpus);
  const auto records = corpus.records();
  const Split s = make_split(records, o.spec);
  const auto problems = check_split(records, s);
  if (!problems.empty()) throw Failure("split failed its leakage check: " + problems.front());
  write_split(s, o.out);
  write_json(o.out / "provenance.json", {{"corpus", corpus.provenance()}, {"split", to_json(o.spec)}});
  std::cerr << to_string(o.spec.setting) << " split: train " << s.train.size() << ", val " << s.val.size()
            << ", test " << s.test.size() << " -> " << o.out.string() << "\n";
  return {{"train", s.train.size()}, {"val", s.val.size()}, {"test", s.test.size()}};
}

const std::vector<std::int64_t>& part_ids(const Split& s, const std::string& part) {
  if (part == "train") return s.train;
  if (part == "val") return s.val;
  if (part == "test") return s.test;
  throw Failure("unknown split part '" + part + "' (expected train, val or test)");
}

json do_train(TrainOptions o) {
  o.model.arch = parse_architecture(o.arch);
  o.train.optimizer = parse_optimizer(o.optimizer);
  const AnyCorpus corpus = load_corpus(o.corpus);
  const Split split = read_split(o.split);
  if (corpus.dots && o.model.arch != Architecture::dot_cnn) throw Failure("a dot corpus needs --arch dot-cnn");
  if (corpus.concepts && o.model.arch == Architecture::dot_cnn) throw Failure("dot-cnn needs a dot corpus");
  const Dataset train_set = corpus.dataset(split.train), val_set = corpus.dataset(split.val);
  auto model = make_model(o.model, input_shape_of(train_set), &train_set);
  std::cerr << "training " << to_string(o.model.arch) << " (" << model->parameters().scalar_count()
            << " parameters) on " << train_set.size() << " datapoints\n";
  const auto t0 = std::chrono::steady_clock::now();
  const TrainResult r = train(*model, train_set, val_set, o.train, [&](const EpochRecord& e) {
    if (o.verbose)
      std::cerr << "  epoch " << e.epoch << " loss " << e.train_loss << " train " << e.train_accuracy << " val "
                << e.val_accuracy << "\n";
  });
  std::cerr << "best val accuracy " << r.best_val_accuracy << " at epoch " << r.best_epoch << " ("
            << std::fixed << std::setprecision(1) << seconds_since(t0) << "s)\n";
  const json prov = {{"corpus", corpus.provenance()},
                     {"split", to_json(split.spec)},
                     {"model", to_json(model->spec())},
                     {"train", to_json(o.train)}};
  fs::create_directories(o.out);
  save_checkpoint(o.out / "model.ckpt", r.best);
  json out = prov;
  out["result"] = to_json(r);
  write_json(o.out / "train.json", out);
  write_text(o.out / "history.tsv", tsv_provenance(prov) + history_tsv(r));
  return {{"best_epoch", r.best_epoch}, {"best_val_accuracy", r.best_val_accuracy}};
}

struct Loaded {
  std::unique_ptr<Model> model;
  Dataset data;
  json provenance;
};

Loaded load_for_eval(const fs::path& checkpoint, const fs::path& corpus_dir, const fs::path& split_dir,
                     const std::string& part) {
  const AnyCorpus corpus = load_corpus(corpus_dir);
  const Split split = read_split(split_dir);
  Loaded l;
  l.data = corpus.dataset(part_ids(split, part));
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  l.model = load_model(ckpt, &l.data);
  l.provenance = {{"corpus", corpus.provenance()},
                  {"split", to_json(split.spec)},
                  {"part", part},
                  {"model", to_json(l.model->spec())}};
  return l;
}

json do_eval(const EvalOptions& o) {
  const Loaded l = load_for_eval(o.checkpoint, o.corpus, o.split, o.part);
  const EvalReport rep = evaluate(*l.model, l.data, o.bins);
  json out = l.provenance;
  out["report"] = to_json(rep);
  out["boundary_dip"] = to_json(boundary_dip(rep.ratio_bins));
  fs::create_directories(o.out);
  write_json(o.out / "eval.json", out);
  const std::string head = tsv_provenance(l.provenance);
  write_text(o.out / "confusion.tsv", head + confusion_tsv(rep));
  write_text(o.out / "ratio_bins.tsv", head + ratio_bins_tsv(rep));
  write_text(o.out / "distractors.tsv", head + distractors_tsv(rep));
  std::cout << to_string(l.model->spec().arch) << " " << o.part << " accuracy " << rep.accuracy << " ("
            << rep.correct << "/" << rep.total << "), adjacent error share " << adjacent_error_share(rep) << "\n";
  return {{"accuracy", rep.accuracy}, {"adjacent_error_share", adjacent_error_share(rep)}};
}

void do_analyze(const AnalyzeOptions& o) {
  const Loaded l = load_for_eval(o.checkpoint, o.corpus, o.split, o.part);
  const EvalReport rep = evaluate(*l.model, l.data, o.bins);
  std::string body;
  if (o.kind == "ratio") {
    body = ratio_bins_tsv(rep);
    const auto dip = boundary_dip(rep.ratio_bins);
    std::cerr << "boundary dip in " << dip.dipped_count() << " of 3 graded labels\n";
  } else if (o.kind == "distractor") {
    body = distractors_tsv(rep);
  } else if (o.kind == "confusion") {
    body = confusion_tsv(rep);
  } else {
    throw Failure("unknown analysis '" + o.kind + "' (expected ratio, distractor or confusion)");
  }
  const std::string text = tsv_provenance(l.provenance) + body;
  if (o.out.empty())
    std::cout << text;
  else
    write_text(o.out, text);
}

void do_audit(const AuditOptions& o) {
  const AnyCorpus corpus = load_corpus(o.corpus);
  if (!corpus.concepts) throw Failure("audit needs a concept corpus");
  const BiasReport r = audit_bias(*corpus.concepts);
  json out = {{"corpus", corpus.provenance()}, {"bias", to_json(r)}};
  if (!o.out.empty()) write_json(o.out, out);
  std::cout << "queries " << r.queries.size() << ", max per-query ratio " << r.max_ratio << "\n";
  for (auto q : kAllQuantifiers) {
    const auto& l = r.labels[static_cast<std::size_t>(ordinal(q))];
    std::cout << std::left << std::setw(5) << to_string(q) << " mean " << l.mean << " min " << l.min << " max "
              << l.max << "\n";
  }
}

// ---------------------------------------------------------------------------

json artifact_digests(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  json out = json::array();
  for (const auto& f : files)
    out.push_back({{"path", fs::relative(f, root).generic_string()}, {"sha256", sha256_file(f)}});
  return out;
}

struct ReproOptions {
  std::string name;
  std::uint64_t seed = 1;
  fs::path out;
  bool verbose = false;
};

void do_repro(const ReproOptions& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path root = o.out / (o.name + "-seed" + std::to_string(o.seed));
  fs::remove_all(root);
  json stages = json::object();
  TrainOptions t;
  t.corpus = root / "corpus";
  t.split = root / "split";
  t.out = root / "train";
  t.verbose = o.verbose;
  t.model.seed = o.seed;
  if (o.name == "dotworld") {
    DotsimOptions d;
    d.seed = o.seed;
    d.config.per_quantifier = 2000;
    d.out = t.corpus;
    stages["dotsim"] = do_dotsim(d);
    t.arch = "dot-cnn";
  } else if (o.name.rfind("unc-", 0) == 0) {
    t.arch = o.name.substr(4);
    if (parse_architecture(t.arch) == Architecture::dot_cnn) throw Failure("use 'repro dotworld' for the dot classifier");
    GenerateOptions g;
    g.seed = o.seed;
    g.out = t.corpus;
    stages["generate"] = do_generate(g);
  } else {
    throw Failure("unknown experiment '" + o.name + "' (expected unc-<arch> or dotworld)");
  }
  SplitOptions s;
  s.corpus = t.corpus;
  s.out = t.split;
  s.spec.seed = o.seed;
  stages["split"] = do_split(s);

  t.train = recipe_train_config(parse_architecture(t.arch));
  t.train.seed = o.seed;
  t.optimizer = std::string(to_string(t.train.optimizer));
  stages["train"] = do_train(t);

  EvalOptions e;
  e.checkpoint = t.out / "model.ckpt";
  e.corpus = t.corpus;
  e.split = t.split;
  e.out = root / "eval";
  stages["eval"] = do_eval(e);

  const json manifest = {{"experiment", o.name},
                         {"seed", o.seed},
                         {"train_config", to_json(t.train)},
                         {"stages", stages},
                         {"artifacts", artifact_digests(root)}};
  write_json(root / "manifest.json", manifest);
  std::cerr << o.name << " finished in " << std::fixed << std::setprecision(1) << seconds_since(t0) << "s -> "
            << root.string() << "\n";
}

/**
 * Appends "--key value" for every line of the subcommand's --config file whose
 * key was not given on the command line. Lines are "key = value"; '#' starts a
 * comment. Flags take true/false.
 */
void expand_config(CLI::App& app, std::vector<std::string>& args) {
  auto at = std::find(args.begin(), args.end(), "--config");
  if (at == args.end()) return;
  if (at + 1 == args.end()) throw CLI::ArgumentMismatch("--config needs a file");
  CLI::App* sub = nullptr;
  for (auto it = args.begin(); it != at && !sub; ++it) sub = app.get_subcommand_no_throw(*it);
  if (!sub) throw CLI::ExtrasError({"--config"});
  const std::string path = *(at + 1);
  std::ifstream in(path);
  if (!in) throw CLI::FileError::Missing(path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = CLI::detail::trim_copy(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw CLI::ConversionError(path + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = CLI::detail::trim_copy(line.substr(0, eq));
    const std::string value = CLI::detail::trim_copy(line.substr(eq + 1));
    std::replace(key.begin(), key.end(), '_', '-');
    const std::string flag = "--" + key;
    const CLI::Option* opt = sub->get_option_no_throw(flag);
    if (!opt || key == "config") throw CLI::ExtrasError({path + ": " + key});
    const bool given = std::any_of(args.begin(), args.end(),
                                   [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
    if (given) continue;  // the command line wins
    if (opt->get_expected_min() == 0) {
      if (value == "true" || value == "1") args.push_back(flag);
    } else {
      args.push_back(flag);
      args.push_back(value);
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------

std::uint64_t AnyCorpus::seed() const { return concepts ? concepts->seed : dots->seed; }

std::vector<SplitRecord> AnyCorpus::records() const {
  return concepts ? split_records(*concepts) : split_records(*dots);
}

Dataset AnyCorpus::dataset(std::span<const std::int64_t> ids) const {
  return concepts ? make_dataset(*concepts, ids) : make_dataset(*dots, ids);
}

json AnyCorpus::provenance() const {
  if (concepts) {
    const auto& c = concepts->config;
    return {{"kind", "concepts"},
            {"seed", concepts->seed},
            {"objects", c.catalog.objects},
            {"properties", c.catalog.properties},
            {"per_quantifier", c.per_quantifier},
            {"dim", c.embedding.dim},
            {"sigma", c.embedding.sigma},
            {"offset", c.embedding.offset}};
  }
  const auto& c = dots->config;
  return {{"kind", "dots"},          {"seed", dots->seed},      {"per_quantifier", c.per_quantifier},
          {"height", c.render.height}, {"width", c.render.width}, {"radius", c.render.radius}};
}

AnyCorpus load_corpus(const fs::path& dir) {
  AnyCorpus c;
  if (fs::exists(dir / "dots.jsonl"))
    c.dots = read_dot_corpus(dir);
  else if (fs::exists(dir / "corpus.jsonl"))
    c.concepts = read_corpus(dir);
  else
    throw Failure("no corpus in " + dir.string());
  return c;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned n = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &n);
  return hex(md, n);
}

TrainConfig recipe_train_config(Architecture arch) {
  TrainConfig c;
  c.optimizer = Optimizer::adam;
  c.learning_rate = 0.01;
  c.batch_size = 16;
  c.max_epochs = 200;
  c.patience = 40;
  if (arch == Architecture::dot_cnn) {
    c.optimizer = Optimizer::sgd;
    c.batch_size = 32;
    c.patience = 15;
    c.learning_rate = 0.1;
    c.momentum = 0.9;
    c.max_epochs = 40;
  }
  return c;
}

int run(int argc, char** argv) {
  CLI::App app{"Quantifier learning over synthetic scenarios and dot images"};
  app.require_subcommand(1);
  const std::string out_help = "output directory (default from VQUANT_OUT, else ./vquant-out)";

  std::string config_file;
  auto with_config = [&config_file](CLI::App* sub) {
    sub->add_option("--config", config_file, "key = value file; flags on the command line win");
  };

  // generate
  GenerateOptions gen;
  std::string gen_out;
  auto* g = app.add_subcommand("generate", "synthesize a concept corpus");
  with_config(g);
  g->add_option("--objects", gen.config.catalog.objects, "object concepts")->capture_default_str();
  g->add_option("--properties", gen.config.catalog.properties, "property concepts")->capture_default_str();
  g->add_option("--mean-plausible", gen.config.catalog.mean_plausible, "mean plausible properties per object")
      ->capture_default_str();
  g->add_option("--per-quantifier", gen.config.per_quantifier, "datapoints per label")->capture_default_str();
  g->add_option("--dim", gen.config.embedding.dim, "embedding dimension")->capture_default_str();
  g->add_option("--sigma", gen.config.embedding.sigma, "instance noise")->capture_default_str();
  g->add_option("--offset", gen.config.embedding.offset, "weight of the shared concept direction")
      ->capture_default_str();
  g->add_option("--seed", gen.seed, "generation seed")->capture_default_str();
  g->add_option("--out", gen_out, out_help + "/corpus");

  // dotsim
  DotsimOptions dot;
  std::string dot_out;
  int size = 0;
  auto* d = app.add_subcommand("dotsim", "render a dot-image corpus");
  with_config(d);
  d->add_option("--per-quantifier", dot.config.per_quantifier, "images per label")->capture_default_str();
  d->add_option("--size", size, "square frame side in pixels (default 64)");
  d->add_option("--radius", dot.config.render.radius, "dot radius in pixels")->capture_default_str();
  d->add_option("--seed", dot.seed, "render seed")->capture_default_str();
  d->add_option("--out", dot_out, out_help + "/dots");

  // split
  SplitOptions sp;
  std::string sp_corpus, sp_out;
  auto* s = app.add_subcommand("split", "partition a corpus into train/val/test");
  with_config(s);
  s->add_option("--corpus", sp_corpus, "corpus directory")->required();
  s->add_option("--setting", sp.setting, "unc, uns-obj, uns-prop or uns-que")->capture_default_str();
  s->add_option("--train", sp.spec.train, "train fraction")->capture_default_str();
  s->add_option("--val", sp.spec.val, "validation fraction")->capture_default_str();
  s->add_option("--test", sp.spec.test, "test fraction")->capture_default_str();
  s->add_flag("--exclude-heldout-distractors", sp.spec.exclude_heldout_distractors,
              "uns-obj: drop training scenarios showing held-out objects");
  s->add_option("--seed", sp.spec.seed, "split seed")->capture_default_str();
  s->add_option("--out", sp_out, out_help + "/split");

  // train
  TrainOptions tr;
  std::string tr_corpus, tr_split, tr_out;
  auto* t = app.add_subcommand("train", "train one architecture");
  with_config(t);
  t->add_option("--arch", tr.arch, "bow, cnn-bow, lstm, cnn-lstm, san, qmn, qsan or dot-cnn")->capture_default_str();
  t->add_option("--corpus", tr_corpus, "corpus directory")->required();
  t->add_option("--split", tr_split, "split directory")->required();
  t->add_option("--d-embed", tr.model.d_embed, "bag-of-words embedding size")->capture_default_str();
  t->add_option("--d-hidden", tr.model.d_hidden, "LSTM and attention hidden size")->capture_default_str();
  t->add_option("--d-mem", tr.model.d_mem, "memory size (qmn)")->capture_default_str();
  t->add_option("--stacks", tr.model.stacks, "attention hops")->capture_default_str();
  t->add_flag("--qmn-softmax-s2", tr.model.qmn_softmax_s2, "softmax the second qmn similarity");
  t->add_option("--filters", tr.model.filters, "dot-cnn filters")->capture_default_str();
  t->add_option("--receptive", tr.model.receptive, "dot-cnn receptive field")->capture_default_str();
  t->add_option("--stride", tr.model.stride, "dot-cnn stride")->capture_default_str();
  t->add_option("--optimizer", tr.optimizer, "sgd or adam")->capture_default_str();
  t->add_option("--lr", tr.train.learning_rate, "learning rate")->capture_default_str();
  t->add_option("--momentum", tr.train.momentum, "sgd momentum")->capture_default_str();
  t->add_option("--batch", tr.train.batch_size, "minibatch size")->capture_default_str();
  t->add_option("--epochs", tr.train.max_epochs, "maximum epochs")->capture_default_str();
  t->add_option("--patience", tr.train.patience, "epochs without improvement before stopping")
      ->capture_default_str();
  std::uint64_t tr_seed = 0;
  t->add_option("--seed", tr_seed, "initialisation and shuffling seed")->capture_default_str();
  t->add_flag("-v,--verbose", tr.verbose, "print every epoch");
  t->add_option("--out", tr_out, out_help + "/train");

  // eval
  EvalOptions ev;
  std::string ev_ckpt, ev_corpus, ev_split, ev_out;
  auto* e = app.add_subcommand("eval", "evaluate a checkpoint");
  with_config(e);
  e->add_option("--checkpoint", ev_ckpt, "model.ckpt from train")->required();
  e->add_option("--corpus", ev_corpus, "corpus directory")->required();
  e->add_option("--split", ev_split, "split directory")->required();
  e->add_option("--part", ev.part, "train, val or test")->capture_default_str();
  e->add_option("--bins", ev.bins, "ratio bins per graded label")->capture_default_str();
  e->add_option("--out", ev_out, out_help + "/eval");

  // analyze
  AnalyzeOptions an;
  std::string an_ckpt, an_corpus, an_split, an_out;
  auto* a = app.add_subcommand("analyze", "print one analysis table");
  with_config(a);
  a->add_option("--checkpoint", an_ckpt, "model.ckpt from train")->required();
  a->add_option("--corpus", an_corpus, "corpus directory")->required();
  a->add_option("--split", an_split, "split directory")->required();
  a->add_option("--kind", an.kind, "ratio, distractor or confusion")->capture_default_str();
  a->add_option("--part", an.part, "train, val or test")->capture_default_str();
  a->add_option("--bins", an.bins, "ratio bins per graded label")->capture_default_str();
  a->add_option("--out", an_out, "write the table here instead of stdout");

  // audit
  AuditOptions au;
  std::string au_corpus, au_out;
  auto* u = app.add_subcommand("audit", "per-query label ratios of a corpus");
  with_config(u);
  u->add_option("--corpus", au_corpus, "corpus directory")->required();
  u->add_option("--out", au_out, "also write the full report as JSON");

  // repro
  ReproOptions rp;
  std::string rp_out;
  auto* r = app.add_subcommand("repro", "generate, split, train and evaluate a named experiment");
  r->add_option("experiment", rp.name, "unc-<arch> or dotworld")->required();
  r->add_option("--seed", rp.seed, "seed for every stage")->capture_default_str();
  r->add_flag("-v,--verbose", rp.verbose, "print every epoch");
  r->add_option("--out", rp_out, out_help);

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    expand_config(app, args);
    std::vector<char*> expanded{argv[0]};
    for (auto& a : args) expanded.push_back(a.data());
    app.parse(static_cast<int>(expanded.size()), expanded.data());
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  const fs::path base = default_out();
  auto pick = [&](const std::string& given, const char* sub) { return given.empty() ? base / sub : fs::path(given); };
  try {
    if (*g) {
      gen.out = pick(gen_out, "corpus");
      do_generate(gen);
    } else if (*d) {
      if (size > 0) dot.config.render.height = dot.config.render.width = size;
      dot.out = pick(dot_out, "dots");
      do_dotsim(dot);
    } else if (*s) {
      sp.corpus = sp_corpus;
      sp.out = pick(sp_out, "split");
      do_split(sp);
    } else if (*t) {
      tr.corpus = tr_corpus;
      tr.split = tr_split;
      tr.out = pick(tr_out, "train");
      tr.model.seed = tr.train.seed = tr_seed;
      do_train(tr);
    } else if (*e) {
      ev.checkpoint = ev_ckpt;
      ev.corpus = ev_corpus;
      ev.split = ev_split;
      ev.out = pick(ev_out, "eval");
      do_eval(ev);
    } else if (*a) {
      an.checkpoint = an_ckpt;
      an.corpus = an_corpus;
      an.split = an_split;
      an.out = an_out;
      do_analyze(an);
    } else if (*u) {
      au.corpus = au_corpus;
      au.out = au_out;
      do_audit(au);
    } else if (*r) {
      rp.out = rp_out.empty() ? base : fs::path(rp_out);
      do_repro(rp);
    }
  } catch (const std::invalid_argument& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace vquant::cli
