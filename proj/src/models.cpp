#include "vquant/models.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace vquant {

namespace {

constexpr int kClasses = 5;

struct ArchName {
  Architecture arch;
  std::string_view name;
};

constexpr std::array<ArchName, 8> kArchNames = {{
    {Architecture::bow, "bow"},
    {Architecture::cnn_bow, "cnn-bow"},
    {Architecture::lstm, "lstm"},
    {Architecture::cnn_lstm, "cnn-lstm"},
    {Architecture::san, "san"},
    {Architecture::qmn, "qmn"},
    {Architecture::qsan, "qsan"},
    {Architecture::dot_cnn, "dot-cnn"},
}};

std::size_t lstm_count(std::size_t in, std::size_t h) { return 4 * h * in + 4 * h * h + 4 * h; }
std::size_t attention_count(std::size_t d, std::size_t h) { return 2 * d * h + 2 * h; }

bool needs_words(Architecture a) {
  return a != Architecture::bow && a != Architecture::cnn_bow && a != Architecture::dot_cnn;
}

Value zeros(Eigen::Index n) { return Value::constant(Tensor<double>({n})); }

}  // namespace

std::string_view to_string(Architecture a) {
  for (const auto& [arch, name] : kArchNames)
    if (arch == a) return name;
  return "?";
}

Architecture parse_architecture(std::string_view name) {
  std::string lower(name);
  std::ranges::transform(lower, lower.begin(), [](unsigned char c) { return std::tolower(c); });
  std::ranges::replace(lower, '_', '-');
  if (lower == "cnn+bow") lower = "cnn-bow";
  if (lower == "cnn+lstm") lower = "cnn-lstm";
  for (const auto& [arch, n] : kArchNames)
    if (n == lower) return arch;
  throw std::invalid_argument("unknown architecture '" + std::string(name) + "'");
}

void ModelSpec::validate() const {
  if (d_embed <= 0 || d_hidden <= 0 || d_mem <= 0) throw std::invalid_argument("model dimensions must be positive");
  if (stacks < 1) throw std::invalid_argument("attention stacks must be >= 1");
  if (filters <= 0 || receptive <= 0 || stride <= 0) throw std::invalid_argument("convolution sizes must be positive");
}

std::size_t expected_parameter_count(const ModelSpec& s, const InputShape& in) {
  const std::size_t V = in.vocabulary(), E = s.d_embed, H = s.d_hidden, M = s.d_mem, T = s.stacks;
  const std::size_t d = in.dim, S = in.slots, F = s.filters, R = s.receptive;
  switch (s.arch) {
    case Architecture::bow: return E * V + E + 5 * E + 5;
    case Architecture::cnn_bow: return E * V + E + 5 * (E + S * d) + 5;
    case Architecture::lstm: return lstm_count(d, H) + 5 * H + 5;
    case Architecture::cnn_lstm: return 2 * lstm_count(d, H) + 10 * H + 5;
    case Architecture::san: return lstm_count(d, d) + T * attention_count(d, H) + 5 * d + 5;
    case Architecture::qmn: return 2 * d * M + 10 * M + 5;
    case Architecture::qsan: return 2 * T * attention_count(d, H) + 10 * d + 5;
    case Architecture::dot_cnn: return F * R * R + F + 5 * F + 5;
  }
  return 0;
}

std::string encode_model_metadata(const ModelSpec& s, const InputShape& in) {
  std::ostringstream os;
  os << "arch=" << to_string(s.arch) << '\n'
     << "d_embed=" << s.d_embed << '\n'
     << "d_hidden=" << s.d_hidden << '\n'
     << "d_mem=" << s.d_mem << '\n'
     << "stacks=" << s.stacks << '\n'
     << "seed=" << s.seed << '\n'
     << "qmn_softmax_s2=" << (s.qmn_softmax_s2 ? 1 : 0) << '\n'
     << "filters=" << s.filters << '\n'
     << "receptive=" << s.receptive << '\n'
     << "stride=" << s.stride << '\n'
     << "objects=" << in.objects << '\n'
     << "properties=" << in.properties << '\n'
     << "dim=" << in.dim << '\n'
     << "slots=" << in.slots << '\n'
     << "height=" << in.height << '\n'
     << "width=" << in.width << '\n';
  return os.str();
}

std::pair<ModelSpec, InputShape> decode_model_metadata(const std::string& metadata) {
  std::map<std::string, std::string> kv;
  std::istringstream is(metadata);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw CheckpointError("malformed metadata line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw CheckpointError("checkpoint metadata lacks '" + key + "'");
    return it->second;
  };
  auto num = [&](const std::string& key) {
    const auto& v = get(key);
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) throw CheckpointError("bad value for '" + key + "'");
    return out;
  };
  ModelSpec s;
  InputShape in;
  try {
    s.arch = parse_architecture(get("arch"));
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(e.what());
  }
  s.d_embed = static_cast<int>(num("d_embed"));
  s.d_hidden = static_cast<int>(num("d_hidden"));
  s.d_mem = static_cast<int>(num("d_mem"));
  s.stacks = static_cast<int>(num("stacks"));
  s.seed = num("seed");
  s.qmn_softmax_s2 = num("qmn_softmax_s2") != 0;
  s.filters = static_cast<int>(num("filters"));
  s.receptive = static_cast<int>(num("receptive"));
  s.stride = static_cast<int>(num("stride"));
  in.objects = static_cast<int>(num("objects"));
  in.properties = static_cast<int>(num("properties"));
  in.dim = static_cast<int>(num("dim"));
  in.slots = static_cast<int>(num("slots"));
  in.height = static_cast<int>(num("height"));
  in.width = static_cast<int>(num("width"));
  return {s, in};
}

// ---------------------------------------------------------------------------

Tensor<double> Initializer::glorot(Shape shape, Eigen::Index fan_in, Eigen::Index fan_out) {
  Tensor<double> t(std::move(shape));
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-a, a);
  for (Eigen::Index i = 0; i < t.size(); ++i) t[i] = u(rng_);
  return t;
}

Linear::Linear(ParameterSet& params, Initializer& init, const std::string& name, int in, int out) {
  weight = params.add(name + ".weight", init.glorot({out, in}, in, out));
  bias = params.add(name + ".bias", Tensor<double>({out}));
}

Value Linear::operator()(const Value& x) const { return add(matmul(weight, x), bias); }

LstmCell::LstmCell(ParameterSet& params, Initializer& init, const std::string& name, int in, int h)
    : hidden(h) {
  input_weight = params.add(name + ".input_weight", init.glorot({4 * h, in}, in, 4 * h));
  recurrent_weight = params.add(name + ".recurrent_weight", init.glorot({4 * h, h}, h, 4 * h));
  bias = params.add(name + ".bias", Tensor<double>({4 * h}));
}

LstmCell::State LstmCell::step(const Value& x, const State& prev) const {
  Value pre = add(matmul(input_weight, x), bias);
  if (prev.h) pre = add(pre, matmul(recurrent_weight, prev.h));
  Value i = sigmoid(slice(pre, 0, hidden));
  Value f = sigmoid(slice(pre, hidden, hidden));
  Value o = sigmoid(slice(pre, 2 * hidden, hidden));
  Value g = tanh(slice(pre, 3 * hidden, hidden));
  Value c = mul(i, g);
  if (prev.c) c = add(c, mul(f, prev.c));
  return {mul(o, tanh(c)), c};
}

Value LstmCell::run(std::span<const Value> inputs) const {
  if (inputs.empty()) return zeros(hidden);
  State st;
  for (const auto& x : inputs) st = step(x, st);
  return st.h;
}

AttentionLayer::AttentionLayer(ParameterSet& params, Initializer& init, const std::string& name, int dim,
                               int hidden) {
  visual_weight = params.add(name + ".visual_weight", init.glorot({dim, hidden}, dim, hidden));
  query_weight = params.add(name + ".query_weight", init.glorot({hidden, dim}, dim, hidden));
  bias = params.add(name + ".bias", Tensor<double>({hidden}));
  score = params.add(name + ".score", init.glorot({hidden}, hidden, 1));
}

AttentionLayer::Output AttentionLayer::operator()(const Value& visual, const Value& query) const {
  Value q = add(matmul(query_weight, query), bias);
  Value h = tanh(add_rowwise(matmul(visual, visual_weight), q));
  Value p = softmax(matmul(h, score));
  return {matmul(transpose(visual), p), p};
}

StackedAttention::Output StackedAttention::operator()(const Value& visual, const Value& query) const {
  Value u = query;
  Value p;
  for (const auto& layer : layers) {
    auto out = layer(visual, u);
    u = add(u, out.gist);
    p = out.weights;
  }
  return {u, p};
}

// ---------------------------------------------------------------------------

Model::Model(ModelSpec spec, InputShape input, const Dataset* words)
    : spec_(std::move(spec)), input_(input), init_(spec_.seed) {
  spec_.validate();
  if (words) {
    for (Eigen::Index i = 0; i < words->object_vectors.rows(); ++i)
      object_words_.push_back(Tensor<double>::from_vector(words->object_vectors.row(i).transpose()));
    for (Eigen::Index i = 0; i < words->property_vectors.rows(); ++i)
      property_words_.push_back(Tensor<double>::from_vector(words->property_vectors.row(i).transpose()));
  }
}

Checkpoint Model::checkpoint() const { return Checkpoint::capture(params_, encode_model_metadata(spec_, input_)); }

void Model::load(const Checkpoint& ckpt) {
  auto [spec, input] = decode_model_metadata(ckpt.metadata);
  if (spec.arch != spec_.arch) {
    throw CheckpointError("checkpoint holds a " + std::string(to_string(spec.arch)) + " model, not " +
                          std::string(to_string(spec_.arch)));
  }
  ckpt.restore(params_);
}

Value Model::visual(const Example& e) const {
  if (e.visual.empty()) throw DimensionError("example has no visual input");
  if (e.visual.rank() == 2 && input_.dim > 0 && e.visual.dim(1) != input_.dim) {
    throw DimensionError("slot dimension " + std::to_string(e.visual.dim(1)) + " does not match model dimension " +
                         std::to_string(input_.dim));
  }
  return Value::constant(e.visual);
}

Value Model::object_word(int id) const {
  if (id < 0 || id >= static_cast<int>(object_words_.size()))
    throw std::out_of_range("unknown object id " + std::to_string(id));
  return Value::constant(object_words_[static_cast<std::size_t>(id)]);
}

Value Model::property_word(int id) const {
  if (id < 0 || id >= static_cast<int>(property_words_.size()))
    throw std::out_of_range("unknown property id " + std::to_string(id));
  return Value::constant(property_words_[static_cast<std::size_t>(id)]);
}

// --- BOW --------------------------------------------------------------------

BowModel::BowModel(const ModelSpec& spec, const InputShape& input) : BowModel(spec, input, false) {}

BowModel::BowModel(const ModelSpec& spec, const InputShape& input, bool with_visual) : Model(spec, input, nullptr) {
  if (input.vocabulary() <= 0) throw std::invalid_argument("bag-of-words model needs a vocabulary");
  embed = Linear(params_, init_, "embed", input.vocabulary(), spec.d_embed);
  const int in = spec.d_embed + (with_visual ? input.slots * input.dim : 0);
  classifier = Linear(params_, init_, "classifier", in, kClasses);
}

Value BowModel::word_feature(const Example& e) const {
  if (e.restrictor < 0 || e.restrictor >= input_.objects)
    throw std::out_of_range("unknown object id " + std::to_string(e.restrictor));
  if (e.scope < 0 || e.scope >= input_.properties)
    throw std::out_of_range("unknown property id " + std::to_string(e.scope));
  Tensor<double> onehot({input_.vocabulary()});
  onehot[e.restrictor] = 1.0;
  onehot[input_.objects + e.scope] = 1.0;
  return embed(Value::constant(std::move(onehot)));
}

Value BowModel::forward(const Example& e) const { return classifier(word_feature(e)); }

CnnBowModel::CnnBowModel(const ModelSpec& spec, const InputShape& input) : BowModel(spec, input, true) {
  if (input.dim <= 0 || input.slots <= 0) throw std::invalid_argument("cnn-bow needs slot sizes");
}

Value CnnBowModel::forward(const Example& e) const {
  const auto& X = e.visual;
  if (X.rank() != 2 || X.dim(1) != input_.dim)
    throw DimensionError("slot dimension mismatch: expected [S x " + std::to_string(input_.dim) + "], got " +
                         shape_string(X.shape()));
  if (X.dim(0) > input_.slots) throw DimensionError("scenario has more slots than the model was built for");
  Tensor<double> flat({static_cast<Eigen::Index>(input_.slots) * input_.dim});
  flat.data().head(X.size()) = X.data();  // row-major: slot after slot, empty slots stay zero
  return classifier(concat({word_feature(e), Value::constant(std::move(flat))}));
}

// --- LSTM family --------------------------------------------------------------

LstmModel::LstmModel(const ModelSpec& spec, const InputShape& input, const Dataset& words)
    : Model(spec, input, &words) {
  query_lstm = LstmCell(params_, init_, "query_lstm", input.dim, spec.d_hidden);
  classifier = Linear(params_, init_, "classifier", spec.d_hidden, kClasses);
}

Value LstmModel::query_gist(const Example& e) const {
  const std::array<Value, 2> seq{object_word(e.restrictor), property_word(e.scope)};
  return query_lstm.run(seq);
}

Value LstmModel::forward(const Example& e) const { return classifier(query_gist(e)); }

CnnLstmModel::CnnLstmModel(const ModelSpec& spec, const InputShape& input, const Dataset& words)
    : Model(spec, input, &words) {
  visual_lstm = LstmCell(params_, init_, "visual_lstm", input.dim, spec.d_hidden);
  query_lstm = LstmCell(params_, init_, "query_lstm", input.dim, spec.d_hidden);
  classifier = Linear(params_, init_, "classifier", 2 * spec.d_hidden, kClasses);
}

Value CnnLstmModel::visual_gist(const Example& e) const {
  Value V = visual(e);
  std::vector<Value> seq;
  for (Eigen::Index i = 0; i < e.visual.dim(0); ++i) seq.push_back(row(V, i));
  return visual_lstm.run(seq);
}

Value CnnLstmModel::query_gist(const Example& e) const {
  const std::array<Value, 2> seq{object_word(e.restrictor), property_word(e.scope)};
  return query_lstm.run(seq);
}

Value CnnLstmModel::forward(const Example& e) const { return classifier(concat({visual_gist(e), query_gist(e)})); }

// --- attention family -------------------------------------------------------

SanModel::SanModel(const ModelSpec& spec, const InputShape& input, const Dataset& words)
    : Model(spec, input, &words) {
  // hidden size = d so the query can be summed with slot gists
  query_lstm = LstmCell(params_, init_, "query_lstm", input.dim, input.dim);
  for (int t = 0; t < spec.stacks; ++t)
    attention.layers.emplace_back(params_, init_, "attention" + std::to_string(t), input.dim, spec.d_hidden);
  classifier = Linear(params_, init_, "classifier", input.dim, kClasses);
}

Value SanModel::forward(const Example& e) const {
  const std::array<Value, 2> seq{object_word(e.restrictor), property_word(e.scope)};
  return classifier(attention(visual(e), query_lstm.run(seq)).representation);
}

QmnModel::QmnModel(const ModelSpec& spec, const InputShape& input, const Dataset& words)
    : Model(spec, input, &words) {
  visual_map = params_.add("visual_map", init_.glorot({input.dim, spec.d_mem}, input.dim, spec.d_mem));
  linguistic_map = params_.add("linguistic_map", init_.glorot({spec.d_mem, input.dim}, input.dim, spec.d_mem));
  classifier = Linear(params_, init_, "classifier", 2 * spec.d_mem, kClasses);
}

Gists QmnModel::gists(const Example& e) const {
  Value V1 = matmul(visual(e), visual_map);
  Value r = matmul(linguistic_map, object_word(e.restrictor));
  Value s = matmul(linguistic_map, property_word(e.scope));
  Value S1 = cosine_rows(V1, r);
  Value W1 = scale_rows(V1, S1);
  Value S2 = cosine_rows(W1, s);
  if (spec_.qmn_softmax_s2) S2 = softmax(S2);
  Value W2 = scale_rows(W1, S2);
  return {sum(W1, 0), sum(W2, 0), S1};
}

Value QmnModel::forward(const Example& e) const {
  auto g = gists(e);
  return classifier(concat({g.restrictor, g.scope_restrictor}));
}

QsanModel::QsanModel(const ModelSpec& spec, const InputShape& input, const Dataset& words)
    : Model(spec, input, &words) {
  for (int t = 0; t < spec.stacks; ++t)
    restrictor_san.layers.emplace_back(params_, init_, "restrictor" + std::to_string(t), input.dim, spec.d_hidden);
  for (int t = 0; t < spec.stacks; ++t)
    scope_san.layers.emplace_back(params_, init_, "scope" + std::to_string(t), input.dim, spec.d_hidden);
  classifier = Linear(params_, init_, "classifier", 2 * input.dim, kClasses);
}

Gists QsanModel::gists(const Example& e) const {
  Value V = visual(e);
  auto r = restrictor_san(V, object_word(e.restrictor));
  // weights times slot count average 1, so the scope module sees vectors at their usual scale
  const double m = static_cast<double>(V.value().dim(0));
  auto s = scope_san(scale_rows(V, scale(r.final_weights, m)), property_word(e.scope));
  return {r.representation, s.representation, r.final_weights};
}

Value QsanModel::forward(const Example& e) const {
  auto g = gists(e);
  return classifier(concat({g.restrictor, g.scope_restrictor}));
}

// --- dots -------------------------------------------------------------------

DotCnnModel::DotCnnModel(const ModelSpec& spec, const InputShape& input) : Model(spec, input, nullptr) {
  if (input.height < spec.receptive || input.width < spec.receptive)
    throw std::invalid_argument("image smaller than the receptive field");
  const int F = spec.filters, R = spec.receptive;
  filters = params_.add("conv.filters", init_.glorot({F, R, R}, R * R, F * R * R));
  filter_bias = params_.add("conv.bias", Tensor<double>({F}));
  classifier = Linear(params_, init_, "classifier", F, kClasses);
}

Value DotCnnModel::pooled_features(const Example& e) const {
  const auto& X = e.visual;
  if (X.rank() != 2 || X.dim(0) != input_.height || X.dim(1) != input_.width)
    throw DimensionError("expected a " + std::to_string(input_.height) + "x" + std::to_string(input_.width) +
                         " image, got " + shape_string(X.shape()));
  return spatial_mean(tanh(conv2d(Value::constant(X), filters, filter_bias, spec_.stride)));
}

Value DotCnnModel::forward(const Example& e) const { return classifier(pooled_features(e)); }

// ---------------------------------------------------------------------------

std::unique_ptr<Model> make_model(const ModelSpec& spec, const InputShape& input, const Dataset* words) {
  spec.validate();
  if (needs_words(spec.arch)) {
    if (!words || words->object_vectors.rows() == 0)
      throw std::invalid_argument(std::string(to_string(spec.arch)) + " needs word vectors");
    if (input.dim <= 0) throw std::invalid_argument("input dimension must be positive");
  }
  switch (spec.arch) {
    case Architecture::bow: return std::make_unique<BowModel>(spec, input);
    case Architecture::cnn_bow: return std::make_unique<CnnBowModel>(spec, input);
    case Architecture::lstm: return std::make_unique<LstmModel>(spec, input, *words);
    case Architecture::cnn_lstm: return std::make_unique<CnnLstmModel>(spec, input, *words);
    case Architecture::san: return std::make_unique<SanModel>(spec, input, *words);
    case Architecture::qmn: return std::make_unique<QmnModel>(spec, input, *words);
    case Architecture::qsan: return std::make_unique<QsanModel>(spec, input, *words);
    case Architecture::dot_cnn: return std::make_unique<DotCnnModel>(spec, input);
  }
  throw std::invalid_argument("unknown architecture");
}

std::unique_ptr<Model> load_model(const Checkpoint& ckpt, const Dataset* words) {
  auto [spec, input] = decode_model_metadata(ckpt.metadata);
  auto model = make_model(spec, input, words);
  model->load(ckpt);
  return model;
}

InputShape input_shape_of(const Dataset& data) {
  InputShape in;
  in.objects = static_cast<int>(data.object_vectors.rows());
  in.properties = static_cast<int>(data.property_vectors.rows());
  in.dim = static_cast<int>(data.object_vectors.cols());
  if (!data.examples.empty()) {
    const auto& v = data.examples.front().visual;
    if (in.objects == 0 && v.rank() == 2) {
      in.height = static_cast<int>(v.dim(0));
      in.width = static_cast<int>(v.dim(1));
      in.slots = 0;
    } else if (v.rank() == 2) {
      in.slots = static_cast<int>(v.dim(0));
    }
  }
  return in;
}

}  // namespace vquant
