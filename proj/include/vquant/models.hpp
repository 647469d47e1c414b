#pragma once

#include "vquant/checkpoint.hpp"
#include "vquant/dataset.hpp"
#include "vquant/ops.hpp"
#include "vquant/random.hpp"

#include <array>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vquant {

using Value = Var<double>;

enum class Architecture { bow, cnn_bow, lstm, cnn_lstm, san, qmn, qsan, dot_cnn };

inline constexpr std::array<Architecture, 8> kAllArchitectures = {
    Architecture::bow, Architecture::cnn_bow, Architecture::lstm, Architecture::cnn_lstm,
    Architecture::san, Architecture::qmn,     Architecture::qsan, Architecture::dot_cnn};

std::string_view to_string(Architecture a);
Architecture parse_architecture(std::string_view name);

struct ModelSpec {
  Architecture arch = Architecture::qsan;
  int d_embed = 32;
  int d_hidden = 32;
  int d_mem = 32;
  int stacks = 2;
  std::uint64_t seed = 0;
  bool qmn_softmax_s2 = false;  // QMN: softmax the second similarity vector
  // dot-cnn
  int filters = 8;
  int receptive = 5;
  int stride = 2;

  void validate() const;
};

/// Sizes of the data a model is built for.
struct InputShape {
  int objects = 0;
  int properties = 0;
  int dim = 0;     // slot / word vector dimension
  int slots = 16;
  int height = 0;  // dot images
  int width = 0;

  int vocabulary() const { return objects + properties; }
};

/// Closed-form trainable scalar count per architecture.
std::size_t expected_parameter_count(const ModelSpec& spec, const InputShape& input);

std::string encode_model_metadata(const ModelSpec& spec, const InputShape& input);
std::pair<ModelSpec, InputShape> decode_model_metadata(const std::string& metadata);

// ---------------------------------------------------------------------------
// Layers. Each registers its tensors in a ParameterSet under a name prefix.

/// Glorot-uniform weights, zero biases.
class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(make_rng(seed, Stream::init)) {}
  Tensor<double> glorot(Shape shape, Eigen::Index fan_in, Eigen::Index fan_out);

 private:
  Rng rng_;
};

class Linear {
 public:
  Linear() = default;
  Linear(ParameterSet& params, Initializer& init, const std::string& name, int in, int out);
  Value operator()(const Value& x) const;

  Value weight, bias;  // [out x in], [out]
};

class LstmCell {
 public:
  LstmCell() = default;
  LstmCell(ParameterSet& params, Initializer& init, const std::string& name, int in, int hidden);

  struct State {
    Value h, c;  // empty before the first step
  };
  State step(const Value& x, const State& prev) const;
  /// Runs over the sequence from a zero state and returns the last hidden vector.
  Value run(std::span<const Value> inputs) const;

  int hidden = 0;
  Value input_weight, recurrent_weight, bias;  // gate order: input, forget, output, candidate
};

/**
 * Additive attention over slots: h_i = tanh(W_v v_i + W_q q + b),
 * score_i = w . h_i, weights = softmax(score), gist = sum_i weights_i v_i.
 */
class AttentionLayer {
 public:
  AttentionLayer() = default;
  AttentionLayer(ParameterSet& params, Initializer& init, const std::string& name, int dim, int hidden);

  struct Output {
    Value gist;     // [d]
    Value weights;  // [slots]
  };
  Output operator()(const Value& visual, const Value& query) const;

  Value visual_weight;  // [d x hidden], applied as V . W_v
  Value query_weight;   // [hidden x d]
  Value bias;           // [hidden]
  Value score;          // [hidden]
};

/// Stacked attention: u_t = u_{t-1} + gist_t, starting from u_0 = query.
struct StackedAttention {
  std::vector<AttentionLayer> layers;

  struct Output {
    Value representation;   // u_stacks
    Value final_weights;    // attention of the last layer
  };
  Output operator()(const Value& visual, const Value& query) const;
};

// ---------------------------------------------------------------------------

class Model {
 public:
  virtual ~Model() = default;

  /// Five unnormalized quantifier scores, ordered no..all.
  virtual Value forward(const Example& example) const = 0;

  const ModelSpec& spec() const { return spec_; }
  const InputShape& input() const { return input_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }

  Checkpoint checkpoint() const;
  void load(const Checkpoint& ckpt);

 protected:
  Model(ModelSpec spec, InputShape input, const Dataset* words);

  Value visual(const Example& e) const;
  Value object_word(int id) const;
  Value property_word(int id) const;

  ModelSpec spec_;
  InputShape input_;
  ParameterSet params_;
  Initializer init_;
  std::vector<Tensor<double>> object_words_;
  std::vector<Tensor<double>> property_words_;
};

/// Language-only: one-hot bag of words -> word feature -> 5 logits.
class BowModel : public Model {
 public:
  BowModel(const ModelSpec& spec, const InputShape& input);
  Value forward(const Example& e) const override;
  Value word_feature(const Example& e) const;

  Linear embed;
  Linear classifier;  // CNN+BOW: columns [0, E) read the word feature, the rest the slots

 protected:
  BowModel(const ModelSpec& spec, const InputShape& input, bool with_visual);
};

/// Word feature concatenated with the zero-padded slot concatenation.
class CnnBowModel : public BowModel {
 public:
  CnnBowModel(const ModelSpec& spec, const InputShape& input);
  Value forward(const Example& e) const override;
};

/// Two-step LSTM over [e_restrictor, e_scope].
class LstmModel : public Model {
 public:
  LstmModel(const ModelSpec& spec, const InputShape& input, const Dataset& words);
  Value forward(const Example& e) const override;
  Value query_gist(const Example& e) const;

  LstmCell query_lstm;
  Linear classifier;
};

/// Visual LSTM over slots (Gist1) beside the query LSTM (Gist2).
class CnnLstmModel : public Model {
 public:
  CnnLstmModel(const ModelSpec& spec, const InputShape& input, const Dataset& words);
  Value forward(const Example& e) const override;
  Value visual_gist(const Example& e) const;
  Value query_gist(const Example& e) const;

  LstmCell visual_lstm;
  LstmCell query_lstm;
  Linear classifier;  // columns [0, H) read Gist1, [H, 2H) read Gist2
};

/// Query LSTM (hidden size = slot dimension) feeding stacked attention.
class SanModel : public Model {
 public:
  SanModel(const ModelSpec& spec, const InputShape& input, const Dataset& words);
  Value forward(const Example& e) const override;

  LstmCell query_lstm;
  StackedAttention attention;
  Linear classifier;
};

struct Gists {
  Value restrictor;        // restrictor gist
  Value scope_restrictor;  // scope ∩ restrictor gist
  Value restrictor_weights;
};

/// Two-hop memory network: cosine similarity to restrictor, then to scope.
class QmnModel : public Model {
 public:
  QmnModel(const ModelSpec& spec, const InputShape& input, const Dataset& words);
  Value forward(const Example& e) const override;
  Gists gists(const Example& e) const;

  Value visual_map;      // [d x d_mem]
  Value linguistic_map;  // [d_mem x d]
  Linear classifier;
};

/// Restrictor SAN, then a scope SAN over slots reweighted by restrictor attention.
class QsanModel : public Model {
 public:
  QsanModel(const ModelSpec& spec, const InputShape& input, const Dataset& words);
  Value forward(const Example& e) const override;
  Gists gists(const Example& e) const;

  StackedAttention restrictor_san;
  StackedAttention scope_san;
  Linear classifier;
};

/// One convolution layer -> tanh -> spatial average -> 5 logits.
class DotCnnModel : public Model {
 public:
  DotCnnModel(const ModelSpec& spec, const InputShape& input);
  Value forward(const Example& e) const override;
  Value pooled_features(const Example& e) const;

  Value filters;  // [F x R x R]
  Value filter_bias;
  Linear classifier;
};

/// `words` supplies frozen word vectors; it may be null for bow, cnn-bow and dot-cnn.
std::unique_ptr<Model> make_model(const ModelSpec& spec, const InputShape& input, const Dataset* words);
/// Rebuilds the architecture recorded in a checkpoint and loads its parameters.
std::unique_ptr<Model> load_model(const Checkpoint& ckpt, const Dataset* words);

/// Vocabulary sizes from the frozen word tables, slot or image sizes from the first example.
InputShape input_shape_of(const Dataset& data);

}  // namespace vquant
