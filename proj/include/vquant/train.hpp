#pragma once

#include "vquant/models.hpp"

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vquant {

/// Raised when a minibatch produces a non-finite loss or gradient.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Optimizer { sgd, adam };

std::string_view to_string(Optimizer o);
Optimizer parse_optimizer(std::string_view name);

struct TrainConfig {
  Optimizer optimizer = Optimizer::sgd;
  double learning_rate = 0.05;
  int batch_size = 32;
  int max_epochs = 100;
  int patience = 10;
  std::uint64_t seed = 0;
  double momentum = 0.0;  // sgd only; 0 is plain SGD

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0;      // mean over the epoch's datapoints
  double train_accuracy = 0;  // of the predictions made while training
  double val_accuracy = 0;
};

struct TrainResult {
  Checkpoint best;  // parameters at the best validation epoch
  int best_epoch = 0;
  double best_val_accuracy = -1;
  std::vector<EpochRecord> history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/**
 * Minibatch SGD on mean cross-entropy. Validation accuracy is measured after
 * every epoch; training stops after `patience` epochs without a strict
 * improvement, and the model is left holding its best-validation parameters.
 */
TrainResult train(Model& model, const Dataset& train_set, const Dataset& val_set, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// Index of the largest logit; ties go to the lower ordinal.
int argmax_lower(const Tensor<double>& logits);

struct Prediction {
  std::int64_t id = 0;
  Quantifier label = Quantifier::no;
  Quantifier predicted = Quantifier::no;
  SetCounts counts;
  int distractors_with_scope = 0;
};

std::vector<Prediction> predict(const Model& model, const Dataset& data);
double accuracy(std::span<const Prediction> predictions);

struct RatioBin {
  Quantifier label = Quantifier::no;
  int index = 0;
  double low = 0, high = 0;  // ratio interval; closedness follows the label's range
  int count = 0;
  int correct = 0;
  std::optional<double> accuracy;  // absent for empty bins
};

struct DistractorRow {
  int cardinality = 0;
  int count = 0;
  int correct = 0;
  double accuracy = 0;
};

struct EvalReport {
  int total = 0;
  int correct = 0;
  double accuracy = 0;
  std::array<int, kNumQuantifiers> label_counts{};
  std::array<std::optional<double>, kNumQuantifiers> label_accuracy{};
  std::array<std::array<int, kNumQuantifiers>, kNumQuantifiers> confusion{};  // [true][predicted]
  std::array<int, kNumQuantifiers> adjacency{};  // by scale distance 0..4
  std::vector<RatioBin> ratio_bins;
  std::vector<DistractorRow> distractors;
};

/**
 * Bins for few/some/most split the label's ratio range into `bins` equal
 * parts: few (0, .17], some (.17, .70), most [.70, 1). no and all get one bin.
 */
std::vector<RatioBin> ratio_bin_analysis(std::span<const Prediction> predictions, int bins = 4);
/// Rows for every cardinality from 0 to the maximum observed, gaps included.
std::vector<DistractorRow> distractor_analysis(std::span<const Prediction> predictions);

EvalReport summarize(std::span<const Prediction> predictions, int bins = 4);
EvalReport evaluate(const Model& model, const Dataset& data, int bins = 4);

/// Share of errors at each scale distance 1..4 (0 when there are no errors).
double adjacent_error_share(const EvalReport& report);

struct BoundaryDip {
  struct Label {
    Quantifier label = Quantifier::few;
    std::optional<double> boundary;  // pooled accuracy of the first and last non-empty bins
    std::optional<double> interior;  // pooled accuracy of the non-empty bins between them
    bool dipped = false;             // boundary <= interior
  };
  std::vector<Label> labels;  // few, some, most
  int dipped_count() const;
  bool holds() const { return dipped_count() >= 2; }
};

BoundaryDip boundary_dip(std::span<const RatioBin> bins);

}  // namespace vquant
