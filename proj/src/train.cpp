#include "vquant/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vquant {

std::string_view to_string(Optimizer o) { return o == Optimizer::adam ? "adam" : "sgd"; }

Optimizer parse_optimizer(std::string_view name) {
  if (name == "sgd") return Optimizer::sgd;
  if (name == "adam") return Optimizer::adam;
  throw std::invalid_argument("unknown optimizer '" + std::string(name) + "' (expected sgd or adam)");
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0) || !std::isfinite(learning_rate)) throw std::invalid_argument("learning rate must be >= 0");
  if (batch_size <= 0) throw std::invalid_argument("batch size must be positive");
  if (max_epochs <= 0) throw std::invalid_argument("max epochs must be positive");
  if (patience <= 0) throw std::invalid_argument("patience must be positive");
  if (!(momentum >= 0 && momentum < 1)) throw std::invalid_argument("momentum must be in [0, 1)");
}

int argmax_lower(const Tensor<double>& logits) {
  int best = 0;
  for (Eigen::Index i = 1; i < logits.size(); ++i)
    if (logits[i] > logits[best]) best = static_cast<int>(i);
  return best;
}

TrainResult train(Model& model, const Dataset& train_set, const Dataset& val_set, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.examples.empty()) throw std::invalid_argument("empty training set");
  if (val_set.examples.empty()) throw std::invalid_argument("empty validation set");

  auto& params = model.parameters();
  // sgd keeps a velocity per tensor; adam also keeps the second moment
  std::vector<Vector<double>> velocity, second;
  for (const auto& e : params.entries()) {
    velocity.push_back(Vector<double>::Zero(e.var.value().size()));
    second.push_back(Vector<double>::Zero(e.var.value().size()));
  }
  constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  long step = 0;

  Rng rng = make_rng(config.seed, Stream::shuffle);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  int stale = 0;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0;
    int hits = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const double seed = 1.0 / static_cast<double>(end - start);
      params.zero_grad();
      for (std::size_t i = start; i < end; ++i) {
        const Example& ex = train_set.examples[order[i]];
        Value logits = model.forward(ex);
        Value loss = cross_entropy(logits, ordinal(ex.label));
        const double l = loss.value().item();
        if (!std::isfinite(l)) {
          throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + " on datapoint " +
                                std::to_string(ex.id) + "; try a smaller learning rate");
        }
        loss_sum += l;
        hits += argmax_lower(logits.value()) == ordinal(ex.label);
        backward(loss, seed);
      }
      auto& entries = params.entries();
      ++step;
      const double bc1 = 1 - std::pow(beta1, static_cast<double>(step));
      const double bc2 = 1 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t p = 0; p < entries.size(); ++p) {
        auto& var = entries[p].var;
        if (var.get()->grad.empty()) continue;  // untouched this batch
        const auto& g = var.grad().data();
        if (!g.allFinite()) {
          throw DivergenceError("non-finite gradient for " + entries[p].name + " at epoch " + std::to_string(epoch));
        }
        if (config.optimizer == Optimizer::adam) {
          velocity[p] = beta1 * velocity[p] + (1 - beta1) * g;
          second[p] = beta2 * second[p] + (1 - beta2) * g.cwiseAbs2();
          var.mutable_value().data().array() -=
              config.learning_rate * (velocity[p].array() / bc1) / ((second[p].array() / bc2).sqrt() + adam_eps);
        } else {
          velocity[p] = config.momentum * velocity[p] + g;
          var.mutable_value().data() -= config.learning_rate * velocity[p];
        }
      }
    }
    params.zero_grad();

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.train_accuracy = static_cast<double>(hits) / static_cast<double>(order.size());
    rec.val_accuracy = accuracy(predict(model, val_set));
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.val_accuracy > result.best_val_accuracy) {
      result.best_val_accuracy = rec.val_accuracy;
      result.best_epoch = epoch;
      result.best = model.checkpoint();
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  model.load(result.best);
  return result;
}

}  // namespace vquant
