#pragma once

#include "vquant/splits.hpp"
#include "vquant/train.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace vquant {

using nlohmann::json;

json to_json(const ModelSpec& spec);
json to_json(const TrainConfig& config);
json to_json(const SplitSpec& spec);
json to_json(const EvalReport& report);
json to_json(const TrainResult& result);  // history and best epoch, no tensors
json to_json(const BiasReport& report);
json to_json(const BoundaryDip& dip);

ModelSpec model_spec_from_json(const json& j);
TrainConfig train_config_from_json(const json& j);

// Tab-separated plot data with a header row.
std::string ratio_bins_tsv(const EvalReport& report);    // label, bin, low, high, count, accuracy ("NA" when empty)
std::string distractors_tsv(const EvalReport& report);   // cardinality, count, correct, accuracy
std::string confusion_tsv(const EvalReport& report);     // rows true label, columns predicted
std::string history_tsv(const TrainResult& result);      // epoch, train_loss, train_accuracy, val_accuracy

/// Writes text with a trailing newline, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace vquant
