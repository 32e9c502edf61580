#pragma once

#include "ldl/dataset.hpp"
#include "ldl/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace ldl::experiments {

enum class OptimizerKind { adam, adamw };
OptimizerKind parse_optimizer(std::string_view name);
std::string_view to_string(OptimizerKind kind);

struct TrainSpec {
  OptimizerKind optimizer = OptimizerKind::adam;
  double lr = 0.01;
  double weight_decay = 0.0;
  int max_epochs = 1000;
  /// Epochs without a validation-accuracy improvement before stopping.
  int patience = 200;
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json to_json(const TrainSpec& spec);
TrainSpec train_spec_from_json(const nlohmann::json& j, const TrainSpec& base = {});

struct TrialResult {
  std::string config_id;
  int trial = 0;
  double best_val_acc = 0.0;
  /// Test accuracy of the best-validation checkpoint.
  double test_acc = 0.0;
  double train_acc = 0.0;
  int best_epoch = 0;
  int epochs = 0;
  double seconds = 0.0;
  bool failed = false;
  std::string failure;
};

/// Deterministic 64-bit seed for one (base seed, config, trial) cell.
std::uint64_t cell_seed(std::uint64_t base, std::string_view config_id, int trial);

/// Fraction of `nodes` whose arg-max logit equals the label.
double accuracy(const Matrix& logits, std::span<const int> labels, std::span<const Index> nodes);

struct TrainedModel {
  layers::ModelParams params;
  TrialResult result;
};

/// Full-batch training on trial.train with early stopping on validation
/// accuracy; the returned parameters are the best-validation checkpoint.
/// A non-finite loss marks the result failed instead of throwing.
TrainedModel train_model(const layers::ModelConfig& cfg, const TrainSpec& spec, const data::Dataset& ds,
                         const graph::NormalizedOperators& ops, const data::Trial& trial, int trial_index = 0);

/// Writes `node_id,label,h_1..h_d` for layer `layer_index` (0 = input layer output).
void export_embeddings(const layers::ModelParams& model, const data::Dataset& ds, int layer_index,
                       const std::filesystem::path& path);

}  // namespace ldl::experiments
