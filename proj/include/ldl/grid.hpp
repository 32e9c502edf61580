#pragma once

#include "ldl/io.hpp"
#include "ldl/training.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace ldl::experiments {

struct GridPoint {
  layers::ModelConfig model;
  double weight_decay = 0.0;

  /// model.id() plus "|wd=..."; the key used for resuming and selection.
  std::string id() const;
};

/// Hyperparameter lists for one model kind. The alpha and lambda axes only
/// expand for GCNII kinds.
struct HyperGrid {
  layers::ModelKind kind = layers::ModelKind::gcn;
  std::vector<int> depths{2};
  std::vector<int> widths{16};
  std::vector<layers::Activation> activations{layers::Activation::relu};
  std::vector<double> p_inputs{0.0};
  std::vector<double> p_layers{0.0};
  std::vector<double> weight_decays{0.0};
  std::vector<double> alphas{0.1};
  std::vector<double> lambdas{1.0};

  std::vector<GridPoint> expand() const;
  std::size_t size() const;
};

/// Keys layers, hidden, activation, p_input, p_layer, weight_decay, alpha,
/// lambda; each value may be a scalar or a list. Unknown keys are errors.
HyperGrid hyper_grid_from_json(const nlohmann::json& j, layers::ModelKind kind);
nlohmann::json to_json(const HyperGrid& grid);

/// Synthetic-data grid: l in 1..10, d in {5,10,20}, tanh/relu (GCNII kinds: alpha 0.1, lambda 1, relu).
HyperGrid synthetic_grid(layers::ModelKind kind);
/// Real-world grid with depths, widths, decays and dropouts as validated on the benchmark datasets.
HyperGrid realworld_grid(layers::ModelKind kind);

/// What model selection is allowed to see.
struct ValidationScore {
  std::string config_id;
  int trial = 0;
  double val_acc = 0.0;
};

/// Index into `scores` of the best configuration for each trial in
/// [0, trials), or -1 when a trial has no finite score. Ties keep the first.
std::vector<long> select_per_trial(std::span<const ValidationScore> scores, int trials);

struct TrialSelection {
  int trial = 0;
  std::string config_id;
  double val_acc = 0.0;
  double test_acc = 0.0;
};

struct GridOptions {
  TrainSpec train;
  int workers = 1;
  std::string dataset_name;
  /// Raw results file; existing rows for the same dataset/model are reused.
  std::filesystem::path results_path;
  std::function<void(const ResultRow&)> on_cell;
};

struct GridReport {
  std::string dataset;
  std::string model;
  std::vector<ResultRow> rows;
  std::vector<TrialSelection> selections;
  double mean_test_acc = 0.0;
  double std_test_acc = 0.0;
  int resumed_cells = 0;
  std::vector<std::string> warnings;

  std::vector<double> test_accuracies() const;
  SummaryRow summary() const;
};

/// Trains every (configuration, trial) cell and reports, per trial, the
/// test accuracy of the configuration with the best validation accuracy.
GridReport grid_search(const HyperGrid& grid, const data::Dataset& ds, const data::SplitSet& splits,
                       const GridOptions& options);

struct SweepRow {
  std::string model;
  int depth = 0;
  double mean_val_acc = 0.0;
  double std_val_acc = 0.0;
  double mean_test_acc = 0.0;
};

/// For each base configuration, re-trains over all trials at every depth
/// with the other hyperparameters held fixed.
std::vector<SweepRow> layer_sweep(std::span<const GridPoint> bases, std::span<const int> depths,
                                  const data::Dataset& ds, const data::SplitSet& splits, const GridOptions& options);

void write_sweep(const std::filesystem::path& path, const std::vector<SweepRow>& rows);

}  // namespace ldl::experiments
