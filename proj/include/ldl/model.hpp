#pragma once

#include "ldl/dataset.hpp"
#include "ldl/layers.hpp"

#include <json.hpp>

#include <random>
#include <string>
#include <vector>

namespace ldl::layers {

enum class ModelKind { gcn, gcnii, lying_gcn, lying_gcnii, mlp };

/// Accepts the display names ("Lying-GCN") case-insensitively, with '-' or '_'.
ModelKind parse_model_kind(std::string_view name);
std::string_view to_string(ModelKind kind);
bool is_lying(ModelKind kind);
bool is_gcnii(ModelKind kind);

struct ModelConfig {
  ModelKind kind = ModelKind::gcn;
  int depth = 2;
  int width = 16;
  Activation activation = Activation::relu;
  double p_input = 0.0;
  double p_layer = 0.0;
  /// GCNII restart weight and identity-map strength (GCNII kinds only).
  double alpha = 0.1;
  double lambda = 1.0;

  void validate() const;
  /// Stable identifier used in result files, e.g. "Lying-GCN|l=2|d=16|act=relu|pi=0|pl=0".
  std::string id() const;
};

nlohmann::json to_json(const ModelConfig& cfg);
/// Missing keys keep the defaults of `base`.
ModelConfig model_config_from_json(const nlohmann::json& j, const ModelConfig& base = {});

struct LayerWeights {
  Tensor w;
  /// Opinion-weight map; undefined for kinds without lying.
  Tensor v;
};

struct ModelParams {
  ModelConfig config;
  Index in_features = 0;
  int num_classes = 0;
  Tensor input;
  std::vector<LayerWeights> layers;
  Tensor classifier;

  /// Trainable tensors in a fixed order: input, per-layer (w, v), classifier.
  std::vector<Tensor> parameters() const;
  Index parameter_count() const;
};

/// Input layer f -> d, `depth` layers of width d, linear classifier d -> C,
/// all Glorot-uniform initialized from `rng`; no bias terms.
ModelParams assemble_model(const ModelConfig& cfg, Index in_features, int num_classes, std::mt19937_64& rng);

struct ForwardOptions {
  bool training = false;
  bool keep_embeddings = false;
  LyingMode lying_mode = LyingMode::learned;
};

struct ForwardResult {
  Tensor logits;
  /// embeddings[0] is the input-layer output, embeddings[l] the output of layer l.
  std::vector<Tensor> embeddings;
};

ForwardResult forward(const ModelParams& model, const Tensor& features, const graph::NormalizedOperators& ops,
                      const ForwardOptions& options, std::mt19937_64& rng);

/// Convenience overload that normalizes `ds.graph` on the fly.
ForwardResult forward(const ModelParams& model, const data::Dataset& ds, const ForwardOptions& options,
                      std::mt19937_64& rng);

}  // namespace ldl::layers
