#include "ldl/model.hpp"

#include "ldl/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

namespace ldl::layers {

using namespace numerics;

namespace {

std::string normalize_name(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (c == '_' || c == '-' || c == ' ') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

Tensor glorot(Index fan_in, Index fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(fan_in, fan_out);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return Tensor::parameter(std::move(m));
}

std::string format_number(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

}  // namespace

ModelKind parse_model_kind(std::string_view name) {
  const std::string key = normalize_name(name);
  if (key == "gcn") return ModelKind::gcn;
  if (key == "gcnii") return ModelKind::gcnii;
  if (key == "lyinggcn") return ModelKind::lying_gcn;
  if (key == "lyinggcnii") return ModelKind::lying_gcnii;
  if (key == "mlp") return ModelKind::mlp;
  throw ConfigError("unknown model kind '" + std::string(name) + "'");
}

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::gcn: return "GCN";
    case ModelKind::gcnii: return "GCNII";
    case ModelKind::lying_gcn: return "Lying-GCN";
    case ModelKind::lying_gcnii: return "Lying-GCNII";
    case ModelKind::mlp: return "MLP";
  }
  return "unknown";
}

bool is_lying(ModelKind kind) { return kind == ModelKind::lying_gcn || kind == ModelKind::lying_gcnii; }
bool is_gcnii(ModelKind kind) { return kind == ModelKind::gcnii || kind == ModelKind::lying_gcnii; }

void ModelConfig::validate() const {
  if (depth < 1) throw ConfigError("model depth must be at least 1");
  if (width < 1) throw ConfigError("hidden width must be at least 1");
  if (!(p_input >= 0.0 && p_input < 1.0)) throw ConfigError("input dropout must lie in [0, 1)");
  if (!(p_layer >= 0.0 && p_layer < 1.0)) throw ConfigError("layer dropout must lie in [0, 1)");
  if (is_gcnii(kind)) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("GCNII alpha must lie in (0, 1)");
    if (!(lambda > 0.0)) throw ConfigError("GCNII lambda must be positive");
  }
}

std::string ModelConfig::id() const {
  std::string s = std::string(to_string(kind)) + "|l=" + std::to_string(depth) + "|d=" + std::to_string(width) +
                  "|act=" + std::string(numerics::to_string(activation)) + "|pi=" + format_number(p_input) +
                  "|pl=" + format_number(p_layer);
  if (is_gcnii(kind)) s += "|a=" + format_number(alpha) + "|lam=" + format_number(lambda);
  return s;
}

nlohmann::json to_json(const ModelConfig& cfg) {
  nlohmann::json j{{"model", std::string(to_string(cfg.kind))},
                   {"layers", cfg.depth},
                   {"hidden", cfg.width},
                   {"activation", std::string(numerics::to_string(cfg.activation))},
                   {"p_input", cfg.p_input},
                   {"p_layer", cfg.p_layer}};
  if (is_gcnii(cfg.kind)) {
    j["alpha"] = cfg.alpha;
    j["lambda"] = cfg.lambda;
  }
  return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j, const ModelConfig& base) {
  if (!j.is_object()) throw ConfigError("model configuration must be a JSON object");
  static const std::set<std::string> known{"model",   "layers", "hidden", "activation",
                                           "p_input", "p_layer", "alpha", "lambda"};
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw ConfigError("unknown model configuration key '" + key + "'");
  ModelConfig cfg = base;
  try {
    if (j.contains("model")) cfg.kind = parse_model_kind(j.at("model").get<std::string>());
    if (j.contains("layers")) cfg.depth = j.at("layers").get<int>();
    if (j.contains("hidden")) cfg.width = j.at("hidden").get<int>();
    if (j.contains("activation")) cfg.activation = parse_activation(j.at("activation").get<std::string>());
    if (j.contains("p_input")) cfg.p_input = j.at("p_input").get<double>();
    if (j.contains("p_layer")) cfg.p_layer = j.at("p_layer").get<double>();
    if (j.contains("alpha")) cfg.alpha = j.at("alpha").get<double>();
    if (j.contains("lambda")) cfg.lambda = j.at("lambda").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid model configuration: ") + e.what());
  }
  return cfg;
}

std::vector<Tensor> ModelParams::parameters() const {
  std::vector<Tensor> out{input};
  for (const auto& l : layers) {
    out.push_back(l.w);
    if (l.v.defined()) out.push_back(l.v);
  }
  out.push_back(classifier);
  return out;
}

Index ModelParams::parameter_count() const {
  Index total = 0;
  for (const auto& p : parameters()) total += p.values().size();
  return total;
}

ModelParams assemble_model(const ModelConfig& cfg, Index in_features, int num_classes, std::mt19937_64& rng) {
  cfg.validate();
  if (in_features < 1) throw ConfigError("input width must be positive");
  if (num_classes < 1) throw ConfigError("class count must be positive");
  ModelParams model;
  model.config = cfg;
  model.in_features = in_features;
  model.num_classes = num_classes;
  const Index d = cfg.width;
  model.input = glorot(in_features, d, rng);
  for (int l = 0; l < cfg.depth; ++l) {
    LayerWeights lw;
    lw.w = glorot(d, d, rng);
    if (is_lying(cfg.kind)) lw.v = glorot(2 * d, d, rng);
    model.layers.push_back(std::move(lw));
  }
  model.classifier = glorot(d, num_classes, rng);
  return model;
}

ForwardResult forward(const ModelParams& model, const Tensor& features, const graph::NormalizedOperators& ops,
                      const ForwardOptions& options, std::mt19937_64& rng) {
  const ModelConfig& cfg = model.config;
  if (features.cols() != model.in_features)
    throw DimensionError("forward: features have width " + std::to_string(features.cols()) + ", model expects " +
                         std::to_string(model.in_features));
  if (cfg.kind != ModelKind::mlp && features.rows() != ops.n_nodes())
    throw DimensionError("forward: " + std::to_string(features.rows()) + " feature rows for a graph of " +
                         std::to_string(ops.n_nodes()) + " nodes");

  ForwardResult out;
  const Tensor h0 = matmul(dropout(features, cfg.p_input, options.training, rng), model.input);
  if (options.keep_embeddings) out.embeddings.push_back(h0);

  Tensor h = h0;
  for (int l = 0; l < cfg.depth; ++l) {
    const LayerWeights& lw = model.layers[l];
    const Tensor x = dropout(h, cfg.p_layer, options.training, rng);
    const GCNIIParams g2{lw.w, cfg.alpha, cfg.lambda, l + 1};
    switch (cfg.kind) {
      case ModelKind::gcn: h = gcn_layer(x, ops, lw.w, cfg.activation); break;
      case ModelKind::lying_gcn:
        h = lying_gcn_layer(x, ops, LyingLayerParams{lw.v, lw.w, cfg.activation}, options.lying_mode);
        break;
      case ModelKind::gcnii: h = gcnii_layer(x, h0, ops, g2, cfg.activation); break;
      case ModelKind::lying_gcnii:
        h = lying_gcnii_layer(x, h0, ops, lw.v, g2, cfg.activation, options.lying_mode);
        break;
      case ModelKind::mlp: h = dense_layer(x, lw.w, cfg.activation); break;
    }
    if (options.keep_embeddings) out.embeddings.push_back(h);
  }
  out.logits = matmul(h, model.classifier);
  return out;
}

ForwardResult forward(const ModelParams& model, const data::Dataset& ds, const ForwardOptions& options,
                      std::mt19937_64& rng) {
  const auto ops = graph::normalize_adjacency(ds.graph);
  return forward(model, Tensor::constant(ds.features), ops, options, rng);
}

}  // namespace ldl::layers
