#include "ldl/layers.hpp"

#include "ldl/errors.hpp"

#include <cmath>
#include <string>

namespace ldl::layers {

using namespace numerics;

namespace {

void require_nodes(const char* op, const Tensor& h, const graph::NormalizedOperators& ops) {
  if (h.rows() != ops.n_nodes())
    throw DimensionError(std::string(op) + ": embedding has " + std::to_string(h.rows()) + " rows for a graph of " +
                         std::to_string(ops.n_nodes()) + " nodes");
}

// X ((1 - beta) I + beta W) = (1 - beta) X + beta X W
Tensor identity_mapped(const Tensor& x, const Tensor& w, double beta) {
  if (w.rows() != x.cols() || w.cols() != x.cols())
    throw DimensionError("GCNII weight must be (d x d) for width " + std::to_string(x.cols()) + ", got " +
                         shape_string(w.rows(), w.cols()));
  return add(scale(x, 1.0 - beta), scale(matmul(x, w), beta));
}

Tensor restart_mix(const Tensor& propagated, const Tensor& h0, double alpha) {
  if (h0.rows() != propagated.rows() || h0.cols() != propagated.cols())
    throw DimensionError("GCNII initial representation " + shape_string(h0.rows(), h0.cols()) +
                         " does not match " + shape_string(propagated.rows(), propagated.cols()));
  return add(scale(propagated, 1.0 - alpha), scale(h0, alpha));
}

}  // namespace

void GCNIIParams::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("GCNII alpha must lie in (0, 1)");
  if (!(lambda > 0.0)) throw ConfigError("GCNII lambda must be positive");
  if (layer_index < 1) throw ConfigError("GCNII layer index starts at 1");
}

double GCNIIParams::beta() const { return gcnii_beta(lambda, layer_index); }

double gcnii_beta(double lambda, int layer_index) {
  return std::log(lambda / static_cast<double>(layer_index) + 1.0);
}

Tensor gcn_layer(const Tensor& h, const graph::NormalizedOperators& ops, const Tensor& w, Activation act) {
  require_nodes("gcn_layer", h, ops);
  return apply_activation(act, matmul(spmm(ops.adjacency, h), w));
}

Tensor lying_weights(const Tensor& h, const graph::MessageEdges& messages, const Tensor& v) {
  if (v.rows() != 2 * h.cols() || v.cols() != h.cols())
    throw DimensionError("lying_weights: V must be (2d x d) = " + shape_string(2 * h.cols(), h.cols()) + ", got " +
                         shape_string(v.rows(), v.cols()));
  // [h_v | h_u] V = h_v V_top + h_u V_bottom, projected per node before gathering per edge.
  const Index d = h.cols();
  const Tensor from_sender = gather_rows(matmul(h, slice_rows(v, 0, d)), messages.src);
  const Tensor from_receiver = gather_rows(matmul(h, slice_rows(v, d, d)), messages.dst);
  return apply_activation(Activation::tanh, add(from_sender, from_receiver));
}

Tensor lying_message(const Tensor& h, const graph::MessageEdges& messages, const Tensor& z) {
  return elementwise_mul(z, gather_rows(h, messages.src));
}

Tensor lying_aggregate(const Tensor& h, const graph::NormalizedOperators& ops, const Tensor& v, LyingMode mode) {
  require_nodes("lying_aggregate", h, ops);
  const auto& msg = ops.messages;
  const Tensor self = scale_rows(h, ops.self_weight);
  Tensor messages;
  if (mode == LyingMode::truthful) {
    messages = gather_rows(h, msg.src);
  } else {
    messages = lying_message(h, msg, lying_weights(h, msg, v));
  }
  return add(self, scatter_add_rows(messages, msg.dst, msg.weight, h.rows()));
}

Tensor lying_gcn_layer(const Tensor& h, const graph::NormalizedOperators& ops, const LyingLayerParams& params,
                       LyingMode mode) {
  return apply_activation(params.activation, matmul(lying_aggregate(h, ops, params.v, mode), params.w));
}

Tensor gcnii_layer(const Tensor& h, const Tensor& h0, const graph::NormalizedOperators& ops,
                   const GCNIIParams& params, Activation act) {
  require_nodes("gcnii_layer", h, ops);
  const Tensor mixed = restart_mix(spmm(ops.adjacency, h), h0, params.alpha);
  return apply_activation(act, identity_mapped(mixed, params.w, params.beta()));
}

Tensor lying_gcnii_layer(const Tensor& h, const Tensor& h0, const graph::NormalizedOperators& ops, const Tensor& v,
                         const GCNIIParams& params, Activation act, LyingMode mode) {
  const Tensor mixed = restart_mix(lying_aggregate(h, ops, v, mode), h0, params.alpha);
  return apply_activation(act, identity_mapped(mixed, params.w, params.beta()));
}

Tensor dense_layer(const Tensor& h, const Tensor& w, Activation act) {
  return apply_activation(act, matmul(h, w));
}

}  // namespace ldl::layers
