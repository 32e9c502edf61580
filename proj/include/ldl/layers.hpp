#pragma once

#include "ldl/graph.hpp"
#include "ldl/ops.hpp"

namespace ldl::layers {

using numerics::Activation;
using numerics::Tensor;

/// Parameters of one lying layer. `v` maps [h_src | h_dst] (2d) to d opinion
/// weights and is stored as a (2d x d) matrix applied from the right; `w` is
/// stored as (d x d') in the same convention.
struct LyingLayerParams {
  Tensor v;
  Tensor w;
  Activation activation = Activation::relu;
};

/// One GCNII layer: restart weight `alpha`, identity-map strength `lambda`,
/// and the 1-based position `layer_index` in the stack.
struct GCNIIParams {
  Tensor w;
  double alpha = 0.1;
  double lambda = 1.0;
  int layer_index = 1;

  void validate() const;
  double beta() const;
};

/// ln(lambda / layer + 1)
double gcnii_beta(double lambda, int layer_index);

/// `truthful` clamps every lying weight to exactly 1, turning the lying
/// aggregate back into plain GCN propagation.
enum class LyingMode { learned, truthful };

/// sigma(S~ H W)
Tensor gcn_layer(const Tensor& h, const graph::NormalizedOperators& ops, const Tensor& w, Activation act);

/// Row k holds z for the directed edge messages.src[k] -> messages.dst[k]:
/// tanh([h_src | h_dst] V).
Tensor lying_weights(const Tensor& h, const graph::MessageEdges& messages, const Tensor& v);

/// Row k holds z_k (.) h_src(k).
Tensor lying_message(const Tensor& h, const graph::MessageEdges& messages, const Tensor& z);

/// S~_uu h_u + sum_v S~_uv m_{v->u} for every node u.
Tensor lying_aggregate(const Tensor& h, const graph::NormalizedOperators& ops, const Tensor& v,
                       LyingMode mode = LyingMode::learned);

Tensor lying_gcn_layer(const Tensor& h, const graph::NormalizedOperators& ops, const LyingLayerParams& params,
                       LyingMode mode = LyingMode::learned);

/// sigma( ((1-alpha) S~ H + alpha H0) ((1-beta) I + beta W) )
Tensor gcnii_layer(const Tensor& h, const Tensor& h0, const graph::NormalizedOperators& ops,
                   const GCNIIParams& params, Activation act);

/// gcnii_layer with S~ H replaced by the lying aggregate built from `v`.
Tensor lying_gcnii_layer(const Tensor& h, const Tensor& h0, const graph::NormalizedOperators& ops,
                         const Tensor& v, const GCNIIParams& params, Activation act,
                         LyingMode mode = LyingMode::learned);

/// sigma(H W), the structure-agnostic layer of the MLP baseline.
Tensor dense_layer(const Tensor& h, const Tensor& w, Activation act);

}  // namespace ldl::layers
