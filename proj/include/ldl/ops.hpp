#pragma once

#include "ldl/sparse.hpp"
#include "ldl/tensor.hpp"

#include <random>
#include <span>
#include <string_view>

namespace ldl::numerics {

enum class Activation { identity, tanh, relu, elu };

/// Accepts "identity", "tanh", "relu", "elu"; anything else is a ConfigError.
Activation parse_activation(std::string_view name);

/// Elementwise tanh, within a few ulp of std::tanh.
Matrix tanh_values(const Matrix& x);
std::string_view to_string(Activation kind);

Tensor matmul(const Tensor& a, const Tensor& b);
/// S * H for a constant sparse S; gradients flow into H only.
Tensor spmm(const SparseRowMatrix& s, const Tensor& h);
/// Elementwise activation. ELU uses alpha = 1.
Tensor apply_activation(Activation kind, const Tensor& x);
Tensor elementwise_mul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
/// Sum of all entries as a 1x1 tensor.
Tensor sum(const Tensor& a);

/// Inverted dropout. In eval mode (or p == 0) returns `x` itself.
Tensor dropout(const Tensor& x, double p, bool training, std::mt19937_64& rng);

/// Mean negative log-softmax likelihood over the rows listed in `mask`.
Tensor masked_softmax_cross_entropy(const Tensor& logits, std::span<const int> labels,
                                    std::span<const Index> mask);

// Edge-level building blocks for message passing.

/// out[k] = h[rows[k]]
Tensor gather_rows(const Tensor& h, std::span<const Index> rows);
/// Rows [start, start + count) of h.
Tensor slice_rows(const Tensor& h, Index start, Index count);
/// [a | b]
Tensor concat_cols(const Tensor& a, const Tensor& b);
/// out[rows[k]] += weights[k] * m[k], with `n_rows` output rows.
Tensor scatter_add_rows(const Tensor& m, std::span<const Index> rows, std::span<const double> weights,
                        Index n_rows);
/// out[i] = weights[i] * h[i]
Tensor scale_rows(const Tensor& h, std::span<const double> weights);

}  // namespace ldl::numerics
