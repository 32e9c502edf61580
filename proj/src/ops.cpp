#include "ldl/ops.hpp"

#include "ldl/errors.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace ldl::numerics {

namespace {

std::string shape_of(const Tensor& t) { return shape_string(t.rows(), t.cols()); }

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_of(a) + " vs " + shape_of(b));
}

}  // namespace

Matrix tanh_values(const Matrix& x) {
  // Vectorized exp on the bulk; an odd Taylor polynomial where 1 - e^{-2|x|} would cancel.
  using Array = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Array t = (-2.0 * x.array().abs()).exp();
  Matrix out = ((1.0 - t) / (1.0 + t)).matrix();
  double* o = out.data();
  const double* v = x.data();
  for (Index k = 0; k < x.size(); ++k) {
    const double a = std::abs(v[k]);
    if (a < 1e-2) {
      const double a2 = a * a;
      o[k] = a * (1.0 + a2 * (-1.0 / 3.0 + a2 * (2.0 / 15.0 + a2 * (-17.0 / 315.0))));
    }
    o[k] = std::copysign(o[k], v[k]);
  }
  return out;
}

Activation parse_activation(std::string_view name) {
  if (name == "identity" || name == "linear") return Activation::identity;
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  if (name == "elu") return Activation::elu;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation kind) {
  switch (kind) {
    case Activation::identity: return "identity";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::elu: return "elu";
  }
  return "unknown";
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows())
    throw DimensionError("matmul: " + shape_of(a) + " times " + shape_of(b));
  Matrix out = a.values() * b.values();
  return Tensor::from_op(std::move(out), {a, b}, [a, b](const Matrix& g) {
    if (a.requires_grad()) a.accumulate_grad(g * b.values().transpose());
    if (b.requires_grad()) b.accumulate_grad(a.values().transpose() * g);
  });
}

Tensor spmm(const SparseRowMatrix& s, const Tensor& h) {
  Matrix out = s.multiply(h.values());
  return Tensor::from_op(std::move(out), {h}, [s, h](const Matrix& g) {
    h.accumulate_grad(s.transpose_multiply(g));
  });
}

Tensor apply_activation(Activation kind, const Tensor& x) {
  const Matrix& v = x.values();
  switch (kind) {
    case Activation::identity:
      return Tensor::from_op(v, {x}, [x](const Matrix& g) { x.accumulate_grad(g); });
    case Activation::tanh: {
      Matrix out = tanh_values(v);
      Matrix deriv = (1.0 - out.array().square()).matrix();
      return Tensor::from_op(std::move(out), {x}, [x, deriv = std::move(deriv)](const Matrix& g) {
        x.accumulate_grad(g.cwiseProduct(deriv));
      });
    }
    case Activation::relu: {
      Matrix out = v.cwiseMax(0.0);
      return Tensor::from_op(std::move(out), {x}, [x](const Matrix& g) {
        x.accumulate_grad((x.values().array() > 0.0).select(g, 0.0).matrix());
      });
    }
    case Activation::elu: {
      Matrix out = (v.array() > 0.0).select(v, v.array().exp() - 1.0).matrix();
      return Tensor::from_op(std::move(out), {x}, [x](const Matrix& g) {
        const auto& xv = x.values().array();
        x.accumulate_grad((xv > 0.0).select(g.array(), g.array() * xv.exp()).matrix());
      });
    }
  }
  throw ConfigError("unknown activation kind");
}

Tensor elementwise_mul(const Tensor& a, const Tensor& b) {
  require_same_shape("elementwise_mul", a, b);
  Matrix out = a.values().cwiseProduct(b.values());
  return Tensor::from_op(std::move(out), {a, b}, [a, b](const Matrix& g) {
    if (a.requires_grad()) a.accumulate_grad(g.cwiseProduct(b.values()));
    if (b.requires_grad()) b.accumulate_grad(g.cwiseProduct(a.values()));
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  Matrix out = a.values() + b.values();
  return Tensor::from_op(std::move(out), {a, b}, [a, b](const Matrix& g) {
    a.accumulate_grad(g);
    b.accumulate_grad(g);
  });
}

Tensor scale(const Tensor& a, double factor) {
  Matrix out = a.values() * factor;
  return Tensor::from_op(std::move(out), {a}, [a, factor](const Matrix& g) { a.accumulate_grad(g * factor); });
}

Tensor sum(const Tensor& a) {
  Matrix out(1, 1);
  out(0, 0) = a.values().sum();
  return Tensor::from_op(std::move(out), {a}, [a](const Matrix& g) {
    a.accumulate_grad(Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
  });
}

Tensor dropout(const Tensor& x, double p, bool training, std::mt19937_64& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw ConfigError("dropout probability must lie in [0, 1), got " + std::to_string(p));
  if (!training || p == 0.0) return x;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - p);
  Matrix mask(x.rows(), x.cols());
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = unif(rng) < p ? 0.0 : keep_scale;
  Matrix out = x.values().cwiseProduct(mask);
  return Tensor::from_op(std::move(out), {x}, [x, mask = std::move(mask)](const Matrix& g) {
    x.accumulate_grad(g.cwiseProduct(mask));
  });
}

Tensor masked_softmax_cross_entropy(const Tensor& logits, std::span<const int> labels,
                                    std::span<const Index> mask) {
  if (mask.empty()) throw EvaluationError("cross entropy over an empty mask");
  if (static_cast<Index>(labels.size()) != logits.rows())
    throw DimensionError("cross entropy: " + std::to_string(labels.size()) + " labels for logits " +
                         shape_of(logits));
  const Index classes = logits.cols();
  const Matrix& z = logits.values();
  Matrix probs(static_cast<Index>(mask.size()), classes);
  double total = 0.0;
  for (std::size_t k = 0; k < mask.size(); ++k) {
    const Index i = mask[k];
    if (i < 0 || i >= z.rows()) throw DimensionError("cross entropy: mask index out of range");
    const int y = labels[i];
    if (y < 0 || y >= classes) throw ValidationError("label " + std::to_string(y) + " outside [0, C)");
    const double mx = z.row(i).maxCoeff();
    auto shifted = (z.row(i).array() - mx).eval();
    const double lse = std::log(shifted.exp().sum());
    total += lse - shifted(y);
    probs.row(static_cast<Index>(k)) = (shifted - lse).exp().matrix();
  }
  const double inv = 1.0 / static_cast<double>(mask.size());
  Matrix out(1, 1);
  out(0, 0) = total * inv;
  std::vector<Index> rows(mask.begin(), mask.end());
  std::vector<int> ys;
  ys.reserve(mask.size());
  for (Index i : rows) ys.push_back(labels[i]);
  return Tensor::from_op(std::move(out), {logits},
                         [logits, probs = std::move(probs), rows = std::move(rows), ys = std::move(ys),
                          inv](const Matrix& g) {
                           Matrix grad = Matrix::Zero(logits.rows(), logits.cols());
                           const double s = g(0, 0) * inv;
                           for (std::size_t k = 0; k < rows.size(); ++k) {
                             grad.row(rows[k]) += s * probs.row(static_cast<Index>(k));
                             grad(rows[k], ys[k]) -= s;
                           }
                           logits.accumulate_grad(grad);
                         });
}

Tensor gather_rows(const Tensor& h, std::span<const Index> rows) {
  const Matrix& v = h.values();
  Matrix out(static_cast<Index>(rows.size()), v.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= v.rows()) throw DimensionError("gather_rows: index out of range");
    out.row(static_cast<Index>(k)) = v.row(rows[k]);
  }
  return Tensor::from_op(std::move(out), {h}, [h, idx = std::vector<Index>(rows.begin(), rows.end())](const Matrix& g) {
    Matrix grad = Matrix::Zero(h.rows(), h.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) grad.row(idx[k]) += g.row(static_cast<Index>(k));
    h.accumulate_grad(grad);
  });
}

Tensor slice_rows(const Tensor& h, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > h.rows())
    throw DimensionError("slice_rows: rows [" + std::to_string(start) + ", " + std::to_string(start + count) +
                         ") outside " + shape_of(h));
  return Tensor::from_op(h.values().middleRows(start, count), {h}, [h, start, count](const Matrix& g) {
    Matrix grad = Matrix::Zero(h.rows(), h.cols());
    grad.middleRows(start, count) = g;
    h.accumulate_grad(grad);
  });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows())
    throw DimensionError("concat_cols: row mismatch " + shape_of(a) + " vs " + shape_of(b));
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a.values(), b.values();
  return Tensor::from_op(std::move(out), {a, b}, [a, b](const Matrix& g) {
    if (a.requires_grad()) a.accumulate_grad(g.leftCols(a.cols()));
    if (b.requires_grad()) b.accumulate_grad(g.rightCols(b.cols()));
  });
}

Tensor scatter_add_rows(const Tensor& m, std::span<const Index> rows, std::span<const double> weights,
                        Index n_rows) {
  if (static_cast<Index>(rows.size()) != m.rows() || weights.size() != rows.size())
    throw DimensionError("scatter_add_rows: " + std::to_string(rows.size()) + " targets and " +
                         std::to_string(weights.size()) + " weights for " + shape_of(m));
  const Matrix& v = m.values();
  Matrix out = Matrix::Zero(n_rows, v.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= n_rows) throw DimensionError("scatter_add_rows: index out of range");
    out.row(rows[k]) += weights[k] * v.row(static_cast<Index>(k));
  }
  return Tensor::from_op(std::move(out), {m},
                         [m, idx = std::vector<Index>(rows.begin(), rows.end()),
                          w = std::vector<double>(weights.begin(), weights.end())](const Matrix& g) {
                           Matrix grad(m.rows(), m.cols());
                           for (std::size_t k = 0; k < idx.size(); ++k)
                             grad.row(static_cast<Index>(k)) = w[k] * g.row(idx[k]);
                           m.accumulate_grad(grad);
                         });
}

Tensor scale_rows(const Tensor& h, std::span<const double> weights) {
  if (static_cast<Index>(weights.size()) != h.rows())
    throw DimensionError("scale_rows: " + std::to_string(weights.size()) + " weights for " + shape_of(h));
  Eigen::Map<const Eigen::VectorXd> w(weights.data(), h.rows());
  Matrix out = w.asDiagonal() * h.values();
  return Tensor::from_op(std::move(out), {h}, [h, wv = Eigen::VectorXd(w)](const Matrix& g) {
    h.accumulate_grad(wv.asDiagonal() * g);
  });
}

}  // namespace ldl::numerics
