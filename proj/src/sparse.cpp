#include "ldl/sparse.hpp"

#include "ldl/errors.hpp"

#include <algorithm>

namespace ldl::numerics {

SparseRowMatrix::SparseRowMatrix(Index rows, Index cols, std::vector<Index> offsets,
                                 std::vector<Index> columns, std::vector<double> values)
    : rows_(rows), cols_(cols), offsets_(std::move(offsets)), columns_(std::move(columns)),
      values_(std::move(values)) {
  if (rows_ < 0 || cols_ < 0) throw DimensionError("negative sparse matrix dimension");
  if (static_cast<Index>(offsets_.size()) != rows_ + 1)
    throw DimensionError("CSR offsets must have rows + 1 entries");
  if (columns_.size() != values_.size()) throw DimensionError("CSR columns and values differ in length");
  if (offsets_.front() != 0 || offsets_.back() != static_cast<Index>(values_.size()))
    throw DimensionError("CSR offsets must start at 0 and end at nnz");
  for (Index r = 0; r < rows_; ++r) {
    if (offsets_[r] > offsets_[r + 1]) throw DimensionError("CSR offsets are not monotone");
    for (Index k = offsets_[r]; k < offsets_[r + 1]; ++k) {
      if (columns_[k] < 0 || columns_[k] >= cols_) throw DimensionError("CSR column index out of range");
      if (k > offsets_[r] && columns_[k] <= columns_[k - 1])
        throw DimensionError("CSR column indices must be strictly increasing within a row");
    }
  }
}

SparseRowMatrix SparseRowMatrix::from_triplets(Index rows, Index cols, std::vector<Triplet> triplets) {
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<Index> offsets(rows + 1, 0);
  std::vector<Index> columns;
  std::vector<double> values;
  columns.reserve(triplets.size());
  values.reserve(triplets.size());
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    const auto& t = triplets[i];
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
      throw DimensionError("triplet (" + std::to_string(t.row) + ", " + std::to_string(t.col) +
                           ") outside " + shape_string(rows, cols));
    if (i > 0 && triplets[i - 1].row == t.row && triplets[i - 1].col == t.col) {
      values.back() += t.value;
      continue;
    }
    columns.push_back(t.col);
    values.push_back(t.value);
    ++offsets[t.row + 1];
  }
  for (Index r = 0; r < rows; ++r) offsets[r + 1] += offsets[r];
  return SparseRowMatrix(rows, cols, std::move(offsets), std::move(columns), std::move(values));
}

SparseRowMatrix SparseRowMatrix::identity(Index n) {
  std::vector<Index> offsets(n + 1), columns(n);
  for (Index i = 0; i <= n; ++i) offsets[i] = i;
  for (Index i = 0; i < n; ++i) columns[i] = i;
  return SparseRowMatrix(n, n, std::move(offsets), std::move(columns), std::vector<double>(n, 1.0));
}

double SparseRowMatrix::coeff(Index r, Index c) const {
  auto first = columns_.begin() + offsets_[r];
  auto last = columns_.begin() + offsets_[r + 1];
  auto it = std::lower_bound(first, last, c);
  return (it != last && *it == c) ? values_[it - columns_.begin()] : 0.0;
}

Matrix SparseRowMatrix::multiply(const Matrix& dense) const {
  if (dense.rows() != cols_)
    throw DimensionError("spmm: sparse " + shape_string(rows_, cols_) + " times dense " +
                         shape_string(dense.rows(), dense.cols()));
  Matrix out = Matrix::Zero(rows_, dense.cols());
  for (Index r = 0; r < rows_; ++r)
    for (Index k = offsets_[r]; k < offsets_[r + 1]; ++k) out.row(r) += values_[k] * dense.row(columns_[k]);
  return out;
}

Matrix SparseRowMatrix::transpose_multiply(const Matrix& dense) const {
  if (dense.rows() != rows_)
    throw DimensionError("spmm^T: sparse^T " + shape_string(cols_, rows_) + " times dense " +
                         shape_string(dense.rows(), dense.cols()));
  Matrix out = Matrix::Zero(cols_, dense.cols());
  for (Index r = 0; r < rows_; ++r)
    for (Index k = offsets_[r]; k < offsets_[r + 1]; ++k) out.row(columns_[k]) += values_[k] * dense.row(r);
  return out;
}

Matrix SparseRowMatrix::to_dense() const {
  Matrix out = Matrix::Zero(rows_, cols_);
  for (Index r = 0; r < rows_; ++r)
    for (Index k = offsets_[r]; k < offsets_[r + 1]; ++k) out(r, columns_[k]) = values_[k];
  return out;
}

}  // namespace ldl::numerics
