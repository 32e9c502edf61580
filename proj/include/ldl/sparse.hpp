#pragma once

#include "ldl/tensor.hpp"

#include <vector>

namespace ldl::numerics {

struct Triplet {
  Index row;
  Index col;
  double value;
};

/// Compressed sparse row matrix with strictly increasing columns per row.
class SparseRowMatrix {
 public:
  SparseRowMatrix() = default;
  /// Takes ownership of CSR arrays; throws DimensionError if they are inconsistent.
  SparseRowMatrix(Index rows, Index cols, std::vector<Index> offsets, std::vector<Index> columns,
                  std::vector<double> values);

  /// Builds from unordered triplets, summing duplicates.
  static SparseRowMatrix from_triplets(Index rows, Index cols, std::vector<Triplet> triplets);
  static SparseRowMatrix identity(Index n);

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }
  Index nnz() const noexcept { return static_cast<Index>(values_.size()); }

  const std::vector<Index>& offsets() const noexcept { return offsets_; }
  const std::vector<Index>& columns() const noexcept { return columns_; }
  const std::vector<double>& values() const noexcept { return values_; }

  /// Stored value at (r, c), zero if absent.
  double coeff(Index r, Index c) const;

  Matrix multiply(const Matrix& dense) const;
  Matrix transpose_multiply(const Matrix& dense) const;
  Matrix to_dense() const;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Index> offsets_{0};
  std::vector<Index> columns_;
  std::vector<double> values_;
};

}  // namespace ldl::numerics
