#pragma once

#include "ldl/tensor.hpp"

#include <complex>
#include <optional>
#include <vector>

namespace ldl::numerics {

using ComplexMatrix = Eigen::MatrixXcd;

/// Eigenvalues of a real square matrix with optional unit-norm eigenvectors;
/// column i of `eigenvectors` belongs to `eigenvalues[i]`.
struct ComplexSpectrum {
  std::vector<std::complex<double>> eigenvalues;
  std::optional<ComplexMatrix> eigenvectors;

  Index size() const noexcept { return static_cast<Index>(eigenvalues.size()); }
  /// True when every non-real eigenvalue has its conjugate in the list (within `tol`).
  bool conjugate_pairs_ok(double tol = 1e-9) const;
};

struct EigOptions {
  bool compute_vectors = true;
  Index max_dimension = 2000;
  /// QR sweeps allowed per matrix row before giving up.
  Index sweeps_per_row = 100;
};

/// Dense non-symmetric eigensolver: Householder reduction to upper Hessenberg
/// form followed by Francis double-shift QR iterations; eigenvectors by back
/// substitution on the quasi-triangular Schur form.
///
/// Throws DimensionError for non-square or oversized input and NumericalError
/// when the iteration cap is hit (the message names the unreduced block).
ComplexSpectrum eig_dense(const Matrix& a, const EigOptions& options = {});

}  // namespace ldl::numerics
