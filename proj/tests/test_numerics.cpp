#include "support.hpp"

#include "ldl/eigen_solver.hpp"
#include "ldl/errors.hpp"
#include "ldl/ops.hpp"
#include "ldl/sparse.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <complex>

using namespace ldl;
using namespace ldl::numerics;
using ldl::test::gradient_check;
using ldl::test::random_matrix;

namespace {

SparseRowMatrix random_sparse(Index r, Index c, double density, std::mt19937_64& rng) {
  std::bernoulli_distribution keep(density);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<Triplet> t;
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j)
      if (keep(rng)) t.push_back({i, j, u(rng)});
  return SparseRowMatrix::from_triplets(r, c, std::move(t));
}

// Matches each eigenvalue of `b` greedily to its nearest unused one in `a`.
double spectrum_distance(std::vector<std::complex<double>> a, std::vector<std::complex<double>> b) {
  double worst = 0.0;
  for (const auto& lb : b) {
    auto it = std::min_element(a.begin(), a.end(),
                               [&](auto x, auto y) { return std::abs(x - lb) < std::abs(y - lb); });
    worst = std::max(worst, std::abs(*it - lb));
    a.erase(it);
  }
  return worst;
}

std::vector<std::complex<double>> eigen_oracle(const Matrix& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(m), false);
  std::vector<std::complex<double>> out;
  for (Index i = 0; i < m.rows(); ++i) out.push_back(es.eigenvalues()(i));
  return out;
}

}  // namespace

TEST_SUITE("tensor") {
  TEST_CASE("sum backward gives ones, quadratic gives 2X") {
    std::mt19937_64 rng(1);
    Tensor x = Tensor::parameter(random_matrix(3, 4, rng));
    backward(sum(x));
    CHECK(x.grad().isApprox(Matrix::Ones(3, 4)));

    Tensor y = Tensor::parameter(random_matrix(3, 4, rng));
    backward(sum(elementwise_mul(y, y)));
    CHECK((y.grad() - 2.0 * y.values()).cwiseAbs().maxCoeff() < 1e-15);
  }

  TEST_CASE("backward contracts") {
    std::mt19937_64 rng(2);
    Tensor x = Tensor::parameter(random_matrix(2, 2, rng));
    CHECK_THROWS_AS(backward(x), ContractError);
    Tensor loss = sum(x);
    backward(loss);
    CHECK_THROWS_AS(backward(loss), ContractError);
    CHECK_THROWS_AS(backward(sum(Tensor::constant(Matrix::Ones(2, 2)))), ContractError);
    CHECK_THROWS_AS(Tensor{}.rows(), ContractError);
  }

  TEST_CASE("gradients accumulate across reused inputs") {
    Tensor x = Tensor::parameter(Matrix::Constant(1, 1, 3.0));
    backward(sum(add(x, scale(x, 2.0))));
    CHECK(x.grad()(0, 0) == doctest::Approx(3.0));
  }

  TEST_CASE("no-grad guard records nothing") {
    Tensor x = Tensor::parameter(Matrix::Ones(2, 2));
    {
      NoGradGuard guard;
      CHECK_FALSE(grad_enabled());
      Tensor y = scale(x, 2.0);
      CHECK_FALSE(y.requires_grad());
    }
    CHECK(grad_enabled());
  }
}

TEST_SUITE("ops") {
  TEST_CASE("matmul examples") {
    std::mt19937_64 rng(3);
    const Matrix b = random_matrix(3, 2, rng);
    CHECK(matmul(Tensor::constant(Matrix::Identity(3, 3)), Tensor::constant(b)).values() == b);
    Matrix a(2, 2);
    a << 1, 2, 3, 4;
    const Matrix r = matmul(Tensor::constant(a), Tensor::constant(Matrix::Ones(2, 1))).values();
    CHECK(r(0, 0) == 3.0);
    CHECK(r(1, 0) == 7.0);
    CHECK_THROWS_AS(matmul(Tensor::constant(a), Tensor::constant(b)), DimensionError);
  }

  TEST_CASE("elementwise examples") {
    Matrix a(1, 2), b(1, 2);
    a << 1, -2;
    b << -1, 0.5;
    const Matrix r = elementwise_mul(Tensor::constant(a), Tensor::constant(b)).values();
    CHECK(r(0, 0) == -1.0);
    CHECK(r(0, 1) == -1.0);
    CHECK(elementwise_mul(Tensor::constant(a), Tensor::constant(Matrix::Zero(1, 2))).values().isZero());
    CHECK_THROWS_AS(elementwise_mul(Tensor::constant(a), Tensor::constant(Matrix::Ones(2, 1))), DimensionError);
  }

  TEST_CASE("activations at zero and tanh range") {
    const Tensor zero = Tensor::constant(Matrix::Zero(1, 1));
    CHECK(apply_activation(Activation::tanh, zero).item() == 0.0);
    CHECK(apply_activation(Activation::elu, zero).item() == 0.0);
    CHECK(apply_activation(Activation::relu, Tensor::constant(Matrix::Constant(1, 1, -1.0))).item() == 0.0);
    std::mt19937_64 rng(4);
    const Matrix big = random_matrix(50, 50, rng, -40.0, 40.0);
    const Matrix t = apply_activation(Activation::tanh, Tensor::constant(big)).values();
    CHECK(t.cwiseAbs().maxCoeff() <= 1.0);
    CHECK_THROWS_AS(parse_activation("swish"), ConfigError);
    CHECK(parse_activation("elu") == Activation::elu);
  }

  TEST_CASE("tanh_values tracks std::tanh") {
    std::mt19937_64 rng(5);
    Matrix x(1, 4000);
    std::uniform_real_distribution<double> mag(-12.0, 3.0);
    std::bernoulli_distribution neg(0.5);
    for (Index j = 0; j < x.cols(); ++j) x(0, j) = (neg(rng) ? -1 : 1) * std::pow(10.0, mag(rng));
    x(0, 0) = 0.0;
    x(0, 1) = -0.0;
    x(0, 2) = 1e-2;
    x(0, 3) = 800.0;
    const Matrix t = tanh_values(x);
    double worst = 0.0;
    for (Index j = 0; j < x.cols(); ++j) {
      const double ref = std::tanh(x(0, j));
      worst = std::max(worst, ref == 0.0 ? std::abs(t(0, j)) : std::abs(t(0, j) - ref) / std::abs(ref));
    }
    CHECK(worst < 1e-14);
    CHECK(std::signbit(t(0, 1)));
    CHECK(t(0, 3) == 1.0);
  }

  TEST_CASE("finite differences per op") {
    std::mt19937_64 rng(6);
    Tensor a = Tensor::parameter(random_matrix(4, 3, rng));
    Tensor b = Tensor::parameter(random_matrix(3, 5, rng));
    Tensor c = Tensor::parameter(random_matrix(4, 3, rng));
    Tensor w = Tensor::constant(random_matrix(4, 5, rng));
    Tensor w3 = Tensor::constant(random_matrix(4, 3, rng));
    const std::vector<Index> rows{3, 0, 0, 2, 1, 3};
    const std::vector<double> weights{0.5, -1.0, 2.0, 0.25, 1.5, -0.75};
    const std::vector<double> row_scale{0.3, -2.0, 1.0, 0.7};

    CHECK(gradient_check({a, b}, [&] { return sum(elementwise_mul(matmul(a, b), w)); }) < 1e-6);
    CHECK(gradient_check({a, c}, [&] { return sum(elementwise_mul(elementwise_mul(a, c), w3)); }) < 1e-6);
    CHECK(gradient_check({a, c}, [&] { return sum(elementwise_mul(add(a, scale(c, -1.5)), w3)); }) < 1e-6);
    CHECK(gradient_check({a, c}, [&] { return sum(elementwise_mul(concat_cols(a, c), concat_cols(w3, w3))); }) < 1e-6);
    CHECK(gradient_check({a}, [&] {
            const Tensor g = gather_rows(a, rows);
            return sum(elementwise_mul(g, Tensor::constant(Matrix::Ones(6, 3) * 0.7)));
          }) < 1e-6);
    CHECK(gradient_check({b}, [&] { return sum(elementwise_mul(slice_rows(b, 1, 2), slice_rows(b, 0, 2))); }) < 1e-6);
    CHECK(gradient_check({a}, [&] {
            const Tensor m = gather_rows(a, rows);
            return sum(elementwise_mul(scatter_add_rows(m, rows, weights, 4), w3));
          }) < 1e-6);
    CHECK(gradient_check({a}, [&] { return sum(elementwise_mul(scale_rows(a, row_scale), w3)); }) < 1e-6);

    Matrix dense = random_matrix(5, 4, rng);
    const SparseRowMatrix s = random_sparse(5, 4, 0.5, rng);
    CHECK(gradient_check({a}, [&] { return sum(elementwise_mul(spmm(s, a), Tensor::constant(dense.leftCols(3)))); }) <
          1e-6);
  }

  TEST_CASE("activation gradients at random points away from kinks") {
    std::mt19937_64 rng(7);
    for (Activation kind : {Activation::identity, Activation::tanh, Activation::relu, Activation::elu}) {
      Matrix x = random_matrix(10, 10, rng, -3.0, 3.0);
      for (Index i = 0; i < x.size(); ++i)
        if (std::abs(x.data()[i]) < 1e-3) x.data()[i] = 0.5;
      Tensor p = Tensor::parameter(x);
      const Tensor w = Tensor::constant(random_matrix(10, 10, rng));
      CAPTURE(to_string(kind));
      CHECK(gradient_check({p}, [&] { return sum(elementwise_mul(apply_activation(kind, p), w)); }) < 1e-6);
    }
  }

  TEST_CASE("cross entropy") {
    const std::vector<int> labels{0, 1, 2, 1};
    const std::vector<Index> all{0, 1, 2, 3};
    const Tensor uniform = Tensor::constant(Matrix::Zero(4, 3));
    CHECK(masked_softmax_cross_entropy(uniform, labels, all).item() == doctest::Approx(std::log(3.0)));

    Matrix sharp = Matrix::Zero(4, 3);
    for (Index i = 0; i < 4; ++i) sharp(i, labels[i]) = 50.0;
    CHECK(masked_softmax_cross_entropy(Tensor::constant(sharp), labels, all).item() < 1e-6);

    std::mt19937_64 rng(8);
    Tensor z = Tensor::parameter(random_matrix(4, 3, rng, -2, 2));
    const std::vector<Index> some{1, 3};
    CHECK(gradient_check({z}, [&] { return masked_softmax_cross_entropy(z, labels, some); }) < 1e-6);
    CHECK_THROWS_AS(masked_softmax_cross_entropy(z, labels, {}), EvaluationError);
  }

  TEST_CASE("dropout") {
    std::mt19937_64 rng(9);
    const Tensor x = Tensor::constant(Matrix::Ones(1000, 1000));
    CHECK(dropout(x, 0.0, true, rng).same_node(x));
    CHECK(dropout(x, 0.9, false, rng).same_node(x));
    CHECK_THROWS_AS(dropout(x, 1.0, true, rng), ConfigError);

    const Matrix y = dropout(x, 0.5, true, rng).values();
    const double kept = static_cast<double>((y.array() != 0.0).count()) / static_cast<double>(y.size());
    CHECK(std::abs(kept - 0.5) < 0.01);
    CHECK(std::abs(y.mean() - 1.0) < 0.01);
    CHECK(((y.array() == 0.0) || (y.array() == 2.0)).all());

    std::mt19937_64 r1(10), r2(10);
    CHECK(dropout(x, 0.3, true, r1).values() == dropout(x, 0.3, true, r2).values());

    Tensor p = Tensor::parameter(random_matrix(6, 4, rng));
    const Tensor w = Tensor::constant(random_matrix(6, 4, rng));
    CHECK(gradient_check({p}, [&] {
            std::mt19937_64 fixed(11);
            return sum(elementwise_mul(dropout(p, 0.4, true, fixed), w));
          }) < 1e-6);
  }
}

TEST_SUITE("sparse") {
  TEST_CASE("csr invariants and duplicates") {
    auto s = SparseRowMatrix::from_triplets(3, 3, {{2, 1, 1.0}, {0, 2, 2.0}, {0, 0, 1.0}, {0, 2, 3.0}});
    CHECK(s.nnz() == 3);
    CHECK(s.coeff(0, 2) == 5.0);
    CHECK(s.coeff(1, 1) == 0.0);
    CHECK(s.offsets().back() == s.nnz());
    for (Index r = 0; r < s.rows(); ++r) {
      CHECK(s.offsets()[r] <= s.offsets()[r + 1]);
      for (Index k = s.offsets()[r] + 1; k < s.offsets()[r + 1]; ++k) CHECK(s.columns()[k - 1] < s.columns()[k]);
    }
    CHECK_THROWS_AS(SparseRowMatrix(2, 2, {0, 1, 1}, {1, 0}, {1.0, 2.0}), DimensionError);
    CHECK_THROWS_AS(SparseRowMatrix(1, 2, {0, 2}, {1, 0}, {1.0, 2.0}), DimensionError);
  }

  TEST_CASE("spmm identity and dense oracle on 50 random matrices") {
    std::mt19937_64 rng(12);
    const Matrix h = random_matrix(6, 3, rng);
    CHECK(spmm(SparseRowMatrix::identity(6), Tensor::constant(h)).values() == h);
    for (int k = 0; k < 50; ++k) {
      std::uniform_int_distribution<int> dim(1, 12);
      const Index r = dim(rng), c = dim(rng), w = dim(rng);
      const SparseRowMatrix s = random_sparse(r, c, 0.3, rng);
      const Matrix x = random_matrix(c, w, rng);
      const Matrix dense = s.to_dense();
      CHECK((spmm(s, Tensor::constant(x)).values() - dense * x).cwiseAbs().maxCoeff() < 1e-13);
      const Matrix g = random_matrix(r, w, rng);
      CHECK((s.transpose_multiply(g) - dense.transpose() * g).cwiseAbs().maxCoeff() < 1e-13);
    }
    CHECK_THROWS_AS(spmm(SparseRowMatrix::identity(5), Tensor::constant(h)), DimensionError);
  }
}

TEST_SUITE("eigensolver") {
  TEST_CASE("analytic examples") {
    auto id = eig_dense(Matrix::Identity(2, 2));
    REQUIRE(id.size() == 2);
    for (auto l : id.eigenvalues) CHECK(std::abs(l - 1.0) < 1e-12);

    Matrix rot(2, 2);
    rot << 0, 1, -1, 0;
    auto r = eig_dense(rot);
    CHECK(spectrum_distance(r.eigenvalues, {{0, 1}, {0, -1}}) < 1e-12);
    CHECK(r.conjugate_pairs_ok());

    // companion matrix of (x-1)(x-2)(x-3) = x^3 - 6x^2 + 11x - 6
    Matrix comp(3, 3);
    comp << 6, -11, 6, 1, 0, 0, 0, 1, 0;
    CHECK(spectrum_distance(eig_dense(comp).eigenvalues, {1.0, 2.0, 3.0}) < 1e-9);
  }

  TEST_CASE("companion matrices of known roots") {
    std::mt19937_64 rng(13);
    for (int k = 0; k < 20; ++k) {
      std::uniform_int_distribution<int> deg(2, 8);
      const int n = deg(rng);
      std::vector<std::complex<double>> roots;
      std::uniform_real_distribution<double> u(-3.0, 3.0);
      while (static_cast<int>(roots.size()) < n) {
        if (n - static_cast<int>(roots.size()) >= 2 && u(rng) > 0) {
          const std::complex<double> z(u(rng), std::abs(u(rng)) + 0.2);
          roots.push_back(z);
          roots.push_back(std::conj(z));
        } else {
          roots.push_back(u(rng));
        }
      }
      // monic polynomial coefficients
      std::vector<std::complex<double>> poly{1.0};
      for (auto z : roots) {
        std::vector<std::complex<double>> next(poly.size() + 1, 0.0);
        for (std::size_t i = 0; i < poly.size(); ++i) {
          next[i] += poly[i];
          next[i + 1] -= z * poly[i];
        }
        poly = next;
      }
      Matrix comp = Matrix::Zero(n, n);
      for (int j = 0; j < n; ++j) comp(0, j) = -poly[j + 1].real();
      for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
      CHECK(spectrum_distance(eig_dense(comp).eigenvalues, roots) < 1e-7);
    }
  }

  TEST_CASE("random matrices: Eigen oracle, residuals, trace and determinant") {
    std::mt19937_64 rng(14);
    for (int k = 0; k < 100; ++k) {
      std::uniform_int_distribution<int> dim(1, 20);
      const Index n = dim(rng);
      const Matrix a = random_matrix(n, n, rng);
      const auto spec = eig_dense(a);
      REQUIRE(spec.size() == n);
      CHECK(spec.conjugate_pairs_ok());
      CHECK(spectrum_distance(spec.eigenvalues, eigen_oracle(a)) < 1e-8);

      const double norm = a.norm();
      std::complex<double> trace = 0.0, det = 1.0;
      for (auto l : spec.eigenvalues) {
        trace += l;
        det *= l;
      }
      CHECK(std::abs(trace - a.trace()) <= 1e-8 * n * norm);
      const double lu_det = Eigen::MatrixXd(a).partialPivLu().determinant();
      CHECK(std::abs(det - lu_det) <= 1e-6 * std::max(std::abs(lu_det), 1e-300));
      CHECK(std::abs(det.imag()) <= 1e-6 * std::max(std::abs(lu_det), 1e-300));

      REQUIRE(spec.eigenvectors.has_value());
      const Eigen::MatrixXcd ac = Eigen::MatrixXd(a).cast<std::complex<double>>();
      for (Index i = 0; i < n; ++i) {
        const Eigen::VectorXcd u = spec.eigenvectors->col(i);
        CHECK((ac * u - spec.eigenvalues[i] * u).norm() <= 1e-8 * norm);
      }
    }
  }

  TEST_CASE("symmetric input has a real spectrum") {
    std::mt19937_64 rng(15);
    for (int k = 0; k < 30; ++k) {
      const Matrix b = random_matrix(12, 12, rng);
      const Matrix s = b + b.transpose();
      for (auto l : eig_dense(s).eigenvalues) CHECK(std::abs(l.imag()) <= 1e-9);
    }
  }

  TEST_CASE("structured and degenerate inputs") {
    // Jordan block, zero matrix, already triangular, graded entries
    Matrix jordan = Matrix::Identity(4, 4) * 2.0;
    for (int i = 0; i < 3; ++i) jordan(i, i + 1) = 1.0;
    for (auto l : eig_dense(jordan, {.compute_vectors = false}).eigenvalues) CHECK(std::abs(l - 2.0) < 1e-3);
    CHECK(spectrum_distance(eig_dense(Matrix::Zero(5, 5)).eigenvalues, std::vector<std::complex<double>>(5, 0.0)) ==
          0.0);
    Matrix graded(3, 3);
    graded << 1e-8, 1, 0, 0, 1, 1e8, 0, 0, 1e4;
    CHECK(spectrum_distance(eig_dense(graded).eigenvalues, {1e-8, 1.0, 1e4}) < 1e-6);
  }

  TEST_CASE("errors") {
    CHECK_THROWS_AS(eig_dense(Matrix::Zero(2, 3)), DimensionError);
    CHECK_THROWS_AS(eig_dense(Matrix::Zero(5, 5), {.max_dimension = 4}), DimensionError);
    Matrix bad = Matrix::Identity(2, 2);
    bad(0, 1) = std::nan("");
    CHECK_THROWS_AS(eig_dense(bad), Error);
    CHECK(eig_dense(Matrix::Zero(0, 0)).size() == 0);
  }
}
