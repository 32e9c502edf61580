#include "support.hpp"

#include "ldl/eigen_solver.hpp"
#include "ldl/errors.hpp"
#include "ldl/graph.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace ldl;
using namespace ldl::graph;
using ldl::test::chain;

TEST_SUITE("graph") {
  TEST_CASE("normalization examples") {
    const auto single = normalize_adjacency(Graph(1, {}));
    CHECK(single.adjacency.coeff(0, 0) == 1.0);
    CHECK(single.laplacian.coeff(0, 0) == 0.0);

    const auto k2 = normalize_adjacency(chain(2));
    for (Index i = 0; i < 2; ++i)
      for (Index j = 0; j < 2; ++j) CHECK(k2.adjacency.coeff(i, j) == doctest::Approx(0.5).epsilon(1e-15));

    const auto c3 = normalize_adjacency(chain(3));
    CHECK(c3.adjacency.coeff(0, 1) == doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-15));
    CHECK(c3.adjacency.coeff(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(c3.adjacency.coeff(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(c3.adjacency.coeff(0, 2) == 0.0);
    CHECK(c3.augmented_degree == std::vector<double>{2.0, 3.0, 2.0});

    // S~ e1 on the chain
    const Matrix col = c3.adjacency.multiply(Matrix::Identity(3, 3).leftCols(1));
    CHECK(col(0, 0) == doctest::Approx(0.5));
    CHECK(col(1, 0) == doctest::Approx(1.0 / std::sqrt(6.0)));
    CHECK(col(2, 0) == 0.0);
  }

  TEST_CASE("isolated nodes keep only their self loop") {
    const auto ops = normalize_adjacency(Graph::simple(4, std::vector<Edge>{{0, 1}}));
    CHECK(ops.adjacency.coeff(3, 3) == 1.0);
    CHECK(ops.laplacian.coeff(3, 3) == 0.0);
  }

  TEST_CASE("operators on random graphs: symmetry, L = I - S, spectrum in [0, 2]") {
    std::mt19937_64 rng(21);
    for (int k = 0; k < 40; ++k) {
      std::uniform_int_distribution<Index> n(1, 25);
      const Graph g = random_graph(n(rng), 0.25, rng);
      const auto ops = normalize_adjacency(g);
      const Matrix s = ops.adjacency.to_dense();
      const Matrix l = ops.laplacian.to_dense();
      CHECK((s - s.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK((l - (Matrix::Identity(s.rows(), s.cols()) - s)).cwiseAbs().maxCoeff() == 0.0);
      for (auto lam : numerics::eig_dense(l).eigenvalues) {
        CHECK(lam.real() >= -1e-9);
        CHECK(lam.real() <= 2.0 + 1e-9);
      }
      CHECK((s.diagonal().array() > 0.0).all());
      CHECK(ops.messages.size() == 2 * g.n_edges());
    }
  }

  TEST_CASE("regular graphs have unit row sums") {
    for (Index n : {3, 5, 8}) {
      std::vector<Edge> cycle;
      for (Index i = 0; i < n; ++i) cycle.push_back({i, (i + 1) % n});
      const Matrix s = normalize_adjacency(Graph::simple(n, cycle)).adjacency.to_dense();
      CHECK((s.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-14);
    }
    const Matrix k2 = normalize_adjacency(chain(2)).adjacency.to_dense();
    CHECK((k2.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-15);
  }

  TEST_CASE("edge order does not matter") {
    std::mt19937_64 rng(22);
    for (int k = 0; k < 20; ++k) {
      const Graph g = random_graph(15, 0.3, rng);
      std::vector<Edge> shuffled = g.edges();
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      for (auto& e : shuffled)
        if (rng() & 1) std::swap(e.u, e.v);
      const Graph h = Graph::simple(15, shuffled);
      CHECK(normalize_adjacency(g).adjacency.to_dense() == normalize_adjacency(h).adjacency.to_dense());
    }
  }

  TEST_CASE("simple() repairs and reports") {
    std::vector<std::string> warnings;
    const Graph g = Graph::simple(3, std::vector<Edge>{{0, 1}, {1, 0}, {2, 2}, {1, 2}, {1, 2}}, &warnings);
    CHECK(g.n_edges() == 2);
    CHECK_FALSE(warnings.empty());
    CHECK_THROWS_AS(Graph::simple(2, std::vector<Edge>{{0, 5}}), ValidationError);
    CHECK_THROWS_AS(normalize_adjacency(Graph(3, {{0, 0}})), ValidationError);
  }

  TEST_CASE("validate_graph") {
    const auto clean = validate_graph(chain(5));
    CHECK(clean.clean());
    CHECK(clean.connected);

    const auto loop = validate_graph(Graph(4, {{0, 1}, {3, 3}}));
    REQUIRE(loop.self_loops.size() == 1);
    CHECK(loop.self_loops[0] == Edge{3, 3});

    const auto dup = validate_graph(Graph(3, {{0, 1}, {1, 0}}));
    CHECK(dup.duplicates.size() == 1);

    const auto triangles = validate_graph(Graph(6, {{0, 1}, {1, 2}, {2, 0}, {3, 4}, {4, 5}, {5, 3}}));
    CHECK(triangles.clean());
    CHECK_FALSE(triangles.connected);
    CHECK(triangles.components == 2);
  }

  TEST_CASE("edge homophily") {
    const Graph g = chain(4);
    CHECK(edge_homophily(g, std::vector<int>{1, 1, 1, 1}) == 1.0);
    CHECK(edge_homophily(g, std::vector<int>{0, 1, 0, 1}) == 0.0);
    CHECK(edge_homophily(g, std::vector<int>{0, 0, 1, 1}) == doctest::Approx(2.0 / 3.0));
    CHECK_THROWS_AS(edge_homophily(Graph(2, {}), std::vector<int>{0, 0}), EvaluationError);
  }

  TEST_CASE("random_graph arguments") {
    std::mt19937_64 rng(23);
    CHECK(random_graph(10, 0.0, rng).n_edges() == 0);
    CHECK(random_graph(10, 1.0, rng).n_edges() == 45);
    CHECK_THROWS_AS(random_graph(10, 1.5, rng), ConfigError);
  }
}
