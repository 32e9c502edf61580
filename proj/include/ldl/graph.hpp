#pragma once

#include "ldl/sparse.hpp"

#include <random>
#include <span>
#include <string>
#include <vector>

namespace ldl::graph {

using numerics::SparseRowMatrix;

/// Undirected edge; canonical graphs store u < v.
struct Edge {
  Index u;
  Index v;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Undirected graph stored as an edge list. The constructor keeps the list
/// verbatim so that `validate_graph` can report defects; use `simple` to
/// obtain the canonical simple graph expected by every other operation.
class Graph {
 public:
  Graph() = default;
  Graph(Index n_nodes, std::vector<Edge> edges);

  /// Symmetrizes, drops self-loops, and deduplicates. Each repair appends a
  /// message to `warnings` when given. Out-of-range endpoints throw ValidationError.
  static Graph simple(Index n_nodes, std::span<const Edge> raw, std::vector<std::string>* warnings = nullptr);

  Index n_nodes() const noexcept { return n_nodes_; }
  Index n_edges() const noexcept { return static_cast<Index>(edges_.size()); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  /// Per-node degree, counting each undirected edge once at each endpoint.
  std::vector<Index> degrees() const;

 private:
  Index n_nodes_ = 0;
  std::vector<Edge> edges_;
};

struct GraphReport {
  std::vector<Edge> self_loops;
  std::vector<Edge> duplicates;
  std::vector<Edge> out_of_range;
  bool connected = true;
  Index components = 0;

  bool clean() const noexcept { return self_loops.empty() && duplicates.empty() && out_of_range.empty(); }
};

/// Report-only structural audit; connectivity is reported, never required.
GraphReport validate_graph(const Graph& g);

/// Directed message channels (src -> dst) with their propagation weights.
struct MessageEdges {
  std::vector<Index> src;
  std::vector<Index> dst;
  std::vector<double> weight;
  Index size() const noexcept { return static_cast<Index>(src.size()); }
};

/// Operators of the GCN propagation rule for one graph.
struct NormalizedOperators {
  /// D~^{-1/2} (A + I) D~^{-1/2}
  SparseRowMatrix adjacency;
  /// I - adjacency
  SparseRowMatrix laplacian;
  /// Degree plus one (self-loop).
  std::vector<double> augmented_degree;
  /// Diagonal of `adjacency`, i.e. 1 / augmented degree.
  std::vector<double> self_weight;
  /// Both orientations of every edge, grouped by destination.
  MessageEdges messages;

  Index n_nodes() const noexcept { return adjacency.rows(); }
};

/// Throws ValidationError if `g` is not a simple graph.
NormalizedOperators normalize_adjacency(const Graph& g);

/// Fraction of edges whose endpoints share a label.
double edge_homophily(const Graph& g, std::span<const int> labels);

/// G(n, p): each unordered pair is an edge independently with probability p.
Graph random_graph(Index n_nodes, double edge_probability, std::mt19937_64& rng);

/// Dense symmetric adjacency matrix (0/1).
Matrix dense_adjacency(const Graph& g);

}  // namespace ldl::graph
