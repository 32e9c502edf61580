#include "ldl/graph.hpp"

#include "ldl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <utility>

namespace ldl::graph {

Graph::Graph(Index n_nodes, std::vector<Edge> edges) : n_nodes_(n_nodes), edges_(std::move(edges)) {
  if (n_nodes < 0) throw ValidationError("graph node count must be non-negative");
}

Graph Graph::simple(Index n_nodes, std::span<const Edge> raw, std::vector<std::string>* warnings) {
  std::vector<Edge> edges;
  edges.reserve(raw.size());
  Index loops = 0;
  for (const Edge& e : raw) {
    if (e.u < 0 || e.v < 0 || e.u >= n_nodes || e.v >= n_nodes)
      throw ValidationError("edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                            ") has an endpoint outside [0, " + std::to_string(n_nodes) + ")");
    if (e.u == e.v) {
      ++loops;
      continue;
    }
    edges.push_back({std::min(e.u, e.v), std::max(e.u, e.v)});
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });
  const auto before = edges.size();
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  if (warnings) {
    if (loops > 0) warnings->push_back("dropped " + std::to_string(loops) + " self-loop(s)");
    if (before != edges.size())
      warnings->push_back("merged " + std::to_string(before - edges.size()) +
                          " duplicate or reverse-orientation edge(s)");
  }
  return Graph(n_nodes, std::move(edges));
}

std::vector<Index> Graph::degrees() const {
  std::vector<Index> deg(n_nodes_, 0);
  for (const Edge& e : edges_) {
    ++deg[e.u];
    ++deg[e.v];
  }
  return deg;
}

GraphReport validate_graph(const Graph& g) {
  GraphReport report;
  const Index n = g.n_nodes();
  std::set<std::pair<Index, Index>> seen;
  std::vector<Index> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](Index x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const Edge& e : g.edges()) {
    if (e.u < 0 || e.v < 0 || e.u >= n || e.v >= n) {
      report.out_of_range.push_back(e);
      continue;
    }
    if (e.u == e.v) {
      report.self_loops.push_back(e);
      continue;
    }
    if (!seen.emplace(std::min(e.u, e.v), std::max(e.u, e.v)).second) {
      report.duplicates.push_back(e);
      continue;
    }
    parent[find(e.u)] = find(e.v);
  }
  for (Index i = 0; i < n; ++i)
    if (find(i) == i) ++report.components;
  report.connected = report.components <= 1;
  return report;
}

NormalizedOperators normalize_adjacency(const Graph& g) {
  const GraphReport report = validate_graph(g);
  if (!report.clean())
    throw ValidationError("normalize_adjacency requires a simple graph (" + std::to_string(report.self_loops.size()) +
                          " self-loops, " + std::to_string(report.duplicates.size()) + " duplicates, " +
                          std::to_string(report.out_of_range.size()) + " out-of-range edges)");
  const Index n = g.n_nodes();
  NormalizedOperators ops;
  const auto deg = g.degrees();
  ops.augmented_degree.resize(n);
  ops.self_weight.resize(n);
  std::vector<double> inv_sqrt(n);
  for (Index i = 0; i < n; ++i) {
    ops.augmented_degree[i] = static_cast<double>(deg[i]) + 1.0;
    inv_sqrt[i] = 1.0 / std::sqrt(ops.augmented_degree[i]);
    ops.self_weight[i] = 1.0 / ops.augmented_degree[i];
  }

  std::vector<numerics::Triplet> s, l;
  s.reserve(n + 2 * g.edges().size());
  l.reserve(n + 2 * g.edges().size());
  for (Index i = 0; i < n; ++i) {
    s.push_back({i, i, ops.self_weight[i]});
    l.push_back({i, i, 1.0 - ops.self_weight[i]});
  }
  for (const Edge& e : g.edges()) {
    const double w = inv_sqrt[e.u] * inv_sqrt[e.v];
    s.push_back({e.u, e.v, w});
    s.push_back({e.v, e.u, w});
    l.push_back({e.u, e.v, -w});
    l.push_back({e.v, e.u, -w});
  }
  ops.adjacency = SparseRowMatrix::from_triplets(n, n, std::move(s));
  ops.laplacian = SparseRowMatrix::from_triplets(n, n, std::move(l));

  const auto& off = ops.adjacency.offsets();
  const auto& cols = ops.adjacency.columns();
  const auto& vals = ops.adjacency.values();
  ops.messages.src.reserve(2 * g.edges().size());
  ops.messages.dst.reserve(2 * g.edges().size());
  ops.messages.weight.reserve(2 * g.edges().size());
  for (Index u = 0; u < n; ++u) {
    for (Index k = off[u]; k < off[u + 1]; ++k) {
      if (cols[k] == u) continue;
      ops.messages.src.push_back(cols[k]);
      ops.messages.dst.push_back(u);
      ops.messages.weight.push_back(vals[k]);
    }
  }
  return ops;
}

double edge_homophily(const Graph& g, std::span<const int> labels) {
  if (static_cast<Index>(labels.size()) != g.n_nodes())
    throw DimensionError("edge_homophily: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(g.n_nodes()) + " nodes");
  if (g.edges().empty()) throw EvaluationError("edge homophily is undefined for a graph without edges");
  Index same = 0;
  for (const Edge& e : g.edges())
    if (labels[e.u] == labels[e.v]) ++same;
  return static_cast<double>(same) / static_cast<double>(g.edges().size());
}

Matrix dense_adjacency(const Graph& g) {
  Matrix a = Matrix::Zero(g.n_nodes(), g.n_nodes());
  for (const Edge& e : g.edges()) {
    a(e.u, e.v) = 1.0;
    a(e.v, e.u) = 1.0;
  }
  return a;
}

Graph random_graph(Index n_nodes, double edge_probability, std::mt19937_64& rng) {
  if (n_nodes < 0) throw ConfigError("node count must be non-negative");
  if (!(edge_probability >= 0.0 && edge_probability <= 1.0)) throw ConfigError("edge probability must lie in [0, 1]");
  std::bernoulli_distribution coin(edge_probability);
  std::vector<Edge> edges;
  for (Index u = 0; u < n_nodes; ++u)
    for (Index v = u + 1; v < n_nodes; ++v)
      if (coin(rng)) edges.push_back({u, v});
  return Graph(n_nodes, std::move(edges));
}

}  // namespace ldl::graph
