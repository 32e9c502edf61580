#pragma once

#include "ldl/graph.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace ldl::data {

struct Dataset {
  std::string name;
  graph::Graph graph;
  Matrix features;
  std::vector<int> labels;
  int num_classes = 0;
  std::optional<double> declared_homophily;

  Index n_nodes() const noexcept { return graph.n_nodes(); }
  Index n_features() const noexcept { return features.cols(); }
  /// Throws ValidationError on row-count or label-range violations.
  void validate() const;
};

/// One train/validation/test assignment, as sorted node-id lists.
struct Trial {
  std::vector<Index> train;
  std::vector<Index> val;
  std::vector<Index> test;
};

struct SplitSet {
  std::vector<Trial> trials;

  /// Masks must be in range and pairwise disjoint within each trial; with
  /// `require_cover` their union must be every node.
  void validate(Index n_nodes, bool require_cover) const;
};

/// Random k-partite graph: every node links only to other partitions, labels
/// are partition ids, and features are iid standard normal (uninformative).
Dataset generate_multipartite(int partitions, Index nodes, double avg_degree, Index feat_dim, std::mt19937_64& rng);

/// Near-equal partition sizes: the first (n mod k) partitions get one extra node.
std::vector<Index> partition_sizes(Index nodes, int partitions);

/// Independent uniform shuffles cut by `fractions` (train, val, test).
SplitSet make_random_splits(Index n_nodes, std::array<double, 3> fractions, int trials, std::mt19937_64& rng);

struct LoadedDataset {
  Dataset dataset;
  std::optional<SplitSet> splits;
  std::vector<std::string> warnings;
};

/// Reads the canonical JSON dataset document. Schema violations raise
/// ParseError carrying the offending JSON path; nothing is returned partially.
LoadedDataset load_canonical(const std::filesystem::path& path);
LoadedDataset parse_canonical(const std::string& text);

/// Writes the canonical JSON document; output is byte-stable for equal input.
void save_canonical(const std::filesystem::path& path, const Dataset& ds, const SplitSet* splits = nullptr);
std::string dump_canonical(const Dataset& ds, const SplitSet* splits = nullptr);

}  // namespace ldl::data
