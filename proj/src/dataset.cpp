#include "ldl/dataset.hpp"

#include "ldl/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace ldl::data {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

void Dataset::validate() const {
  const Index n = graph.n_nodes();
  if (features.rows() != n)
    throw ValidationError("dataset '" + name + "': feature rows " + std::to_string(features.rows()) +
                          " != node count " + std::to_string(n));
  if (static_cast<Index>(labels.size()) != n)
    throw ValidationError("dataset '" + name + "': label count " + std::to_string(labels.size()) +
                          " != node count " + std::to_string(n));
  if (num_classes < 1) throw ValidationError("dataset '" + name + "': class count must be positive");
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] < 0 || labels[i] >= num_classes)
      throw ValidationError("dataset '" + name + "': label " + std::to_string(labels[i]) + " of node " +
                            std::to_string(i) + " outside [0, " + std::to_string(num_classes) + ")");
}

void SplitSet::validate(Index n_nodes, bool require_cover) const {
  for (std::size_t t = 0; t < trials.size(); ++t) {
    std::vector<int> owner(n_nodes, -1);
    const std::vector<Index>* parts[3] = {&trials[t].train, &trials[t].val, &trials[t].test};
    for (int p = 0; p < 3; ++p) {
      for (Index i : *parts[p]) {
        if (i < 0 || i >= n_nodes)
          throw ValidationError("split " + std::to_string(t) + ": node " + std::to_string(i) + " out of range");
        if (owner[i] != -1)
          throw ValidationError("split " + std::to_string(t) + ": node " + std::to_string(i) +
                                " appears in more than one mask");
        owner[i] = p;
      }
    }
    if (require_cover && std::find(owner.begin(), owner.end(), -1) != owner.end())
      throw ValidationError("split " + std::to_string(t) + ": masks do not cover every node");
  }
}

std::vector<Index> partition_sizes(Index nodes, int partitions) {
  std::vector<Index> sizes(partitions, nodes / partitions);
  for (Index i = 0; i < nodes % partitions; ++i) ++sizes[i];
  return sizes;
}

Dataset generate_multipartite(int partitions, Index nodes, double avg_degree, Index feat_dim, std::mt19937_64& rng) {
  if (partitions < 2) throw ConfigError("multipartite generator needs at least 2 partitions");
  if (nodes < partitions) throw ConfigError("multipartite generator needs at least one node per partition");
  if (!(avg_degree >= 1.0)) throw ConfigError("average degree must be at least 1");
  if (feat_dim < 1) throw ConfigError("feature dimension must be positive");

  const auto sizes = partition_sizes(nodes, partitions);
  std::vector<int> labels(nodes);
  std::vector<Index> start(partitions + 1, 0);
  for (int p = 0; p < partitions; ++p) start[p + 1] = start[p] + sizes[p];
  for (int p = 0; p < partitions; ++p)
    for (Index i = start[p]; i < start[p + 1]; ++i) labels[i] = p;

  const Index smallest_outside = nodes - sizes.front();
  if (avg_degree >= static_cast<double>(smallest_outside))
    throw ConfigError("average degree " + std::to_string(avg_degree) + " is not below the " +
                      std::to_string(smallest_outside) + " nodes outside the largest partition");

  // Each node initiates avg_degree / 2 links on average; after symmetrization
  // every link counts at both endpoints, so the realized mean degree matches.
  const double half = avg_degree / 2.0;
  const auto base = static_cast<Index>(std::floor(half));
  const double frac = half - static_cast<double>(base);
  std::bernoulli_distribution extra(frac);

  std::vector<graph::Edge> raw;
  raw.reserve(static_cast<std::size_t>(std::ceil(half)) * nodes);
  std::vector<Index> pool;
  for (Index v = 0; v < nodes; ++v) {
    const int own = labels[v];
    const Index outside = nodes - sizes[own];
    const Index picks = std::min<Index>(base + (frac > 0.0 && extra(rng) ? 1 : 0), outside);
    // Partial Fisher-Yates over the union of the other partitions.
    pool.resize(outside);
    Index w = 0;
    for (Index u = 0; u < nodes; ++u)
      if (labels[u] != own) pool[w++] = u;
    for (Index k = 0; k < picks; ++k) {
      std::uniform_int_distribution<Index> pick(k, outside - 1);
      std::swap(pool[k], pool[pick(rng)]);
      raw.push_back({v, pool[k]});
    }
  }

  Dataset ds;
  ds.name = std::to_string(partitions) + "-partite";
  if (partitions == 2) ds.name = "bipartite";
  if (partitions == 3) ds.name = "tripartite";
  ds.graph = graph::Graph::simple(nodes, raw);
  ds.labels = std::move(labels);
  ds.num_classes = partitions;
  ds.features.resize(nodes, feat_dim);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index i = 0; i < ds.features.size(); ++i) ds.features.data()[i] = normal(rng);
  ds.declared_homophily = 0.0;
  return ds;
}

SplitSet make_random_splits(Index n_nodes, std::array<double, 3> fractions, int trials, std::mt19937_64& rng) {
  for (double f : fractions)
    if (f < 0.0) throw ConfigError("split fractions must be non-negative");
  if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9)
    throw ConfigError("split fractions must sum to 1");
  if (trials < 1) throw ConfigError("at least one split trial is required");

  const auto n_train = static_cast<Index>(std::llround(fractions[0] * static_cast<double>(n_nodes)));
  const auto n_val = static_cast<Index>(std::llround(fractions[1] * static_cast<double>(n_nodes)));
  const Index n_test = n_nodes - n_train - n_val;
  if (n_train <= 0 || n_val <= 0 || n_test <= 0)
    throw ConfigError("split fractions leave an empty mask for " + std::to_string(n_nodes) + " nodes");

  SplitSet out;
  std::vector<Index> order(n_nodes);
  for (int t = 0; t < trials; ++t) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    Trial trial;
    trial.train.assign(order.begin(), order.begin() + n_train);
    trial.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
    trial.test.assign(order.begin() + n_train + n_val, order.end());
    std::sort(trial.train.begin(), trial.train.end());
    std::sort(trial.val.begin(), trial.val.end());
    std::sort(trial.test.begin(), trial.test.end());
    out.trials.push_back(std::move(trial));
  }
  return out;
}

namespace {

const json& require_key(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path + "/" + key, "missing required key '" + std::string(key) + "'");
  return *it;
}

long long as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ParseError(path, "expected an integer");
  return v.get<long long>();
}

std::vector<Index> parse_mask(const json& arr, Index n, const std::string& path) {
  if (!arr.is_array()) throw ParseError(path, "expected an array");
  std::vector<Index> out;
  const bool boolean = !arr.empty() && arr.front().is_boolean();
  if (boolean && static_cast<Index>(arr.size()) != n)
    throw ParseError(path, "boolean mask must have one entry per node");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string p = path + "/" + std::to_string(i);
    if (boolean) {
      if (!arr[i].is_boolean()) throw ParseError(p, "mixed boolean and integer mask entries");
      if (arr[i].get<bool>()) out.push_back(static_cast<Index>(i));
    } else {
      const auto id = as_int(arr[i], p);
      if (id < 0 || id >= n) throw ParseError(p, "node id " + std::to_string(id) + " out of range");
      out.push_back(static_cast<Index>(id));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

LoadedDataset from_json(const json& doc) {
  if (!doc.is_object()) throw ParseError("", "top-level value must be an object");
  LoadedDataset out;
  Dataset& ds = out.dataset;

  const json& name = require_key(doc, "name", "");
  if (!name.is_string()) throw ParseError("/name", "expected a string");
  ds.name = name.get<std::string>();

  const auto n = as_int(require_key(doc, "n", ""), "/n");
  const auto f = as_int(require_key(doc, "f", ""), "/f");
  const auto c = as_int(require_key(doc, "C", ""), "/C");
  if (n < 0) throw ParseError("/n", "node count must be non-negative");
  if (f < 1) throw ParseError("/f", "feature width must be positive");
  if (c < 1) throw ParseError("/C", "class count must be positive");
  ds.num_classes = static_cast<int>(c);

  const json& edges = require_key(doc, "edges", "");
  if (!edges.is_array()) throw ParseError("/edges", "expected an array of [u, v] pairs");
  std::vector<graph::Edge> raw;
  raw.reserve(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string p = "/edges/" + std::to_string(i);
    const json& e = edges[i];
    if (!e.is_array() || e.size() != 2) throw ParseError(p, "expected a [u, v] pair");
    const auto u = as_int(e[0], p + "/0");
    const auto v = as_int(e[1], p + "/1");
    if (u < 0 || u >= n) throw ParseError(p + "/0", "endpoint out of range");
    if (v < 0 || v >= n) throw ParseError(p + "/1", "endpoint out of range");
    raw.push_back({static_cast<Index>(u), static_cast<Index>(v)});
  }
  ds.graph = graph::Graph::simple(static_cast<Index>(n), raw, &out.warnings);

  const json& features = require_key(doc, "features", "");
  if (!features.is_array() || static_cast<long long>(features.size()) != n)
    throw ParseError("/features", "expected " + std::to_string(n) + " feature rows");
  ds.features.resize(n, f);
  for (long long i = 0; i < n; ++i) {
    const std::string p = "/features/" + std::to_string(i);
    const json& row = features[i];
    if (!row.is_array() || static_cast<long long>(row.size()) != f)
      throw ParseError(p, "expected " + std::to_string(f) + " values");
    for (long long j = 0; j < f; ++j) {
      if (!row[j].is_number()) throw ParseError(p + "/" + std::to_string(j), "expected a number");
      ds.features(i, j) = row[j].get<double>();
    }
  }

  const json& labels = require_key(doc, "labels", "");
  if (!labels.is_array() || static_cast<long long>(labels.size()) != n)
    throw ParseError("/labels", "expected " + std::to_string(n) + " labels");
  ds.labels.resize(n);
  for (long long i = 0; i < n; ++i) {
    const std::string p = "/labels/" + std::to_string(i);
    const auto y = as_int(labels[i], p);
    if (y < 0 || y >= c) throw ParseError(p, "label outside [0, C)");
    ds.labels[i] = static_cast<int>(y);
  }

  if (auto it = doc.find("homophily"); it != doc.end() && !it->is_null()) {
    if (!it->is_number()) throw ParseError("/homophily", "expected a number");
    ds.declared_homophily = it->get<double>();
  }

  if (auto it = doc.find("splits"); it != doc.end() && !it->is_null()) {
    if (!it->is_array()) throw ParseError("/splits", "expected an array");
    SplitSet splits;
    for (std::size_t t = 0; t < it->size(); ++t) {
      const std::string p = "/splits/" + std::to_string(t);
      const json& s = (*it)[t];
      if (!s.is_object()) throw ParseError(p, "expected an object");
      Trial trial;
      trial.train = parse_mask(require_key(s, "train", p), n, p + "/train");
      trial.val = parse_mask(require_key(s, "val", p), n, p + "/val");
      trial.test = parse_mask(require_key(s, "test", p), n, p + "/test");
      splits.trials.push_back(std::move(trial));
    }
    splits.validate(static_cast<Index>(n), false);
    out.splits = std::move(splits);
  }
  ds.validate();
  return out;
}

}  // namespace

LoadedDataset parse_canonical(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("@byte " + std::to_string(e.byte), std::string("malformed JSON: ") + e.what());
  }
  return from_json(doc);
}

LoadedDataset load_canonical(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_canonical(buf.str());
}

std::string dump_canonical(const Dataset& ds, const SplitSet* splits) {
  ordered_json doc;
  doc["name"] = ds.name;
  doc["n"] = ds.n_nodes();
  doc["f"] = ds.n_features();
  doc["C"] = ds.num_classes;
  if (ds.declared_homophily) doc["homophily"] = *ds.declared_homophily;
  ordered_json edges = ordered_json::array();
  for (const auto& e : ds.graph.edges()) edges.push_back({e.u, e.v});
  doc["edges"] = std::move(edges);
  ordered_json features = ordered_json::array();
  for (Index i = 0; i < ds.features.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Index j = 0; j < ds.features.cols(); ++j) row.push_back(ds.features(i, j));
    features.push_back(std::move(row));
  }
  doc["features"] = std::move(features);
  doc["labels"] = ds.labels;
  if (splits) {
    ordered_json arr = ordered_json::array();
    for (const auto& t : splits->trials) arr.push_back({{"train", t.train}, {"val", t.val}, {"test", t.test}});
    doc["splits"] = std::move(arr);
  }
  return doc.dump();
}

void save_canonical(const std::filesystem::path& path, const Dataset& ds, const SplitSet* splits) {
  const std::string text = dump_canonical(ds, splits);
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write dataset file " + path.string());
  out << text << '\n';
  if (!out) throw IoError("failed while writing " + path.string());
}

}  // namespace ldl::data
