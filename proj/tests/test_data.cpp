#include "support.hpp"

#include "ldl/dataset.hpp"
#include "ldl/errors.hpp"

#include <doctest.h>

#include <json.hpp>

#include <fstream>
#include <set>

using namespace ldl;
using namespace ldl::data;
using nlohmann::json;

namespace {

std::string parse_error_path(const std::string& text) {
  try {
    parse_canonical(text);
  } catch (const ParseError& e) {
    return e.path();
  }
  return "<no error>";
}

json small_doc() {
  return json::parse(R"({"name": "tiny", "n": 3, "f": 2, "C": 2,
    "edges": [[0, 1], [2, 1], [1, 0]],
    "features": [[1, 0], [0.5, -1], [0, 2]],
    "labels": [0, 1, 0],
    "splits": [{"train": [0], "val": [1], "test": [2]},
               {"train": [true, false, true], "val": [false, true, false], "test": [false, false, false]}]})");
}

}  // namespace

TEST_SUITE("data") {
  TEST_CASE("multipartite generator") {
    CHECK(partition_sizes(1600, 2) == std::vector<Index>{800, 800});
    CHECK(partition_sizes(1600, 3) == std::vector<Index>{534, 533, 533});

    std::mt19937_64 rng(61);
    for (int k : {2, 3}) {
      const auto ds = generate_multipartite(k, 1600, 5.0, 50, rng);
      CHECK(ds.num_classes == k);
      CHECK(ds.n_nodes() == 1600);
      CHECK(graph::edge_homophily(ds.graph, ds.labels) == 0.0);
      CHECK(graph::validate_graph(ds.graph).clean());
      const std::vector<Index> sizes = partition_sizes(1600, k);
      for (int c = 0; c < k; ++c)
        CHECK(std::count(ds.labels.begin(), ds.labels.end(), c) == sizes[c]);
      const Eigen::RowVectorXd mean = ds.features.colwise().mean();
      const Eigen::RowVectorXd var = (ds.features.rowwise() - mean).array().square().colwise().mean();
      CHECK(mean.cwiseAbs().maxCoeff() <= 0.15);
      CHECK((var.array() - 1.0).abs().maxCoeff() <= 0.15);
    }
  }

  TEST_CASE("realized mean degree over 100 seeds") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      std::mt19937_64 rng(seed);
      const auto ds = generate_multipartite(seed % 2 ? 3 : 2, 1600, 5.0, 1, rng);
      const double mean_degree = 2.0 * static_cast<double>(ds.graph.n_edges()) / 1600.0;
      CHECK(mean_degree >= 4.5);
      CHECK(mean_degree <= 5.5);
    }
  }

  TEST_CASE("generator arguments") {
    std::mt19937_64 rng(62);
    CHECK_THROWS_AS(generate_multipartite(1, 10, 2.0, 3, rng), ConfigError);
    CHECK_THROWS_AS(generate_multipartite(3, 2, 2.0, 3, rng), ConfigError);
    CHECK_THROWS_AS(generate_multipartite(2, 10, 5.0, 3, rng), ConfigError);
    CHECK_THROWS_AS(generate_multipartite(2, 10, 0.5, 3, rng), ConfigError);
  }

  TEST_CASE("random splits") {
    std::mt19937_64 r1(63), r2(63);
    const auto a = make_random_splits(1600, {0.6, 0.2, 0.2}, 10, r1);
    const auto b = make_random_splits(1600, {0.6, 0.2, 0.2}, 10, r2);
    REQUIRE(a.trials.size() == 10);
    for (std::size_t t = 0; t < 10; ++t) {
      CHECK(a.trials[t].train.size() == 960);
      CHECK(a.trials[t].val.size() == 320);
      CHECK(a.trials[t].test.size() == 320);
      CHECK(a.trials[t].train == b.trials[t].train);
      std::set<Index> all(a.trials[t].train.begin(), a.trials[t].train.end());
      all.insert(a.trials[t].val.begin(), a.trials[t].val.end());
      all.insert(a.trials[t].test.begin(), a.trials[t].test.end());
      CHECK(all.size() == 1600);
    }
    CHECK(a.trials[0].train != a.trials[1].train);
    a.validate(1600, true);
    CHECK_THROWS_AS(make_random_splits(10, {0.5, 0.2, 0.2}, 1, r1), ConfigError);
    CHECK_THROWS_AS(make_random_splits(3, {0.9, 0.05, 0.05}, 1, r1), ConfigError);
  }

  TEST_CASE("split validation") {
    SplitSet s{{Trial{{0, 1}, {1}, {2}}}};
    CHECK_THROWS_AS(s.validate(3, false), ValidationError);
    SplitSet partial{{Trial{{0}, {1}, {}}}};
    partial.validate(3, false);
    CHECK_THROWS_AS(partial.validate(3, true), ValidationError);
  }

  TEST_CASE("canonical parse with both mask formats") {
    const auto loaded = parse_canonical(small_doc().dump());
    CHECK(loaded.dataset.name == "tiny");
    CHECK(loaded.dataset.graph.n_edges() == 2);
    CHECK(loaded.dataset.features(2, 1) == 2.0);
    REQUIRE(loaded.splits.has_value());
    CHECK(loaded.splits->trials[1].train == std::vector<Index>{0, 2});
    CHECK(loaded.splits->trials[1].val == std::vector<Index>{1});
    CHECK_FALSE(loaded.warnings.empty());
  }

  TEST_CASE("save/load round trip is the identity and byte-stable") {
    std::mt19937_64 rng(64);
    auto ds = generate_multipartite(3, 90, 4.0, 7, rng);
    ds.name = "rt";
    ds.declared_homophily = 0.0;
    const auto splits = make_random_splits(90, {0.6, 0.2, 0.2}, 3, rng);
    test::TempDir dir("canon");
    save_canonical(dir / "a.json", ds, &splits);
    const auto back = load_canonical(dir / "a.json");
    CHECK(back.dataset.features == ds.features);
    CHECK(back.dataset.labels == ds.labels);
    CHECK(back.dataset.graph.edges() == ds.graph.edges());
    CHECK(back.dataset.num_classes == 3);
    CHECK(back.dataset.declared_homophily == ds.declared_homophily);
    REQUIRE(back.splits.has_value());
    for (std::size_t t = 0; t < 3; ++t) CHECK(back.splits->trials[t].test == splits.trials[t].test);
    save_canonical(dir / "b.json", back.dataset, &*back.splits);
    std::ifstream a(dir / "a.json"), b(dir / "b.json");
    const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);
  }

  TEST_CASE("schema violations name the JSON path") {
    auto doc = small_doc();
    doc.erase("labels");
    CHECK(parse_error_path(doc.dump()) == "/labels");

    doc = small_doc();
    doc["edges"][1][1] = 9;
    CHECK(parse_error_path(doc.dump()) == "/edges/1/1");

    doc = small_doc();
    doc["features"][2] = json::array({1.0});
    CHECK(parse_error_path(doc.dump()) == "/features/2");

    doc = small_doc();
    doc["features"][0][1] = "x";
    CHECK(parse_error_path(doc.dump()) == "/features/0/1");

    doc = small_doc();
    doc["labels"][2] = 5;
    CHECK(parse_error_path(doc.dump()) == "/labels/2");

    doc = small_doc();
    doc["splits"][0]["val"] = json::array({7});
    CHECK(parse_error_path(doc.dump()) == "/splits/0/val/0");

    doc = small_doc();
    doc["splits"][1]["test"] = json::array({true});
    CHECK(parse_error_path(doc.dump()) == "/splits/1/test");

    doc = small_doc();
    doc["n"] = "three";
    CHECK(parse_error_path(doc.dump()) == "/n");

    const std::string text = small_doc().dump();
    CHECK(parse_error_path(text.substr(0, text.size() / 2)).rfind("@byte", 0) == 0);
    CHECK(parse_error_path("[1, 2]") == "");
  }

  TEST_CASE("overlapping masks are a validation error") {
    auto doc = small_doc();
    doc["splits"][0]["test"] = json::array({0});
    CHECK_THROWS_AS(parse_canonical(doc.dump()), ValidationError);
  }

  TEST_CASE("missing file is an I/O error") {
    CHECK_THROWS_AS(load_canonical("/nonexistent/ldl/data.json"), IoError);
  }
}
