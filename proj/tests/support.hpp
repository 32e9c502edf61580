#pragma once

#include "ldl/dataset.hpp"
#include "ldl/graph.hpp"
#include "ldl/ops.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace ldl::test {

using numerics::Tensor;

inline Matrix random_matrix(Index r, Index c, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}

/// Relative error ||a - b|| / max(||b||, floor) per tensor.
inline double relative_error(const Matrix& a, const Matrix& b, double floor = 1e-10) {
  return (a - b).norm() / std::max(b.norm(), floor);
}

/// Worst relative error between autodiff gradients and central differences
/// (step `eps`) over every leaf in `leaves`. `loss` rebuilds the tape.
inline double gradient_check(std::vector<Tensor> leaves, const std::function<Tensor()>& loss, double eps = 1e-5) {
  for (auto& t : leaves) t.zero_grad();
  numerics::backward(loss());
  double worst = 0.0;
  for (auto& t : leaves) {
    const Matrix analytic = t.grad();
    Matrix numeric = Matrix::Zero(t.rows(), t.cols());
    numerics::NoGradGuard guard;
    for (Index i = 0; i < t.rows(); ++i) {
      for (Index j = 0; j < t.cols(); ++j) {
        double& x = t.mutable_values()(i, j);
        const double keep = x;
        x = keep + eps;
        const double up = loss().item();
        x = keep - eps;
        const double down = loss().item();
        x = keep;
        numeric(i, j) = (up - down) / (2.0 * eps);
      }
    }
    worst = std::max(worst, relative_error(analytic, numeric));
  }
  return worst;
}

/// Random simple graph on n nodes with a spanning path, so no node is isolated.
inline graph::Graph connected_random_graph(Index n, double p, std::mt19937_64& rng) {
  std::vector<graph::Edge> edges = graph::random_graph(n, p, rng).edges();
  for (Index i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
  return graph::Graph::simple(n, edges);
}

inline graph::Graph chain(Index n) {
  std::vector<graph::Edge> edges;
  for (Index i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
  return graph::Graph::simple(n, edges);
}

inline data::Dataset toy_dataset(Index n, Index f, int classes, std::mt19937_64& rng) {
  data::Dataset ds;
  ds.name = "toy";
  ds.graph = connected_random_graph(n, 0.3, rng);
  ds.features = random_matrix(n, f, rng);
  ds.num_classes = classes;
  for (Index i = 0; i < n; ++i) ds.labels.push_back(static_cast<int>(i % classes));
  return ds;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("ldl-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace ldl::test
