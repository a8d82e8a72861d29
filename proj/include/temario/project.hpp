#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "temario/error.hpp"
#include "temario/types.hpp"

namespace temario {

/// Exact k-nearest-neighbor graph with the smooth-kNN calibration.
struct NeighborGraph {
  int n_neighbors = 0;
  Eigen::MatrixXi indices;    // D x n_neighbors, ascending distance
  Eigen::MatrixXd distances;  // D x n_neighbors
  Eigen::VectorXd rho;        // distance to the nearest neighbor
  Eigen::VectorXd sigma;      // per-point bandwidth
  std::vector<bool> sigma_floored;

  Eigen::Index points() const { return indices.rows(); }
};

/// Brute-force k-NN excluding self; ties by ascending index.
template <typename Scalar>
NeighborGraph knn_graph(const PointMatrix<Scalar>& points, int n_neighbors) {
  const Eigen::Index D = points.rows();
  if (n_neighbors < 1) throw Error("knn_graph: n_neighbors must be >= 1");
  if (n_neighbors >= D) throw Error("knn_graph: n_neighbors must be smaller than the point count");
  NeighborGraph graph;
  graph.n_neighbors = n_neighbors;
  graph.indices.resize(D, n_neighbors);
  graph.distances.resize(D, n_neighbors);
  std::vector<double> d(static_cast<std::size_t>(D));
  std::vector<Eigen::Index> order;
  for (Eigen::Index i = 0; i < D; ++i) {
    order.clear();
    for (Eigen::Index j = 0; j < D; ++j) {
      d[static_cast<std::size_t>(j)] = static_cast<double>((points.row(i) - points.row(j)).norm());
      if (j != i) order.push_back(j);
    }
    std::partial_sort(order.begin(), order.begin() + n_neighbors, order.end(),
                      [&](Eigen::Index a, Eigen::Index b) {
                        const double da = d[static_cast<std::size_t>(a)], db = d[static_cast<std::size_t>(b)];
                        return da != db ? da < db : a < b;
                      });
    for (int r = 0; r < n_neighbors; ++r) {
      graph.indices(i, r) = static_cast<int>(order[static_cast<std::size_t>(r)]);
      graph.distances(i, r) = d[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])];
    }
  }
  return graph;
}

/// Sets rho (nearest distance) and sigma per point: bisection over
/// [1e-20, 1e4] for 64 steps so that Σ_j exp(-max(0, d_ij - rho)/sigma)
/// equals log2(n_neighbors). When every neighbor sits at rho the sum does
/// not depend on sigma, which is then floored at 1e-3 times the mean
/// neighbor distance.
NeighborGraph smooth_knn(NeighborGraph graph);

/// |Σ_j exp(-max(0, d_ij - rho)/sigma) - log2(n_neighbors)| for point i.
double smooth_knn_residual(const NeighborGraph& graph, Eigen::Index i);

using FuzzyGraph = Eigen::SparseMatrix<double>;

/// Directed memberships a_ij = exp(-max(0, d_ij - rho_i)/sigma_i).
FuzzyGraph membership_strengths(const NeighborGraph& graph);

/// Probabilistic t-conorm: w = a + b - a b with b the reverse weight.
FuzzyGraph fuzzy_union(const FuzzyGraph& directed);

enum class LayoutInit { spectral, random };

struct LayoutParams {
  int epochs = 200;
  double a = 1.577;  // curve fit for min_dist = 0.1
  double b = 0.895;
  int neg_rate = 5;
  std::uint64_t seed = 0;
  LayoutInit init = LayoutInit::spectral;
  /// Dense eigensolves above this size fall back to the random init.
  Eigen::Index spectral_max_points = 5000;
};

struct Projection {
  PointMatrix<double> coordinates;  // D x 2
  LayoutParams params;
  int n_neighbors = 0;
  bool spectral_init = false;
};

/// Spectral layout from the normalized Laplacian scaled into [-10, 10]^2,
/// or seeded uniform in [-10, 10]^2 when that is unavailable.
PointMatrix<double> initial_layout(const FuzzyGraph& graph, const LayoutParams& params, bool* spectral = nullptr);

/// Edge-sampled attraction/repulsion descent on the curve 1/(1 + a d^{2b}).
/// Each epoch samples every edge with probability w/w_max and applies
/// neg_rate random repulsions per attractive move; the learning rate decays
/// linearly from 1 to 0.
Projection optimize_layout(const FuzzyGraph& graph, const LayoutParams& params);

/// knn_graph -> smooth_knn -> membership_strengths -> fuzzy_union -> optimize_layout.
template <typename Scalar>
Projection project_2d(const PointMatrix<Scalar>& points, int n_neighbors, const LayoutParams& params) {
  if (points.rows() == 0) throw Error("project: no points");
  FuzzyGraph graph(points.rows(), points.rows());
  if (points.rows() > 1) {
    const int k = std::min<int>(n_neighbors, static_cast<int>(points.rows()) - 1);
    graph = fuzzy_union(membership_strengths(smooth_knn(knn_graph(points, k))));
  }
  Projection projection = optimize_layout(graph, params);
  projection.n_neighbors = n_neighbors;
  return projection;
}

}  // namespace temario
