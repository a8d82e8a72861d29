#include "temario/project.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "temario/rng.hpp"

namespace temario {

namespace {

constexpr double kSigmaLow = 1e-20;
constexpr double kSigmaHigh = 1e4;
constexpr int kBisectionSteps = 64;
constexpr double kFloorScale = 1e-3;

double membership_sum(const NeighborGraph& g, Eigen::Index i, double sigma) {
  double sum = 0.0;
  for (int r = 0; r < g.n_neighbors; ++r) {
    sum += std::exp(-std::max(0.0, g.distances(i, r) - g.rho(i)) / sigma);
  }
  return sum;
}

double clip(double v) { return std::clamp(v, -4.0, 4.0); }

}  // namespace

NeighborGraph smooth_knn(NeighborGraph graph) {
  const Eigen::Index D = graph.points();
  const double target = std::log2(static_cast<double>(graph.n_neighbors));
  graph.rho.resize(D);
  graph.sigma.resize(D);
  graph.sigma_floored.assign(static_cast<std::size_t>(D), false);
  const double global_mean = D > 0 ? graph.distances.mean() : 0.0;

  for (Eigen::Index i = 0; i < D; ++i) {
    graph.rho(i) = graph.distances(i, 0);
    const bool all_at_rho = (graph.distances.row(i).array() == graph.rho(i)).all();
    if (all_at_rho) {
      double base = graph.distances.row(i).mean();
      if (base <= 0.0) base = global_mean;
      if (base <= 0.0) base = 1.0;
      graph.sigma(i) = kFloorScale * base;
      graph.sigma_floored[static_cast<std::size_t>(i)] = true;
      continue;
    }
    double lo = kSigmaLow, hi = kSigmaHigh;
    for (int step = 0; step < kBisectionSteps; ++step) {
      const double mid = 0.5 * (lo + hi);
      if (membership_sum(graph, i, mid) > target) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    graph.sigma(i) = 0.5 * (lo + hi);
  }
  return graph;
}

double smooth_knn_residual(const NeighborGraph& graph, Eigen::Index i) {
  return std::abs(membership_sum(graph, i, graph.sigma(i)) - std::log2(static_cast<double>(graph.n_neighbors)));
}

FuzzyGraph membership_strengths(const NeighborGraph& graph) {
  const Eigen::Index D = graph.points();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(D * graph.n_neighbors));
  for (Eigen::Index i = 0; i < D; ++i) {
    for (int r = 0; r < graph.n_neighbors; ++r) {
      const double w = std::exp(-std::max(0.0, graph.distances(i, r) - graph.rho(i)) / graph.sigma(i));
      if (w > 0.0) triplets.emplace_back(i, graph.indices(i, r), w);
    }
  }
  FuzzyGraph directed(D, D);
  directed.setFromTriplets(triplets.begin(), triplets.end());
  return directed;
}

FuzzyGraph fuzzy_union(const FuzzyGraph& directed) {
  const FuzzyGraph reverse = directed.transpose();
  FuzzyGraph result = directed + reverse - FuzzyGraph(directed.cwiseProduct(reverse));
  result.prune(0.0);
  return result;
}

PointMatrix<double> initial_layout(const FuzzyGraph& graph, const LayoutParams& params, bool* spectral) {
  const Eigen::Index D = graph.rows();
  if (spectral) *spectral = false;

  if (params.init == LayoutInit::spectral && D >= 3 && D <= params.spectral_max_points && graph.nonZeros() > 0) {
    const Eigen::MatrixXd W = Eigen::MatrixXd(graph);
    const Eigen::VectorXd degree = W.rowwise().sum();
    const Eigen::VectorXd inv_sqrt =
        degree.unaryExpr([](double d) { return d > 0.0 ? 1.0 / std::sqrt(d) : 0.0; });
    const Eigen::MatrixXd laplacian = Eigen::MatrixXd::Identity(D, D) - inv_sqrt.asDiagonal() * W * inv_sqrt.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian);
    if (solver.info() == Eigen::Success) {
      PointMatrix<double> coords = solver.eigenvectors().middleCols(1, 2);
      for (Eigen::Index c = 0; c < 2; ++c) {
        Eigen::Index arg;
        coords.col(c).cwiseAbs().maxCoeff(&arg);
        if (coords(arg, c) < 0.0) coords.col(c) *= -1.0;
      }
      const double extent = coords.cwiseAbs().maxCoeff();
      if (std::isfinite(extent) && extent > 0.0) {
        coords *= 10.0 / extent;
        if (spectral) *spectral = true;
        return coords;
      }
    }
  }

  Rng rng(stream_seed(params.seed, Stream::layout, 0));
  PointMatrix<double> coords(D, 2);
  for (Eigen::Index i = 0; i < coords.size(); ++i) coords.data()[i] = rng.uniform(-10.0, 10.0);
  return coords;
}

Projection optimize_layout(const FuzzyGraph& graph, const LayoutParams& params) {
  const Eigen::Index D = graph.rows();
  if (D == 0) throw Error("optimize_layout: empty graph");
  if (params.epochs < 0) throw Error("optimize_layout: epochs must be >= 0");

  Projection projection;
  projection.params = params;
  projection.coordinates = initial_layout(graph, params, &projection.spectral_init);
  auto& y = projection.coordinates;

  struct Edge {
    Eigen::Index head, tail;
    double probability;
  };
  std::vector<Edge> edges;
  double w_max = 0.0;
  for (Eigen::Index col = 0; col < graph.outerSize(); ++col) {
    for (FuzzyGraph::InnerIterator it(graph, col); it; ++it) {
      if (it.row() == it.col() || it.value() <= 0.0) continue;
      edges.push_back({it.row(), it.col(), it.value()});
      w_max = std::max(w_max, it.value());
    }
  }
  for (auto& e : edges) e.probability /= w_max;

  const double a = params.a, b = params.b;
  Rng rng(stream_seed(params.seed, Stream::layout, 1));
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    const double alpha = 1.0 - static_cast<double>(epoch) / params.epochs;
    for (const auto& e : edges) {
      if (rng.uniform() >= e.probability) continue;
      const Eigen::RowVector2d diff = y.row(e.head) - y.row(e.tail);
      const double d2 = diff.squaredNorm();
      if (d2 > 0.0) {
        const double coeff = -2.0 * a * b * std::pow(d2, b - 1.0) / (a * std::pow(d2, b) + 1.0);
        const Eigen::RowVector2d grad = (coeff * diff).unaryExpr(&clip);
        y.row(e.head) += alpha * grad;
        y.row(e.tail) -= alpha * grad;
      }
      for (int s = 0; s < params.neg_rate; ++s) {
        const auto other = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(D)));
        if (other == e.head) continue;
        const Eigen::RowVector2d away = y.row(e.head) - y.row(other);
        const double q2 = away.squaredNorm();
        if (q2 <= 0.0) continue;
        const double coeff = 2.0 * b / ((0.001 + q2) * (a * std::pow(q2, b) + 1.0));
        y.row(e.head) += alpha * (coeff * away).unaryExpr(&clip);
      }
    }
  }
  return projection;
}

}  // namespace temario
