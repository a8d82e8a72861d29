#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "temario/error.hpp"
#include "temario/rng.hpp"
#include "temario/types.hpp"

namespace temario {

struct KMeansParams {
  int k = 2;
  std::uint64_t seed = 0;
  int max_iter = 300;
  double tol = 1e-6;
  int n_init = 10;
};

template <typename Scalar>
struct ClusterModel {
  PointMatrix<Scalar> centroids;         // k x N
  std::vector<int> assignments;          // per point
  std::vector<Scalar> distances;         // Euclidean distance to own centroid
  std::vector<std::size_t> sizes;        // per cluster
  std::vector<std::optional<std::string>> labels;
  /// Position of each point in id order; k-means++ draws and every tie-break
  /// follow this order so results do not depend on input row order.
  std::vector<std::size_t> rank;
  std::vector<double> objective_history;  // sum of squared distances per iteration
  int iterations = 0;
  bool converged = false;

  int k() const { return static_cast<int>(centroids.rows()); }
  std::size_t points() const { return assignments.size(); }

  std::vector<std::size_t> members(int cluster) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
      if (assignments[i] == cluster) out.push_back(i);
    }
    return out;
  }
};

namespace detail {

template <typename Scalar>
std::pair<int, Scalar> nearest_centroid(const PointMatrix<Scalar>& centroids,
                                        const Eigen::Ref<const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>>& x) {
  int best = 0;
  Scalar best_sq = std::numeric_limits<Scalar>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const Scalar sq = (centroids.row(c) - x).squaredNorm();
    if (sq < best_sq) {
      best_sq = sq;
      best = static_cast<int>(c);
    }
  }
  return {best, best_sq};
}

inline std::vector<std::size_t> id_ranks(std::size_t n, std::span<const std::string> ids) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (!ids.empty()) {
    if (ids.size() != n) throw Error("kmeans: ids size does not match point count");
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
  }
  std::vector<std::size_t> rank(n);
  for (std::size_t pos = 0; pos < n; ++pos) rank[order[pos]] = pos;
  return rank;
}


/// One k-means++ seeding followed by Lloyd iterations.
template <typename Scalar>
ClusterModel<Scalar> lloyd(const PointMatrix<Scalar>& points, const KMeansParams& params,
                           std::vector<std::size_t> rank, int restart) {
  const auto D = static_cast<std::size_t>(points.rows());
  const int k = params.k;
  ClusterModel<Scalar> model;
  model.rank = std::move(rank);
  std::vector<std::size_t> order(D);
  for (std::size_t i = 0; i < D; ++i) order[model.rank[i]] = i;

  // k-means++ seeding over points in id order.
  Rng rng(stream_seed(params.seed, Stream::kmeans, static_cast<std::uint64_t>(restart)));
  std::vector<std::size_t> seeds;
  std::vector<bool> chosen(D, false);
  std::vector<double> min_sq(D, std::numeric_limits<double>::infinity());
  auto take = [&](std::size_t row) {
    seeds.push_back(row);
    chosen[row] = true;
    for (std::size_t i = 0; i < D; ++i) {
      min_sq[i] = std::min(min_sq[i], static_cast<double>((points.row(i) - points.row(row)).squaredNorm()));
    }
  };
  take(order[rng.below(D)]);
  while (seeds.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t pos = 0; pos < D; ++pos) total += min_sq[order[pos]];
    if (total <= 0.0) {
      std::size_t pos = 0;
      while (chosen[order[pos]]) ++pos;
      take(order[pos]);
      continue;
    }
    const double u = rng.uniform() * total;
    double acc = 0.0;
    std::size_t pick = order[D - 1];
    for (std::size_t pos = 0; pos < D; ++pos) {
      acc += min_sq[order[pos]];
      if (u < acc && min_sq[order[pos]] > 0.0) {
        pick = order[pos];
        break;
      }
    }
    take(pick);
  }

  model.centroids.resize(k, points.cols());
  for (int c = 0; c < k; ++c) model.centroids.row(c) = points.row(static_cast<Eigen::Index>(seeds[c]));

  std::vector<int> assignment(D, -1);
  std::vector<Scalar> sq(D, Scalar(0));

  auto assign_all = [&](std::vector<int>& out) {
    for (std::size_t i = 0; i < D; ++i) {
      auto [c, d2] = nearest_centroid<Scalar>(model.centroids, points.row(static_cast<Eigen::Index>(i)));
      out[i] = c;
      sq[i] = d2;
    }
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (int c : out) ++counts[static_cast<std::size_t>(c)];
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      std::optional<std::size_t> far;
      for (std::size_t pos = 0; pos < D; ++pos) {
        const std::size_t i = order[pos];
        if (counts[static_cast<std::size_t>(out[i])] < 2) continue;
        if (!far || sq[i] > sq[*far]) far = i;
      }
      if (!far) break;
      --counts[static_cast<std::size_t>(out[*far])];
      out[*far] = c;
      ++counts[static_cast<std::size_t>(c)];
      model.centroids.row(c) = points.row(static_cast<Eigen::Index>(*far));
      sq[*far] = Scalar(0);
    }
  };
  auto objective = [&] {
    double j = 0.0;
    for (std::size_t i = 0; i < D; ++i) {
      j += static_cast<double>((points.row(static_cast<Eigen::Index>(i)) - model.centroids.row(assignment[i])).squaredNorm());
    }
    return j;
  };
  auto update_centroids = [&] {
    PointMatrix<Scalar> sums = PointMatrix<Scalar>::Zero(k, points.cols());
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t pos = 0; pos < D; ++pos) {
      const std::size_t i = order[pos];
      sums.row(assignment[i]) += points.row(static_cast<Eigen::Index>(i));
      ++counts[static_cast<std::size_t>(assignment[i])];
    }
    double shift = 0.0;
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] == 0) continue;
      const auto updated = (sums.row(c) / static_cast<Scalar>(counts[static_cast<std::size_t>(c)])).eval();
      shift = std::max(shift, static_cast<double>((updated - model.centroids.row(c)).norm()));
      model.centroids.row(c) = updated;
    }
    return shift;
  };

  assign_all(assignment);
  model.objective_history.push_back(objective());
  std::vector<int> next(D);
  for (int it = 1; it <= params.max_iter; ++it) {
    model.iterations = it;
    const double shift = update_centroids();
    model.objective_history.push_back(objective());
    assign_all(next);
    const bool changed = next != assignment;
    assignment.swap(next);
    if (!changed) {
      model.converged = true;
      break;
    }
    model.objective_history.push_back(objective());
    if (shift < params.tol) {
      model.converged = true;
      break;
    }
  }

  model.assignments = std::move(assignment);
  model.distances.resize(D);
  model.sizes.assign(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < D; ++i) {
    model.distances[i] =
        (points.row(static_cast<Eigen::Index>(i)) - model.centroids.row(model.assignments[i])).norm();
    ++model.sizes[static_cast<std::size_t>(model.assignments[i])];
  }
  model.labels.assign(static_cast<std::size_t>(k), std::nullopt);
  return model;
}

}  // namespace detail

/// Lloyd's algorithm with k-means++ seeding, best of n_init restarts by final
/// objective (ties to the earlier restart).
///
/// Points are visited in id order (row order when `ids` is empty), so a
/// permutation of the input rows yields the same partition. An emptied
/// cluster is reseeded at the point farthest from its current centroid.
/// Iteration stops at an assignment fixpoint, when no centroid moves by
/// `tol` or more, or after max_iter iterations. Assignments are always the
/// nearest centroid of the final centroids.
template <typename Scalar>
ClusterModel<Scalar> kmeans(const PointMatrix<Scalar>& points, const KMeansParams& params,
                            std::span<const std::string> ids = {}) {
  const auto D = static_cast<std::size_t>(points.rows());
  if (params.k <= 0) throw Error("kmeans: k must be >= 1");
  if (static_cast<std::size_t>(params.k) > D) throw Error("kmeans: k exceeds the number of points");
  if (!points.allFinite()) throw Error("kmeans: non-finite input vectors");
  if (params.max_iter < 1) throw Error("kmeans: max_iter must be >= 1");
  if (params.n_init < 1) throw Error("kmeans: n_init must be >= 1");

  const auto rank = detail::id_ranks(D, ids);
  auto final_objective = [](const ClusterModel<Scalar>& m) {
    double j = 0.0;
    for (auto d : m.distances) j += static_cast<double>(d) * static_cast<double>(d);
    return j;
  };
  ClusterModel<Scalar> best = detail::lloyd(points, params, rank, 0);
  double best_objective = final_objective(best);
  for (int restart = 1; restart < params.n_init; ++restart) {
    auto candidate = detail::lloyd(points, params, rank, restart);
    const double objective = final_objective(candidate);
    if (objective < best_objective) {
      best_objective = objective;
      best = std::move(candidate);
    }
  }
  return best;
}

/// Mean Euclidean distance of a cluster's members to its centroid.
template <typename Scalar>
double dispersion(const ClusterModel<Scalar>& model, int cluster) {
  if (cluster < 0 || cluster >= model.k()) throw Error("dispersion: unknown cluster");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < model.points(); ++i) {
    if (model.assignments[i] != cluster) continue;
    sum += static_cast<double>(model.distances[i]);
    ++n;
  }
  if (n == 0) throw Error("dispersion: empty cluster");
  return sum / static_cast<double>(n);
}

/// The n members closest to the centroid; ties by ascending id.
template <typename Scalar>
std::vector<std::size_t> representatives(const ClusterModel<Scalar>& model, int cluster, std::size_t n = 15) {
  if (cluster < 0 || cluster >= model.k()) throw Error("representatives: unknown cluster");
  std::vector<std::size_t> members = model.members(cluster);
  if (members.empty()) throw Error("representatives: empty cluster");
  std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
    return model.distances[a] != model.distances[b] ? model.distances[a] < model.distances[b]
                                                    : model.rank[a] < model.rank[b];
  });
  members.resize(std::min(n, members.size()));
  return members;
}

/// Points within `radius` of their own centroid (infinity selects all).
template <typename Scalar>
std::vector<std::size_t> plot_filter(const ClusterModel<Scalar>& model, double radius) {
  if (!(radius >= 0.0)) throw Error("plot_filter: radius must be >= 0");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < model.points(); ++i) {
    if (static_cast<double>(model.distances[i]) <= radius) out.push_back(i);
  }
  return out;
}

/// Nearest centroid and its Euclidean distance; ties go to the smaller id.
template <typename Scalar, typename Derived>
std::pair<int, double> assign(const ClusterModel<Scalar>& model, const Eigen::MatrixBase<Derived>& vector) {
  if (vector.size() != model.centroids.cols()) throw Error("assign: dimension mismatch");
  const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> row = vector.transpose().template cast<Scalar>();
  auto [c, sq] = detail::nearest_centroid<Scalar>(model.centroids, row);
  return {c, std::sqrt(static_cast<double>(sq))};
}

/// Centroids, sizes, dispersions and labels.
template <typename Scalar>
nlohmann::json to_json(const ClusterModel<Scalar>& model) {
  nlohmann::json clusters = nlohmann::json::array();
  for (int c = 0; c < model.k(); ++c) {
    nlohmann::json entry;
    entry["id"] = c;
    entry["size"] = model.sizes[static_cast<std::size_t>(c)];
    entry["dispersion"] = model.sizes[static_cast<std::size_t>(c)] ? dispersion(model, c) : 0.0;
    std::vector<double> centroid(static_cast<std::size_t>(model.centroids.cols()));
    for (Eigen::Index j = 0; j < model.centroids.cols(); ++j) centroid[static_cast<std::size_t>(j)] = static_cast<double>(model.centroids(c, j));
    entry["centroid"] = std::move(centroid);
    const auto& label = model.labels[static_cast<std::size_t>(c)];
    entry["label"] = label ? nlohmann::json(*label) : nlohmann::json(nullptr);
    clusters.push_back(std::move(entry));
  }
  return {{"k", model.k()}, {"clusters", std::move(clusters)}};
}

}  // namespace temario
