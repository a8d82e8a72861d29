#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "temario/error.hpp"
#include "temario/types.hpp"

namespace temario {

/// Adjusted Rand index between two labelings of the same points.
inline double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw Error("adjusted_rand_index: size mismatch");
  const auto n = static_cast<double>(a.size());
  if (a.size() < 2) return 1.0;
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1;
    rows[a[i]] += 1;
    cols[b[i]] += 1;
  }
  auto pairs = [](double x) { return x * (x - 1.0) / 2.0; };
  double index = 0, sum_rows = 0, sum_cols = 0;
  for (const auto& [_, c] : joint) index += pairs(c);
  for (const auto& [_, c] : rows) sum_rows += pairs(c);
  for (const auto& [_, c] : cols) sum_cols += pairs(c);
  const double expected = sum_rows * sum_cols / pairs(n);
  const double maximum = 0.5 * (sum_rows + sum_cols);
  if (maximum == expected) return 1.0;
  return (index - expected) / (maximum - expected);
}

namespace detail {

/// Indices of all other points sorted by distance (ties by index).
template <typename Scalar>
std::vector<std::vector<std::size_t>> neighbor_orders(const PointMatrix<Scalar>& x) {
  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<std::vector<std::size_t>> out(n);
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      d[j] = static_cast<double>((x.row(static_cast<Eigen::Index>(i)) - x.row(static_cast<Eigen::Index>(j))).squaredNorm());
    }
    auto& order = out[i];
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) order.push_back(j);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t p, std::size_t q) { return d[p] < d[q]; });
  }
  return out;
}

}  // namespace detail

/// Neighbor-preservation score of an embedding:
///   T(k) = 1 - 2/(n k (2n - 3k - 1)) Σ_i Σ_{j ∈ U_k(i)} (r(i, j) - k)
/// where U_k(i) are the low-dimensional k-neighbors of i that are not among
/// its high-dimensional k-neighbors and r(i, j) is the high-dimensional rank.
template <typename ScalarHigh, typename ScalarLow>
double trustworthiness(const PointMatrix<ScalarHigh>& high, const PointMatrix<ScalarLow>& low, int k) {
  const auto n = static_cast<std::size_t>(high.rows());
  if (static_cast<std::size_t>(low.rows()) != n) throw Error("trustworthiness: point count mismatch");
  if (k < 1 || 2.0 * n - 3.0 * k - 1.0 <= 0.0) throw Error("trustworthiness: k too large for n");
  const auto high_order = detail::neighbor_orders(high);
  const auto low_order = detail::neighbor_orders(low);
  double penalty = 0.0;
  std::vector<std::size_t> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < high_order[i].size(); ++r) rank[high_order[i][r]] = r + 1;
    for (std::size_t r = 0; r < static_cast<std::size_t>(k); ++r) {
      const std::size_t j = low_order[i][r];
      if (rank[j] > static_cast<std::size_t>(k)) penalty += static_cast<double>(rank[j]) - k;
    }
  }
  const double nd = static_cast<double>(n);
  return 1.0 - 2.0 / (nd * k * (2.0 * nd - 3.0 * k - 1.0)) * penalty;
}

}  // namespace temario
