#pragma once

// Exact minimum-cost perfect assignment.
//
// Two backends share one contract (an optimal permutation, cost recomputed
// from the caller's entries):
//   * solve_dense:  shortest-augmenting-path Hungarian method with row/column
//                   potentials, O(n^3) on a dense square matrix.
//   * solve_sparse: successive shortest paths (Dijkstra on reduced costs)
//                   over an explicit edge list, with an optional warm start
//                   made of zero-cost edges.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <limits>
#include <queue>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "wpd/error.hpp"

namespace wpd {

/// Row-major dense square cost matrix.
class CostMatrix {
 public:
  CostMatrix() = default;
  explicit CostMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * n_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * n_ + c]; }
  std::span<const double> values() const noexcept { return data_; }

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

struct Assignment {
  std::vector<std::size_t> row_to_col;
  double cost = 0.0;
};

namespace detail {

inline double max_entry(const CostMatrix& c) {
  double m = 0.0;
  for (double v : c.values()) m = std::max(m, v);
  return m;
}

}  // namespace detail

/// Dense Hungarian method. Entries must be finite and non-negative. Costs are
/// normalized by the largest entry before solving and the returned cost is
/// summed from the original entries.
inline Assignment solve_dense(const CostMatrix& cost) {
  const std::size_t n = cost.size();
  Assignment out;
  out.row_to_col.resize(n);
  if (n == 0) return out;

  const double scale = detail::max_entry(cost);
  const double inv = scale > 0.0 ? 1.0 / scale : 1.0;
  const double inf = std::numeric_limits<double>::infinity();

  // 1-based potentials; column 0 is a virtual source.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) * inv - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  for (std::size_t j = 1; j <= n; ++j) out.row_to_col[match[j] - 1] = j - 1;
  for (std::size_t r = 0; r < n; ++r) out.cost += cost(r, out.row_to_col[r]);
  return out;
}

struct SparseEdge {
  std::size_t col;
  double cost;  // must be >= 0
};

/// Adjacency list of a bipartite n x n cost graph; row r owns edges[r].
using SparseCostGraph = std::vector<std::vector<SparseEdge>>;

inline constexpr std::size_t kUnmatched = std::numeric_limits<std::size_t>::max();

/// Successive shortest paths over the given edges only. `warm_start` may pre-
/// match rows to columns through zero-cost edges (kUnmatched elsewhere).
/// Throws InvalidArgument if the edge set admits no perfect matching.
inline Assignment solve_sparse(const SparseCostGraph& graph,
                               std::vector<std::size_t> warm_start = {}) {
  const std::size_t n = graph.size();
  std::vector<std::size_t> row_match = warm_start.empty() ? std::vector<std::size_t>(n, kUnmatched)
                                                          : std::move(warm_start);
  if (row_match.size() != n) throw InvalidArgument("solve_sparse: warm start size mismatch");
  std::vector<std::size_t> col_match(n, kUnmatched);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t c = row_match[r];
    if (c == kUnmatched) continue;
    if (c >= n || col_match[c] != kUnmatched)
      throw InvalidArgument("solve_sparse: warm start is not a partial matching");
    const bool tight = std::any_of(graph[r].begin(), graph[r].end(),
                                   [&](const SparseEdge& e) { return e.col == c && e.cost == 0.0; });
    if (!tight) throw InvalidArgument("solve_sparse: warm start must use zero-cost edges");
    col_match[c] = r;
  }

  // Node ids: rows [0, n), columns [n, 2n). Reduced cost of row r -> col c is
  // cost + pot[r] - pot[n + c]; matched col -> row edges stay tight.
  std::vector<double> pot(2 * n, 0.0), dist(2 * n);
  std::vector<std::size_t> parent(2 * n);
  std::vector<char> done(2 * n);
  const double inf = std::numeric_limits<double>::infinity();
  using Item = std::pair<double, std::size_t>;

  for (std::size_t root = 0; root < n; ++root) {
    if (row_match[root] != kUnmatched) continue;
    std::fill(dist.begin(), dist.end(), inf);
    std::fill(done.begin(), done.end(), 0);
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[root] = 0.0;
    heap.emplace(0.0, root);
    std::size_t sink = kUnmatched;
    while (!heap.empty()) {
      auto [d, node] = heap.top();
      heap.pop();
      if (done[node]) continue;
      done[node] = 1;
      if (node < n) {
        for (const auto& e : graph[node]) {
          const std::size_t cn = n + e.col;
          const double nd = d + std::max(0.0, e.cost + pot[node] - pot[cn]);
          if (nd < dist[cn]) {
            dist[cn] = nd;
            parent[cn] = node;
            heap.emplace(nd, cn);
          }
        }
      } else {
        const std::size_t r = col_match[node - n];
        if (r == kUnmatched) {
          sink = node;
          break;
        }
        if (d < dist[r]) {
          dist[r] = d;
          parent[r] = node;
          heap.emplace(d, r);
        }
      }
    }
    if (sink == kUnmatched) throw InvalidArgument("solve_sparse: no perfect matching in edge set");

    const double reach = dist[sink];
    for (std::size_t k = 0; k < 2 * n; ++k) pot[k] += std::min(dist[k], reach);

    std::size_t cn = sink;
    while (true) {
      const std::size_t r = parent[cn];
      const std::size_t prev_col = row_match[r];
      row_match[r] = cn - n;
      col_match[cn - n] = r;
      if (r == root) break;
      cn = n + prev_col;
    }
  }

  Assignment out;
  out.row_to_col = std::move(row_match);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& edges = graph[r];
    auto it = std::find_if(edges.begin(), edges.end(),
                           [&](const SparseEdge& e) { return e.col == out.row_to_col[r]; });
    out.cost += it->cost;
  }
  return out;
}

}  // namespace wpd
