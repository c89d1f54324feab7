#pragma once

// Persistence diagrams (finite multisets of points strictly above the
// diagonal), partial matchings, and the p-Wasserstein distance between
// diagrams computed as an assignment problem on a diagonal-augmented matrix.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <utility>
#include <vector>

#include "wpd/assignment.hpp"
#include "wpd/error.hpp"
#include "wpd/metric_core.hpp"
#include "wpd/transport.hpp"

namespace wpd {

class PersistenceDiagram {
 public:
  PersistenceDiagram() = default;

  explicit PersistenceDiagram(std::vector<PlanePoint> points) : points_(std::move(points)) {
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const auto& q = points_[i];
      if (!q.finite()) {
        std::ostringstream os;
        os << "PersistenceDiagram: point " << i << " has a non-finite coordinate";
        throw InvalidArgument(os.str());
      }
      if (!(q.x < q.y)) {
        std::ostringstream os;
        os.precision(17);
        os << "PersistenceDiagram: point " << i << " = (" << q.x << ", " << q.y
           << ") violates birth < death";
        throw InvalidArgument(os.str());
      }
    }
  }

  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  const std::vector<PlanePoint>& points() const noexcept { return points_; }
  const PlanePoint& operator[](std::size_t i) const { return points_[i]; }

  friend bool operator==(const PersistenceDiagram&, const PersistenceDiagram&) = default;

 private:
  std::vector<PlanePoint> points_;
};

/// Bijection between subsets of two diagrams, as (index in first, index in
/// second) pairs. Points not listed are sent to the diagonal.
struct PartialMatching {
  std::vector<std::pair<std::size_t, std::size_t>> matched;
};

inline void validate_matching(const PartialMatching& m, const PersistenceDiagram& d1,
                              const PersistenceDiagram& d2) {
  std::vector<char> seen1(d1.size(), 0), seen2(d2.size(), 0);
  for (auto [i, j] : m.matched) {
    if (i >= d1.size() || j >= d2.size()) throw InvalidArgument("PartialMatching: index out of range");
    if (seen1[i]++ || seen2[j]++) throw InvalidArgument("PartialMatching: index used twice");
  }
}

/// p-th power of cost_p, without the final root.
inline double cost_power(const PartialMatching& m, const PersistenceDiagram& d1,
                         const PersistenceDiagram& d2, double p) {
  require_order(p, "cost_p");
  validate_matching(m, d1, d2);
  std::vector<char> used1(d1.size(), 0), used2(d2.size(), 0);
  double total = 0.0;
  for (auto [i, j] : m.matched) {
    used1[i] = used2[j] = 1;
    total += pow_p(linf_dist(d1[i], d2[j]), p);
  }
  for (std::size_t i = 0; i < d1.size(); ++i)
    if (!used1[i]) total += pow_p(diagonal_distance(d1[i]), p);
  for (std::size_t j = 0; j < d2.size(); ++j)
    if (!used2[j]) total += pow_p(diagonal_distance(d2[j]), p);
  return total;
}

inline double cost_p(const PartialMatching& m, const PersistenceDiagram& d1,
                     const PersistenceDiagram& d2, double p) {
  return root_p(cost_power(m, d1, d2, p), p);
}

struct DiagramDistance {
  double distance = 0.0;
  PartialMatching matching;
};

/// Builds the (n+m) x (n+m) augmented matrix: real-to-real block, each real
/// point to its own diagonal copy, diagonal copies to each other at cost 0,
/// and a big-M sentinel (twice the sum of finite entries) elsewhere.
inline CostMatrix augmented_costs(const PersistenceDiagram& d1, const PersistenceDiagram& d2, double p) {
  const std::size_t n = d1.size(), m = d2.size(), size = n + m;
  CostMatrix c(size);
  double finite_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) finite_sum += c(i, j) = pow_p(linf_dist(d1[i], d2[j]), p);
  for (std::size_t i = 0; i < n; ++i) finite_sum += c(i, m + i) = pow_p(diagonal_distance(d1[i]), p);
  for (std::size_t j = 0; j < m; ++j) finite_sum += c(n + j, j) = pow_p(diagonal_distance(d2[j]), p);
  const double big = finite_sum > 0.0 ? 2.0 * finite_sum : 1.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      if (k != i) c(i, m + k) = big;
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = 0; k < m; ++k)
      if (k != j) c(n + j, k) = big;
  return c;
}

namespace detail {

struct GroupedPoints {
  std::vector<PlanePoint> points;                  // distinct points
  std::vector<std::vector<std::size_t>> members;   // indices carrying each one
};

inline GroupedPoints group_points(const PersistenceDiagram& d) {
  std::map<PlanePoint, std::size_t> slot;
  GroupedPoints g;
  for (std::size_t i = 0; i < d.size(); ++i) {
    auto [it, fresh] = slot.try_emplace(d[i], g.points.size());
    if (fresh) {
      g.points.push_back(d[i]);
      g.members.emplace_back();
    }
    g.members[it->second].push_back(i);
  }
  return g;
}

}  // namespace detail

/// Diagram W_p as a transportation problem between the distinct points
/// (supplies = multiplicities) plus one diagonal node per side. Exact, and
/// fast when the diagrams repeat a few points many times.
inline DiagramDistance wasserstein_pd_grouped(const PersistenceDiagram& d1, const PersistenceDiagram& d2, double p) {
  require_order(p, "wasserstein_pd_grouped");
  const auto g1 = detail::group_points(d1), g2 = detail::group_points(d2);
  const std::size_t a = g1.points.size(), b = g2.points.size();
  // Rows: groups of d1, then the diagonal. Columns: groups of d2, then the diagonal.
  std::vector<std::vector<double>> cost(a + 1, std::vector<double>(b + 1, 0.0));
  std::vector<double> supply(a + 1), demand(b + 1);
  for (std::size_t i = 0; i < a; ++i) {
    for (std::size_t j = 0; j < b; ++j) cost[i][j] = pow_p(linf_dist(g1.points[i], g2.points[j]), p);
    cost[i][b] = pow_p(diagonal_distance(g1.points[i]), p);
    supply[i] = static_cast<double>(g1.members[i].size());
  }
  for (std::size_t j = 0; j < b; ++j) {
    cost[a][j] = pow_p(diagonal_distance(g2.points[j]), p);
    demand[j] = static_cast<double>(g2.members[j].size());
  }
  supply[a] = static_cast<double>(d2.size());
  demand[b] = static_cast<double>(d1.size());
  const auto flow = detail::min_cost_transport(cost, supply, demand);

  DiagramDistance out;
  std::vector<std::size_t> next_in_column(b, 0);
  for (std::size_t i = 0; i < a; ++i) {
    std::size_t next_in_row = 0;
    for (std::size_t j = 0; j < b; ++j) {
      const auto units = static_cast<std::size_t>(std::llround(flow[i][j]));
      for (std::size_t u = 0; u < units; ++u)
        out.matching.matched.emplace_back(g1.members[i][next_in_row++], g2.members[j][next_in_column[j]++]);
    }
  }
  std::sort(out.matching.matched.begin(), out.matching.matched.end());
  out.distance = cost_p(out.matching, d1, d2, p);
  return out;
}

/// Exact diagram W_p with a realizing matching. Symmetric bit for bit: the
/// pair is put in a canonical order before solving.
inline DiagramDistance wasserstein_pd(const PersistenceDiagram& d1, const PersistenceDiagram& d2, double p) {
  require_order(p, "wasserstein_pd");
  if (d2.points() < d1.points()) {
    DiagramDistance r = wasserstein_pd(d2, d1, p);
    for (auto& [i, j] : r.matching.matched) std::swap(i, j);
    std::sort(r.matching.matched.begin(), r.matching.matched.end());
    return r;  // distance kept from the canonical order, so symmetry is bitwise
  }
  DiagramDistance out;
  const std::size_t n = d1.size(), m = d2.size();
  if (n + m == 0) return out;
  // Few distinct points with large multiplicities: solve over the groups.
  if (n + m > 64) {
    const std::size_t distinct = detail::group_points(d1).points.size() + detail::group_points(d2).points.size();
    if (4 * distinct <= n + m) return wasserstein_pd_grouped(d1, d2, p);
  }
  const Assignment best = solve_dense(augmented_costs(d1, d2, p));
  for (std::size_t i = 0; i < n; ++i)
    if (best.row_to_col[i] < m) out.matching.matched.emplace_back(i, best.row_to_col[i]);
  // Recompute from the matching so the reported cost never includes a sentinel.
  out.distance = cost_p(out.matching, d1, d2, p);
  return out;
}

/// Exhaustive minimum of cost_p over every partial matching. Sizes <= 5.
inline double oracle_wasserstein_pd(const PersistenceDiagram& d1, const PersistenceDiagram& d2, double p) {
  require_order(p, "oracle_wasserstein_pd");
  if (d1.size() > 5 || d2.size() > 5) throw InvalidArgument("oracle_wasserstein_pd: at most 5 points per side");
  const std::size_t n = d1.size(), m = d2.size();
  double best = std::numeric_limits<double>::infinity();
  // Choose a subset of d1 (bitmask), then an injective image sequence in d2.
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    std::vector<std::size_t> chosen;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1u << i)) chosen.push_back(i);
    const std::size_t k = chosen.size();
    if (k > m) continue;
    std::vector<std::size_t> image;
    std::vector<char> taken(m, 0);
    auto recurse = [&](auto&& self) -> void {
      if (image.size() == k) {
        PartialMatching pm;
        for (std::size_t t = 0; t < k; ++t) pm.matched.emplace_back(chosen[t], image[t]);
        best = std::min(best, cost_p(pm, d1, d2, p));
        return;
      }
      for (std::size_t j = 0; j < m; ++j) {
        if (taken[j]) continue;
        taken[j] = 1;
        image.push_back(j);
        self(self);
        image.pop_back();
        taken[j] = 0;
      }
    };
    recurse(recurse);
  }
  return best;
}

struct PerturbResult {
  PersistenceDiagram diagram;
  std::size_t displaced = 0;  // number of moved points
  double delta = 0.0;         // displacement budget

  // Certified W_p(original, perturbed) <= (displaced * delta^p)^(1/p).
  double distance_bound(double p) const {
    return displaced == 0 ? 0.0 : root_p(static_cast<double>(displaced), p) * delta;
  }
};

/// Separates repeated points. The r-th repeat of a point (r >= 1) moves up
/// the death axis by delta * (1 - 2^-r), which keeps birth < death and does not
/// depend on the rest of the diagram, so equal inputs get equal outputs.
/// Collisions with other points are resolved by shrinking the offset.
inline PerturbResult perturb_to_multiplicity_one(const PersistenceDiagram& d, double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw InvalidArgument("perturb_to_multiplicity_one: delta must be positive");
  PerturbResult out;
  out.delta = delta;
  std::set<PlanePoint> occupied(d.points().begin(), d.points().end());
  if (occupied.size() == d.size()) {
    out.diagram = d;
    return out;
  }
  std::map<PlanePoint, int> repeats;
  std::vector<PlanePoint> result;
  result.reserve(d.size());
  for (const auto& q : d.points()) {
    const int r = repeats[q]++;
    if (r == 0) {
      result.push_back(q);
      continue;
    }
    const double base = delta * (1.0 - std::ldexp(1.0, -std::min(r, 50)));
    PlanePoint moved = q;
    for (int shrink = 0;; ++shrink) {
      if (shrink == 1024) throw InvalidArgument("perturb_to_multiplicity_one: could not separate points");
      moved = {q.x, q.y + base * (1.0 - shrink / 1024.0)};
      if (moved.y > q.y && !occupied.count(moved)) break;
    }
    occupied.insert(moved);
    result.push_back(moved);
    ++out.displaced;
  }
  out.diagram = PersistenceDiagram(std::move(result));
  return out;
}

}  // namespace wpd
