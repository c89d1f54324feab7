#pragma once

// Plane geometry under the l-infinity norm, explicit finite metric spaces,
// snowflaking and distortion of maps between finite spaces.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "wpd/error.hpp"

namespace wpd {

struct PlanePoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const PlanePoint&, const PlanePoint&) = default;
  friend auto operator<=>(const PlanePoint&, const PlanePoint&) = default;

  bool finite() const noexcept { return std::isfinite(x) && std::isfinite(y); }
};

inline PlanePoint operator+(PlanePoint a, PlanePoint b) { return {a.x + b.x, a.y + b.y}; }
inline PlanePoint operator-(PlanePoint a, PlanePoint b) { return {a.x - b.x, a.y - b.y}; }
inline PlanePoint operator*(double s, PlanePoint a) { return {s * a.x, s * a.y}; }

inline double linf_dist(const PlanePoint& p, const PlanePoint& q) noexcept {
  return std::max(std::abs(p.x - q.x), std::abs(p.y - q.y));
}

// l-q distance for q >= 1; q = +inf gives linf_dist. Only offered for
// experimentation, every construction in this library uses linf_dist.
inline double lq_dist(const PlanePoint& p, const PlanePoint& q, double order) {
  if (!(order >= 1.0)) throw InvalidArgument("lq_dist: order must be >= 1");
  if (std::isinf(order)) return linf_dist(p, q);
  const double dx = std::abs(p.x - q.x);
  const double dy = std::abs(p.y - q.y);
  return std::pow(std::pow(dx, order) + std::pow(dy, order), 1.0 / order);
}

// Closest diagonal point under linf.
inline PlanePoint diagonal_projection(const PlanePoint& p) noexcept {
  const double mid = 0.5 * (p.x + p.y);
  return {mid, mid};
}

inline double diagonal_distance(const PlanePoint& p) noexcept {
  return 0.5 * std::abs(p.y - p.x);
}

inline double linf_diameter(std::span<const PlanePoint> pts) noexcept {
  if (pts.empty()) return 0.0;
  auto [xlo, xhi] = std::minmax_element(pts.begin(), pts.end(),
                                        [](auto& a, auto& b) { return a.x < b.x; });
  auto [ylo, yhi] = std::minmax_element(pts.begin(), pts.end(),
                                        [](auto& a, auto& b) { return a.y < b.y; });
  return std::max(xhi->x - xlo->x, yhi->y - ylo->y);
}

/// Finite metric space given by its full distance matrix.
///
/// Construction checks symmetry, zero diagonal, positivity off the diagonal
/// and (unless disabled) the triangle inequality with absolute tolerance
/// `kTriangleTolerance`.
class FiniteMetricSpace {
 public:
  static constexpr double kTriangleTolerance = 1e-9;

  FiniteMetricSpace() = default;

  explicit FiniteMetricSpace(std::vector<std::vector<double>> dist, bool validate = true)
      : dist_(std::move(dist)) {
    const std::size_t n = dist_.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (dist_[i].size() != n) throw InvalidArgument("FiniteMetricSpace: matrix is not square");
    }
    if (validate) check();
  }

  std::size_t size() const noexcept { return dist_.size(); }
  double operator()(std::size_t i, std::size_t j) const { return dist_[i][j]; }
  const std::vector<std::vector<double>>& matrix() const noexcept { return dist_; }

  double min_positive_distance() const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t j = i + 1; j < size(); ++j) best = std::min(best, dist_[i][j]);
    return best;
  }

 private:
  void check() const {
    const std::size_t n = dist_.size();
    auto fail = [](std::size_t i, std::size_t j, const char* what) {
      std::ostringstream os;
      os << "FiniteMetricSpace: " << what << " at (" << i << ", " << j << ")";
      throw InvalidArgument(os.str());
    };
    for (std::size_t i = 0; i < n; ++i) {
      if (dist_[i][i] != 0.0) fail(i, i, "non-zero diagonal");
      for (std::size_t j = 0; j < n; ++j) {
        const double d = dist_[i][j];
        if (!std::isfinite(d)) fail(i, j, "non-finite distance");
        if (d != dist_[j][i]) fail(i, j, "asymmetric distance");
        if (i != j && !(d > 0.0)) fail(i, j, "non-positive distance between distinct points");
      }
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k)
          if (dist_[i][k] > dist_[i][j] + dist_[j][k] + kTriangleTolerance)
            fail(i, k, "triangle inequality violated");
  }

  std::vector<std::vector<double>> dist_;
};

inline FiniteMetricSpace snowflake(const FiniteMetricSpace& space, double theta) {
  if (!(theta > 0.0 && theta <= 1.0))
    throw InvalidArgument("snowflake: theta must lie in (0, 1]");
  if (theta == 1.0) return space;
  auto d = space.matrix();
  for (auto& row : d)
    for (auto& v : row) v = std::pow(v, theta);
  return FiniteMetricSpace(std::move(d));
}

/// A map between finite metric spaces, given as an index assignment.
struct PointMap {
  FiniteMetricSpace domain;
  FiniteMetricSpace codomain;
  std::vector<std::size_t> assignment;

  PointMap(FiniteMetricSpace dom, FiniteMetricSpace cod, std::vector<std::size_t> assign)
      : domain(std::move(dom)), codomain(std::move(cod)), assignment(std::move(assign)) {
    if (assignment.size() != domain.size())
      throw InvalidArgument("PointMap: assignment must be total on the domain");
    for (auto a : assignment)
      if (a >= codomain.size()) throw InvalidArgument("PointMap: assignment index out of range");
  }
};

// outer(inner(x)); the result maps inner.domain into outer.codomain.
inline PointMap compose(const PointMap& outer, const PointMap& inner) {
  if (inner.codomain.size() != outer.domain.size())
    throw InvalidArgument("compose: inner codomain and outer domain differ in size");
  std::vector<std::size_t> assign(inner.assignment.size());
  for (std::size_t i = 0; i < assign.size(); ++i) assign[i] = outer.assignment[inner.assignment[i]];
  return PointMap(inner.domain, outer.codomain, std::move(assign));
}

struct DistortionResult {
  double distortion;  // max ratio / min ratio, +inf if some pair collapses
  double scale;       // min ratio, the best s in s*d <= d' <= D*s*d
  double max_ratio;
};

inline DistortionResult distortion_details(const PointMap& map) {
  const std::size_t n = map.domain.size();
  if (n < 2) throw InvalidArgument("distortion: domain needs at least 2 points");
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double r = map.codomain(map.assignment[i], map.assignment[j]) / map.domain(i, j);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
  }
  if (lo == 0.0) return {std::numeric_limits<double>::infinity(), 0.0, hi};
  return {hi / lo, lo, hi};
}

inline double distortion(const PointMap& map) { return distortion_details(map).distortion; }

}  // namespace wpd
