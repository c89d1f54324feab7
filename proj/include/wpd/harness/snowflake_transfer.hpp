#pragma once

// Numerical check of the snowflake-transfer composition argument on concrete
// maps: a near-isometric first stage g (a snowflaked finite space realized in
// diagrams or measures) followed by an eps2-quasi-isometric second stage f.
// When the schedule eps1 < delta/2, eps2 < delta * k1 * M / 2 holds, the
// composite distortion must stay below (1 + delta) / (1 - delta).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "wpd/diagrams.hpp"
#include "wpd/embeddings.hpp"
#include "wpd/error.hpp"
#include "wpd/metric_core.hpp"
#include "wpd/transport.hpp"

namespace wpd::harness {

enum class TransferRoute {
  kDiagramsToMeasures,  // X = diagrams, f = grid quasi-isometry (p > 1)
  kMeasuresToDiagrams,  // X = measures, f = measures_to_diagrams_quasi
};

struct SnowflakeSchedule {
  double p = 2.0;
  double delta = 0.1;
  double eps1 = -1.0;          // distortion budget for g; < 0 means 0.9 * delta / 2
  double eps2_fraction = 0.9;  // eps2 = fraction * delta * k1 * M / 2
  TransferRoute route = TransferRoute::kDiagramsToMeasures;
  GridOptions grid;
};

struct SnowflakeTransferReport {
  double theta = 1.0;
  double delta = 0.0;
  double eps1 = 0.0;
  double g_distortion = 0.0;  // measured, must be <= 1 + eps1
  double k1 = 0.0;            // min expansion ratio of g
  double min_distance = 0.0;  // M, min positive distance of the snowflaked space
  double eps2 = 0.0;
  double eps2_limit = 0.0;    // delta * k1 * M / 2
  double bound = 0.0;         // (1 + delta) / (1 - delta)
  double measured_distortion = 0.0;
  std::int64_t grid_resolution = 0;
  bool certified = false;     // schedule satisfies every constraint of the argument
  bool skipped = false;
  bool pass = true;           // !certified || measured <= bound
  std::string note;
};

/// Classical multidimensional scaling: rows are coordinates whose Euclidean
/// distances reproduce `space` exactly when it is Euclidean. Negative
/// eigenvalues are dropped.
inline std::vector<std::vector<double>> classical_mds(const FiniteMetricSpace& space) {
  const auto n = static_cast<Eigen::Index>(space.size());
  Eigen::MatrixXd sq(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) sq(i, j) = space(i, j) * space(i, j);
  const Eigen::MatrixXd centering =
      Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  const Eigen::MatrixXd gram = -0.5 * centering * sq * centering;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const double top = std::max(eig.eigenvalues().maxCoeff(), 0.0);
  std::vector<std::vector<double>> coords(static_cast<std::size_t>(n));
  for (Eigen::Index k = n - 1; k >= 0; --k) {
    const double lambda = eig.eigenvalues()(k);
    if (!(lambda > 1e-12 * top)) continue;
    const double root = std::sqrt(lambda);
    for (Eigen::Index i = 0; i < n; ++i) coords[i].push_back(root * eig.eigenvectors()(i, k));
  }
  return coords;
}

namespace detail {

inline double coordinate_radius(const std::vector<std::vector<double>>& coords) {
  double r = 0.0;
  for (const auto& row : coords)
    for (double v : row) r = std::max(r, std::abs(v));
  return r;
}

// One point per coordinate, each in its own far-apart cluster, far from the
// diagonal: W_p between two images is the l_p distance of the coordinates.
inline std::vector<PersistenceDiagram> coordinates_to_diagrams(const std::vector<std::vector<double>>& coords) {
  const double dims = coords.empty() ? 0.0 : static_cast<double>(coords.front().size());
  const double sep = 4.0 * coordinate_radius(coords) * (dims + 1.0) + 1.0;
  std::vector<PersistenceDiagram> out;
  for (const auto& row : coords) {
    std::vector<PlanePoint> pts;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const double off = static_cast<double>(c) * sep + sep;
      pts.push_back({-off, off + row[c]});
    }
    out.emplace_back(std::move(pts));
  }
  return out;
}

// Uniform measure with one atom per coordinate, clusters stacked vertically:
// W_p between two images is r^(-1/p) times the l_p distance.
inline std::vector<DiscreteMeasure> coordinates_to_measures(const std::vector<std::vector<double>>& coords) {
  const std::size_t dims = coords.empty() ? 0 : coords.front().size();
  const double sep = 4.0 * coordinate_radius(coords) * (static_cast<double>(dims) + 1.0) + 1.0;
  std::vector<DiscreteMeasure> out;
  for (const auto& row : coords) {
    std::vector<PlanePoint> atoms;
    for (std::size_t c = 0; c < dims; ++c) atoms.push_back({row[c], static_cast<double>(c) * sep});
    out.emplace_back(std::move(atoms),
                     std::vector<Rational>(dims, Rational(1, static_cast<std::int64_t>(dims))));
  }
  return out;
}

template <class Fn>
FiniteMetricSpace pairwise(std::size_t n, Fn&& dist) {
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d[i][j] = d[j][i] = dist(i, j);
  return FiniteMetricSpace(std::move(d), false);
}

inline std::vector<std::size_t> identity_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace detail

inline SnowflakeTransferReport verify_snowflake_transfer(const FiniteMetricSpace& base, double theta,
                                                         const SnowflakeSchedule& schedule) {
  if (base.size() < 2) throw InvalidArgument("verify_snowflake_transfer: need at least 2 points");
  if (!(schedule.delta > 0.0 && schedule.delta < 1.0))
    throw InvalidArgument("verify_snowflake_transfer: delta must lie in (0, 1)");
  require_order(schedule.p, "verify_snowflake_transfer");

  SnowflakeTransferReport rep;
  rep.theta = theta;
  rep.delta = schedule.delta;
  rep.eps1 = schedule.eps1 < 0.0 ? 0.45 * schedule.delta : schedule.eps1;
  rep.bound = (1.0 + schedule.delta) / (1.0 - schedule.delta);

  const FiniteMetricSpace space = snowflake(base, theta);
  const std::size_t n = space.size();
  const auto coords = classical_mds(space);
  const double p = schedule.p;
  const auto ids = detail::identity_indices(n);

  FiniteMetricSpace first_stage, composite;
  if (schedule.route == TransferRoute::kDiagramsToMeasures) {
    if (!(p > 1.0)) {
      rep.skipped = true;
      rep.note = "second stage needs the grid construction, which requires p > 1";
      return rep;
    }
    const auto mid = detail::coordinates_to_diagrams(coords);
    first_stage = detail::pairwise(n, [&](auto i, auto j) { return wasserstein_pd(mid[i], mid[j], p).distance; });
    const auto g = distortion_details(PointMap(space, first_stage, ids));
    rep.g_distortion = g.distortion;
    rep.k1 = g.scale;
    rep.min_distance = space.min_positive_distance();
    rep.eps2_limit = schedule.delta * rep.k1 * rep.min_distance / 2.0;
    rep.eps2 = schedule.eps2_fraction * rep.eps2_limit;
    try {
      const auto f = diagrams_to_measures_quasi(mid, p, rep.eps2, schedule.grid);
      rep.grid_resolution = f.params.grid_resolution;
      composite = detail::pairwise(n, [&](auto i, auto j) { return grid_image_distance(f, i, j); });
    } catch (const CapacityError& e) {
      rep.skipped = true;
      rep.note = e.what();
      return rep;
    }
  } else {
    const auto mid = detail::coordinates_to_measures(coords);
    first_stage = detail::pairwise(n, [&](auto i, auto j) { return wasserstein(mid[i], mid[j], p).distance; });
    const auto g = distortion_details(PointMap(space, first_stage, ids));
    rep.g_distortion = g.distortion;
    rep.k1 = g.scale;
    rep.min_distance = space.min_positive_distance();
    rep.eps2_limit = schedule.delta * rep.k1 * rep.min_distance / 2.0;
    rep.eps2 = schedule.eps2_fraction * rep.eps2_limit;
    const auto f = measures_to_diagrams_quasi(mid, p, rep.eps2);
    composite = detail::pairwise(n, [&](auto i, auto j) { return image_distance(f, i, j); });
  }

  rep.measured_distortion = distortion(PointMap(space, composite, ids));
  rep.certified = rep.eps1 < schedule.delta / 2.0 && rep.g_distortion <= 1.0 + rep.eps1 &&
                  rep.eps2 < rep.eps2_limit;
  if (!rep.certified) rep.note = "schedule violates the composition constraints; bound not certified";
  rep.pass = !rep.certified || rep.measured_distortion <= rep.bound * (1.0 + 1e-9);
  return rep;
}

}  // namespace wpd::harness
