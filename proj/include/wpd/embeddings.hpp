#pragma once

// Constructive embeddings of finite families between (P_p(R^2), W_p) and
// (persistence diagrams, W_p), each returning certified per-pair bounds.
//
//   measures_to_diagrams_isometric   rational measures -> diagrams, exact
//   measures_to_diagrams_quasi       any measures -> diagrams, +/- eps
//   diagrams_to_measures_bilipschitz diagrams -> measures, [d, 2^(1/p) d]
//   diagrams_to_measures_quasi       diagrams -> measures, [d, d + eps], p > 1

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wpd/assignment.hpp"
#include "wpd/diagrams.hpp"
#include "wpd/error.hpp"
#include "wpd/metric_core.hpp"
#include "wpd/rational.hpp"
#include "wpd/transport.hpp"

namespace wpd {

enum class Construction {
  kMeasuresToDiagramsIsometric,
  kMeasuresToDiagramsQuasi,
  kDiagramsToMeasuresBilipschitz,
  kDiagramsToMeasuresQuasi,
};

inline const char* construction_name(Construction c) {
  switch (c) {
    case Construction::kMeasuresToDiagramsIsometric: return "ot2pd-iso";
    case Construction::kMeasuresToDiagramsQuasi: return "ot2pd-quasi";
    case Construction::kDiagramsToMeasuresBilipschitz: return "pd2ot-bilip";
    case Construction::kDiagramsToMeasuresQuasi: return "pd2ot-quasi";
  }
  return "unknown";
}

inline const char* construction_direction(Construction c) {
  return (c == Construction::kMeasuresToDiagramsIsometric || c == Construction::kMeasuresToDiagramsQuasi)
             ? "ot2pd"
             : "pd2ot";
}

/// Certified bounds on the image distance of pair (i, j) as a function of the
/// source distance d:
///   lower_scale * d - lower_shift - lower_slack[i] - lower_slack[j]
///     <= image distance <=
///   upper_scale * d + upper_shift
struct BoundRule {
  double lower_scale = 1.0;
  double lower_shift = 0.0;
  double upper_scale = 1.0;
  double upper_shift = 0.0;
  std::vector<double> lower_slack;

  double lower(double d, std::size_t i, std::size_t j) const {
    double v = lower_scale * d - lower_shift;
    if (!lower_slack.empty()) v -= lower_slack[i] + lower_slack[j];
    return v;
  }
  double upper(double d, std::size_t, std::size_t) const { return upper_scale * d + upper_shift; }
};

/// Everything needed to rebuild a construction. Fields not used by a given
/// construction keep their defaults.
struct EmbeddingParams {
  double p = 1.0;
  double epsilon = 0.0;

  // Measures -> diagrams.
  std::int64_t common_denominator = 0;  // N
  double atom_scale = 1.0;              // N^(-1/p)
  PlanePoint translation;               // (0, h)
  double scaled_diameter = 0.0;         // D
  double max_below = 0.0;               // g = max (x - y) over scaled atoms
  std::int64_t approx_denominator = 0;  // shared rational_approx denominator, 0 if inputs were rational
  std::vector<double> approx_error;     // certified W_p(alpha_i, beta_i)

  // Diagrams -> measures.
  std::int64_t point_count = 0;    // N: total (bilipschitz) or max (quasi) diagram size
  std::int64_t support_size = 0;   // atoms per image measure
  double dilation = 1.0;
  std::int64_t grid_resolution = 0;  // s
  double grid_min = 0.0;             // m
  double grid_max = 0.0;             // M
  double grid_epsilon = 0.0;         // budget given to the grid stage
  double perturb_delta = 0.0;
  std::vector<std::int64_t> displaced;  // per diagram

  friend bool operator==(const EmbeddingParams&, const EmbeddingParams&) = default;
};

template <class Image>
struct EmbeddingResult {
  Construction construction;
  EmbeddingParams params;
  std::vector<Image> images;
  BoundRule bounds;
  // Grid construction only: per image atom, its grid index t or -1 for a
  // diagram point.
  std::vector<std::vector<std::int64_t>> grid_index;
};

using DiagramEmbedding = EmbeddingResult<PersistenceDiagram>;
using MeasureEmbedding = EmbeddingResult<DiscreteMeasure>;

// ---------------------------------------------------------------------------
// Measures -> diagrams

inline DiagramEmbedding measures_to_diagrams_isometric(const std::vector<DiscreteMeasure>& family, double p,
                                                       std::int64_t cap = kDefaultDenominatorCap) {
  require_order(p, "measures_to_diagrams_isometric");
  DiagramEmbedding out{Construction::kMeasuresToDiagramsIsometric, {}, {}, {}, {}};
  out.params.p = p;
  if (family.empty()) return out;

  std::vector<DiscreteMeasure> exact;
  exact.reserve(family.size());
  std::int64_t n = 1;
  for (const auto& m : family) {
    exact.push_back(snap_exact(m, cap));
    n = capped_lcm(n, exact.back().denominator(cap), cap);
  }

  // Scaling atoms by N^(-1/p) turns the (1/N)-normalized transport cost into
  // the unnormalized diagram matching cost.
  const double scale = 1.0 / root_p(static_cast<double>(n), p);
  std::vector<std::vector<PlanePoint>> scaled;
  std::vector<PlanePoint> all;
  for (const auto& m : exact) {
    auto u = uniformize_to(m, n);
    for (auto& a : u.atoms) a = scale * a;
    all.insert(all.end(), u.atoms.begin(), u.atoms.end());
    scaled.push_back(std::move(u.atoms));
  }
  const double diam = linf_diameter(all);
  double below = -std::numeric_limits<double>::infinity();
  for (const auto& a : all) below = std::max(below, a.x - a.y);
  // Every image point then sits at diagonal distance >= (4D + 1)/2 > 2D, so
  // no diagonal route can beat a perfect matching.
  const PlanePoint shift{0.0, 4.0 * diam + below + 1.0};

  for (auto& pts : scaled) {
    for (auto& a : pts) a = a + shift;
    out.images.emplace_back(std::move(pts));
  }
  out.params.common_denominator = n;
  out.params.atom_scale = scale;
  out.params.translation = shift;
  out.params.scaled_diameter = diam;
  out.params.max_below = below;
  return out;
}

inline DiagramEmbedding measures_to_diagrams_quasi(const std::vector<DiscreteMeasure>& family, double p,
                                                   double epsilon,
                                                   std::int64_t cap = kDefaultDenominatorCap) {
  require_order(p, "measures_to_diagrams_quasi");
  if (!(epsilon > 0.0)) throw InvalidArgument("measures_to_diagrams_quasi: epsilon must be positive");

  const bool all_rational = std::all_of(family.begin(), family.end(), [](auto& m) { return m.is_rational(); });
  std::vector<DiscreteMeasure> approx;
  std::vector<double> errors(family.size(), 0.0);
  std::int64_t denominator = 0;
  if (all_rational) {
    approx = family;
  } else {
    // Smallest shared denominator whose certificates all beat epsilon / 2.
    for (std::int64_t q = 1;; ++q) {
      if (q > cap)
        throw CapacityError("measures_to_diagrams_quasi: no denominator <= " + std::to_string(cap) +
                                " meets epsilon/2",
                            cap);
      std::vector<DiscreteMeasure> trial;
      bool ok = true;
      for (std::size_t i = 0; i < family.size() && ok; ++i) {
        auto r = rational_approx(family[i], q, p);
        ok = r.error_bound < 0.5 * epsilon;
        errors[i] = r.error_bound;
        trial.push_back(std::move(r.measure));
      }
      if (ok) {
        approx = std::move(trial);
        denominator = q;
        break;
      }
    }
  }

  DiagramEmbedding out = measures_to_diagrams_isometric(approx, p, cap);
  out.construction = Construction::kMeasuresToDiagramsQuasi;
  out.params.epsilon = epsilon;
  out.params.approx_denominator = denominator;
  out.params.approx_error = std::move(errors);
  out.bounds.lower_shift = all_rational ? 0.0 : epsilon;
  out.bounds.upper_shift = all_rational ? 0.0 : epsilon;
  return out;
}

// ---------------------------------------------------------------------------
// Diagrams -> measures

struct BilipschitzOptions {
  bool dilate = true;  // false gives the raw map with bounds scaled by N^(-1/p)
};

inline MeasureEmbedding diagrams_to_measures_bilipschitz(const std::vector<PersistenceDiagram>& family, double p,
                                                         BilipschitzOptions options = {}) {
  require_order(p, "diagrams_to_measures_bilipschitz");
  std::int64_t total = 0;
  for (const auto& d : family) total += static_cast<std::int64_t>(d.size());
  if (total == 0) throw InvalidArgument("diagrams_to_measures_bilipschitz: every diagram is empty; no support to build");

  MeasureEmbedding out{Construction::kDiagramsToMeasuresBilipschitz, {}, {}, {}, {}};
  const double root_n = root_p(static_cast<double>(total), p);
  const double dilation = options.dilate ? root_n : 1.0;
  for (std::size_t i = 0; i < family.size(); ++i) {
    std::vector<PlanePoint> support;
    support.reserve(static_cast<std::size_t>(total));
    for (std::size_t j = 0; j < family.size(); ++j)
      for (const auto& x : family[j].points()) support.push_back(dilation * (j == i ? x : diagonal_projection(x)));
    std::vector<Rational> w(support.size(), Rational(1, total));
    out.images.emplace_back(std::move(support), std::move(w));
  }
  out.params.p = p;
  out.params.point_count = total;
  out.params.support_size = total;
  out.params.dilation = dilation;
  const double two_root = root_p(2.0, p);
  out.bounds.lower_scale = options.dilate ? 1.0 : 1.0 / root_n;
  out.bounds.upper_scale = options.dilate ? two_root : two_root / root_n;
  return out;
}

struct GridOptions {
  std::int64_t max_resolution = 100'000'000;  // cap on the s search
  std::int64_t max_support = std::numeric_limits<std::int64_t>::max();  // cap on N + s + 1
};

/// Smallest s > n_max meeting both resolution thresholds for a grid stage
/// budget `eps_grid`. The second threshold takes the unmatched-set size as 0,
/// which bounds every pair at once. Both left-hand sides decrease in s, so
/// bisection returns the same s as an upward scan.
inline std::int64_t grid_resolution(std::int64_t n_max, std::int64_t n_min, double spread, double p,
                                    double eps_grid, std::int64_t cap) {
  if (!(p > 1.0)) throw InvalidArgument("grid_resolution: requires p > 1");
  const double threshold = pow_p(eps_grid, p) / 3.0;
  const double nn = static_cast<double>(n_max);
  auto ok = [&](std::int64_t s) {
    const double term = std::pow(nn * spread / static_cast<double>(s), p);
    const double pad = static_cast<double>(s) + 1.0 + nn - static_cast<double>(n_min);
    return nn * term < threshold && pad * term < threshold;
  };
  std::int64_t lo = n_max + 1;
  if (ok(lo)) return lo;
  if (!ok(cap))
    throw CapacityError("grid_resolution: no s <= " + std::to_string(cap) + " meets the thresholds", cap);
  std::int64_t hi = cap;  // ok(hi), !ok(lo)
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

inline MeasureEmbedding diagrams_to_measures_quasi(const std::vector<PersistenceDiagram>& family, double p,
                                                   double epsilon, GridOptions options = {}) {
  if (!(p > 1.0) || !std::isfinite(p))
    throw InvalidArgument(
        "diagrams_to_measures_quasi: requires p > 1 (the grid resolution thresholds cannot be met for p = 1)");
  if (!(epsilon > 0.0)) throw InvalidArgument("diagrams_to_measures_quasi: epsilon must be positive");
  const bool any_point = std::any_of(family.begin(), family.end(), [](auto& d) { return !d.empty(); });
  if (!any_point) throw InvalidArgument("diagrams_to_measures_quasi: every diagram is empty; grid range undefined");

  MeasureEmbedding out{Construction::kDiagramsToMeasuresQuasi, {}, {}, {}, {}};
  auto& prm = out.params;
  prm.p = p;
  prm.epsilon = epsilon;

  // Split: epsilon/3 for separating repeated points (epsilon/6 per diagram),
  // 2 epsilon/3 for the grid stage.
  std::vector<PersistenceDiagram> work;
  std::size_t worst = 0;
  for (const auto& d : family) worst = std::max(worst, perturb_to_multiplicity_one(d, 1.0).displaced);
  prm.perturb_delta = worst == 0 ? 0.0 : (epsilon / 6.0) / root_p(static_cast<double>(worst), p);
  out.bounds.lower_slack.assign(family.size(), 0.0);
  for (std::size_t i = 0; i < family.size(); ++i) {
    if (worst == 0) {
      work.push_back(family[i]);
      prm.displaced.push_back(0);
      continue;
    }
    auto r = perturb_to_multiplicity_one(family[i], prm.perturb_delta);
    out.bounds.lower_slack[i] = r.distance_bound(p);
    prm.displaced.push_back(static_cast<std::int64_t>(r.displaced));
    work.push_back(std::move(r.diagram));
  }
  prm.grid_epsilon = 2.0 * epsilon / 3.0;

  std::int64_t n_max = 0, n_min = std::numeric_limits<std::int64_t>::max();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& d : work) {
    n_max = std::max<std::int64_t>(n_max, static_cast<std::int64_t>(d.size()));
    n_min = std::min<std::int64_t>(n_min, static_cast<std::int64_t>(d.size()));
    for (const auto& x : d.points()) {
      lo = std::min(lo, 0.5 * (x.x + x.y));
      hi = std::max(hi, 0.5 * (x.x + x.y));
    }
  }
  const std::int64_t s = grid_resolution(n_max, n_min, hi - lo, p, prm.grid_epsilon, options.max_resolution);
  const std::int64_t support = n_max + s + 1;
  prm.point_count = n_max;
  prm.grid_resolution = s;
  prm.grid_min = lo;
  prm.grid_max = hi;
  prm.support_size = support;
  if (support > options.max_support)
    throw CapacityError("diagrams_to_measures_quasi: support size " + std::to_string(support) +
                            " exceeds cap " + std::to_string(options.max_support),
                        support);
  prm.dilation = root_p(static_cast<double>(support), p);

  const double step = (hi - lo) / static_cast<double>(s);
  const Rational mass(1, support);
  for (const auto& d : work) {
    std::vector<PlanePoint> atoms;
    std::vector<std::int64_t> index;
    atoms.reserve(static_cast<std::size_t>(support));
    index.reserve(static_cast<std::size_t>(support));
    for (const auto& x : d.points()) {
      atoms.push_back(prm.dilation * x);
      index.push_back(-1);
    }
    // I (t = 0..s) followed by I_i (t = s+1 .. s+N-N_i).
    const std::int64_t last = s + n_max - static_cast<std::int64_t>(d.size());
    for (std::int64_t t = 0; t <= last; ++t) {
      const double c = lo + static_cast<double>(t) * step;
      atoms.push_back(prm.dilation * PlanePoint{c, c});
      index.push_back(t);
    }
    out.images.emplace_back(std::move(atoms), std::vector<Rational>(static_cast<std::size_t>(support), mass));
    out.grid_index.push_back(std::move(index));
  }
  out.bounds.upper_shift = epsilon;
  return out;
}

struct GridAssignmentGraph {
  SparseCostGraph graph;
  std::vector<std::size_t> warm_start;  // zero-cost grid-to-grid pairs t <-> t
};

/// Assignment graph between two grid-construction images. Grid-to-grid edges
/// are kept when the grid indices differ by at most `band`; every edge
/// touching a diagram point is kept.
inline GridAssignmentGraph grid_assignment_graph(const MeasureEmbedding& emb, std::size_t i, std::size_t j,
                                                 std::int64_t band) {
  const auto& a = emb.images.at(i).atoms();
  const auto& b = emb.images.at(j).atoms();
  const auto& ga = emb.grid_index.at(i);
  const auto& gb = emb.grid_index.at(j);
  const double p = emb.params.p;
  const std::size_t n = a.size();
  if (b.size() != n) throw InvalidArgument("grid_assignment_graph: support sizes differ");

  std::vector<std::size_t> off_cols;
  std::vector<std::size_t> col_of_t;  // grid index -> column
  for (std::size_t c = 0; c < n; ++c) {
    if (gb[c] < 0) {
      off_cols.push_back(c);
    } else {
      if (col_of_t.size() <= static_cast<std::size_t>(gb[c])) col_of_t.resize(gb[c] + 1, kUnmatched);
      col_of_t[gb[c]] = c;
    }
  }
  GridAssignmentGraph out{SparseCostGraph(n), std::vector<std::size_t>(n, kUnmatched)};
  auto edge = [&](std::size_t r, std::size_t c) {
    out.graph[r].push_back({c, pow_p(linf_dist(a[r], b[c]), p)});
  };
  const std::int64_t tmax = static_cast<std::int64_t>(col_of_t.size()) - 1;
  for (std::size_t r = 0; r < n; ++r) {
    if (ga[r] < 0) {
      for (std::size_t c = 0; c < n; ++c) edge(r, c);
      continue;
    }
    for (auto c : off_cols) edge(r, c);
    const std::int64_t t = ga[r];
    const std::int64_t from = band >= t ? 0 : t - band;
    const std::int64_t to = band >= tmax - t ? tmax : t + band;
    for (std::int64_t u = from; u <= to; ++u) {
      edge(r, col_of_t[u]);
      if (u == t && out.graph[r].back().cost == 0.0) out.warm_start[r] = col_of_t[u];
    }
  }
  return out;
}

/// Exact W_p between two grid-construction images.
///
/// Grid atoms are collinear and equally spaced, so for any fixed choice of
/// which grid atoms serve diagram points, the remaining grid-to-grid part of
/// some optimal assignment is monotone and shifts indices by at most
/// max(N_i, N_j). The band N + 1 therefore keeps a global optimum.
inline double grid_image_distance(const MeasureEmbedding& emb, std::size_t i, std::size_t j) {
  auto g = grid_assignment_graph(emb, i, j, emb.params.point_count + 1);
  const Assignment best = solve_sparse(g.graph, std::move(g.warm_start));
  return root_p(best.cost / static_cast<double>(g.graph.size()), emb.params.p);
}

inline double image_distance(const DiagramEmbedding& emb, std::size_t i, std::size_t j) {
  return wasserstein_pd(emb.images.at(i), emb.images.at(j), emb.params.p).distance;
}

inline double image_distance(const MeasureEmbedding& emb, std::size_t i, std::size_t j) {
  if (emb.construction == Construction::kDiagramsToMeasuresQuasi) return grid_image_distance(emb, i, j);
  return wasserstein(emb.images.at(i), emb.images.at(j), emb.params.p).distance;
}

// ---------------------------------------------------------------------------
// Certification

inline double source_distance(const DiscreteMeasure& a, const DiscreteMeasure& b, double p) {
  if (a.is_rational() && b.is_rational()) {
    try {
      return wasserstein(a, b, p).distance;
    } catch (const CapacityError&) {
    }
  }
  return wasserstein_real(a, b, p).distance;
}

inline double source_distance(const PersistenceDiagram& a, const PersistenceDiagram& b, double p) {
  return wasserstein_pd(a, b, p).distance;
}

struct PairCertificate {
  std::size_t i = 0, j = 0;
  double lower = 0.0, upper = 0.0;
  double source_dist = 0.0, image_dist = 0.0;
  double margin = 0.0;  // min(image - lower, upper - image); negative on failure
  bool pass = true;
};

struct Certification {
  std::vector<PairCertificate> pairs;
  bool pass = true;
  double min_margin = std::numeric_limits<double>::infinity();
  std::optional<std::pair<std::size_t, std::size_t>> worst_pair;
  std::optional<std::pair<std::size_t, std::size_t>> first_failure;
};

/// Recomputes every source and image distance and checks the result's bounds
/// with slack `rel_tol * max(1, source distance)`.
template <class Source, class Image>
Certification certify_pairwise(const EmbeddingResult<Image>& emb, const std::vector<Source>& sources,
                               double rel_tol = 1e-9) {
  if (emb.images.size() != sources.size())
    throw InvalidArgument("certify_pairwise: image and source counts differ");
  Certification out;
  const double p = emb.params.p;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    for (std::size_t j = i + 1; j < sources.size(); ++j) {
      PairCertificate c;
      c.i = i;
      c.j = j;
      c.source_dist = source_distance(sources[i], sources[j], p);
      c.image_dist = image_distance(emb, i, j);
      c.lower = emb.bounds.lower(c.source_dist, i, j);
      c.upper = emb.bounds.upper(c.source_dist, i, j);
      const double tol = rel_tol * std::max(1.0, c.source_dist);
      c.margin = std::min(c.image_dist - c.lower, c.upper - c.image_dist);
      c.pass = c.margin >= -tol;
      if (c.margin < out.min_margin) {
        out.min_margin = c.margin;
        out.worst_pair = std::make_pair(i, j);
      }
      if (!c.pass && !out.first_failure) out.first_failure = std::make_pair(i, j);
      out.pass = out.pass && c.pass;
      out.pairs.push_back(c);
    }
  }
  return out;
}

}  // namespace wpd
