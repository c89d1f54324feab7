#pragma once

// Seeded random instances. Every generator is a pure function of its seed
// (or of the engine state handed in), so campaigns are reproducible.

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "wpd/diagrams.hpp"
#include "wpd/error.hpp"
#include "wpd/metric_core.hpp"
#include "wpd/rational.hpp"
#include "wpd/transport.hpp"

namespace wpd::harness {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct BoundingBox {
  double lo = 0.0;
  double hi = 10.0;

  void check() const {
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
      throw InvalidArgument("bounding box requires finite lo < hi");
  }
};

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::size_t uniform_count(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline PersistenceDiagram gen_diagram(Rng& rng, std::size_t max_points, BoundingBox box) {
  box.check();
  const std::size_t count = uniform_count(rng, 0, max_points);
  std::vector<PlanePoint> pts;
  pts.reserve(count);
  while (pts.size() < count) {
    double b = uniform(rng, box.lo, box.hi);
    double d = uniform(rng, box.lo, box.hi);
    if (b == d) continue;
    if (b > d) std::swap(b, d);
    pts.push_back({b, d});
  }
  return PersistenceDiagram(std::move(pts));
}

inline PersistenceDiagram gen_diagram(std::uint64_t seed, std::size_t max_points, BoundingBox box) {
  Rng rng(seed);
  return gen_diagram(rng, max_points, box);
}

inline std::vector<PlanePoint> gen_atoms(Rng& rng, std::size_t count, BoundingBox box) {
  std::vector<PlanePoint> atoms(count);
  for (auto& a : atoms) a = {uniform(rng, box.lo, box.hi), uniform(rng, box.lo, box.hi)};
  return atoms;
}

/// Random measure with rational weights: a uniformly random composition of
/// `denominator` into k positive parts, k uniform in [1, max_atoms].
inline DiscreteMeasure gen_measure(Rng& rng, std::size_t max_atoms, std::int64_t denominator, BoundingBox box) {
  box.check();
  if (max_atoms < 1 || denominator < static_cast<std::int64_t>(max_atoms))
    throw InvalidArgument("gen_measure: requires denominator >= max_atoms >= 1");
  const std::size_t k = uniform_count(rng, 1, max_atoms);
  std::set<std::int64_t> cuts;
  while (cuts.size() + 1 < k) cuts.insert(std::uniform_int_distribution<std::int64_t>(1, denominator - 1)(rng));
  std::vector<Rational> weights;
  std::int64_t prev = 0;
  for (auto c : cuts) {
    weights.emplace_back(c - prev, denominator);
    prev = c;
  }
  weights.emplace_back(denominator - prev, denominator);
  return DiscreteMeasure(gen_atoms(rng, k, box), std::move(weights));
}

inline DiscreteMeasure gen_measure(std::uint64_t seed, std::size_t max_atoms, std::int64_t denominator,
                                   BoundingBox box) {
  Rng rng(seed);
  return gen_measure(rng, max_atoms, denominator, box);
}

/// Random measure with generic real weights (no small-denominator form).
inline DiscreteMeasure gen_real_measure(Rng& rng, std::size_t max_atoms, BoundingBox box) {
  box.check();
  if (max_atoms < 1) throw InvalidArgument("gen_real_measure: requires max_atoms >= 1");
  const std::size_t k = uniform_count(rng, 1, max_atoms);
  std::vector<double> w(k);
  double total = 0.0;
  for (auto& x : w) total += x = uniform(rng, 0.2, 1.0);
  double head = 0.0;
  for (std::size_t i = 0; i + 1 < k; ++i) head += w[i] /= total;
  w.back() = 1.0 - head;
  return DiscreteMeasure(gen_atoms(rng, k, box), std::move(w));
}

/// Random metric on n points with every distance in [1, 2], which always
/// satisfies the triangle inequality.
inline FiniteMetricSpace gen_metric_space(Rng& rng, std::size_t n) {
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d[i][j] = d[j][i] = uniform(rng, 1.0, 2.0);
  return FiniteMetricSpace(std::move(d));
}

}  // namespace wpd::harness
