#pragma once

// Finitely supported probability measures on the plane and their exact
// p-Wasserstein distance (linf ground metric).
//
// Rational measures are brought to a common denominator N, rewritten as N
// equally weighted atoms, and the distance is the optimal N x N assignment.
// Measures with arbitrary real weights are handled by `wasserstein_real`, a
// small min-cost-flow solver over the original atoms.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <numeric>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "wpd/assignment.hpp"
#include "wpd/error.hpp"
#include "wpd/metric_core.hpp"
#include "wpd/rational.hpp"

namespace wpd {

inline constexpr std::int64_t kDefaultDenominatorCap = 1'000'000;

// d^p with exact fast paths for the common exponents.
inline double pow_p(double d, double p) {
  if (p == 1.0) return d;
  if (p == 2.0) return d * d;
  if (p == 3.0) return d * d * d;
  return std::pow(d, p);
}

inline double root_p(double s, double p) {
  if (p == 1.0) return s;
  if (p == 2.0) return std::sqrt(s);
  return std::pow(s, 1.0 / p);
}

inline void require_order(double p, const char* who) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw InvalidArgument(std::string(who) + ": p must be a finite real >= 1");
}

/// Probability measure with finitely many atoms. Weights are either exact
/// rationals (summing to exactly 1) or reals (summing to 1 within 1e-12).
class DiscreteMeasure {
 public:
  static constexpr double kRealSumTolerance = 1e-12;

  DiscreteMeasure(std::vector<PlanePoint> atoms, std::vector<Rational> weights)
      : atoms_(std::move(atoms)), rational_(std::move(weights)) {
    check_shape(rational_->size());
    Rational total(0);
    weights_.reserve(rational_->size());
    for (const auto& w : *rational_) {
      if (!(w > Rational(0))) throw InvalidArgument("DiscreteMeasure: weights must be strictly positive");
      total = total + w;
      weights_.push_back(w.to_double());
    }
    if (!(total == Rational(1)))
      throw InvalidArgument("DiscreteMeasure: rational weights sum to " + total.str() + ", not 1");
  }

  DiscreteMeasure(std::vector<PlanePoint> atoms, std::vector<double> weights)
      : atoms_(std::move(atoms)), weights_(std::move(weights)) {
    check_shape(weights_.size());
    double total = 0.0;
    for (double w : weights_) {
      if (!(w > 0.0) || !std::isfinite(w)) throw InvalidArgument("DiscreteMeasure: weights must be strictly positive");
      total += w;
    }
    if (std::abs(total - 1.0) > kRealSumTolerance) {
      std::ostringstream os;
      os.precision(17);
      os << "DiscreteMeasure: real weights sum to " << total << ", not 1";
      throw InvalidArgument(os.str());
    }
  }

  static DiscreteMeasure dirac(PlanePoint x) { return DiscreteMeasure({x}, std::vector<Rational>{Rational(1)}); }

  std::size_t size() const noexcept { return atoms_.size(); }
  const std::vector<PlanePoint>& atoms() const noexcept { return atoms_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  bool is_rational() const noexcept { return rational_.has_value(); }
  const std::vector<Rational>& rational_weights() const {
    if (!rational_) throw InvalidArgument("DiscreteMeasure: weights are not rational");
    return *rational_;
  }

  // Least common denominator of the rational weights.
  std::int64_t denominator(std::int64_t cap = kDefaultDenominatorCap) const {
    std::int64_t l = 1;
    for (const auto& w : rational_weights()) l = capped_lcm(l, w.den(), cap);
    return l;
  }

 private:
  void check_shape(std::size_t nweights) const {
    if (atoms_.empty()) throw InvalidArgument("DiscreteMeasure: at least one atom required");
    if (atoms_.size() != nweights) throw InvalidArgument("DiscreteMeasure: atoms and weights differ in length");
    for (const auto& a : atoms_)
      if (!a.finite()) throw InvalidArgument("DiscreteMeasure: atom coordinates must be finite");
  }

  std::vector<PlanePoint> atoms_;
  std::vector<double> weights_;
  std::optional<std::vector<Rational>> rational_;
};

/// N atoms (with repetition), each carrying mass 1/N.
struct UniformMeasure {
  std::vector<PlanePoint> atoms;

  std::size_t size() const noexcept { return atoms.size(); }
};

struct CouplingEntry {
  std::size_t source;
  std::size_t target;
  double mass;
};

/// Sparse transport plan over original atom indices.
struct Coupling {
  std::vector<CouplingEntry> plan;
  double cost = 0.0;  // sum of mass * ||x - y||^p
};

struct TransportResult {
  double distance = 0.0;
  Coupling coupling;
};

/// Replaces real weights by the exact rationals they encode, when each one is
/// reproduced to within a few ulps by a fraction with denominator <= cap and the
/// fractions sum to exactly 1. Rational measures pass through.
inline DiscreteMeasure snap_exact(const DiscreteMeasure& m, std::int64_t cap = kDefaultDenominatorCap) {
  if (m.is_rational()) return m;
  std::vector<Rational> w;
  w.reserve(m.size());
  for (double x : m.weights()) {
    auto r = exact_rational(x, cap);
    if (!r)
      throw CapacityError("weight is not an exact rational with denominator <= " + std::to_string(cap) +
                              "; use rational_approx with a denominator budget",
                          cap);
    w.push_back(*r);
  }
  try {
    return DiscreteMeasure(m.atoms(), std::move(w));
  } catch (const InvalidArgument&) {
    throw CapacityError("snapped weights do not sum to exactly 1; use rational_approx with a denominator budget",
                        cap);
  }
}

namespace detail {

struct Expansion {
  UniformMeasure measure;
  std::vector<std::size_t> origin;  // copy index -> atom index
};

inline Expansion expand(const DiscreteMeasure& m, std::int64_t n) {
  Expansion e;
  e.measure.atoms.reserve(static_cast<std::size_t>(n));
  e.origin.reserve(static_cast<std::size_t>(n));
  const auto& w = m.rational_weights();
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (n % w[i].den() != 0) throw InvalidArgument("uniformize: target size is not a multiple of the denominator");
    const std::int64_t copies = w[i].num() * (n / w[i].den());
    for (std::int64_t c = 0; c < copies; ++c) {
      e.measure.atoms.push_back(m.atoms()[i]);
      e.origin.push_back(i);
    }
  }
  return e;
}

inline CostMatrix power_costs(const UniformMeasure& a, const UniformMeasure& b, double p) {
  const std::size_t n = a.size();
  CostMatrix c(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) c(i, j) = pow_p(linf_dist(a.atoms[i], b.atoms[j]), p);
  return c;
}

inline Assignment optimal_assignment(const UniformMeasure& a, const UniformMeasure& b, double p) {
  require_order(p, "wasserstein_uniform");
  if (a.size() != b.size())
    throw InvalidArgument("wasserstein_uniform: measures have " + std::to_string(a.size()) + " and " +
                          std::to_string(b.size()) +
                          " atoms; uniformize both to a common denominator first");
  if (a.size() == 0) throw InvalidArgument("wasserstein_uniform: empty measure");
  return solve_dense(power_costs(a, b, p));
}

}  // namespace detail

inline UniformMeasure uniformize(const DiscreteMeasure& m, std::int64_t cap = kDefaultDenominatorCap) {
  const DiscreteMeasure exact = snap_exact(m, cap);
  return detail::expand(exact, exact.denominator(cap)).measure;
}

/// Expands to exactly n atoms; n must be a multiple of the measure's LCD.
inline UniformMeasure uniformize_to(const DiscreteMeasure& m, std::int64_t n) {
  return detail::expand(snap_exact(m), n).measure;
}

inline double wasserstein_uniform(const UniformMeasure& a, const UniformMeasure& b, double p) {
  const Assignment best = detail::optimal_assignment(a, b, p);
  return root_p(best.cost / static_cast<double>(a.size()), p);
}

namespace detail {

// Total order on measures so that (a, b) and (b, a) run the same computation.
inline bool measure_less(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  if (a.atoms() != b.atoms()) return a.atoms() < b.atoms();
  return a.weights() < b.weights();
}

inline Coupling transposed(Coupling c) {
  for (auto& e : c.plan) std::swap(e.source, e.target);
  std::sort(c.plan.begin(), c.plan.end(), [](const CouplingEntry& x, const CouplingEntry& y) {
    return std::tie(x.source, x.target) < std::tie(y.source, y.target);
  });
  return c;
}

}  // namespace detail

/// Exact W_p between rational measures. Symmetric bit for bit: the pair is
/// put in a canonical order before solving.
inline TransportResult wasserstein(const DiscreteMeasure& a, const DiscreteMeasure& b, double p,
                                   std::int64_t cap = kDefaultDenominatorCap) {
  require_order(p, "wasserstein");
  if (detail::measure_less(b, a)) {
    TransportResult r = wasserstein(b, a, p, cap);
    r.coupling = detail::transposed(std::move(r.coupling));
    return r;
  }
  const DiscreteMeasure ea = snap_exact(a, cap);
  const DiscreteMeasure eb = snap_exact(b, cap);
  std::int64_t n = 0;
  try {
    n = capped_lcm(ea.denominator(cap), eb.denominator(cap), cap);
  } catch (const CapacityError& e) {
    throw CapacityError(std::string(e.what()) + "; use rational_approx with a denominator budget", e.offending());
  }
  const auto xa = detail::expand(ea, n);
  const auto xb = detail::expand(eb, n);
  const Assignment best = detail::optimal_assignment(xa.measure, xb.measure, p);

  TransportResult out;
  const double mass = 1.0 / static_cast<double>(n);
  std::map<std::pair<std::size_t, std::size_t>, double> agg;
  for (std::size_t r = 0; r < best.row_to_col.size(); ++r)
    agg[{xa.origin[r], xb.origin[best.row_to_col[r]]}] += mass;
  for (const auto& [key, m] : agg) {
    out.coupling.plan.push_back({key.first, key.second, m});
    out.coupling.cost += m * pow_p(linf_dist(a.atoms()[key.first], b.atoms()[key.second]), p);
  }
  out.distance = root_p(best.cost / static_cast<double>(n), p);
  return out;
}

inline DiscreteMeasure dilate(const DiscreteMeasure& m, double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw InvalidArgument("dilate: factor must be positive");
  std::vector<PlanePoint> atoms;
  atoms.reserve(m.size());
  for (const auto& a : m.atoms()) atoms.push_back(r * a);
  if (m.is_rational()) return DiscreteMeasure(std::move(atoms), m.rational_weights());
  return DiscreteMeasure(std::move(atoms), m.weights());
}

inline DiscreteMeasure translate(const DiscreteMeasure& m, PlanePoint v) {
  std::vector<PlanePoint> atoms;
  atoms.reserve(m.size());
  for (const auto& a : m.atoms()) atoms.push_back(a + v);
  if (m.is_rational()) return DiscreteMeasure(std::move(atoms), m.rational_weights());
  return DiscreteMeasure(std::move(atoms), m.weights());
}

struct RationalApprox {
  DiscreteMeasure measure;
  double moved_mass = 0.0;                // (1/2) sum |w - w'|
  double error_bound = 0.0;               // moved_mass^(1/p) * diam(support)
  std::vector<std::size_t> dropped_atoms; // atoms rounded to zero weight
};

/// Rounds every weight to a multiple of 1/denominator by largest-remainder
/// rounding (the total stays exactly 1). The certificate bounds
/// W_p(m, result) because the rounding moves `moved_mass` units of mass, each
/// over at most the support diameter.
inline RationalApprox rational_approx(const DiscreteMeasure& m, std::int64_t denominator, double p) {
  require_order(p, "rational_approx");
  if (denominator < 1) throw InvalidArgument("rational_approx: denominator must be positive");
  const std::size_t k = m.size();
  const auto& w = m.weights();
  const double nd = static_cast<double>(denominator);

  std::vector<std::int64_t> units(k);
  std::vector<double> remainder(k);
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double scaled = w[i] * nd;
    units[i] = static_cast<std::int64_t>(std::floor(scaled));
    remainder[i] = scaled - static_cast<double>(units[i]);
    assigned += units[i];
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  // Floors never overshoot, and undershoot by at most k units.
  std::int64_t missing = denominator - assigned;
  for (std::size_t t = 0; missing > 0; t = (t + 1) % k, --missing) ++units[order[t]];

  std::vector<PlanePoint> atoms;
  std::vector<Rational> weights;
  std::vector<std::size_t> dropped;
  double moved = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    moved += std::abs(w[i] - static_cast<double>(units[i]) / nd);
    if (units[i] == 0) {
      dropped.push_back(i);
      continue;
    }
    atoms.push_back(m.atoms()[i]);
    weights.emplace_back(units[i], denominator);
  }
  moved *= 0.5;
  if (m.is_rational()) {
    // Exact bookkeeping avoids reporting rounding noise as moved mass.
    Rational exact_moved(0);
    for (std::size_t i = 0; i < k; ++i) {
      Rational diff = m.rational_weights()[i] - Rational(units[i], denominator);
      exact_moved = exact_moved + (diff < Rational(0) ? Rational(0) - diff : diff);
    }
    moved = 0.5 * exact_moved.to_double();
  }
  const double diam = linf_diameter(m.atoms());
  RationalApprox out{DiscreteMeasure(std::move(atoms), std::move(weights)), moved,
                     moved > 0.0 ? root_p(moved, p) * diam : 0.0, std::move(dropped)};
  return out;
}

/// Brute force over all N! permutations. Independent check for
/// wasserstein_uniform on small inputs.
inline double oracle_wasserstein_uniform(const UniformMeasure& a, const UniformMeasure& b, double p) {
  require_order(p, "oracle_wasserstein_uniform");
  if (a.size() != b.size()) throw InvalidArgument("oracle_wasserstein_uniform: sizes differ");
  const std::size_t n = a.size();
  if (n == 0 || n > 8) throw InvalidArgument("oracle_wasserstein_uniform: requires 1 <= N <= 8");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::pow(linf_dist(a.atoms[j], b.atoms[perm[j]]), p);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::pow(best / static_cast<double>(n), 1.0 / p);
}

namespace detail {

/// Successive shortest paths (Bellman-Ford) on the uncapacitated
/// transportation network with the given supplies and demands, which must
/// have equal totals. Integral supplies give an integral flow. Intended for
/// small supports; cost is O((n+m)^2 * nm) per augmentation.
inline std::vector<std::vector<double>> min_cost_transport(const std::vector<std::vector<double>>& cost,
                                                           std::vector<double> supply, std::vector<double> demand) {
  const std::size_t n = supply.size(), m = demand.size();
  std::vector<std::vector<double>> flow(n, std::vector<double>(m, 0.0));
  constexpr double kZero = 1e-15;
  const double inf = std::numeric_limits<double>::infinity();

  // Residual graph: source-side nodes i, sink-side nodes n + j. Forward arc
  // i -> j always open at cost c; backward arc j -> i open at cost -c while
  // flow(i, j) > 0.
  const std::size_t max_iter = 16 * (n + m) * (n + m) + 16;
  // Relaxations must beat rounding noise, otherwise predecessor cycles appear.
  double scale = 0.0;
  for (const auto& row : cost)
    for (double c : row) scale = std::max(scale, std::abs(c));
  const double tol = 1e-12 * std::max(1.0, scale);
  for (std::size_t iter = 0;; ++iter) {
    double left = 0.0;
    for (double s : supply) left += s;
    if (left <= kZero * static_cast<double>(n + 1)) break;
    if (iter == max_iter) throw InvalidArgument("min_cost_transport: did not converge");
    std::vector<double> dist(n + m, inf);
    std::vector<std::size_t> pred(n + m, kUnmatched);
    for (std::size_t i = 0; i < n; ++i)
      if (supply[i] > kZero) dist[i] = 0.0;
    for (std::size_t round = 0; round < n + m; ++round) {
      bool changed = false;
      for (std::size_t i = 0; i < n; ++i) {
        if (dist[i] == inf) continue;
        for (std::size_t j = 0; j < m; ++j) {
          const double nd = dist[i] + cost[i][j];
          if (nd < dist[n + j] - tol) {
            dist[n + j] = nd;
            pred[n + j] = i;
            changed = true;
          }
        }
      }
      for (std::size_t j = 0; j < m; ++j) {
        if (dist[n + j] == inf) continue;
        for (std::size_t i = 0; i < n; ++i) {
          if (flow[i][j] <= kZero) continue;
          const double nd = dist[n + j] - cost[i][j];
          if (nd < dist[i] - tol) {
            dist[i] = nd;
            pred[i] = n + j;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    std::size_t sink = kUnmatched;
    for (std::size_t j = 0; j < m; ++j)
      if (demand[j] > kZero && dist[n + j] < inf && (sink == kUnmatched || dist[n + j] < dist[sink]))
        sink = n + j;
    if (sink == kUnmatched) break;

    double push = demand[sink - n];
    std::size_t node = sink, steps = 0;
    while (pred[node] != kUnmatched) {
      if (++steps > n + m) throw InvalidArgument("min_cost_transport: cyclic augmenting path");
      const std::size_t from = pred[node];
      if (from >= n) push = std::min(push, flow[node][from - n]);
      node = from;
    }
    push = std::min(push, supply[node]);
    supply[node] -= push;
    demand[sink - n] -= push;
    node = sink;
    while (pred[node] != kUnmatched) {
      const std::size_t from = pred[node];
      if (from < n)
        flow[from][node - n] += push;
      else
        flow[node][from - n] -= push;
      node = from;
    }
  }
  return flow;
}

}  // namespace detail

/// W_p for arbitrary real weights by min-cost flow over the original atoms.
/// Independent of the uniformization route; used for irrational weights and
/// as a second opinion in tests.
inline TransportResult wasserstein_real(const DiscreteMeasure& a, const DiscreteMeasure& b, double p) {
  require_order(p, "wasserstein_real");
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::vector<double>> cost(n, std::vector<double>(m));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) cost[i][j] = pow_p(linf_dist(a.atoms()[i], b.atoms()[j]), p);
  const auto flow = detail::min_cost_transport(cost, a.weights(), b.weights());

  TransportResult out;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (flow[i][j] > 1e-15) {
        out.coupling.plan.push_back({i, j, flow[i][j]});
        out.coupling.cost += flow[i][j] * cost[i][j];
      }
  out.distance = root_p(std::max(0.0, out.coupling.cost), p);
  return out;
}

}  // namespace wpd
