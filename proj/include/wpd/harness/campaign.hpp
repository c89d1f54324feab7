#pragma once

// Seeded verification campaigns. Each trial draws its own instances from
// splitmix64(seed + trial), so trials are independent of scheduling and the
// report is reproducible bit for bit apart from the timing block.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "wpd/diagrams.hpp"
#include "wpd/embeddings.hpp"
#include "wpd/error.hpp"
#include "wpd/harness/generators.hpp"
#include "wpd/harness/snowflake_transfer.hpp"
#include "wpd/io.hpp"
#include "wpd/transport.hpp"

namespace wpd::harness {

enum class CampaignMode {
  kOracleTransport,
  kOracleDiagrams,
  kIsometric,
  kMeasuresToDiagramsQuasi,
  kBilipschitz,
  kDiagramsToMeasuresQuasi,
  kRejectOrderOne,
  kMetricTransport,
  kMetricDiagrams,
  kSnowflake,
};

inline const std::vector<std::pair<CampaignMode, const char*>>& campaign_modes() {
  static const std::vector<std::pair<CampaignMode, const char*>> modes = {
      {CampaignMode::kOracleTransport, "oracle-ot"},
      {CampaignMode::kOracleDiagrams, "oracle-pd"},
      {CampaignMode::kIsometric, "iso"},
      {CampaignMode::kMeasuresToDiagramsQuasi, "ot2pd-quasi"},
      {CampaignMode::kBilipschitz, "bilipschitz"},
      {CampaignMode::kDiagramsToMeasuresQuasi, "pd2ot-quasi"},
      {CampaignMode::kRejectOrderOne, "p1-reject"},
      {CampaignMode::kMetricTransport, "metric-ot"},
      {CampaignMode::kMetricDiagrams, "metric-pd"},
      {CampaignMode::kSnowflake, "snowflake"},
  };
  return modes;
}

inline const char* mode_name(CampaignMode m) {
  for (const auto& [mode, name] : campaign_modes())
    if (mode == m) return name;
  return "?";
}

inline CampaignMode parse_mode(const std::string& s) {
  for (const auto& [mode, name] : campaign_modes())
    if (s == name) return mode;
  std::string known;
  for (const auto& [mode, name] : campaign_modes()) known += (known.empty() ? "" : ", ") + std::string(name);
  throw InvalidArgument("unknown campaign mode '" + s + "' (known: " + known + ")");
}

struct Campaign {
  CampaignMode mode = CampaignMode::kBilipschitz;
  std::uint64_t seed = 42;
  std::size_t trials = 100;
  std::size_t family_size = 4;
  std::size_t max_points = 4;
  std::vector<double> p_values{2.0};
  std::vector<double> eps_values{0.1};
  BoundingBox bbox{0.0, 10.0};
  std::int64_t denominator = 12;             // largest LCD drawn for rational families
  double rel_tol = 1e-9;                     // slack for exact claims
  std::int64_t max_support = 50'000;         // grid construction: skip when N + s + 1 exceeds this
  double delta = 0.1;                        // snowflake mode
  double eps2_fraction = 0.9;                // snowflake mode
  std::size_t space_size = 4;                // snowflake mode
  TransferRoute route = TransferRoute::kDiagramsToMeasures;
  unsigned threads = 0;                      // 0 = hardware concurrency
};

/// Margin of one check: non-negative iff it holds.
struct Check {
  std::string label;
  double margin = 0.0;
  bool pass = true;
};

struct TrialResult {
  std::size_t trial = 0;
  std::string degenerate;  // injected degenerate class, empty if none
  bool pass = true;
  bool skipped = false;    // nothing could be checked
  std::size_t skipped_cases = 0;
  std::vector<Check> checks;
  std::string note;
  std::string error;       // unexpected exception text

  void add(std::string label, double margin, double tol) {
    checks.push_back({std::move(label), margin, margin >= -tol});
    pass = pass && checks.back().pass;
  }
  void require(std::string label, bool ok) { add(std::move(label), ok ? 0.0 : -1.0, 0.0); }

  std::optional<std::size_t> worst() const {
    std::optional<std::size_t> w;
    for (std::size_t k = 0; k < checks.size(); ++k)
      if (!w || checks[k].margin < checks[*w].margin) w = k;
    return w;
  }
};

struct Report {
  Campaign campaign;
  std::vector<TrialResult> trials;
  bool pass = true;
  std::size_t failed = 0, skipped = 0, checks = 0;
  std::size_t degenerate = 0;
  double min_margin = std::numeric_limits<double>::infinity();
  double max_margin = -std::numeric_limits<double>::infinity();
  double mean_margin = 0.0;
  std::string worst;  // "trial <k>: <label>"
  double wall_seconds = 0.0;
};

namespace detail {

// Relative slack for comparing a computed value with a reference one.
inline double rel_slack(double reference, double rel_tol) { return rel_tol * std::abs(reference) + 1e-12; }

inline std::string tag(const char* what, double p, std::optional<double> eps = std::nullopt) {
  std::string s = std::string(what) + " p=" + nlohmann::json(p).dump();
  if (eps) s += " eps=" + nlohmann::json(*eps).dump();
  return s;
}

inline std::string pair_tag(const Certification& c) {
  if (!c.worst_pair) return "";
  return " pair=(" + std::to_string(c.worst_pair->first) + "," + std::to_string(c.worst_pair->second) + ")";
}

inline void add_certification(TrialResult& r, const std::string& label, const Certification& c) {
  if (c.pairs.empty()) {
    r.require(label + " (no pairs)", true);
    return;
  }
  r.checks.push_back({label + pair_tag(c), c.min_margin, c.pass});
  r.pass = r.pass && c.pass;
}

inline std::string degenerate_class(std::size_t trial) {
  if (trial % 10 == 0) return "identical-pair";
  if (trial % 10 == 5) return "empty-or-dirac";
  return "";
}

inline std::size_t family_count(Rng& rng, std::size_t family_size) {
  return uniform_count(rng, 2, std::max<std::size_t>(2, family_size));
}

inline std::vector<PersistenceDiagram> diagram_family(Rng& rng, const Campaign& c, const std::string& degenerate) {
  std::vector<PersistenceDiagram> fam;
  const std::size_t k = family_count(rng, c.family_size);
  for (std::size_t i = 0; i < k; ++i) fam.push_back(gen_diagram(rng, c.max_points, c.bbox));
  if (degenerate == "identical-pair") fam[1] = fam[0];
  if (degenerate == "empty-or-dirac") fam[0] = PersistenceDiagram();
  if (std::all_of(fam.begin(), fam.end(), [](auto& d) { return d.empty(); })) {
    const double mid = 0.5 * (c.bbox.lo + c.bbox.hi);
    fam.back() = PersistenceDiagram({{c.bbox.lo, mid}});
  }
  return fam;
}

inline DiscreteMeasure dirac_in(Rng& rng, const BoundingBox& box) { return DiscreteMeasure::dirac(gen_atoms(rng, 1, box)[0]); }

inline std::vector<DiscreteMeasure> rational_family(Rng& rng, const Campaign& c, const std::string& degenerate) {
  const auto q = std::uniform_int_distribution<std::int64_t>(1, std::max<std::int64_t>(1, c.denominator))(rng);
  const auto atoms = std::min<std::size_t>(c.max_points, static_cast<std::size_t>(q));
  std::vector<DiscreteMeasure> fam;
  const std::size_t k = family_count(rng, c.family_size);
  for (std::size_t i = 0; i < k; ++i) fam.push_back(gen_measure(rng, std::max<std::size_t>(1, atoms), q, c.bbox));
  if (degenerate == "identical-pair") fam[1] = fam[0];
  if (degenerate == "empty-or-dirac") fam[0] = dirac_in(rng, c.bbox);
  return fam;
}

inline std::vector<DiscreteMeasure> real_family(Rng& rng, const Campaign& c, const std::string& degenerate) {
  std::vector<DiscreteMeasure> fam;
  const std::size_t k = family_count(rng, c.family_size);
  for (std::size_t i = 0; i < k; ++i) fam.push_back(gen_real_measure(rng, c.max_points, c.bbox));
  if (degenerate == "identical-pair") fam[1] = fam[0];
  if (degenerate == "empty-or-dirac") fam[0] = dirac_in(rng, c.bbox);
  return fam;
}

inline void trial_oracle_transport(TrialResult& r, Rng& rng, const Campaign& c) {
  const std::size_t n = r.degenerate == "empty-or-dirac" ? 1 : uniform_count(rng, 1, std::max<std::size_t>(1, c.max_points));
  UniformMeasure a{gen_atoms(rng, n, c.bbox)}, b{gen_atoms(rng, n, c.bbox)};
  if (r.degenerate == "identical-pair") b = a;
  for (double p : c.p_values) {
    const double fast = wasserstein_uniform(a, b, p), slow = oracle_wasserstein_uniform(a, b, p);
    r.add(tag("assignment vs enumeration", p), rel_slack(slow, c.rel_tol) - std::abs(fast - slow), 0.0);
  }
}

inline void trial_oracle_diagrams(TrialResult& r, Rng& rng, const Campaign& c) {
  const auto d1 = gen_diagram(rng, c.max_points, c.bbox);
  auto d2 = gen_diagram(rng, c.max_points, c.bbox);
  if (r.degenerate == "identical-pair") d2 = d1;
  if (r.degenerate == "empty-or-dirac") d2 = PersistenceDiagram();
  for (double p : c.p_values) {
    const double fast = wasserstein_pd(d1, d2, p).distance, slow = oracle_wasserstein_pd(d1, d2, p);
    r.add(tag("assignment vs enumeration", p), rel_slack(slow, c.rel_tol) - std::abs(fast - slow), 0.0);
  }
}

inline void trial_isometric(TrialResult& r, Rng& rng, const Campaign& c) {
  const auto fam = rational_family(rng, c, r.degenerate);
  for (double p : c.p_values)
    add_certification(r, tag("isometric", p), certify_pairwise(measures_to_diagrams_isometric(fam, p), fam, c.rel_tol));
}

inline void trial_measures_quasi(TrialResult& r, Rng& rng, const Campaign& c) {
  const auto fam = real_family(rng, c, r.degenerate);
  for (double p : c.p_values)
    for (double eps : c.eps_values)
      add_certification(r, tag("quasi", p, eps),
                        certify_pairwise(measures_to_diagrams_quasi(fam, p, eps), fam, c.rel_tol));
}

inline void trial_bilipschitz(TrialResult& r, Rng& rng, const Campaign& c) {
  const auto fam = diagram_family(rng, c, r.degenerate);
  for (double p : c.p_values) {
    add_certification(r, tag("dilated", p), certify_pairwise(diagrams_to_measures_bilipschitz(fam, p), fam, c.rel_tol));
    add_certification(r, tag("undilated", p),
                      certify_pairwise(diagrams_to_measures_bilipschitz(fam, p, {.dilate = false}), fam, c.rel_tol));
  }
}

inline void trial_diagrams_quasi(TrialResult& r, Rng& rng, const Campaign& c) {
  const auto fam = diagram_family(rng, c, r.degenerate);
  std::size_t ran = 0;
  for (double p : c.p_values) {
    for (double eps : c.eps_values) {
      MeasureEmbedding emb;
      try {
        emb = diagrams_to_measures_quasi(fam, p, eps, {.max_support = c.max_support});
      } catch (const CapacityError& e) {
        ++r.skipped_cases;
        r.note += (r.note.empty() ? "" : "; ") + tag("skipped", p, eps) + ": " + e.what();
        continue;
      }
      ++ran;
      const auto& prm = emb.params;
      const auto n = prm.point_count, s = prm.grid_resolution;
      bool sizes = true;
      for (std::size_t i = 0; i < fam.size(); ++i) {
        std::int64_t shared = 0, own = 0;
        for (auto t : emb.grid_index[i]) {
          if (t < 0) continue;
          (t <= s ? shared : own) += 1;
        }
        sizes = sizes && shared == s + 1 && own == n - static_cast<std::int64_t>(fam[i].size()) &&
                static_cast<std::int64_t>(emb.images[i].size()) == n + s + 1 && prm.support_size == n + s + 1;
      }
      r.require(tag("grid cardinalities", p, eps), sizes);
      add_certification(r, tag("quasi", p, eps), certify_pairwise(emb, fam, c.rel_tol));
    }
  }
  if (ran == 0) r.skipped = true;
}

inline void trial_reject_order_one(TrialResult& r, Rng& rng, const Campaign& c) {
  const auto fam = diagram_family(rng, c, r.degenerate);
  const double eps = c.eps_values.empty() ? 0.1 : c.eps_values.front();
  bool rejected = false;
  try {
    diagrams_to_measures_quasi(fam, 1.0, eps);
  } catch (const InvalidArgument& e) {
    rejected = std::string(e.what()).find("requires p > 1") != std::string::npos;
  }
  r.require("p = 1 rejected with the p > 1 message", rejected);
}

template <class T, class Dist>
void metric_checks(TrialResult& r, const T& a, const T& b, const T& c3, double p, double tol, Dist&& dist) {
  const double ab = dist(a, b), ba = dist(b, a), bc = dist(b, c3), ac = dist(a, c3), aa = dist(a, a);
  r.require(tag("symmetry (bitwise)", p), ab == ba);
  r.require(tag("identity", p), aa == 0.0);
  const double slack = tol * std::max({1.0, ab, bc, ac});
  r.add(tag("triangle ac <= ab + bc", p), ab + bc - ac, slack);
  r.add(tag("triangle ab <= ac + bc", p), ac + bc - ab, slack);
  r.add(tag("triangle bc <= ab + ac", p), ab + ac - bc, slack);
}

inline void trial_metric_transport(TrialResult& r, Rng& rng, const Campaign& c) {
  const auto q = std::uniform_int_distribution<std::int64_t>(1, std::max<std::int64_t>(1, c.denominator))(rng);
  const auto atoms = std::max<std::size_t>(1, std::min<std::size_t>(c.max_points, static_cast<std::size_t>(q)));
  const auto a = gen_measure(rng, atoms, q, c.bbox);
  auto b = gen_measure(rng, atoms, q, c.bbox);
  auto m3 = gen_measure(rng, atoms, q, c.bbox);
  if (r.degenerate == "identical-pair") b = a;
  if (r.degenerate == "empty-or-dirac") m3 = dirac_in(rng, c.bbox);
  for (double p : c.p_values)
    metric_checks(r, a, b, m3, p, c.rel_tol, [p](auto& x, auto& y) { return wasserstein(x, y, p).distance; });
}

inline void trial_metric_diagrams(TrialResult& r, Rng& rng, const Campaign& c) {
  const auto a = gen_diagram(rng, c.max_points, c.bbox);
  auto b = gen_diagram(rng, c.max_points, c.bbox);
  auto d3 = gen_diagram(rng, c.max_points, c.bbox);
  if (r.degenerate == "identical-pair") b = a;
  if (r.degenerate == "empty-or-dirac") d3 = PersistenceDiagram();
  for (double p : c.p_values)
    metric_checks(r, a, b, d3, p, c.rel_tol, [p](auto& x, auto& y) { return wasserstein_pd(x, y, p).distance; });
}

inline void trial_snowflake(TrialResult& r, Rng& rng, const Campaign& c) {
  auto space = gen_metric_space(rng, std::max<std::size_t>(2, c.space_size));
  if (r.degenerate == "identical-pair") {
    // Two points at equal distance from everything else.
    auto d = space.matrix();
    for (std::size_t k = 2; k < d.size(); ++k) d[1][k] = d[k][1] = d[0][k];
    space = FiniteMetricSpace(std::move(d));
  }
  std::size_t ran = 0;
  for (double p : c.p_values) {
    SnowflakeSchedule s;
    s.p = p;
    s.delta = c.delta;
    s.eps2_fraction = c.eps2_fraction;
    s.route = c.route;
    s.grid.max_support = c.max_support;
    const auto rep = verify_snowflake_transfer(space, 1.0 / p, s);
    if (rep.skipped) {
      ++r.skipped_cases;
      r.note += (r.note.empty() ? "" : "; ") + tag("skipped", p) + ": " + rep.note;
      continue;
    }
    ++ran;
    if (!rep.certified) {
      r.note += (r.note.empty() ? "" : "; ") + tag("not certified", p);
      continue;
    }
    r.add(tag("composite distortion <= (1+delta)/(1-delta)", p), rep.bound - rep.measured_distortion,
          rep.bound * 1e-9);
  }
  if (ran == 0) r.skipped = true;
}

}  // namespace detail

/// Runs one trial. Exceptions other than the expected ones mark it failed.
inline TrialResult run_trial(const Campaign& c, std::size_t trial) {
  TrialResult r;
  r.trial = trial;
  r.degenerate = detail::degenerate_class(trial);
  Rng rng(splitmix64(c.seed + trial));
  try {
    switch (c.mode) {
      case CampaignMode::kOracleTransport: detail::trial_oracle_transport(r, rng, c); break;
      case CampaignMode::kOracleDiagrams: detail::trial_oracle_diagrams(r, rng, c); break;
      case CampaignMode::kIsometric: detail::trial_isometric(r, rng, c); break;
      case CampaignMode::kMeasuresToDiagramsQuasi: detail::trial_measures_quasi(r, rng, c); break;
      case CampaignMode::kBilipschitz: detail::trial_bilipschitz(r, rng, c); break;
      case CampaignMode::kDiagramsToMeasuresQuasi: detail::trial_diagrams_quasi(r, rng, c); break;
      case CampaignMode::kRejectOrderOne: detail::trial_reject_order_one(r, rng, c); break;
      case CampaignMode::kMetricTransport: detail::trial_metric_transport(r, rng, c); break;
      case CampaignMode::kMetricDiagrams: detail::trial_metric_diagrams(r, rng, c); break;
      case CampaignMode::kSnowflake: detail::trial_snowflake(r, rng, c); break;
    }
  } catch (const std::exception& e) {
    r.pass = false;
    r.error = e.what();
  }
  return r;
}

inline Report run_campaign(const Campaign& c) {
  if (c.trials == 0) throw InvalidArgument("campaign: trials must be positive");
  if (c.p_values.empty()) throw InvalidArgument("campaign: at least one p value required");
  c.bbox.check();
  const auto start = std::chrono::steady_clock::now();

  Report rep;
  rep.campaign = c;
  rep.trials.resize(c.trials);
  unsigned workers = c.threads ? c.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, c.trials));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < c.trials;) rep.trials[k] = run_trial(c, k);
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  double sum = 0.0;
  for (const auto& t : rep.trials) {
    rep.pass = rep.pass && t.pass;
    rep.failed += t.pass ? 0 : 1;
    rep.skipped += t.skipped ? 1 : 0;
    rep.degenerate += t.degenerate.empty() ? 0 : 1;
    for (const auto& ch : t.checks) {
      ++rep.checks;
      sum += ch.margin;
      rep.max_margin = std::max(rep.max_margin, ch.margin);
      if (ch.margin < rep.min_margin) {
        rep.min_margin = ch.margin;
        rep.worst = "trial " + std::to_string(t.trial) + ": " + ch.label;
      }
    }
  }
  if (rep.checks > 0) rep.mean_margin = sum / static_cast<double>(rep.checks);
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

inline nlohmann::json campaign_to_json(const Campaign& c) {
  nlohmann::json j = {{"mode", mode_name(c.mode)},
                      {"seed", c.seed},
                      {"trials", c.trials},
                      {"family_size", c.family_size},
                      {"max_points", c.max_points},
                      {"p_values", c.p_values},
                      {"eps_values", c.eps_values},
                      {"bbox", {c.bbox.lo, c.bbox.hi}},
                      {"denominator", c.denominator},
                      {"rel_tol", c.rel_tol},
                      {"max_support", c.max_support}};
  if (c.mode == CampaignMode::kSnowflake) {
    j["delta"] = c.delta;
    j["eps2_fraction"] = c.eps2_fraction;
    j["space_size"] = c.space_size;
    j["route"] = c.route == TransferRoute::kDiagramsToMeasures ? "pd2ot" : "ot2pd";
  }
  return j;
}

inline nlohmann::json finite_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

/// Report as JSON. Timing lives only under "timing" so that runs can be
/// compared after dropping that key.
inline nlohmann::json report_to_json(const Report& rep) {
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : rep.trials) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& ch : t.checks)
      checks.push_back({{"label", ch.label}, {"margin", finite_or_null(ch.margin)}, {"pass", ch.pass}});
    nlohmann::json jt = {{"trial", t.trial}, {"pass", t.pass}, {"checks", checks}};
    if (!t.degenerate.empty()) jt["degenerate"] = t.degenerate;
    if (t.skipped) jt["skipped"] = true;
    if (t.skipped_cases) jt["skipped_cases"] = t.skipped_cases;
    if (!t.note.empty()) jt["note"] = t.note;
    if (!t.error.empty()) jt["error"] = t.error;
    trials.push_back(std::move(jt));
  }
  return {{"campaign", campaign_to_json(rep.campaign)},
          {"pass", rep.pass},
          {"summary",
           {{"trials", rep.trials.size()},
            {"failed", rep.failed},
            {"skipped", rep.skipped},
            {"degenerate", rep.degenerate},
            {"checks", rep.checks},
            {"min_margin", finite_or_null(rep.min_margin)},
            {"max_margin", finite_or_null(rep.max_margin)},
            {"mean_margin", rep.mean_margin},
            {"worst", rep.worst}}},
          {"trials", trials},
          {"timing", {{"wall_seconds", rep.wall_seconds}}}};
}

/// WPD_SEED, when set to an unsigned integer, overrides `fallback`.
inline std::uint64_t seed_from_env(std::uint64_t fallback) {
  const char* v = std::getenv("WPD_SEED");
  if (!v || !*v) return fallback;
  char* end = nullptr;
  const unsigned long long s = std::strtoull(v, &end, 10);
  if (*end != '\0') throw InvalidArgument(std::string("WPD_SEED is not an unsigned integer: ") + v);
  return s;
}

}  // namespace wpd::harness
