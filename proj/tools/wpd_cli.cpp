// wpd: command-line front end for distances, embeddings, verification
// campaigns, instance generation and solver benchmarks.
//
// Exit codes: 0 success or pass, 1 verification failure, 2 usage or input
// error.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "wpd/assignment.hpp"
#include "wpd/diagrams.hpp"
#include "wpd/embeddings.hpp"
#include "wpd/error.hpp"
#include "wpd/harness/campaign.hpp"
#include "wpd/harness/generators.hpp"
#include "wpd/io.hpp"
#include "wpd/transport.hpp"

namespace {

using nlohmann::json;
using namespace wpd;

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

struct Output {
  bool table = false;
};

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(10) << x;
  return os.str();
}

// Reads a file holding one object or an array of objects.
std::vector<json> read_objects(const std::vector<std::string>& files) {
  std::vector<json> out;
  for (const auto& f : files) {
    json j = io::read_json_file(f);
    if (j.is_array()) {
      for (auto& e : j) out.push_back(std::move(e));
    } else {
      out.push_back(std::move(j));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// dist

int run_dist_pd(const std::string& fa, const std::string& fb, double p, const Output& o) {
  const auto a = io::diagram_from_json(io::read_json_file(fa));
  const auto b = io::diagram_from_json(io::read_json_file(fb));
  const auto r = wasserstein_pd(a, b, p);
  if (o.table) {
    std::cout << "distance  " << fmt(r.distance) << "\n";
    for (auto [i, j] : r.matching.matched) std::cout << "match     " << i << " -> " << j << "\n";
  } else {
    std::cout << json{{"distance", r.distance}, {"matching", io::matching_to_json(r.matching)}}.dump(2) << "\n";
  }
  return kOk;
}

int run_dist_ot(const std::string& fa, const std::string& fb, double p, std::int64_t cap, const Output& o) {
  const auto a = io::measure_from_json(io::read_json_file(fa));
  const auto b = io::measure_from_json(io::read_json_file(fb));
  TransportResult r;
  bool exact = true;
  try {
    r = wasserstein(snap_exact(a, cap), snap_exact(b, cap), p, cap);
  } catch (const CapacityError&) {
    exact = false;
    r = wasserstein_real(a, b, p);
  }
  if (o.table) {
    std::cout << "distance  " << fmt(r.distance) << "\n";
    for (const auto& e : r.coupling.plan)
      std::cout << "move      " << e.source << " -> " << e.target << "  mass " << fmt(e.mass) << "\n";
  } else {
    std::cout << json{{"distance", r.distance},
                      {"solver", exact ? "assignment" : "min-cost-flow"},
                      {"coupling", io::coupling_to_json(r.coupling)}}
                     .dump(2)
              << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// embed

void print_certificates_table(const Certification& cert) {
  std::cout << std::left << std::setw(8) << "pair" << std::setw(16) << "source" << std::setw(16) << "image"
            << std::setw(16) << "lower" << std::setw(16) << "upper"
            << "ok\n";
  for (const auto& c : cert.pairs)
    std::cout << std::setw(8) << (std::to_string(c.i) + "," + std::to_string(c.j)) << std::setw(16)
              << fmt(c.source_dist) << std::setw(16) << fmt(c.image_dist) << std::setw(16) << fmt(c.lower)
              << std::setw(16) << fmt(c.upper) << (c.pass ? "yes" : "NO") << "\n";
  std::cout << "pass " << (cert.pass ? "true" : "false") << "\n";
}

template <class Image>
int emit_embedding(const EmbeddingResult<Image>& emb, const Certification& cert, const Output& o) {
  if (o.table)
    print_certificates_table(cert);
  else
    std::cout << io::embedding_to_json(emb, cert).dump(2) << "\n";
  return cert.pass ? kOk : kFailed;
}

struct EmbedArgs {
  std::string construction;
  std::vector<std::string> files;
  double p = 2.0;
  double eps = 0.1;
  double tol = 1e-9;
  bool no_dilate = false;
  std::int64_t max_support = std::numeric_limits<std::int64_t>::max();
};

int run_embed(const EmbedArgs& a, const Output& o) {
  const auto objects = read_objects(a.files);
  if (a.construction == "ot2pd-iso" || a.construction == "ot2pd-quasi") {
    std::vector<DiscreteMeasure> fam;
    for (const auto& j : objects) fam.push_back(io::measure_from_json(j));
    const auto emb = a.construction == "ot2pd-iso" ? measures_to_diagrams_isometric(fam, a.p)
                                                   : measures_to_diagrams_quasi(fam, a.p, a.eps);
    return emit_embedding(emb, certify_pairwise(emb, fam, a.tol), o);
  }
  std::vector<PersistenceDiagram> fam;
  for (const auto& j : objects) fam.push_back(io::diagram_from_json(j));
  const auto emb = a.construction == "pd2ot-bilip"
                       ? diagrams_to_measures_bilipschitz(fam, a.p, {.dilate = !a.no_dilate})
                       : diagrams_to_measures_quasi(fam, a.p, a.eps, {.max_support = a.max_support});
  return emit_embedding(emb, certify_pairwise(emb, fam, a.tol), o);
}

// ---------------------------------------------------------------------------
// verify

int run_verify(harness::Campaign c, const std::string& route, const Output& o) {
  c.seed = harness::seed_from_env(c.seed);
  c.route = route == "ot2pd" ? harness::TransferRoute::kMeasuresToDiagrams : harness::TransferRoute::kDiagramsToMeasures;
  const auto rep = harness::run_campaign(c);
  if (o.table) {
    std::cout << "mode        " << harness::mode_name(c.mode) << "\n"
              << "seed        " << c.seed << "\n"
              << "trials      " << rep.trials.size() << "\n"
              << "failed      " << rep.failed << "\n"
              << "skipped     " << rep.skipped << "\n"
              << "degenerate  " << rep.degenerate << "\n"
              << "checks      " << rep.checks << "\n"
              << "min margin  " << fmt(rep.min_margin) << "\n"
              << "mean margin " << fmt(rep.mean_margin) << "\n"
              << "worst       " << rep.worst << "\n"
              << "wall s      " << fmt(rep.wall_seconds) << "\n"
              << "pass        " << (rep.pass ? "true" : "false") << "\n";
    for (const auto& t : rep.trials)
      if (!t.pass) std::cout << "FAILED trial " << t.trial << (t.error.empty() ? "" : ": " + t.error) << "\n";
  } else {
    std::cout << harness::report_to_json(rep).dump(2) << "\n";
  }
  return rep.pass ? kOk : kFailed;
}

// ---------------------------------------------------------------------------
// gen

struct GenArgs {
  std::string kind;
  std::uint64_t seed = 42;
  std::size_t max_points = 4;
  std::int64_t denominator = 12;
  double lo = 0.0, hi = 10.0;
  bool real = false;
};

int run_gen(GenArgs g, const Output& o) {
  g.seed = harness::seed_from_env(g.seed);
  const harness::BoundingBox box{g.lo, g.hi};
  json j;
  if (g.kind == "diagram") {
    j = io::diagram_to_json(harness::gen_diagram(g.seed, g.max_points, box));
  } else if (g.real) {
    harness::Rng rng(g.seed);
    j = io::measure_to_json(harness::gen_real_measure(rng, g.max_points, box));
  } else {
    j = io::measure_to_json(harness::gen_measure(g.seed, g.max_points, g.denominator, box));
  }
  if (o.table) {
    const auto& pts = j.contains("points") ? j["points"] : j["atoms"];
    for (std::size_t k = 0; k < pts.size(); ++k) {
      std::cout << fmt(pts[k][0].get<double>()) << "\t" << fmt(pts[k][1].get<double>());
      if (j.contains("weights")) std::cout << "\t" << j["weights"][k].dump();
      std::cout << "\n";
    }
  } else {
    std::cout << j.dump(2) << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::uint64_t seed = 42;
  std::size_t instances = 5;
  std::size_t max_points = 3;
  double p = 2.0;
  double eps = 0.5;
  double lo = 0.0, hi = 1.0;
  std::size_t dense_limit = 1200;
  std::int64_t max_support = 20'000;
};

template <class Fn>
double time_ms(Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

int run_bench(BenchArgs b, const Output& o) {
  b.seed = harness::seed_from_env(b.seed);
  const harness::BoundingBox box{b.lo, b.hi};
  json rows = json::array();
  bool agree = true;
  for (std::size_t k = 0; k < b.instances; ++k) {
    harness::Rng rng(harness::splitmix64(b.seed + k));
    std::vector<PersistenceDiagram> fam{harness::gen_diagram(rng, b.max_points, box),
                                        harness::gen_diagram(rng, b.max_points, box)};
    if (fam[0].empty() && fam[1].empty()) fam[0] = PersistenceDiagram({{b.lo, b.hi}});
    MeasureEmbedding emb;
    try {
      emb = diagrams_to_measures_quasi(fam, b.p, b.eps, {.max_support = b.max_support});
    } catch (const CapacityError& e) {
      rows.push_back({{"instance", k}, {"skipped", e.what()}});
      continue;
    }
    const std::size_t n = emb.images[0].size();
    const double p = b.p;
    json row = {{"instance", k}, {"support", n}, {"s", emb.params.grid_resolution}};

    double banded = 0.0;
    std::size_t banded_edges = 0;
    row["banded_ms"] = time_ms([&] {
      auto g = grid_assignment_graph(emb, 0, 1, emb.params.point_count + 1);
      for (const auto& r : g.graph) banded_edges += r.size();
      banded = solve_sparse(g.graph, std::move(g.warm_start)).cost;
    });
    row["banded_edges"] = banded_edges;
    row["banded_cost"] = banded;

    if (n <= b.dense_limit) {
      double full = 0.0, dense = 0.0;
      row["full_sparse_ms"] = time_ms([&] {
        auto g = grid_assignment_graph(emb, 0, 1, static_cast<std::int64_t>(n));
        full = solve_sparse(g.graph, std::move(g.warm_start)).cost;
      });
      row["dense_ms"] = time_ms([&] {
        const auto& x = emb.images[0].atoms();
        const auto& y = emb.images[1].atoms();
        CostMatrix c(n);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) c(i, j) = pow_p(linf_dist(x[i], y[j]), p);
        dense = solve_dense(c).cost;
      });
      row["full_sparse_cost"] = full;
      row["dense_cost"] = dense;
      const double tol = 1e-9 * std::max(1.0, dense);
      const bool ok = std::abs(full - dense) <= tol && std::abs(banded - dense) <= tol;
      row["agree"] = ok;
      agree = agree && ok;
    }
    rows.push_back(std::move(row));
  }
  if (o.table) {
    std::cout << std::left << std::setw(10) << "instance" << std::setw(10) << "support" << std::setw(14) << "banded ms"
              << std::setw(14) << "sparse ms" << std::setw(14) << "dense ms"
              << "agree\n";
    for (const auto& r : rows) {
      if (r.contains("skipped")) {
        std::cout << std::setw(10) << r["instance"].get<std::size_t>() << "skipped: " << r["skipped"].get<std::string>()
                  << "\n";
        continue;
      }
      auto cell = [&](const char* key) { return r.contains(key) ? fmt(r[key].get<double>()) : std::string("-"); };
      std::cout << std::setw(10) << r["instance"].get<std::size_t>() << std::setw(10) << r["support"].get<std::size_t>()
                << std::setw(14) << cell("banded_ms") << std::setw(14) << cell("full_sparse_ms") << std::setw(14)
                << cell("dense_ms") << (r.contains("agree") ? (r["agree"].get<bool>() ? "yes" : "NO") : "-") << "\n";
    }
  } else {
    std::cout << json{{"benchmark", "assignment"}, {"p", b.p}, {"epsilon", b.eps}, {"instances", rows}, {"agree", agree}}
                     .dump(2)
              << "\n";
  }
  return agree ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wasserstein spaces of persistence diagrams and measures: distances, embeddings, verification"};
  app.require_subcommand(1);
  Output out;
  std::string format = "json";
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"json", "table"}))->capture_default_str();

  // dist
  auto* dist = app.add_subcommand("dist", "Exact p-Wasserstein distance between two inputs");
  std::string dist_kind, dist_a, dist_b;
  double dist_p = 2.0;
  std::int64_t dist_cap = kDefaultDenominatorCap;
  dist->add_option("kind", dist_kind, "pd or ot")->required()->check(CLI::IsMember({"pd", "ot"}));
  dist->add_option("a", dist_a, "First JSON file")->required();
  dist->add_option("b", dist_b, "Second JSON file")->required();
  dist->add_option("--p", dist_p, "Order p >= 1")->capture_default_str();
  dist->add_option("--cap", dist_cap, "Largest common denominator for the exact solver")->capture_default_str();

  // embed
  auto* embed = app.add_subcommand("embed", "Embed a family and certify every pair");
  EmbedArgs ea;
  embed->add_option("construction", ea.construction)
      ->required()
      ->check(CLI::IsMember({"ot2pd-iso", "ot2pd-quasi", "pd2ot-bilip", "pd2ot-quasi"}));
  embed->add_option("files", ea.files, "JSON files, each one object or an array of objects")->required();
  embed->add_option("--p", ea.p)->capture_default_str();
  embed->add_option("--eps", ea.eps, "Additive error for the quasi constructions")->capture_default_str();
  embed->add_option("--tol", ea.tol, "Relative tolerance for exact claims")->capture_default_str();
  embed->add_option("--max-support", ea.max_support, "Refuse grid images larger than this");
  embed->add_flag("--no-dilate", ea.no_dilate, "pd2ot-bilip: skip the final dilation");

  // verify
  auto* verify = app.add_subcommand("verify", "Run a seeded verification campaign");
  harness::Campaign camp;
  std::string mode, route = "pd2ot";
  std::vector<std::string> mode_names;
  for (const auto& [m, name] : harness::campaign_modes()) mode_names.emplace_back(name);
  verify->add_option("mode", mode)->required()->check(CLI::IsMember(mode_names));
  verify->add_option("--seed", camp.seed, "Master seed (WPD_SEED overrides)")->capture_default_str();
  verify->add_option("--trials", camp.trials)->capture_default_str();
  verify->add_option("--family-size", camp.family_size)->capture_default_str();
  verify->add_option("--max-points", camp.max_points)->capture_default_str();
  verify->add_option("--p", camp.p_values, "One or more orders")->capture_default_str();
  verify->add_option("--eps", camp.eps_values, "One or more additive errors")->capture_default_str();
  verify->add_option("--lo", camp.bbox.lo, "Bounding box lower end")->capture_default_str();
  verify->add_option("--hi", camp.bbox.hi, "Bounding box upper end")->capture_default_str();
  verify->add_option("--denominator", camp.denominator, "Largest LCD of rational families")->capture_default_str();
  verify->add_option("--tol", camp.rel_tol, "Relative tolerance for exact claims")->capture_default_str();
  verify->add_option("--max-support", camp.max_support, "Skip grid images larger than this")->capture_default_str();
  verify->add_option("--delta", camp.delta, "snowflake: distortion slack")->capture_default_str();
  verify->add_option("--route", route, "snowflake: pd2ot or ot2pd")->check(CLI::IsMember({"pd2ot", "ot2pd"}));
  verify->add_option("--threads", camp.threads, "Worker threads, 0 for all cores")->capture_default_str();

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a random diagram or measure");
  GenArgs ga;
  gen->add_option("kind", ga.kind)->required()->check(CLI::IsMember({"diagram", "measure"}));
  gen->add_option("--seed", ga.seed, "Seed (WPD_SEED overrides)")->capture_default_str();
  gen->add_option("--max-points", ga.max_points)->capture_default_str();
  gen->add_option("--denominator", ga.denominator)->capture_default_str();
  gen->add_option("--lo", ga.lo)->capture_default_str();
  gen->add_option("--hi", ga.hi)->capture_default_str();
  gen->add_flag("--real", ga.real, "measure: real weights instead of rationals");

  // bench
  auto* bench = app.add_subcommand("bench", "Compare assignment solvers on grid-construction instances");
  std::string bench_kind;
  BenchArgs ba;
  bench->add_option("kind", bench_kind)->required()->check(CLI::IsMember({"assignment"}));
  bench->add_option("--seed", ba.seed)->capture_default_str();
  bench->add_option("--instances", ba.instances)->capture_default_str();
  bench->add_option("--max-points", ba.max_points)->capture_default_str();
  bench->add_option("--p", ba.p)->capture_default_str();
  bench->add_option("--eps", ba.eps)->capture_default_str();
  bench->add_option("--lo", ba.lo)->capture_default_str();
  bench->add_option("--hi", ba.hi)->capture_default_str();
  bench->add_option("--dense-limit", ba.dense_limit, "Largest support solved densely")->capture_default_str();
  bench->add_option("--max-support", ba.max_support)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }
  out.table = format == "table";

  try {
    if (*dist)
      return dist_kind == "pd" ? run_dist_pd(dist_a, dist_b, dist_p, out)
                               : run_dist_ot(dist_a, dist_b, dist_p, dist_cap, out);
    if (*embed) return run_embed(ea, out);
    if (*verify) {
      camp.mode = harness::parse_mode(mode);
      return run_verify(camp, route, out);
    }
    if (*gen) return run_gen(ga, out);
    if (*bench) return run_bench(ba, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
