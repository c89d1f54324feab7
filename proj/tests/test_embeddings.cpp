#include <gtest/gtest.h>

#include <cmath>

#include "wpd/embeddings.hpp"
#include "wpd/error.hpp"
#include "wpd/harness/generators.hpp"

using namespace wpd;

namespace {

PersistenceDiagram dg(std::vector<PlanePoint> pts) { return PersistenceDiagram(std::move(pts)); }

// Smallest s > n_max meeting both thresholds, by plain upward scan.
std::int64_t scan_resolution(std::int64_t n_max, std::int64_t n_min, double spread, double p, double eps) {
  const double nn = static_cast<double>(n_max), threshold = std::pow(eps, p) / 3;
  for (std::int64_t s = n_max + 1;; ++s) {
    const double term = std::pow(nn * spread / static_cast<double>(s), p);
    if (nn * term < threshold && (static_cast<double>(s) + 1 + nn - static_cast<double>(n_min)) * term < threshold)
      return s;
  }
}

std::vector<PersistenceDiagram> random_family(harness::Rng& rng, std::size_t k, std::size_t max_points,
                                              harness::BoundingBox box) {
  std::vector<PersistenceDiagram> fam;
  for (std::size_t i = 0; i < k; ++i) fam.push_back(harness::gen_diagram(rng, max_points, box));
  if (std::all_of(fam.begin(), fam.end(), [](auto& d) { return d.empty(); })) fam[0] = dg({{box.lo, box.hi}});
  return fam;
}

}  // namespace

// ---------------------------------------------------------------------------
// Measures -> diagrams, isometric

TEST(IsometricEmbedding, TwoDiracs) {
  const std::vector<DiscreteMeasure> fam{DiscreteMeasure::dirac({0, 0}), DiscreteMeasure::dirac({1, 0})};
  const auto emb = measures_to_diagrams_isometric(fam, 1);
  ASSERT_EQ(emb.images.size(), 2u);
  EXPECT_EQ(emb.images[0].size(), 1u);
  EXPECT_DOUBLE_EQ(linf_dist(emb.images[0][0], emb.images[1][0]), 1.0);
  EXPECT_DOUBLE_EQ(oracle_wasserstein_pd(emb.images[0], emb.images[1], 1), 1.0);
  EXPECT_DOUBLE_EQ(image_distance(emb, 0, 1), 1.0);
}

TEST(IsometricEmbedding, SingleAndIdenticalMeasures) {
  const auto m = DiscreteMeasure({{0, 0}, {2, 1}}, std::vector<Rational>{Rational(1, 3), Rational(2, 3)});
  const auto one = measures_to_diagrams_isometric({m}, 2);
  EXPECT_EQ(one.images.size(), 1u);
  EXPECT_TRUE(certify_pairwise(one, std::vector<DiscreteMeasure>{m}).pairs.empty());
  const auto two = measures_to_diagrams_isometric({m, m}, 2);
  EXPECT_EQ(image_distance(two, 0, 1), 0.0);
}

TEST(IsometricEmbedding, ImagesSitFarAboveTheDiagonal) {
  harness::Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    std::vector<DiscreteMeasure> fam;
    for (int k = 0; k < 3; ++k) fam.push_back(harness::gen_measure(rng, 3, 6, {-10, 10}));
    for (double p : {1.0, 2.0}) {
      const auto emb = measures_to_diagrams_isometric(fam, p);
      const double D = emb.params.scaled_diameter;
      EXPECT_EQ(emb.params.translation.x, 0.0);
      for (const auto& d : emb.images) {
        EXPECT_EQ(static_cast<std::int64_t>(d.size()), emb.params.common_denominator);
        for (const auto& x : d.points()) EXPECT_GT(diagonal_distance(x), 2 * D);
      }
    }
  }
}

TEST(IsometricEmbedding, ExactOnRandomRationalFamilies) {
  harness::Rng rng(5);
  for (int t = 0; t < 40; ++t) {
    std::vector<DiscreteMeasure> fam;
    const auto q = static_cast<std::int64_t>(harness::uniform_count(rng, 3, 12));
    for (int k = 0; k < 4; ++k) fam.push_back(harness::gen_measure(rng, 3, q, {0, 10}));
    for (double p : {1.0, 1.5, 2.0, 3.0}) {
      const auto cert = certify_pairwise(measures_to_diagrams_isometric(fam, p), fam);
      EXPECT_TRUE(cert.pass);
      for (const auto& c : cert.pairs)
        EXPECT_NEAR(c.image_dist, c.source_dist, 1e-9 * std::max(1.0, c.source_dist));
    }
  }
}

TEST(IsometricEmbedding, LiteralOneOverNScalingBreaksIsometryAboveOrderOne) {
  const auto a = DiscreteMeasure({{0, 0}, {4, 0}}, std::vector<Rational>{Rational(1, 2), Rational(1, 2)});
  const auto b = DiscreteMeasure::dirac({0, 0});
  const double p = 2, w = wasserstein(a, b, p).distance;
  const auto emb = measures_to_diagrams_isometric({a, b}, p);
  EXPECT_NEAR(image_distance(emb, 0, 1), w, 1e-12);
  // The same construction with atoms scaled by 1/N instead of N^(-1/p).
  const double n = static_cast<double>(emb.params.common_denominator);
  const double ratio = (1 / n) / emb.params.atom_scale;
  auto shrink = [&](const PersistenceDiagram& d) {
    std::vector<PlanePoint> pts;
    for (const auto& x : d.points()) pts.push_back(ratio * (x - emb.params.translation) + emb.params.translation);
    return dg(pts);
  };
  const double literal = wasserstein_pd(shrink(emb.images[0]), shrink(emb.images[1]), p).distance;
  EXPECT_GT(std::abs(literal - w), 0.1);
}

TEST(IsometricEmbedding, DenominatorCapIsEnforced) {
  const auto a = DiscreteMeasure({{0, 0}, {1, 1}}, std::vector<Rational>{Rational(1, 997), Rational(996, 997)});
  const auto b = DiscreteMeasure({{0, 0}, {1, 1}}, std::vector<Rational>{Rational(1, 991), Rational(990, 991)});
  EXPECT_THROW(measures_to_diagrams_isometric({a, b}, 1, 10'000), CapacityError);
  EXPECT_TRUE(measures_to_diagrams_isometric({}, 1).images.empty());
}

// ---------------------------------------------------------------------------
// Measures -> diagrams, quasi

TEST(QuasiMeasureEmbedding, RationalInputReducesToTheIsometricCase) {
  const std::vector<DiscreteMeasure> fam{
      DiscreteMeasure({{0, 0}, {2, 1}}, std::vector<Rational>{Rational(1, 4), Rational(3, 4)}),
      DiscreteMeasure::dirac({1, 3})};
  const auto q = measures_to_diagrams_quasi(fam, 2, 0.1);
  const auto iso = measures_to_diagrams_isometric(fam, 2);
  for (double e : q.params.approx_error) EXPECT_EQ(e, 0.0);
  EXPECT_EQ(q.images, iso.images);
  EXPECT_NEAR(image_distance(q, 0, 1), wasserstein(fam[0], fam[1], 2).distance, 1e-12);
}

TEST(QuasiMeasureEmbedding, IrrationalPairWithinEpsilon) {
  const double r2 = 1 / std::sqrt(2.0), r3 = 1 / std::sqrt(3.0);
  const std::vector<DiscreteMeasure> fam{DiscreteMeasure({{0, 0}, {1, 0}}, std::vector<double>{r2, 1 - r2}),
                                         DiscreteMeasure({{0, 1}, {1, 1}}, std::vector<double>{r3, 1 - r3})};
  for (double p : {1.0, 2.0}) {
    const auto emb = measures_to_diagrams_quasi(fam, p, 0.1);
    for (double e : emb.params.approx_error) EXPECT_LT(e, 0.05);
    const double d = wasserstein_real(fam[0], fam[1], p).distance;
    EXPECT_LE(std::abs(image_distance(emb, 0, 1) - d), 0.1);
    EXPECT_TRUE(certify_pairwise(emb, fam).pass);
  }
}

TEST(QuasiMeasureEmbedding, ChoosesTheSmallestSharedDenominator) {
  harness::Rng rng(8);
  const harness::BoundingBox box{0, 1};
  for (int t = 0; t < 10; ++t) {
    std::vector<DiscreteMeasure> fam{harness::gen_real_measure(rng, 3, box), harness::gen_real_measure(rng, 3, box)};
    const double p = 2, eps = 0.1;
    const auto emb = measures_to_diagrams_quasi(fam, p, eps);
    const auto q = emb.params.approx_denominator;
    for (const auto& m : fam) EXPECT_LT(rational_approx(m, q, p).error_bound, eps / 2);
    if (q > 1) {
      bool all = true;
      for (const auto& m : fam) all = all && rational_approx(m, q - 1, p).error_bound < eps / 2;
      EXPECT_FALSE(all);
    }
  }
}

TEST(QuasiMeasureEmbedding, RejectsNonPositiveEpsilon) {
  EXPECT_THROW(measures_to_diagrams_quasi({DiscreteMeasure::dirac({0, 0})}, 1, 0), InvalidArgument);
}

// ---------------------------------------------------------------------------
// Diagrams -> measures, bi-Lipschitz

TEST(BilipschitzEmbedding, PointAndEmptyDiagram) {
  const std::vector<PersistenceDiagram> fam{dg({{0, 2}}), dg({})};
  for (double p : {1.0, 2.0, 3.0}) {
    const auto emb = diagrams_to_measures_bilipschitz(fam, p);
    EXPECT_EQ(emb.params.point_count, 1);
    EXPECT_EQ(emb.images[0].atoms(), (std::vector<PlanePoint>{{0, 2}}));
    EXPECT_EQ(emb.images[1].atoms(), (std::vector<PlanePoint>{{1, 1}}));
    EXPECT_DOUBLE_EQ(image_distance(emb, 0, 1), 1.0);
    EXPECT_DOUBLE_EQ(wasserstein_pd(fam[0], fam[1], p).distance, 1.0);
    const auto cert = certify_pairwise(emb, fam);
    EXPECT_TRUE(cert.pass);
    EXPECT_DOUBLE_EQ(cert.pairs[0].lower, 1.0);
    EXPECT_DOUBLE_EQ(cert.pairs[0].upper, std::pow(2.0, 1 / p));
  }
}

TEST(BilipschitzEmbedding, AugmentedSupportsHaveSizeN) {
  const std::vector<PersistenceDiagram> fam{dg({{0, 2}, {1, 5}}), dg({{3, 4}}), dg({})};
  const auto emb = diagrams_to_measures_bilipschitz(fam, 2);
  EXPECT_EQ(emb.params.point_count, 3);
  for (const auto& m : emb.images) EXPECT_EQ(m.size(), 3u);
  EXPECT_EQ(emb.images[0].atoms().back(), std::sqrt(3.0) * diagonal_projection({3, 4}));
}

TEST(BilipschitzEmbedding, IdenticalDiagramsGiveIdenticalMeasures) {
  const auto d = dg({{0, 3}, {1, 2}});
  const auto emb = diagrams_to_measures_bilipschitz({d, d}, 2);
  EXPECT_EQ(image_distance(emb, 0, 1), 0.0);
}

TEST(BilipschitzEmbedding, AllEmptyFamilyIsRejected) {
  EXPECT_THROW(diagrams_to_measures_bilipschitz({dg({}), dg({})}, 2), InvalidArgument);
  EXPECT_THROW(diagrams_to_measures_bilipschitz({}, 2), InvalidArgument);
}

TEST(BilipschitzEmbedding, SandwichOnRandomFamilies) {
  harness::Rng rng(43);
  for (int t = 0; t < 60; ++t) {
    const auto fam = random_family(rng, 4, 4, {0, 10});
    for (double p : {1.0, 2.0, 3.0}) {
      const auto emb = diagrams_to_measures_bilipschitz(fam, p);
      const auto raw = diagrams_to_measures_bilipschitz(fam, p, {.dilate = false});
      const double n = static_cast<double>(emb.params.point_count);
      for (std::size_t i = 0; i < fam.size(); ++i)
        for (std::size_t j = i + 1; j < fam.size(); ++j) {
          const double d = wasserstein_pd(fam[i], fam[j], p).distance;
          const double img = image_distance(emb, i, j), r = image_distance(raw, i, j);
          EXPECT_GE(img, d * (1 - 1e-9));
          EXPECT_LE(img, std::pow(2.0, 1 / p) * d + 1e-9);
          EXPECT_GE(r, d / std::pow(n, 1 / p) * (1 - 1e-9));
          EXPECT_LE(r, std::pow(2 / n, 1 / p) * d + 1e-9);
        }
      EXPECT_TRUE(certify_pairwise(raw, fam).pass);
    }
  }
}

// ---------------------------------------------------------------------------
// Diagrams -> measures, grid construction

TEST(GridResolution, RegressionAnchor) {
  // N = 2, M - m = 1, p = 2, grid budget 0.1.
  EXPECT_EQ(grid_resolution(2, 2, 1.0, 2.0, 0.1, 100'000'000), 1201);
  EXPECT_EQ(scan_resolution(2, 2, 1.0, 2.0, 0.1), 1201);
  // With an empty diagram in the family the padding term is s + 3.
  EXPECT_EQ(grid_resolution(2, 0, 1.0, 2.0, 0.1, 100'000'000), 1203);
  EXPECT_EQ(scan_resolution(2, 0, 1.0, 2.0, 0.1), 1203);
}

TEST(GridResolution, BisectionMatchesUpwardScan) {
  harness::Rng rng(47);
  for (int t = 0; t < 200; ++t) {
    const auto n = static_cast<std::int64_t>(harness::uniform_count(rng, 1, 6));
    const auto n_min = static_cast<std::int64_t>(harness::uniform_count(rng, 0, static_cast<std::size_t>(n)));
    const double spread = harness::uniform(rng, 0, 3), p = harness::uniform(rng, 1.2, 3.5);
    const double eps = harness::uniform(rng, 0.05, 1.0);
    std::int64_t s = 0;
    try {
      s = grid_resolution(n, n_min, spread, p, eps, 100'000'000);
    } catch (const CapacityError&) {
      continue;  // beyond the cap, nothing to compare
    }
    if (s < 200'000) EXPECT_EQ(s, scan_resolution(n, n_min, spread, p, eps));
  }
}

TEST(GridResolution, CollapsedRangeAcceptsTheFirstCandidate) {
  EXPECT_EQ(grid_resolution(3, 1, 0.0, 2.0, 0.01, 100), 4);
  EXPECT_THROW(grid_resolution(3, 1, 1.0, 2.0, 1e-6, 1000), CapacityError);
}

TEST(GridEmbedding, RejectsOrderOne) {
  const std::vector<PersistenceDiagram> fam{dg({{0, 1}}), dg({{0, 2}})};
  for (double p : {1.0, 0.5}) {
    try {
      diagrams_to_measures_quasi(fam, p, 0.1);
      FAIL() << "p = " << p << " accepted";
    } catch (const InvalidArgument& e) {
      EXPECT_NE(std::string(e.what()).find("requires p > 1"), std::string::npos);
    }
  }
}

TEST(GridEmbedding, RejectsAllEmptyFamiliesAndBadEpsilon) {
  EXPECT_THROW(diagrams_to_measures_quasi({dg({}), dg({})}, 2, 0.1), InvalidArgument);
  EXPECT_THROW(diagrams_to_measures_quasi({dg({{0, 1}})}, 2, 0), InvalidArgument);
}

TEST(GridEmbedding, SupportCapIsReported) {
  const std::vector<PersistenceDiagram> fam{dg({{0, 5}, {1, 9}}), dg({{2, 3}})};
  try {
    diagrams_to_measures_quasi(fam, 2, 0.01, {.max_support = 1000});
    FAIL();
  } catch (const CapacityError& e) {
    EXPECT_GT(e.offending(), 1000);
  }
}

TEST(GridEmbedding, CardinalitiesAndStructure) {
  const std::vector<PersistenceDiagram> fam{dg({{0, 1}, {0.2, 0.9}}), dg({{0.1, 0.5}}), dg({})};
  const double p = 2;
  const auto emb = diagrams_to_measures_quasi(fam, p, 0.5);
  const auto n = emb.params.point_count, s = emb.params.grid_resolution;
  EXPECT_EQ(n, 2);
  EXPECT_GT(s, n);
  EXPECT_EQ(emb.params.support_size, n + s + 1);
  EXPECT_DOUBLE_EQ(emb.params.dilation, std::pow(static_cast<double>(n + s + 1), 1 / p));
  for (std::size_t i = 0; i < fam.size(); ++i) {
    std::int64_t shared = 0, own = 0, off = 0;
    for (auto t : emb.grid_index[i]) (t < 0 ? off : (t <= s ? shared : own)) += 1;
    EXPECT_EQ(shared, s + 1);
    EXPECT_EQ(own, n - static_cast<std::int64_t>(fam[i].size()));
    EXPECT_EQ(off, static_cast<std::int64_t>(fam[i].size()));
    EXPECT_EQ(static_cast<std::int64_t>(emb.images[i].size()), n + s + 1);
  }
  // Grid atoms lie on the diagonal between m and M, before dilation.
  const auto& a = emb.images[0].atoms();
  EXPECT_DOUBLE_EQ(a[2].x / emb.params.dilation, emb.params.grid_min);
  EXPECT_DOUBLE_EQ(a[2 + s].x / emb.params.dilation, emb.params.grid_max);
}

TEST(GridEmbedding, CollapsedGridRange) {
  const std::vector<PersistenceDiagram> fam{dg({{0, 2}}), dg({{0.5, 1.5}})};
  const auto emb = diagrams_to_measures_quasi(fam, 2, 0.1);
  EXPECT_EQ(emb.params.grid_max, emb.params.grid_min);
  EXPECT_EQ(emb.params.grid_resolution, 2);
  EXPECT_TRUE(certify_pairwise(emb, fam).pass);
}

TEST(GridEmbedding, BandedSolverMatchesDenseAndFullSparse) {
  harness::Rng rng(53);
  int compared = 0;
  for (int t = 0; t < 40; ++t) {
    const auto fam = random_family(rng, 3, 3, {0, 1});
    for (double p : {1.5, 2.0, 3.0}) {
      MeasureEmbedding emb;
      try {
        emb = diagrams_to_measures_quasi(fam, p, 1.5, {.max_support = 400});
      } catch (const CapacityError&) {
        continue;
      }
      for (std::size_t i = 0; i < fam.size(); ++i)
        for (std::size_t j = i + 1; j < fam.size(); ++j) {
          const double banded = grid_image_distance(emb, i, j);
          const double dense = wasserstein(emb.images[i], emb.images[j], p).distance;
          auto g = grid_assignment_graph(emb, i, j, emb.params.support_size);
          const double full = root_p(solve_sparse(g.graph).cost / static_cast<double>(g.graph.size()), p);
          EXPECT_NEAR(banded, dense, 1e-9 * std::max(1.0, dense));
          EXPECT_NEAR(full, dense, 1e-9 * std::max(1.0, dense));
          ++compared;
        }
    }
  }
  EXPECT_GT(compared, 100);
}

TEST(GridEmbedding, QuasiIsometryOnRandomFamilies) {
  harness::Rng rng(59);
  for (int t = 0; t < 15; ++t) {
    const auto fam = random_family(rng, 3, 3, {0, 1});
    for (double p : {1.5, 2.0, 3.0}) {
      const double eps = 0.2;
      const auto emb = diagrams_to_measures_quasi(fam, p, eps);
      const auto cert = certify_pairwise(emb, fam);
      EXPECT_TRUE(cert.pass);
      for (const auto& c : cert.pairs) {
        EXPECT_GE(c.image_dist, c.source_dist * (1 - 1e-9));
        EXPECT_LE(c.image_dist, c.source_dist + eps);
      }
    }
  }
}

TEST(GridEmbedding, RepeatedPointsArePerturbedWithinBudget) {
  const std::vector<PersistenceDiagram> fam{dg({{0.2, 0.8}, {0.2, 0.8}, {0.1, 0.3}}), dg({{0.2, 0.8}})};
  const double p = 2, eps = 0.3;
  const auto emb = diagrams_to_measures_quasi(fam, p, eps);
  EXPECT_EQ(emb.params.displaced, (std::vector<std::int64_t>{1, 0}));
  EXPECT_GT(emb.params.perturb_delta, 0.0);
  EXPECT_LE(emb.bounds.lower_slack[0], eps / 6 + 1e-15);
  const auto cert = certify_pairwise(emb, fam);
  EXPECT_TRUE(cert.pass);
  EXPECT_LE(cert.pairs[0].image_dist, cert.pairs[0].source_dist + eps);
}

// ---------------------------------------------------------------------------
// Certification and determinism

TEST(Certification, CorruptedImageFailsWithNamedPair) {
  const std::vector<PersistenceDiagram> fam{dg({{0, 2}}), dg({{1, 4}}), dg({{0, 1}})};
  auto emb = diagrams_to_measures_bilipschitz(fam, 2);
  EXPECT_TRUE(certify_pairwise(emb, fam).pass);
  emb.images[2] = dilate(emb.images[2], 50.0);
  const auto cert = certify_pairwise(emb, fam);
  EXPECT_FALSE(cert.pass);
  ASSERT_TRUE(cert.first_failure.has_value());
  EXPECT_EQ(cert.first_failure->second, 2u);
  EXPECT_LT(cert.min_margin, 0.0);
}

TEST(Certification, CountMismatchIsRejected) {
  const std::vector<PersistenceDiagram> fam{dg({{0, 2}}), dg({{1, 4}})};
  const auto emb = diagrams_to_measures_bilipschitz(fam, 2);
  EXPECT_THROW(certify_pairwise(emb, std::vector<PersistenceDiagram>{fam[0]}), InvalidArgument);
}

TEST(Determinism, IdenticalInputsGiveIdenticalParams) {
  harness::Rng rng(61);
  const auto fam = random_family(rng, 3, 3, {0, 1});
  EXPECT_EQ(diagrams_to_measures_quasi(fam, 2, 0.3).params, diagrams_to_measures_quasi(fam, 2, 0.3).params);
  EXPECT_EQ(diagrams_to_measures_bilipschitz(fam, 2).params, diagrams_to_measures_bilipschitz(fam, 2).params);
  const std::vector<DiscreteMeasure> ms{harness::gen_real_measure(rng, 3, {0, 1}),
                                        harness::gen_real_measure(rng, 3, {0, 1})};
  EXPECT_EQ(measures_to_diagrams_quasi(ms, 2, 0.1).params, measures_to_diagrams_quasi(ms, 2, 0.1).params);
}

TEST(ConstructionNames, DirectionsAndNames) {
  EXPECT_STREQ(construction_name(Construction::kMeasuresToDiagramsIsometric), "ot2pd-iso");
  EXPECT_STREQ(construction_direction(Construction::kMeasuresToDiagramsQuasi), "ot2pd");
  EXPECT_STREQ(construction_direction(Construction::kDiagramsToMeasuresBilipschitz), "pd2ot");
  EXPECT_STREQ(construction_name(Construction::kDiagramsToMeasuresQuasi), "pd2ot-quasi");
}
