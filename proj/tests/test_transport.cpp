#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "wpd/error.hpp"
#include "wpd/harness/generators.hpp"
#include "wpd/transport.hpp"

using namespace wpd;

namespace {

DiscreteMeasure rat(std::vector<PlanePoint> atoms, std::vector<Rational> w) {
  return DiscreteMeasure(std::move(atoms), std::move(w));
}

const harness::BoundingBox kBox{-5, 5};

void expect_marginals(const TransportResult& r, const DiscreteMeasure& a, const DiscreteMeasure& b) {
  std::vector<double> row(a.size(), 0.0), col(b.size(), 0.0);
  for (const auto& e : r.coupling.plan) {
    row.at(e.source) += e.mass;
    col.at(e.target) += e.mass;
  }
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(row[i], a.weights()[i], 1e-9);
  for (std::size_t j = 0; j < b.size(); ++j) EXPECT_NEAR(col[j], b.weights()[j], 1e-9);
}

}  // namespace

TEST(DiscreteMeasureTest, Validation) {
  EXPECT_THROW(rat({}, {}), InvalidArgument);
  EXPECT_THROW(rat({{0, 0}}, {Rational(1, 2)}), InvalidArgument);
  EXPECT_THROW(rat({{0, 0}, {1, 1}}, {Rational(1), Rational(0)}), InvalidArgument);
  EXPECT_THROW(DiscreteMeasure({{0, 0}}, std::vector<double>{0.9}), InvalidArgument);
  EXPECT_THROW(DiscreteMeasure({{0, NAN}}, std::vector<double>{1.0}), InvalidArgument);
  EXPECT_NO_THROW(DiscreteMeasure({{0, 0}, {0, 0}}, std::vector<double>{0.5, 0.5}));
  EXPECT_NO_THROW(DiscreteMeasure({{0, 0}}, std::vector<double>{1.0 + 5e-13}));
}

TEST(Uniformize, Examples) {
  auto u = uniformize(rat({{0, 0}, {1, 0}}, {Rational(1, 2), Rational(1, 2)}));
  EXPECT_EQ(u.atoms, (std::vector<PlanePoint>{{0, 0}, {1, 0}}));
  u = uniformize(rat({{0, 0}, {5, 5}}, {Rational(2, 3), Rational(1, 3)}));
  EXPECT_EQ(u.atoms, (std::vector<PlanePoint>{{0, 0}, {0, 0}, {5, 5}}));
  u = uniformize(rat({{0, 0}, {1, 1}}, {Rational(3, 5), Rational(2, 5)}));
  EXPECT_EQ(u.atoms, (std::vector<PlanePoint>{{0, 0}, {0, 0}, {0, 0}, {1, 1}, {1, 1}}));
}

TEST(Uniformize, CapIsEnforced) {
  const auto m = rat({{0, 0}, {1, 1}}, {Rational(1, 1009), Rational(1008, 1009)});
  EXPECT_THROW(uniformize(m, 1000), CapacityError);
  EXPECT_EQ(uniformize(m, 2000).size(), 1009u);
}

TEST(WassersteinUniform, Examples) {
  const UniformMeasure a{{{0, 0}, {1, 0}}}, b{{{0, 1}, {1, 1}}};
  EXPECT_EQ(wasserstein_uniform(a, a, 2), 0.0);
  for (double p : {1.0, 1.5, 2.0, 3.0}) EXPECT_DOUBLE_EQ(wasserstein_uniform({{{0, 0}}}, {{{3, 4}}}, p), 4.0);
  EXPECT_DOUBLE_EQ(wasserstein_uniform(a, b, 2), 1.0);
  EXPECT_DOUBLE_EQ(oracle_wasserstein_uniform(a, b, 2), 1.0);
}

TEST(WassersteinUniform, SizeMismatchAsksForUniformization) {
  try {
    wasserstein_uniform({{{0, 0}}}, {{{0, 0}, {1, 1}}}, 1);
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("uniformize"), std::string::npos);
  }
}

TEST(Wasserstein, Examples) {
  const auto a = DiscreteMeasure::dirac({0, 0});
  const auto b = rat({{0, 0}, {2, 0}}, {Rational(1, 2), Rational(1, 2)});
  EXPECT_EQ(wasserstein(a, a, 1).distance, 0.0);
  EXPECT_DOUBLE_EQ(wasserstein(a, b, 1).distance, 1.0);
  EXPECT_DOUBLE_EQ(wasserstein(a, b, 2).distance, std::sqrt(2.0));
  const auto r = wasserstein(a, b, 2);
  expect_marginals(r, a, b);
  EXPECT_DOUBLE_EQ(r.coupling.cost, 2.0);
}

TEST(Wasserstein, RejectsOrderBelowOne) {
  const auto a = DiscreteMeasure::dirac({0, 0});
  EXPECT_THROW(wasserstein(a, a, 0.5), InvalidArgument);
  EXPECT_THROW(wasserstein(a, a, NAN), InvalidArgument);
}

TEST(Wasserstein, RealWeightsNeedExplicitApproximation) {
  const auto m = DiscreteMeasure({{0, 0}, {1, 0}}, std::vector<double>{1 / std::sqrt(2.0), 1 - 1 / std::sqrt(2.0)});
  EXPECT_THROW(wasserstein(m, m, 1), CapacityError);
  // Reals that are exact short fractions are snapped.
  const auto half = DiscreteMeasure({{0, 0}, {2, 0}}, std::vector<double>{0.5, 0.5});
  EXPECT_DOUBLE_EQ(wasserstein(DiscreteMeasure::dirac({0, 0}), half, 1).distance, 1.0);
}

TEST(Wasserstein, OracleAgreementOnRandomSmallInstances) {
  harness::Rng rng(101);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = harness::uniform_count(rng, 1, 7);
    const UniformMeasure a{harness::gen_atoms(rng, n, kBox)}, b{harness::gen_atoms(rng, n, kBox)};
    for (double p : {1.0, 1.5, 2.0, 3.0}) {
      const double o = oracle_wasserstein_uniform(a, b, p);
      EXPECT_NEAR(wasserstein_uniform(a, b, p), o, 1e-9 * o + 1e-12);
    }
  }
}

TEST(Wasserstein, MinCostFlowRouteAgreesWithAssignmentRoute) {
  harness::Rng rng(7);
  for (int t = 0; t < 200; ++t) {
    const auto a = harness::gen_measure(rng, 4, 12, kBox);
    const auto b = harness::gen_measure(rng, 5, 10, kBox);
    for (double p : {1.0, 2.0, 3.0}) {
      const auto exact = wasserstein(a, b, p);
      const auto flow = wasserstein_real(a, b, p);
      EXPECT_NEAR(exact.distance, flow.distance, 1e-9 * std::max(1.0, exact.distance));
      expect_marginals(exact, a, b);
      expect_marginals(flow, a, b);
    }
  }
}

TEST(Wasserstein, MetricAxiomsOnRandomTriples) {
  harness::Rng rng(23);
  for (int t = 0; t < 300; ++t) {
    const auto a = harness::gen_measure(rng, 4, 12, kBox);
    const auto b = harness::gen_measure(rng, 4, 12, kBox);
    const auto c = harness::gen_measure(rng, 4, 12, kBox);
    for (double p : {1.0, 1.5, 2.0}) {
      const double ab = wasserstein(a, b, p).distance, bc = wasserstein(b, c, p).distance;
      const double ac = wasserstein(a, c, p).distance;
      EXPECT_EQ(ab, wasserstein(b, a, p).distance);
      EXPECT_EQ(wasserstein(a, a, p).distance, 0.0);
      EXPECT_LE(ac, ab + bc + 1e-9);
    }
  }
}

TEST(Wasserstein, TranslationInvarianceAndDilationHomogeneity) {
  harness::Rng rng(31);
  for (int t = 0; t < 200; ++t) {
    const auto a = harness::gen_measure(rng, 4, 12, kBox);
    const auto b = harness::gen_measure(rng, 4, 12, kBox);
    const PlanePoint v{harness::uniform(rng, -10, 10), harness::uniform(rng, -10, 10)};
    const double r = harness::uniform(rng, 0.1, 10);
    for (double p : {1.0, 2.0, 3.0}) {
      const double d = wasserstein(a, b, p).distance;
      EXPECT_NEAR(wasserstein(translate(a, v), translate(b, v), p).distance, d, 1e-9 * std::max(1.0, d));
      EXPECT_NEAR(wasserstein(dilate(a, r), dilate(b, r), p).distance, r * d, 1e-9 * std::max(1.0, r * d));
    }
  }
}

TEST(Wasserstein, UniformizationPreservesDistance) {
  harness::Rng rng(37);
  for (int t = 0; t < 100; ++t) {
    const auto a = harness::gen_measure(rng, 3, 6, kBox);
    const auto b = harness::gen_measure(rng, 3, 6, kBox);
    const double d = wasserstein(a, b, 2).distance;
    EXPECT_NEAR(wasserstein_uniform(uniformize_to(a, 6), uniformize_to(b, 6), 2), d, 1e-9 * std::max(1.0, d));
  }
}

TEST(Dilate, Examples) {
  const auto m = DiscreteMeasure::dirac({1, 2});
  EXPECT_EQ(dilate(m, 1).atoms(), m.atoms());
  EXPECT_EQ(dilate(m, 3).atoms(), (std::vector<PlanePoint>{{3, 6}}));
  EXPECT_THROW(dilate(m, 0), InvalidArgument);
}

TEST(RationalApprox, Examples) {
  const auto half = DiscreteMeasure({{0, 0}, {1, 1}}, std::vector<double>{0.5, 0.5});
  auto r = rational_approx(half, 2, 1);
  EXPECT_EQ(r.measure.rational_weights(), (std::vector<Rational>{Rational(1, 2), Rational(1, 2)}));
  EXPECT_EQ(r.error_bound, 0.0);

  r = rational_approx(DiscreteMeasure({{0, 0}, {1, 1}}, std::vector<double>{0.6, 0.4}), 5, 1);
  EXPECT_EQ(r.measure.rational_weights(), (std::vector<Rational>{Rational(3, 5), Rational(2, 5)}));
  EXPECT_LT(r.error_bound, 1e-12);

  const double w = 1 / std::sqrt(2.0);
  const DiscreteMeasure irr({{0, 0}, {3, 1}}, std::vector<double>{w, 1 - w});
  r = rational_approx(irr, 100, 2);
  EXPECT_EQ(r.measure.rational_weights(), (std::vector<Rational>{Rational(71, 100), Rational(29, 100)}));
  const double actual = wasserstein_real(irr, r.measure, 2).distance;
  EXPECT_LE(actual, r.error_bound * (1 + 1e-9));
  EXPECT_GT(actual, 0.0);
}

TEST(RationalApprox, ExactRationalInputHasZeroError) {
  const auto m = rat({{0, 0}, {1, 1}, {2, 0}}, {Rational(1, 4), Rational(1, 4), Rational(1, 2)});
  const auto r = rational_approx(m, 8, 2);
  EXPECT_EQ(r.moved_mass, 0.0);
  EXPECT_EQ(r.error_bound, 0.0);
}

TEST(RationalApprox, CertificateBoundsTheTrueErrorOnRandomMeasures) {
  harness::Rng rng(41);
  for (int t = 0; t < 200; ++t) {
    const auto m = harness::gen_real_measure(rng, 5, kBox);
    const std::int64_t q = static_cast<std::int64_t>(harness::uniform_count(rng, 1, 200));
    for (double p : {1.0, 1.5, 2.0, 3.0}) {
      const auto r = rational_approx(m, q, p);
      Rational total(0);
      for (const auto& x : r.measure.rational_weights()) total = total + x;
      EXPECT_EQ(total, Rational(1));
      // Fine rational snapshot of m as an independent route.
      const auto fine = rational_approx(m, 1'000'000, p);
      const double actual = wasserstein_real(m, r.measure, p).distance;
      const double via_fine = wasserstein_real(fine.measure, r.measure, p).distance;
      EXPECT_LE(actual, r.error_bound * (1 + 1e-9) + 1e-12);
      EXPECT_LE(via_fine, r.error_bound + fine.error_bound + 1e-9);
    }
  }
}

TEST(RationalApprox, RejectsNonPositiveDenominator) {
  EXPECT_THROW(rational_approx(DiscreteMeasure::dirac({0, 0}), 0, 1), InvalidArgument);
}

TEST(SnapExact, RoundTripsShortFractionsOnly) {
  const DiscreteMeasure thirds({{0, 0}, {1, 1}, {2, 2}}, std::vector<double>{1.0 / 3, 1.0 / 3, 1 - 2.0 / 3});
  const auto s = snap_exact(thirds);
  EXPECT_TRUE(s.is_rational());
  EXPECT_EQ(s.denominator(), 3);
  const double w = 1 / std::sqrt(2.0);
  EXPECT_THROW(snap_exact(DiscreteMeasure({{0, 0}, {1, 1}}, std::vector<double>{w, 1 - w})), CapacityError);
}

TEST(OracleUniform, Examples) {
  EXPECT_DOUBLE_EQ(oracle_wasserstein_uniform({{{1, 2}}}, {{{4, 0}}}, 2), 3.0);
  const UniformMeasure a{{{0, 0}, {1, 1}, {5, 2}}};
  EXPECT_EQ(oracle_wasserstein_uniform(a, a, 1.5), 0.0);
}
