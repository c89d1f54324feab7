#include <gtest/gtest.h>

#include "wpd/embeddings.hpp"
#include "wpd/error.hpp"
#include "wpd/io.hpp"

using namespace wpd;
using nlohmann::json;

TEST(Io, MeasureRoundTripKeepsRationalsExact) {
  const DiscreteMeasure m({{0, 0}, {1, 2}}, std::vector<Rational>{Rational(1, 3), Rational(2, 3)});
  const json j = io::measure_to_json(m);
  EXPECT_EQ(j["weights"][0], "1/3");
  const auto back = io::measure_from_json(j);
  EXPECT_TRUE(back.is_rational());
  EXPECT_EQ(back.rational_weights(), m.rational_weights());
  EXPECT_EQ(back.atoms(), m.atoms());
}

TEST(Io, RealWeightsStayReal) {
  const auto m = io::measure_from_json(json::parse(R"({"atoms": [[0,0],[1,1]], "weights": [0.25, 0.75]})"));
  EXPECT_FALSE(m.is_rational());
  EXPECT_EQ(m.weights()[1], 0.75);
}

TEST(Io, DiagramRoundTrip) {
  const PersistenceDiagram d({{0, 1}, {2, 5}});
  EXPECT_EQ(io::diagram_from_json(io::diagram_to_json(d)), d);
}

TEST(Io, SchemaErrors) {
  const json diagram = json::parse(R"({"points": [[0, 1]]})");
  const json measure = json::parse(R"({"atoms": [[0, 0]], "weights": ["1"]})");
  EXPECT_THROW(io::measure_from_json(diagram), InvalidArgument);
  EXPECT_THROW(io::diagram_from_json(measure), InvalidArgument);
  EXPECT_THROW(io::diagram_from_json(json::parse(R"({"points": [[0]]})")), InvalidArgument);
  EXPECT_THROW(io::diagram_from_json(json::parse(R"({"points": [[1, 0]]})")), InvalidArgument);
  EXPECT_THROW(io::measure_from_json(json::parse(R"({"atoms": [[0, 0]], "weights": [true]})")), InvalidArgument);
  EXPECT_THROW(io::measure_from_json(json::parse(R"({"atoms": [[0, 0]], "weights": ["1/2"]})")), InvalidArgument);
  EXPECT_THROW(io::read_json_file("/nonexistent/file.json"), InvalidArgument);
}

TEST(Io, MetricSpaceRoundTrip) {
  const FiniteMetricSpace s({{0, 1, 1}, {1, 0, 1}, {1, 1, 0}});
  EXPECT_EQ(io::metric_space_from_json(io::metric_space_to_json(s)).matrix(), s.matrix());
  EXPECT_THROW(io::metric_space_from_json(json::parse(R"({"n": 3, "dist": [[0]]})")), InvalidArgument);
}

TEST(Io, EmbeddingResultShape) {
  const std::vector<PersistenceDiagram> fam{PersistenceDiagram({{0, 2}}), PersistenceDiagram()};
  const auto emb = diagrams_to_measures_bilipschitz(fam, 2);
  const auto j = io::embedding_to_json(emb, certify_pairwise(emb, fam));
  EXPECT_EQ(j["direction"], "pd2ot");
  EXPECT_EQ(j["params"]["construction"], "pd2ot-bilip");
  EXPECT_EQ(j["images"].size(), 2u);
  ASSERT_EQ(j["certificates"].size(), 1u);
  for (const char* key : {"i", "j", "lower", "upper", "source_dist", "image_dist", "pass"})
    EXPECT_TRUE(j["certificates"][0].contains(key)) << key;
  EXPECT_EQ(j["pass"], true);
}

TEST(Io, CouplingShape) {
  const auto r = wasserstein(DiscreteMeasure::dirac({0, 0}),
                             DiscreteMeasure({{0, 0}, {2, 0}}, std::vector<Rational>{Rational(1, 2), Rational(1, 2)}), 1);
  const auto j = io::coupling_to_json(r.coupling);
  EXPECT_EQ(j["plan"].size(), 2u);
  EXPECT_EQ(j["plan"][0].size(), 3u);
  EXPECT_DOUBLE_EQ(j["cost"].get<double>(), 1.0);
}
