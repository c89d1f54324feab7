#pragma once

// JSON interchange for measures, diagrams, couplings, metric spaces and
// embedding results. Rational weights travel as "p/q" strings.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wpd/diagrams.hpp"
#include "wpd/embeddings.hpp"
#include "wpd/error.hpp"
#include "wpd/metric_core.hpp"
#include "wpd/transport.hpp"

namespace wpd::io {

using nlohmann::json;

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidArgument("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline PlanePoint point_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw InvalidArgument(std::string(what) + ": each point must be a [x, y] pair of numbers");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline json point_to_json(const PlanePoint& p) { return json::array({p.x, p.y}); }

// ---------------------------------------------------------------------------
// Measures

inline bool looks_like_measure(const json& j) { return j.is_object() && j.contains("atoms") && j.contains("weights"); }
inline bool looks_like_diagram(const json& j) { return j.is_object() && j.contains("points"); }

inline DiscreteMeasure measure_from_json(const json& j) {
  if (!looks_like_measure(j)) throw InvalidArgument("measure JSON needs \"atoms\" and \"weights\"");
  const auto& ja = j.at("atoms");
  const auto& jw = j.at("weights");
  if (!ja.is_array() || !jw.is_array()) throw InvalidArgument("measure JSON: atoms and weights must be arrays");
  std::vector<PlanePoint> atoms;
  for (const auto& a : ja) atoms.push_back(point_from_json(a, "measure atoms"));
  const bool all_strings = std::all_of(jw.begin(), jw.end(), [](const json& w) { return w.is_string(); });
  if (all_strings) {
    std::vector<Rational> w;
    for (const auto& x : jw) w.push_back(Rational::parse(x.get<std::string>()));
    return DiscreteMeasure(std::move(atoms), std::move(w));
  }
  std::vector<double> w;
  for (const auto& x : jw) {
    if (x.is_number())
      w.push_back(x.get<double>());
    else if (x.is_string())
      w.push_back(Rational::parse(x.get<std::string>()).to_double());
    else
      throw InvalidArgument("measure JSON: weights must be numbers or \"p/q\" strings");
  }
  return DiscreteMeasure(std::move(atoms), std::move(w));
}

inline json measure_to_json(const DiscreteMeasure& m) {
  json atoms = json::array(), weights = json::array();
  for (const auto& a : m.atoms()) atoms.push_back(point_to_json(a));
  if (m.is_rational()) {
    for (const auto& w : m.rational_weights()) weights.push_back(w.str());
  } else {
    for (double w : m.weights()) weights.push_back(w);
  }
  return {{"atoms", atoms}, {"weights", weights}};
}

// ---------------------------------------------------------------------------
// Diagrams

inline PersistenceDiagram diagram_from_json(const json& j) {
  if (!looks_like_diagram(j) || !j.at("points").is_array())
    throw InvalidArgument("diagram JSON needs a \"points\" array");
  std::vector<PlanePoint> pts;
  for (const auto& p : j.at("points")) pts.push_back(point_from_json(p, "diagram points"));
  return PersistenceDiagram(std::move(pts));
}

inline json diagram_to_json(const PersistenceDiagram& d) {
  json pts = json::array();
  for (const auto& p : d.points()) pts.push_back(point_to_json(p));
  return {{"points", pts}};
}

inline json matching_to_json(const PartialMatching& m) {
  json out = json::array();
  for (auto [i, j] : m.matched) out.push_back(json::array({i, j}));
  return out;
}

// ---------------------------------------------------------------------------
// Couplings and metric spaces

inline json coupling_to_json(const Coupling& c) {
  json plan = json::array();
  for (const auto& e : c.plan) plan.push_back(json::array({e.source, e.target, e.mass}));
  return {{"plan", plan}, {"cost", c.cost}};
}

inline FiniteMetricSpace metric_space_from_json(const json& j, bool validate = true) {
  if (!j.is_object() || !j.contains("n") || !j.contains("dist"))
    throw InvalidArgument("metric space JSON needs \"n\" and \"dist\"");
  const auto n = j.at("n").get<std::size_t>();
  auto dist = j.at("dist").get<std::vector<std::vector<double>>>();
  if (dist.size() != n) throw InvalidArgument("metric space JSON: dist has " + std::to_string(dist.size()) + " rows, n = " + std::to_string(n));
  return FiniteMetricSpace(std::move(dist), validate);
}

inline json metric_space_to_json(const FiniteMetricSpace& s) { return {{"n", s.size()}, {"dist", s.matrix()}}; }

// ---------------------------------------------------------------------------
// Embedding results

inline json params_to_json(Construction c, const EmbeddingParams& p) {
  json j = {{"construction", construction_name(c)}, {"p", p.p}};
  switch (c) {
    case Construction::kMeasuresToDiagramsQuasi:
      j["epsilon"] = p.epsilon;
      j["approx_denominator"] = p.approx_denominator;
      j["approx_error"] = p.approx_error;
      [[fallthrough]];
    case Construction::kMeasuresToDiagramsIsometric:
      j["N"] = p.common_denominator;
      j["atom_scale"] = p.atom_scale;
      j["translation"] = point_to_json(p.translation);
      j["scaled_diameter"] = p.scaled_diameter;
      j["max_below"] = p.max_below;
      break;
    case Construction::kDiagramsToMeasuresQuasi:
      j["epsilon"] = p.epsilon;
      j["s"] = p.grid_resolution;
      j["M"] = p.grid_max;
      j["m"] = p.grid_min;
      j["grid_epsilon"] = p.grid_epsilon;
      j["perturb_delta"] = p.perturb_delta;
      j["displaced"] = p.displaced;
      [[fallthrough]];
    case Construction::kDiagramsToMeasuresBilipschitz:
      j["N"] = p.point_count;
      j["support_size"] = p.support_size;
      j["dilation"] = p.dilation;
      break;
  }
  return j;
}

inline json certificates_to_json(const Certification& cert) {
  json out = json::array();
  for (const auto& c : cert.pairs)
    out.push_back({{"i", c.i},
                   {"j", c.j},
                   {"lower", c.lower},
                   {"upper", c.upper},
                   {"source_dist", c.source_dist},
                   {"image_dist", c.image_dist},
                   {"pass", c.pass}});
  return out;
}

template <class Image>
json embedding_to_json(const EmbeddingResult<Image>& emb, const Certification& cert) {
  json images = json::array();
  for (const auto& im : emb.images) {
    if constexpr (std::is_same_v<Image, PersistenceDiagram>)
      images.push_back(diagram_to_json(im));
    else
      images.push_back(measure_to_json(im));
  }
  return {{"direction", construction_direction(emb.construction)},
          {"params", params_to_json(emb.construction, emb.params)},
          {"images", images},
          {"certificates", certificates_to_json(cert)},
          {"pass", cert.pass}};
}

}  // namespace wpd::io
