#include "geocube/geojson.hpp"

#include <cmath>

#include "geocube/errors.hpp"

namespace geocube {
namespace {

Json position(const LonLat& p) { return Json::array({p.x(), p.y()}); }

Json line_feature(const LayoutPolyline& l) {
  Json coords = Json::array();
  for (const auto& p : l.points) coords.push_back(position(p));
  Json props = {{"flow", l.weight}, {"flow_flu", l.weight_flu}};
  props["bundle_id"] = l.bundle_id >= 0 ? Json(l.bundle_id) : Json(nullptr);
  return {{"type", "Feature"},
          {"geometry", {{"type", "LineString"}, {"coordinates", coords}}},
          {"properties", props}};
}

}  // namespace

Json to_json(const CuboidFact& f) {
  Json j = {{"R", f.R}, {"V", f.V}, {"A", f.A}, {"O", f.O}, {"I", f.I}, {"V_flu", f.V_flu}};
  j["S"] = f.has_centroid() ? position(f.S) : Json(nullptr);
  return j;
}

Json to_json(const FlowMeasures& m) {
  return {{"F", m.F}, {"F_flu", m.F_flu}, {"F_migration", m.F_migration}};
}

Json cell_feature(const CellAddress& c, const CuboidFact& f, const GridPyramid& grid) {
  const BoundingBox b = grid.cell_bounds(c);
  Json ring = Json::array({position({b.lon_min, b.lat_min}), position({b.lon_max, b.lat_min}),
                           position({b.lon_max, b.lat_max}), position({b.lon_min, b.lat_max}),
                           position({b.lon_min, b.lat_min})});
  Json props = to_json(f);
  props["cell"] = c.to_string();
  return {{"type", "Feature"},
          {"geometry", {{"type", "Polygon"}, {"coordinates", Json::array({ring})}}},
          {"properties", props}};
}

Json lines_geojson(std::span<const LayoutPolyline> lines) {
  Json features = Json::array();
  for (const auto& l : lines) features.push_back(line_feature(l));
  return {{"type", "FeatureCollection"}, {"features", features}};
}

Json tree_geojson(const SpiralTree& tree) {
  Json out = lines_geojson(tree.edges);
  for (std::size_t i = 0; i < tree.edges.size(); ++i) {
    const auto& node = tree.nodes[tree.edges[i].edge];
    auto& props = out["features"][i]["properties"];
    props["parent"] = node.parent;
    props["node"] = tree.edges[i].edge;
    props["kind"] = node.kind == SpiralTree::Kind::kJoin ? "join" : "terminal";
  }
  out["root_outflow"] = tree.root_outflow();
  return out;
}

Json risk_json(const RiskSurface& s, const GridPyramid& grid) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < s.values.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < s.values.cols(); ++j) row.push_back(s.values(i, j));
    rows.push_back(std::move(row));
  }
  return {{"level", s.level},
          {"col0", s.col0},
          {"row0", s.row0},
          {"rows", s.values.rows()},
          {"cols", s.values.cols()},
          {"cell_size_deg", grid.cell_size_deg(s.level)},
          {"units", "points per km^2"},
          {"mass", s.mass(grid)},
          {"values", rows}};
}

std::vector<std::vector<LonLat>> parse_polygon(const Json& g) {
  auto fail = [](const std::string& why) { return Error(ErrorCode::kInvalidArgument, "bad polygon: " + why); };
  if (!g.is_object() || !g.contains("type")) throw fail("not a GeoJSON object");
  const std::string type = g["type"].get<std::string>();
  if (type == "FeatureCollection") {
    if (!g.contains("features") || g["features"].size() != 1) throw fail("expected exactly one feature");
    return parse_polygon(g["features"][0]);
  }
  if (type == "Feature") {
    if (!g.contains("geometry")) throw fail("feature has no geometry");
    return parse_polygon(g["geometry"]);
  }
  if (type != "Polygon") throw fail("geometry type " + type + " is not Polygon");
  if (!g.contains("coordinates") || !g["coordinates"].is_array()) throw fail("no coordinates");
  std::vector<std::vector<LonLat>> rings;
  for (const auto& ring : g["coordinates"]) {
    std::vector<LonLat> pts;
    for (const auto& p : ring) {
      if (!p.is_array() || p.size() < 2 || !p[0].is_number() || !p[1].is_number()) throw fail("bad position");
      pts.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    if (pts.size() < 4) throw fail("ring needs at least 4 positions");
    rings.push_back(std::move(pts));
  }
  if (rings.empty()) throw fail("no rings");
  return rings;
}

}  // namespace geocube
