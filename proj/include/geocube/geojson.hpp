#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "geocube/cube.hpp"
#include "geocube/flowmap.hpp"
#include "geocube/risk.hpp"

namespace geocube {

using Json = nlohmann::json;

Json to_json(const CuboidFact& f);
Json to_json(const FlowMeasures& m);
// Polygon feature of the cell outline with the fact as properties.
Json cell_feature(const CellAddress& c, const CuboidFact& f, const GridPyramid& grid);
// FeatureCollection of LineStrings with properties {flow, flow_flu, bundle_id}.
Json lines_geojson(std::span<const LayoutPolyline> lines);
Json tree_geojson(const SpiralTree& tree);
Json risk_json(const RiskSurface& s, const GridPyramid& grid);

// Rings of a GeoJSON Polygon, given as a geometry, a Feature or a
// single-feature FeatureCollection. Throws Error(kInvalidArgument).
std::vector<std::vector<LonLat>> parse_polygon(const Json& geojson);

}  // namespace geocube
