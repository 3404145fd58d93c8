#include "geocube/grid.hpp"

#include <charconv>
#include <cmath>
#include <vector>

#include "geocube/errors.hpp"

namespace geocube {

std::string_view to_string(Group g) { return g == Group::kIli ? "ili" : "all"; }

Group parse_group(std::string_view text) {
  if (text == "all" || text.empty()) return Group::kAll;
  if (text == "ili") return Group::kIli;
  throw Error(ErrorCode::kInvalidArgument, "unknown group '" + std::string(text) + "'");
}

std::string CellAddress::to_string() const {
  return "L" + std::to_string(level) + ":" + std::to_string(col) + ":" + std::to_string(row);
}

CellAddress CellAddress::parse(std::string_view text) {
  auto bad = [&] {
    return Error(ErrorCode::kInvalidArgument, "bad cell address '" + std::string(text) + "'");
  };
  if (text.size() < 6 || text[0] != 'L') throw bad();
  int parts[3];
  const char* p = text.data() + 1;
  const char* end = text.data() + text.size();
  for (int i = 0; i < 3; ++i) {
    auto [next, ec] = std::from_chars(p, end, parts[i]);
    if (ec != std::errc{}) throw bad();
    p = next;
    if (i < 2) {
      if (p == end || *p != ':') throw bad();
      ++p;
    }
  }
  if (p != end) throw bad();
  return {parts[0], parts[1], parts[2]};
}

std::string IntervalAddress::to_string() const {
  return "T" + std::to_string(level) + ":" + std::to_string(index);
}

Timestamp default_epoch() { return parse_iso8601("2014-01-01T00:00:00Z"); }

GridPyramid::GridPyramid()
    : GridPyramid(kStudyArea, kBaseCellDegrees, kSpatialLevels, kTimeLevels, default_epoch()) {}

GridPyramid::GridPyramid(const BoundingBox& bbox, double base_cell_deg, int levels,
                         int time_levels, Timestamp epoch)
    : bbox_(bbox),
      base_cell_deg_(base_cell_deg),
      levels_(levels),
      time_levels_(time_levels),
      base_cols_(static_cast<int>(std::lround((bbox.lon_max - bbox.lon_min) / base_cell_deg))),
      base_rows_(static_cast<int>(std::lround((bbox.lat_max - bbox.lat_min) / base_cell_deg))),
      epoch_(epoch) {
  const int top = 1 << (levels - 1);
  if (levels < 1 || levels > 14 || time_levels < 1 || time_levels > 30 || base_cols_ <= 0 ||
      base_rows_ <= 0 || base_cols_ % top != 0 || base_rows_ % top != 0 || base_cols_ >= (1 << 14) ||
      base_rows_ >= (1 << 14)) {
    throw Error(ErrorCode::kInvalidArgument, "grid dimensions are not dyadic for the level count");
  }
}

bool GridPyramid::valid(const CellAddress& c) const {
  return c.level >= 1 && c.level <= levels_ && c.col >= 0 && c.row >= 0 && c.col < cols(c.level) &&
         c.row < rows(c.level);
}

CellAddress GridPyramid::cell(double lon, double lat, int level) const {
  if (!in_bounds(lon, lat) || !std::isfinite(lon) || !std::isfinite(lat)) {
    throw Error(ErrorCode::kOutOfBounds, "coordinate outside study area");
  }
  if (level < 1 || level > levels_) throw Error(ErrorCode::kInvalidArgument, "level out of range");
  // Base index first, then shift: nesting across levels holds by construction.
  int col = static_cast<int>(std::floor((lon - bbox_.lon_min) / base_cell_deg_));
  int row = static_cast<int>(std::floor((lat - bbox_.lat_min) / base_cell_deg_));
  col = std::min(std::max(col, 0), base_cols_ - 1);
  row = std::min(std::max(row, 0), base_rows_ - 1);
  return CellAddress{1, col, row}.ancestor(level);
}

BoundingBox GridPyramid::cell_bounds(const CellAddress& c) const {
  const double size = cell_size_deg(c.level);
  return {bbox_.lon_min + c.col * size, bbox_.lon_min + (c.col + 1) * size,
          bbox_.lat_min + c.row * size, bbox_.lat_min + (c.row + 1) * size};
}

LonLat GridPyramid::cell_center(const CellAddress& c) const {
  const double size = cell_size_deg(c.level);
  return {bbox_.lon_min + (c.col + 0.5) * size, bbox_.lat_min + (c.row + 0.5) * size};
}

double GridPyramid::cell_area_km2(const CellAddress& c) const {
  const BoundingBox b = cell_bounds(c);
  const double r2 = kEarthRadiusKm * kEarthRadiusKm;
  return r2 * deg_to_rad(b.lon_max - b.lon_min) *
         (std::sin(deg_to_rad(b.lat_max)) - std::sin(deg_to_rad(b.lat_min)));
}

std::int64_t GridPyramid::hour_index(Timestamp t) const {
  const std::int64_t s = (t - epoch_).count();
  return s >= 0 ? s / kSecondsPerHour : -((-s + kSecondsPerHour - 1) / kSecondsPerHour);
}

IntervalAddress GridPyramid::interval(Timestamp t, int t_level) const {
  return IntervalAddress{1, hour_index(t)}.ancestor(t_level);
}

Timestamp GridPyramid::interval_start(const IntervalAddress& iv) const {
  return epoch_ + std::chrono::seconds{(iv.index << (iv.level - 1)) * kSecondsPerHour};
}

Timestamp GridPyramid::interval_end(const IntervalAddress& iv) const {
  return epoch_ + std::chrono::seconds{((iv.index + 1) << (iv.level - 1)) * kSecondsPerHour};
}

}  // namespace geocube
