#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include "geocube/geometry.hpp"
#include "geocube/time.hpp"

namespace geocube {

struct BoundingBox {
  double lon_min = 0;
  double lon_max = 0;
  double lat_min = 0;
  double lat_max = 0;

  bool contains(double lon, double lat) const {
    return lon >= lon_min && lon <= lon_max && lat >= lat_min && lat <= lat_max;
  }
  bool intersects(const BoundingBox& o) const {
    return lon_min <= o.lon_max && o.lon_min <= lon_max && lat_min <= o.lat_max &&
           o.lat_min <= lat_max;
  }
};

// North America study area.
inline constexpr BoundingBox kStudyArea{-167.276413, -56.347517, 5.499550, 82.296478};
inline constexpr double kBaseCellDegrees = 0.008333;
inline constexpr int kSpatialLevels = 10;
inline constexpr int kTimeLevels = 10;

enum class Group : std::uint8_t { kAll = 0, kIli = 1 };
inline constexpr int kGroupCount = 2;
std::string_view to_string(Group g);
Group parse_group(std::string_view text);

// Grid cell at a pyramid level; serialized as "L{level}:{col}:{row}".
struct CellAddress {
  int level = 1;
  int col = 0;
  int row = 0;

  CellAddress parent() const { return {level + 1, col >> 1, row >> 1}; }
  CellAddress ancestor(int at_level) const {
    const int shift = at_level - level;
    return {at_level, col >> shift, row >> shift};
  }
  std::string to_string() const;
  static CellAddress parse(std::string_view text);

  auto operator<=>(const CellAddress&) const = default;
};

// Dyadic temporal interval: level 1 = 1 hour, level t = 2^(t-1) hours, index from epoch.
struct IntervalAddress {
  int level = 1;
  std::int64_t index = 0;

  IntervalAddress parent() const { return {level + 1, index >> 1}; }
  IntervalAddress ancestor(int at_level) const { return {at_level, index >> (at_level - level)}; }
  std::string to_string() const;

  auto operator<=>(const IntervalAddress&) const = default;
};

struct CuboidKey {
  CellAddress cell;
  IntervalAddress interval;
  Group group = Group::kAll;

  auto operator<=>(const CuboidKey&) const = default;
};

// Within one level table the level and group are fixed, so a cuboid packs into
// 64 bits ordered by interval first: | t_index+2^35 : 36 | col : 14 | row : 14 |.
using PackedCuboid = std::uint64_t;

inline constexpr std::int64_t kPackedTimeOffset = std::int64_t{1} << 35;

constexpr PackedCuboid pack_cuboid(int col, int row, std::int64_t t_index) {
  return (static_cast<std::uint64_t>(t_index + kPackedTimeOffset) << 28) |
         (static_cast<std::uint64_t>(col) << 14) | static_cast<std::uint64_t>(row);
}
constexpr int packed_col(PackedCuboid k) { return static_cast<int>((k >> 14) & 0x3FFF); }
constexpr int packed_row(PackedCuboid k) { return static_cast<int>(k & 0x3FFF); }
constexpr std::int64_t packed_interval(PackedCuboid k) {
  return static_cast<std::int64_t>(k >> 28) - kPackedTimeOffset;
}
constexpr PackedCuboid packed_parent(PackedCuboid k, bool spatial) {
  return spatial ? pack_cuboid(packed_col(k) >> 1, packed_row(k) >> 1, packed_interval(k))
                 : pack_cuboid(packed_col(k), packed_row(k), packed_interval(k) >> 1);
}
// Cell-only part (col/row bits), handy for "same cell" tests.
constexpr std::uint32_t packed_cell(PackedCuboid k) { return static_cast<std::uint32_t>(k & 0xFFFFFFF); }

// The dyadic space/time hierarchy. Level-1 cells are base_cell_deg wide; every
// level doubles the cell size. Temporal level 1 is one hour from the epoch.
class GridPyramid {
 public:
  GridPyramid();
  GridPyramid(const BoundingBox& bbox, double base_cell_deg, int levels, int time_levels,
              Timestamp epoch);

  const BoundingBox& bbox() const { return bbox_; }
  double base_cell_deg() const { return base_cell_deg_; }
  int levels() const { return levels_; }
  int time_levels() const { return time_levels_; }
  Timestamp epoch() const { return epoch_; }

  int cols(int level) const { return base_cols_ >> (level - 1); }
  int rows(int level) const { return base_rows_ >> (level - 1); }
  double cell_size_deg(int level) const { return base_cell_deg_ * static_cast<double>(1 << (level - 1)); }

  bool in_bounds(double lon, double lat) const { return bbox_.contains(lon, lat); }
  bool valid(const CellAddress& c) const;

  // Throws Error(kOutOfBounds) outside the bbox.
  CellAddress cell(double lon, double lat, int level) const;
  CellAddress cell(const LonLat& p, int level) const { return cell(p.x(), p.y(), level); }

  BoundingBox cell_bounds(const CellAddress& c) const;
  LonLat cell_center(const CellAddress& c) const;
  // Cell area on the sphere, km^2.
  double cell_area_km2(const CellAddress& c) const;

  std::int64_t hour_index(Timestamp t) const;
  IntervalAddress interval(Timestamp t, int t_level) const;
  Timestamp interval_start(const IntervalAddress& iv) const;
  Timestamp interval_end(const IntervalAddress& iv) const;

 private:
  BoundingBox bbox_;
  double base_cell_deg_;
  int levels_;
  int time_levels_;
  int base_cols_;
  int base_rows_;
  Timestamp epoch_;
};

Timestamp default_epoch();

}  // namespace geocube
