#pragma once

#include <cstdint>
#include <span>
#include <unordered_set>
#include <vector>

#include "geocube/grid.hpp"

namespace geocube {

// A set of base cells held as a normalized quadtree: the maximal aligned
// cells fully inside the region ("pieces"), plus the ancestors of pieces that
// are only partly covered.
class Region {
 public:
  enum class Coverage { kOutside, kPartial, kInside };

  // Union of cells at any levels. Throws Error(kNotFound) for cells off the grid.
  static Region from_cells(std::span<const CellAddress> cells, const GridPyramid& grid);
  // Base cells whose centers lie in the polygon (boundary included). The first
  // ring is the shell, any further rings are holes. Coordinates are lon/lat.
  static Region from_polygon(const std::vector<std::vector<LonLat>>& rings,
                             const GridPyramid& grid);
  static Region whole(const GridPyramid& grid);

  Coverage classify(const CellAddress& c) const;
  const std::vector<CellAddress>& pieces() const { return pieces_; }
  bool empty() const { return pieces_.empty(); }
  // Number of base cells covered.
  std::int64_t base_cell_count() const;

 private:
  explicit Region(int levels) : inside_(levels), partial_(levels) {}
  void add_piece(const CellAddress& c);
  void finish();

  static std::uint32_t key(const CellAddress& c) {
    return static_cast<std::uint32_t>(c.col) << 14 | static_cast<std::uint32_t>(c.row);
  }

  std::vector<std::unordered_set<std::uint32_t>> inside_;   // pieces per level
  std::vector<std::unordered_set<std::uint32_t>> partial_;  // strict ancestors of pieces
  std::vector<CellAddress> pieces_;
};

}  // namespace geocube
