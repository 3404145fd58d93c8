#include "geocube/region.hpp"

#include <algorithm>

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/box.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>

#include "geocube/errors.hpp"

namespace geocube {
namespace bg = boost::geometry;
namespace {

using Point = bg::model::d2::point_xy<double>;
using Box = bg::model::box<Point>;
using Polygon = bg::model::polygon<Point>;

// Box spanned by the base-cell centers inside c.
Box center_hull(const CellAddress& c, const GridPyramid& grid) {
  const double w = grid.base_cell_deg();
  const std::int64_t n = std::int64_t{1} << (c.level - 1);
  const auto& b = grid.bbox();
  const double x0 = b.lon_min + (static_cast<double>(c.col * n) + 0.5) * w;
  const double y0 = b.lat_min + (static_cast<double>(c.row * n) + 0.5) * w;
  const double span = static_cast<double>(n - 1) * w;
  return Box(Point(x0, y0), Point(x0 + span, y0 + span));
}

}  // namespace

void Region::add_piece(const CellAddress& c) {
  inside_[c.level - 1].insert(key(c));
}

void Region::finish() {
  const int levels = static_cast<int>(inside_.size());
  // Drop pieces already covered by a coarser piece.
  for (int l = 1; l < levels; ++l) {
    auto& set = inside_[l - 1];
    for (auto it = set.begin(); it != set.end();) {
      const CellAddress c{l, static_cast<int>(*it >> 14), static_cast<int>(*it & 0x3FFF)};
      bool covered = false;
      for (int up = l + 1; up <= levels && !covered; ++up) {
        covered = inside_[up - 1].count(key(c.ancestor(up))) > 0;
      }
      it = covered ? set.erase(it) : std::next(it);
    }
  }
  // Merge complete sibling quartets bottom-up.
  for (int l = 1; l < levels; ++l) {
    std::vector<std::uint32_t> parents;
    for (std::uint32_t k : inside_[l - 1]) {
      const CellAddress c{l, static_cast<int>(k >> 14), static_cast<int>(k & 0x3FFF)};
      if ((c.col & 1) == 0 && (c.row & 1) == 0) {
        auto& set = inside_[l - 1];
        if (set.count(key({l, c.col + 1, c.row})) && set.count(key({l, c.col, c.row + 1})) &&
            set.count(key({l, c.col + 1, c.row + 1}))) {
          parents.push_back(key(c.parent()));
        }
      }
    }
    for (std::uint32_t pk : parents) {
      const CellAddress p{l + 1, static_cast<int>(pk >> 14), static_cast<int>(pk & 0x3FFF)};
      for (int dc = 0; dc < 2; ++dc) {
        for (int dr = 0; dr < 2; ++dr) inside_[l - 1].erase(key({l, 2 * p.col + dc, 2 * p.row + dr}));
      }
      inside_[l].insert(pk);
    }
  }
  pieces_.clear();
  for (auto& p : partial_) p.clear();
  for (int l = 1; l <= levels; ++l) {
    for (std::uint32_t k : inside_[l - 1]) {
      const CellAddress c{l, static_cast<int>(k >> 14), static_cast<int>(k & 0x3FFF)};
      pieces_.push_back(c);
      for (int up = l + 1; up <= levels; ++up) partial_[up - 1].insert(key(c.ancestor(up)));
    }
  }
  std::sort(pieces_.begin(), pieces_.end());
}

Region Region::from_cells(std::span<const CellAddress> cells, const GridPyramid& grid) {
  Region r(grid.levels());
  for (const auto& c : cells) {
    if (!grid.valid(c)) throw Error(ErrorCode::kNotFound, "unknown cell " + c.to_string());
    r.add_piece(c);
  }
  r.finish();
  return r;
}

Region Region::from_polygon(const std::vector<std::vector<LonLat>>& rings,
                            const GridPyramid& grid) {
  if (rings.empty() || rings.front().size() < 3) {
    throw Error(ErrorCode::kInvalidArgument, "polygon needs a ring of at least 3 positions");
  }
  Polygon poly;
  for (std::size_t i = 0; i < rings.size(); ++i) {
    auto& ring = i == 0 ? poly.outer() : poly.inners().emplace_back();
    for (const auto& p : rings[i]) ring.emplace_back(p.x(), p.y());
  }
  bg::correct(poly);
  std::string reason;
  if (!bg::is_valid(poly, reason)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid polygon: " + reason);
  }
  Box env;
  bg::envelope(poly, env);

  Region r(grid.levels());
  const int top = grid.levels();
  std::vector<CellAddress> stack;
  for (int col = 0; col < grid.cols(top); ++col) {
    for (int row = 0; row < grid.rows(top); ++row) stack.push_back({top, col, row});
  }
  while (!stack.empty()) {
    const CellAddress c = stack.back();
    stack.pop_back();
    const Box hull = center_hull(c, grid);
    if (bg::disjoint(hull, env) || bg::disjoint(hull, poly)) continue;
    if (c.level == 1) {
      if (bg::covered_by(hull.min_corner(), poly)) r.add_piece(c);
      continue;
    }
    Polygon hull_poly;
    bg::convert(hull, hull_poly);
    if (bg::covered_by(hull_poly, poly)) {
      r.add_piece(c);
      continue;
    }
    for (int dc = 0; dc < 2; ++dc) {
      for (int dr = 0; dr < 2; ++dr) stack.push_back({c.level - 1, 2 * c.col + dc, 2 * c.row + dr});
    }
  }
  r.finish();
  return r;
}

Region Region::whole(const GridPyramid& grid) {
  Region r(grid.levels());
  const int top = grid.levels();
  for (int col = 0; col < grid.cols(top); ++col) {
    for (int row = 0; row < grid.rows(top); ++row) r.add_piece({top, col, row});
  }
  r.finish();
  return r;
}

Region::Coverage Region::classify(const CellAddress& c) const {
  const int levels = static_cast<int>(inside_.size());
  for (int up = c.level; up <= levels; ++up) {
    if (inside_[up - 1].count(key(c.ancestor(up)))) return Coverage::kInside;
  }
  return partial_[c.level - 1].count(key(c)) ? Coverage::kPartial : Coverage::kOutside;
}

std::int64_t Region::base_cell_count() const {
  std::int64_t n = 0;
  for (const auto& c : pieces_) n += std::int64_t{1} << (2 * (c.level - 1));
  return n;
}

}  // namespace geocube
