#include "geocube/risk.hpp"

#include <algorithm>
#include <cmath>

#include "geocube/errors.hpp"

namespace geocube {
namespace {
constexpr double kSupport = 4.0;
}

double RiskSurface::at(int col, int row) const {
  const int j = col - col0;
  const int i = row - row0;
  if (i < 0 || j < 0 || i >= values.rows() || j >= values.cols()) return 0.0;
  return values(i, j);
}

double RiskSurface::mass(const GridPyramid& grid) const {
  double m = 0;
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    const double area = grid.cell_area_km2({level, col0, row0 + static_cast<int>(i)});
    m += values.row(i).sum() * area;
  }
  return m;
}

CellAddress RiskSurface::argmax() const {
  if (values.size() == 0) return {level, col0, row0};
  Eigen::Index i = 0;
  Eigen::Index j = 0;
  values.maxCoeff(&i, &j);
  return {level, col0 + static_cast<int>(j), row0 + static_cast<int>(i)};
}

RiskSurface flu_risk_surface(std::span<const LonLat> points, double bandwidth_km, int level,
                             const GridPyramid& grid) {
  if (!(bandwidth_km > 0)) throw Error(ErrorCode::kInvalidArgument, "bandwidth_km must be positive");
  if (level < 1 || level > grid.levels()) throw Error(ErrorCode::kInvalidArgument, "level out of range");
  RiskSurface out;
  out.level = level;
  if (points.empty()) {
    out.values = Eigen::MatrixXd::Zero(0, 0);
    return out;
  }

  const double reach_km = kSupport * bandwidth_km;
  const double cell = grid.cell_size_deg(level);
  const auto& bb = grid.bbox();
  // Cell block covering every point's kernel support.
  auto col_of = [&](double lon) {
    return std::clamp(static_cast<int>(std::floor((lon - bb.lon_min) / cell)), 0, grid.cols(level) - 1);
  };
  auto row_of = [&](double lat) {
    return std::clamp(static_cast<int>(std::floor((lat - bb.lat_min) / cell)), 0, grid.rows(level) - 1);
  };
  auto lon_reach = [&](double lat) {
    const double c = std::max(std::cos(deg_to_rad(std::min(std::abs(lat) + reach_km / kKmPerDegree, 89.0))), 1e-6);
    return reach_km / (kKmPerDegree * c);
  };
  const double lat_reach = reach_km / kKmPerDegree;
  int c0 = grid.cols(level), c1 = -1, r0 = grid.rows(level), r1 = -1;
  for (const auto& p : points) {
    c0 = std::min(c0, col_of(p.x() - lon_reach(p.y())));
    c1 = std::max(c1, col_of(p.x() + lon_reach(p.y())));
    r0 = std::min(r0, row_of(p.y() - lat_reach));
    r1 = std::max(r1, row_of(p.y() + lat_reach));
  }
  out.col0 = c0;
  out.row0 = r0;
  out.values = Eigen::MatrixXd::Zero(r1 - r0 + 1, c1 - c0 + 1);

  const double norm = 1.0 / (2.0 * std::numbers::pi * bandwidth_km * bandwidth_km);
  const double inv2h2 = 1.0 / (2.0 * bandwidth_km * bandwidth_km);
  for (const auto& p : points) {
    const int pc0 = col_of(p.x() - lon_reach(p.y())), pc1 = col_of(p.x() + lon_reach(p.y()));
    const int pr0 = row_of(p.y() - lat_reach), pr1 = row_of(p.y() + lat_reach);
    for (int row = pr0; row <= pr1; ++row) {
      for (int col = pc0; col <= pc1; ++col) {
        const double d = great_circle_km(p, grid.cell_center({level, col, row}));
        if (d > reach_km) continue;
        out.values(row - r0, col - c0) += norm * std::exp(-d * d * inv2h2);
      }
    }
  }
  return out;
}

}  // namespace geocube
