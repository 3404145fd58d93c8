#pragma once

#include <span>

#include <Eigen/Core>

#include "geocube/grid.hpp"

namespace geocube {

// Density (points per km^2) on a rectangular block of level-`level` cells.
// values(i, j) is the cell at (col0 + j, row0 + i); cells outside the block are zero.
struct RiskSurface {
  int level = 1;
  int col0 = 0;
  int row0 = 0;
  Eigen::MatrixXd values;

  double at(int col, int row) const;
  // Sum of density x cell area; estimates the number of points.
  double mass(const GridPyramid& grid) const;
  CellAddress argmax() const;
};

// Gaussian kernel density of the points (lon/lat) evaluated at cell centers.
// The kernel is truncated at 4 bandwidths. Throws Error(kInvalidArgument)
// unless bandwidth_km > 0.
RiskSurface flu_risk_surface(std::span<const LonLat> points, double bandwidth_km, int level,
                             const GridPyramid& grid);

}  // namespace geocube
