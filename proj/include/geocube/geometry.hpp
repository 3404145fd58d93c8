#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Core>

namespace geocube {

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;

// (lon, lat) in degrees.
using LonLat = Eigen::Vector2d;

inline constexpr double kEarthRadiusKm = 6371.0088;
inline constexpr double kKmPerDegree = kEarthRadiusKm * std::numbers::pi / 180.0;

template <typename Scalar>
constexpr Scalar deg_to_rad(Scalar deg) {
  return deg * static_cast<Scalar>(std::numbers::pi / 180.0);
}

// Great-circle distance (haversine) between two lon/lat points in degrees.
template <typename Derived1, typename Derived2>
auto great_circle_km(const Eigen::MatrixBase<Derived1>& a, const Eigen::MatrixBase<Derived2>& b) {
  using Scalar = typename Derived1::Scalar;
  using std::asin;
  using std::cos;
  using std::min;
  using std::sin;
  using std::sqrt;
  const Scalar lat1 = deg_to_rad(a.y());
  const Scalar lat2 = deg_to_rad(b.y());
  const Scalar dlat = lat2 - lat1;
  const Scalar dlon = deg_to_rad(b.x() - a.x());
  const Scalar sdlat = sin(dlat / 2);
  const Scalar sdlon = sin(dlon / 2);
  const Scalar h = sdlat * sdlat + cos(lat1) * cos(lat2) * sdlon * sdlon;
  return Scalar(2 * kEarthRadiusKm) * asin(min(Scalar(1), sqrt(h)));
}

// Equirectangular projection about a fixed origin, in km. Adequate for
// layout geometry; not used for any measure.
class LocalProjection {
 public:
  explicit LocalProjection(const LonLat& origin)
      : origin_(origin), cos_lat_(std::cos(deg_to_rad(origin.y()))) {}

  Eigen::Vector2d to_plane(const LonLat& p) const {
    return {(p.x() - origin_.x()) * cos_lat_ * kKmPerDegree, (p.y() - origin_.y()) * kKmPerDegree};
  }

  LonLat to_lonlat(const Eigen::Vector2d& xy) const {
    return {origin_.x() + xy.x() / (cos_lat_ * kKmPerDegree), origin_.y() + xy.y() / kKmPerDegree};
  }

  const LonLat& origin() const { return origin_; }

 private:
  LonLat origin_;
  double cos_lat_;
};

}  // namespace geocube
