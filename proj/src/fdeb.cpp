#include <algorithm>
#include <cmath>
#include <numeric>

#include "geocube/errors.hpp"
#include "geocube/flowmap.hpp"

namespace geocube {
namespace {

using Vec = Eigen::Vector2d;
using Path = std::vector<Vec>;

// Plane coordinates are rescaled so the display extent spans this many units;
// the step size is interpreted in these units.
constexpr double kExtentUnits = 1000.0;
constexpr double kEps = 1e-9;

Vec project_point(const Vec& v, const Vec& a, const Vec& b) {
  const Vec d = b - a;
  const double len2 = d.squaredNorm();
  if (len2 < kEps) return a;
  return a + d * (v - a).dot(d) / len2;
}

double visibility(const Vec& p0, const Vec& p1, const Vec& q0, const Vec& q1) {
  const Vec i0 = project_point(q0, p0, p1);
  const Vec i1 = project_point(q1, p0, p1);
  const double span = (i1 - i0).norm();
  if (span < kEps) return 0.0;
  const Vec pm = (p0 + p1) / 2;
  const Vec im = (i0 + i1) / 2;
  return std::max(0.0, 1.0 - 2.0 * (pm - im).norm() / span);
}

// Resample to `interior` equally spaced interior points along the path.
Path resample(const Path& path, int interior) {
  std::vector<double> cum(path.size(), 0.0);
  for (std::size_t i = 1; i < path.size(); ++i) cum[i] = cum[i - 1] + (path[i] - path[i - 1]).norm();
  const double total = cum.back();
  Path out;
  out.reserve(interior + 2);
  out.push_back(path.front());
  std::size_t seg = 1;
  for (int k = 1; k <= interior; ++k) {
    const double target = total * k / (interior + 1);
    while (seg + 1 < path.size() && cum[seg] < target) ++seg;
    const double len = cum[seg] - cum[seg - 1];
    const double t = len > 0 ? (target - cum[seg - 1]) / len : 0.0;
    out.push_back(path[seg - 1] + t * (path[seg] - path[seg - 1]));
  }
  out.push_back(path.back());
  return out;
}

LonLat midpoint(const LayoutPolyline& line) {
  const auto& pts = line.points;
  double total = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) total += great_circle_km(pts[i - 1], pts[i]);
  double acc = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double d = great_circle_km(pts[i - 1], pts[i]);
    if (acc + d >= total / 2 && d > 0) {
      const double t = (total / 2 - acc) / d;
      return pts[i - 1] + t * (pts[i] - pts[i - 1]);
    }
    acc += d;
  }
  return pts.front();
}

}  // namespace

double edge_compatibility(const Vec& p0, const Vec& p1, const Vec& q0, const Vec& q1) {
  const Vec p = p1 - p0;
  const Vec q = q1 - q0;
  const double lp = p.norm();
  const double lq = q.norm();
  if (lp < kEps || lq < kEps) return 0.0;
  const double angle = std::abs(p.dot(q) / (lp * lq));
  const double lavg = (lp + lq) / 2;
  const double scale = 2.0 / (lavg / std::min(lp, lq) + std::max(lp, lq) / lavg);
  const double position = lavg / (lavg + ((p0 + p1) / 2 - (q0 + q1) / 2).norm());
  const double vis = std::min(visibility(p0, p1, q0, q1), visibility(q0, q1, p0, p1));
  return angle * scale * position * vis;
}

std::vector<LayoutPolyline> fdeb_bundle(const std::vector<LayoutPolyline>& edges,
                                        const FdebParams& params) {
  if (params.cycles < 1 || params.initial_subdivisions < 1 || !(params.step_size > 0) ||
      params.iterations < 1 || !(params.compatibility_threshold > 0) || !(params.spring_constant > 0)) {
    throw Error(ErrorCode::kInvalidArgument, "bundling parameters must be positive");
  }
  for (const auto& e : edges) {
    if (e.points.size() < 2) throw Error(ErrorCode::kInvalidArgument, "edge needs at least 2 points");
  }
  std::vector<LayoutPolyline> out = edges;
  if (edges.empty()) return out;

  // Local frame centered on the extent of all endpoints.
  LonLat lo = edges.front().points.front(), hi = lo;
  for (const auto& e : edges) {
    for (const LonLat& p : {e.points.front(), e.points.back()}) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  }
  const LocalProjection proj((lo + hi) / 2);
  const Vec extent = proj.to_plane(hi) - proj.to_plane(lo);
  const double max_extent = extent.cwiseAbs().maxCoeff();
  const double scale = max_extent > kEps ? kExtentUnits / max_extent : 1.0;

  std::vector<std::size_t> active;
  std::vector<Path> paths(edges.size());
  std::vector<double> length(edges.size(), 0.0);
  double w_max = 0;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const Vec a = proj.to_plane(edges[i].points.front()) * scale;
    const Vec b = proj.to_plane(edges[i].points.back()) * scale;
    length[i] = (b - a).norm();
    if (length[i] < kEps) continue;  // degenerate: passed through straight
    active.push_back(i);
    paths[i] = resample({a, b}, params.initial_subdivisions);
    w_max = std::max(w_max, edges[i].weight);
  }

  struct Partner {
    std::size_t edge;
    bool reversed;
    double weight;
  };
  std::vector<std::vector<Partner>> partners(edges.size());
  for (std::size_t ai = 0; ai < active.size(); ++ai) {
    const std::size_t i = active[ai];
    const Vec p0 = paths[i].front(), p1 = paths[i].back();
    for (std::size_t aj = 0; aj < active.size(); ++aj) {
      const std::size_t j = active[aj];
      if (i == j) continue;
      const Vec q0 = paths[j].front(), q1 = paths[j].back();
      if (edge_compatibility(p0, p1, q0, q1) < params.compatibility_threshold) continue;
      const double w = w_max > 0 ? edges[j].weight / w_max : 1.0;
      partners[i].push_back({j, (p1 - p0).dot(q1 - q0) < 0, w});
    }
  }

  int subdivisions = params.initial_subdivisions;
  double step = params.step_size;
  double iterations = params.iterations;
  std::vector<Path> next = paths;
  for (int cycle = 0; cycle < params.cycles; ++cycle) {
    const int iters = std::max(1, static_cast<int>(std::lround(iterations)));
    for (int it = 0; it < iters; ++it) {
      for (std::size_t i : active) {
        const Path& p = paths[i];
        const double kp = params.spring_constant / (length[i] * (subdivisions + 1));
        for (int k = 1; k <= subdivisions; ++k) {
          const Vec spring = kp * ((p[k - 1] - p[k]) + (p[k + 1] - p[k]));
          Vec electro = Vec::Zero();
          for (const Partner& q : partners[i]) {
            const Vec& qk = paths[q.edge][q.reversed ? subdivisions + 1 - k : k];
            const Vec d = qk - p[k];
            const double dist = d.norm();
            if (dist > kEps) electro += q.weight * d / dist;
          }
          next[i][k] = p[k] + step * (spring + electro);
        }
      }
      for (std::size_t i : active) paths[i] = next[i];
    }
    if (cycle + 1 < params.cycles) {
      subdivisions *= 2;
      step /= 2;
      iterations *= 2.0 / 3.0;
      for (std::size_t i : active) {
        paths[i] = resample(paths[i], subdivisions);
        next[i] = paths[i];
      }
    }
  }

  for (std::size_t i : active) {
    auto& pts = out[i].points;
    const LonLat first = edges[i].points.front(), last = edges[i].points.back();
    pts.clear();
    for (const Vec& v : paths[i]) pts.push_back(proj.to_lonlat(v / scale));
    pts.front() = first;
    pts.back() = last;
  }
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (length[i] < kEps) out[i].points = {edges[i].points.front(), edges[i].points.back()};
  }
  return out;
}

double total_ink_km(std::span<const LayoutPolyline> lines) {
  double total = 0;
  for (const auto& l : lines) {
    for (std::size_t i = 1; i < l.points.size(); ++i) total += great_circle_km(l.points[i - 1], l.points[i]);
  }
  return total;
}

int corridor_count(std::span<const LayoutPolyline> lines, double tolerance_km, std::vector<int>* assign) {
  const std::size_t n = lines.size();
  std::vector<LonLat> mids;
  mids.reserve(n);
  for (const auto& l : lines) mids.push_back(midpoint(l));
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (great_circle_km(mids[i], mids[j]) <= tolerance_km) parent[find(i)] = find(j);
    }
  }
  std::vector<int> id(n, -1);
  int count = 0;
  std::vector<int> label(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    if (label[r] < 0) label[r] = count++;
    id[i] = label[r];
  }
  if (assign) *assign = std::move(id);
  return count;
}

}  // namespace geocube
