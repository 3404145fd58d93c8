#include <algorithm>
#include <cmath>
#include <numbers>

#include "geocube/errors.hpp"
#include "geocube/flowmap.hpp"

namespace geocube {
namespace {

using Vec = Eigen::Vector2d;
constexpr double kPi = std::numbers::pi;
constexpr double kCoincidentKm = 1e-6;
constexpr int kArcSamples = 12;

double wrap(double a) { return std::remainder(a, 2 * kPi); }
double cross(const Vec& a, const Vec& b) { return a.x() * b.y() - a.y() * b.x(); }

struct Polar {
  double log_r;
  double theta;  // may be unwrapped relative to a neighbor
};

Vec to_vec(const Polar& p) { return std::exp(p.log_r) * Vec(std::cos(p.theta), std::sin(p.theta)); }

// Points on the log spiral from a to b (ln r is linear in theta along a
// spiral, so interpolating both is exact). Excludes a, includes b.
void append_arc(std::vector<Vec>& out, const Polar& a, const Polar& b) {
  for (int i = 1; i <= kArcSamples; ++i) {
    const double t = static_cast<double>(i) / kArcSamples;
    out.push_back(to_vec({a.log_r + t * (b.log_r - a.log_r), a.theta + t * (b.theta - a.theta)}));
  }
}

struct Work {
  Vec xy;
  double log_r;
  double theta;
  SpiralTree::Kind kind;
  int parent = -1;
  std::vector<Vec> path;  // from parent to this node, filled when parent is set
};

struct Join {
  bool feasible = false;
  double log_r = 0;
  double theta = 0;
};

// Meeting point of the inward spirals from p (turning counter-clockwise) and
// q (turning clockwise), q lying counter-clockwise of p.
Join join_point(const Work& p, const Work& q, double k) {
  Join j;
  const double dtheta = std::fmod(q.theta - p.theta + 4 * kPi, 2 * kPi);
  if (dtheta <= 0 || dtheta >= kPi) return j;
  if (std::abs(p.log_r - q.log_r) >= k * dtheta) return j;
  j.log_r = (p.log_r + q.log_r - k * dtheta) / 2;
  j.theta = p.theta + (p.log_r - j.log_r) / k;
  const Vec jp = to_vec({j.log_r, j.theta});
  // The join must lie inside the triangle (source, p, q).
  const double tol = -1e-12 * (p.xy.squaredNorm() + q.xy.squaredNorm());
  j.feasible = cross(p.xy, jp) >= tol && cross(jp, q.xy) >= tol && cross(q.xy - p.xy, jp - p.xy) >= tol;
  return j;
}

}  // namespace

std::int64_t SpiralTree::root_outflow() const {
  std::int64_t sum = 0;
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (nodes[i].parent == 0) sum += nodes[i].weight;
  }
  return sum;
}

SpiralTree single_source_tree(const LonLat& source, std::span<const SpiralDest> dests,
                              double restricting_angle_deg) {
  if (dests.empty()) throw Error(ErrorCode::kInvalidArgument, "single-source tree needs destinations");
  if (!(restricting_angle_deg > 0 && restricting_angle_deg < 90)) {
    throw Error(ErrorCode::kInvalidArgument, "restricting angle must be in (0, 90) degrees");
  }
  const double k = 1.0 / std::tan(deg_to_rad(restricting_angle_deg));
  const LocalProjection proj(source);

  SpiralTree tree;
  tree.nodes.push_back({source, SpiralTree::Kind::kSource, -1, 0, 0, {}});
  std::vector<Work> work(1);
  work[0].xy = Vec::Zero();
  work[0].kind = SpiralTree::Kind::kSource;

  // Terminals, merging coincident destinations.
  std::vector<int> terminals;
  for (std::size_t i = 0; i < dests.size(); ++i) {
    const Vec xy = proj.to_plane(dests[i].position);
    int found = -1;
    for (int t : terminals) {
      if ((work[t].xy - xy).norm() < kCoincidentKm) found = t;
    }
    if (found < 0) {
      found = static_cast<int>(work.size());
      Work w;
      w.xy = xy;
      w.log_r = std::log(std::max(xy.norm(), kCoincidentKm));
      w.theta = std::atan2(xy.y(), xy.x());
      w.kind = SpiralTree::Kind::kTerminal;
      work.push_back(std::move(w));
      tree.nodes.push_back({dests[i].position, SpiralTree::Kind::kTerminal, -1, 0, 0, {}});
      terminals.push_back(found);
    }
    tree.nodes[found].dests.push_back(i);
    tree.nodes[found].weight += dests[i].weight;
    tree.nodes[found].weight_flu += dests[i].weight_flu;
  }

  // Destinations on the source connect directly.
  std::vector<int> pending;
  for (int t : terminals) {
    if (work[t].xy.norm() < kCoincidentKm) {
      work[t].parent = 0;
      work[t].path = {Vec::Zero(), work[t].xy};
    } else {
      pending.push_back(t);
    }
  }
  std::sort(pending.begin(), pending.end(), [&](int a, int b) {
    return work[a].log_r != work[b].log_r ? work[a].log_r > work[b].log_r : work[a].theta < work[b].theta;
  });

  std::vector<int> active;  // sorted by theta
  auto insert_active = [&](int n) {
    auto it = std::lower_bound(active.begin(), active.end(), work[n].theta,
                               [&](int a, double th) { return work[a].theta < th; });
    active.insert(it, n);
  };
  auto remove_active = [&](int n) { active.erase(std::find(active.begin(), active.end(), n)); };

  std::size_t next_terminal = 0;
  while (next_terminal < pending.size() || active.size() >= 2) {
    // Best pending join among angular neighbours.
    Join best;
    int bp = -1, bq = -1;
    if (active.size() >= 2) {
      for (std::size_t i = 0; i < active.size(); ++i) {
        const int p = active[i];
        const int q = active[(i + 1) % active.size()];
        const Join j = join_point(work[p], work[q], k);
        if (j.feasible && (!best.feasible || j.log_r > best.log_r)) {
          best = j;
          bp = p;
          bq = q;
        }
      }
    }
    const bool have_terminal = next_terminal < pending.size();
    if (!have_terminal && !best.feasible) break;

    if (best.feasible && (!have_terminal || best.log_r > work[pending[next_terminal]].log_r)) {
      const int jn = static_cast<int>(work.size());
      Work w;
      w.log_r = best.log_r;
      w.theta = wrap(best.theta);
      w.xy = to_vec({w.log_r, w.theta});
      w.kind = SpiralTree::Kind::kJoin;
      work.push_back(std::move(w));
      tree.nodes.push_back({proj.to_lonlat(work[jn].xy), SpiralTree::Kind::kJoin, -1, 0, 0, {}});
      for (int child : {bp, bq}) {
        const Polar from{best.log_r, best.theta};
        Polar to{work[child].log_r, work[child].theta};
        to.theta = best.theta + wrap(to.theta - best.theta);
        work[child].parent = jn;
        work[child].path = {work[jn].xy};
        append_arc(work[child].path, from, to);
      }
      remove_active(bp);
      remove_active(bq);
      insert_active(jn);
      continue;
    }

    // Terminal event: absorb every active node whose spiral region holds it.
    const int t = pending[next_terminal++];
    std::vector<int> absorbed;
    for (int p : active) {
      const double dr = work[p].log_r - work[t].log_r;
      if (dr >= 0 && std::abs(wrap(work[t].theta - work[p].theta)) <= dr / k + 1e-12) absorbed.push_back(p);
    }
    for (int p : absorbed) {
      // p reaches t along its own spiral, then along the opposite family
      // through t; the side is chosen by t's bearing from p.
      const double dth = wrap(work[t].theta - work[p].theta);
      const double sign = dth >= 0 ? 1.0 : -1.0;
      const Polar tp{work[t].log_r, work[t].theta};
      const Polar pp{work[p].log_r, work[t].theta - dth};
      const double c_p = pp.log_r + sign * k * pp.theta;
      const double d_t = tp.log_r - sign * k * tp.theta;
      const Polar corner{(c_p + d_t) / 2, sign * (c_p - d_t) / (2 * k)};
      work[p].parent = t;
      work[p].path = {work[t].xy};
      append_arc(work[p].path, tp, corner);
      append_arc(work[p].path, corner, pp);
      remove_active(p);
    }
    insert_active(t);
  }

  // Whatever is left heads straight to the source.
  for (int n : active) {
    work[n].parent = 0;
    work[n].path.clear();
    for (int i = 0; i <= kArcSamples; ++i) work[n].path.push_back(work[n].xy * (static_cast<double>(i) / kArcSamples));
  }

  // Subtree weights: each terminal's own flow is added to every ancestor.
  for (std::size_t i = 1; i < work.size(); ++i) tree.nodes[i].parent = work[i].parent;
  std::vector<std::pair<std::int64_t, std::int64_t>> own(work.size());
  for (std::size_t i = 1; i < work.size(); ++i) own[i] = {tree.nodes[i].weight, tree.nodes[i].weight_flu};
  for (std::size_t i = 1; i < work.size(); ++i) {
    for (int p = tree.nodes[i].parent; p > 0; p = tree.nodes[p].parent) {
      tree.nodes[p].weight += own[i].first;
      tree.nodes[p].weight_flu += own[i].second;
    }
  }

  for (std::size_t n = 1; n < work.size(); ++n) {
    LayoutPolyline line;
    line.edge = n;
    line.weight = static_cast<double>(tree.nodes[n].weight);
    line.weight_flu = tree.nodes[n].weight_flu;
    for (const Vec& v : work[n].path) line.points.push_back(proj.to_lonlat(v));
    line.points.front() = tree.nodes[tree.nodes[n].parent].position;
    line.points.back() = tree.nodes[n].position;
    tree.edges.push_back(std::move(line));
  }
  // Branch id: the source child each edge descends from.
  for (std::size_t e = 0; e < tree.edges.size(); ++e) {
    int n = static_cast<int>(tree.edges[e].edge);
    while (tree.nodes[n].parent > 0) n = tree.nodes[n].parent;
    tree.edges[e].bundle_id = n;
  }
  return tree;
}

namespace {

double point_segment_distance(const Vec& p, const Vec& a, const Vec& b, Vec* closest) {
  const Vec d = b - a;
  const double len2 = d.squaredNorm();
  const double t = len2 > 0 ? std::clamp((p - a).dot(d) / len2, 0.0, 1.0) : 0.0;
  *closest = a + t * d;
  return (p - *closest).norm();
}

// Smallest distance between segments ab and cd and a point where it occurs.
double segment_distance(const Vec& a, const Vec& b, const Vec& c, const Vec& d, Vec* where) {
  const Vec r = b - a, s = d - c;
  const double denom = cross(r, s);
  if (std::abs(denom) > 1e-18) {
    const double t = cross(c - a, s) / denom;
    const double u = cross(c - a, r) / denom;
    if (t >= 0 && t <= 1 && u >= 0 && u <= 1) {
      *where = a + t * r;
      return 0.0;
    }
  }
  double best = std::numeric_limits<double>::infinity();
  Vec q;
  auto consider = [&](double dist, const Vec& at) {
    if (dist < best) {
      best = dist;
      *where = at;
    }
  };
  consider(point_segment_distance(a, c, d, &q), a);
  consider(point_segment_distance(b, c, d, &q), b);
  consider(point_segment_distance(c, a, b, &q), c);
  consider(point_segment_distance(d, a, b, &q), d);
  return best;
}

}  // namespace

bool has_crossings(const SpiralTree& tree) {
  if (tree.nodes.empty()) return false;
  const LocalProjection proj(tree.nodes[0].position);
  constexpr double kTouchKm = 1e-9;
  constexpr double kVertexKm = 1e-6;
  std::vector<std::vector<Vec>> paths;
  std::vector<std::pair<int, int>> ends;  // (parent, child) node ids
  for (const auto& e : tree.edges) {
    std::vector<Vec> pts;
    for (const auto& p : e.points) pts.push_back(proj.to_plane(p));
    paths.push_back(std::move(pts));
    ends.emplace_back(tree.nodes[e.edge].parent, static_cast<int>(e.edge));
  }
  for (std::size_t i = 0; i < paths.size(); ++i) {
    for (std::size_t j = i + 1; j < paths.size(); ++j) {
      std::vector<Vec> shared;
      for (int a : {ends[i].first, ends[i].second}) {
        for (int b : {ends[j].first, ends[j].second}) {
          if (a == b) shared.push_back(proj.to_plane(tree.nodes[a].position));
        }
      }
      const auto& pa = paths[i];
      const auto& pb = paths[j];
      for (std::size_t s = 1; s < pa.size(); ++s) {
        for (std::size_t t = 1; t < pb.size(); ++t) {
          Vec at;
          if (segment_distance(pa[s - 1], pa[s], pb[t - 1], pb[t], &at) > kTouchKm) continue;
          const bool at_vertex = std::any_of(shared.begin(), shared.end(),
                                             [&](const Vec& v) { return (v - at).norm() < kVertexKm; });
          if (!at_vertex) return true;
        }
      }
    }
  }
  return false;
}

}  // namespace geocube
