#include "geocube/cube.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "geocube/errors.hpp"
#include "geocube/region.hpp"

namespace geocube {
namespace {

struct PairHash {
  std::size_t operator()(const std::pair<PackedCuboid, PackedCuboid>& p) const {
    return std::hash<std::uint64_t>{}(p.first * 0x9E3779B97F4A7C15ULL ^ p.second);
  }
};
using FlowMap = std::unordered_map<std::pair<PackedCuboid, PackedCuboid>, FlowMeasures, PairHash>;

std::vector<LevelTable::Flow> to_sorted(const FlowMap& map) {
  std::vector<LevelTable::Flow> out;
  out.reserve(map.size());
  for (const auto& [k, m] : map) out.push_back({k.first, k.second, m});
  return out;
}

PackedCuboid parent_key(PackedCuboid k, Axis axis) { return packed_parent(k, axis == Axis::kSpatial); }

Region::Coverage classify_time(const IntervalAddress& iv, HourRange hours) {
  const std::int64_t len = std::int64_t{1} << (iv.level - 1);
  const std::int64_t start = iv.index * len;
  const std::int64_t end = start + len;
  if (end <= hours.first || start >= hours.last) return Region::Coverage::kOutside;
  if (start >= hours.first && end <= hours.last) return Region::Coverage::kInside;
  return Region::Coverage::kPartial;
}

Region::Coverage combine(Region::Coverage a, Region::Coverage b) {
  using C = Region::Coverage;
  if (a == C::kOutside || b == C::kOutside) return C::kOutside;
  if (a == C::kInside && b == C::kInside) return C::kInside;
  return C::kPartial;
}

}  // namespace

std::pair<bool, bool> sanitize(CuboidFact& f) {
  bool clamped = false;
  for (std::int64_t* v : {&f.R, &f.V, &f.O, &f.I, &f.V_flu}) {
    if (*v < 0) {
      *v = 0;
      clamped = true;
    }
  }
  const std::int64_t floor = std::max({f.O, f.I, f.V_flu});
  const bool repaired = f.V < floor;
  if (repaired) f.V = floor;
  if (f.A == 0) f.S.setConstant(std::numeric_limits<double>::quiet_NaN());
  return {clamped, repaired};
}

bool satisfies_constraints(const CuboidFact& f) {
  if (f.R < 0 || f.V < 0 || f.A < 0 || f.O < 0 || f.I < 0 || f.V_flu < 0) return false;
  return f.O <= f.V && f.I <= f.V && f.V_flu <= f.V && f.V <= f.A;
}

LevelTable::LevelTable(int spatial_level, int temporal_level, Group group,
                       std::vector<Entry> facts, std::vector<Flow> flows)
    : s_level_(spatial_level),
      t_level_(temporal_level),
      group_(group),
      facts_(std::move(facts)),
      flows_(std::move(flows)) {
  std::sort(facts_.begin(), facts_.end(),
            [](const Entry& a, const Entry& b) { return a.first < b.first; });
  std::sort(flows_.begin(), flows_.end(), [](const Flow& a, const Flow& b) {
    return a.origin != b.origin ? a.origin < b.origin : a.dest < b.dest;
  });
}

const CuboidFact* LevelTable::find(PackedCuboid key) const {
  auto it = std::lower_bound(facts_.begin(), facts_.end(), key,
                             [](const Entry& e, PackedCuboid k) { return e.first < k; });
  return it != facts_.end() && it->first == key ? &it->second : nullptr;
}

std::span<const LevelTable::Flow> LevelTable::outgoing(PackedCuboid origin) const {
  auto lo = std::lower_bound(flows_.begin(), flows_.end(), origin,
                             [](const Flow& f, PackedCuboid k) { return f.origin < k; });
  auto hi = std::upper_bound(lo, flows_.end(), origin,
                             [](PackedCuboid k, const Flow& f) { return k < f.origin; });
  return {lo, hi};
}

std::span<const LevelTable::Entry> LevelTable::facts_in(std::int64_t first, std::int64_t last) const {
  if (last <= first) return {};
  auto lo = std::lower_bound(facts_.begin(), facts_.end(), pack_cuboid(0, 0, first),
                             [](const Entry& e, PackedCuboid k) { return e.first < k; });
  auto hi = std::lower_bound(lo, facts_.end(), pack_cuboid(0, 0, last),
                             [](const Entry& e, PackedCuboid k) { return e.first < k; });
  return {lo, hi};
}

std::span<const LevelTable::Flow> LevelTable::flows_from(std::int64_t first, std::int64_t last) const {
  if (last <= first) return {};
  auto lo = std::lower_bound(flows_.begin(), flows_.end(), pack_cuboid(0, 0, first),
                             [](const Flow& f, PackedCuboid k) { return f.origin < k; });
  auto hi = std::lower_bound(lo, flows_.end(), pack_cuboid(0, 0, last),
                             [](const Flow& f, PackedCuboid k) { return f.origin < k; });
  return {lo, hi};
}

CuboidKey LevelTable::key(PackedCuboid k) const {
  return {{s_level_, packed_col(k), packed_row(k)}, {t_level_, packed_interval(k)}, group_};
}

LevelTable build_base(const TrajectoryStore& store, const TimeWindow& window, Group group,
                      Diagnostics* diag) {
  struct Acc {
    CuboidFact f;
    double sum_lon = 0;
    double sum_lat = 0;
    // Last user counted, so each distinct count needs no set.
    std::int64_t last_v = -1;
    std::int64_t last_flu = -1;
    std::int64_t last_r = -1;
  };
  std::unordered_map<PackedCuboid, Acc> acc;
  FlowMap flows;
  const GridPyramid& grid = store.grid();
  const auto trajectories = store.sorted();

  std::vector<PackedCuboid> keys;
  std::vector<PackedCuboid> home_keys;
  std::vector<char> kept;
  std::vector<char> infected;
  for (std::size_t u = 0; u < trajectories.size(); ++u) {
    const Trajectory& traj = *trajectories[u];
    const auto& fps = traj.footprints();
    const auto uid = static_cast<std::int64_t>(u);
    keys.assign(fps.size(), 0);
    home_keys.assign(fps.size(), 0);
    kept.assign(fps.size(), 0);
    infected.assign(fps.size(), 0);
    for (std::size_t i = 0; i < fps.size(); ++i) {
      const Footprint& fp = fps[i];
      if (!window.contains(fp.timestamp)) continue;
      infected[i] = traj.is_infected(fp.timestamp);
      if (group == Group::kIli && !infected[i]) continue;
      kept[i] = 1;
      const std::int64_t h = grid.hour_index(fp.timestamp);
      keys[i] = pack_cuboid(fp.cell.col, fp.cell.row, h);
      home_keys[i] = pack_cuboid(fp.home.col, fp.home.row, h);

      Acc& a = acc[keys[i]];
      ++a.f.A;
      a.sum_lon += fp.position.x();
      a.sum_lat += fp.position.y();
      if (a.last_v != uid) {
        ++a.f.V;
        a.last_v = uid;
      }
      if (infected[i] && a.last_flu != uid) {
        ++a.f.V_flu;
        a.last_flu = uid;
      }
      Acc& r = acc[home_keys[i]];
      if (r.last_r != uid) {
        ++r.f.R;
        r.last_r = uid;
      }
    }
    for (std::size_t i = 1; i < fps.size(); ++i) {
      if (!kept[i - 1] || !kept[i]) continue;
      if (keys[i - 1] != keys[i]) {
        const bool flu = infected[i - 1] || infected[i];
        flows[{keys[i - 1], keys[i]}] += FlowMeasures{1, flu ? 1 : 0, 0};
        ++acc[keys[i - 1]].f.O;
        ++acc[keys[i]].f.I;
      }
      if (home_keys[i - 1] != home_keys[i]) {
        flows[{home_keys[i - 1], home_keys[i]}].F_migration += 1;
      }
    }
  }

  std::vector<LevelTable::Entry> facts;
  facts.reserve(acc.size());
  for (auto& [k, a] : acc) {
    if (a.f.A > 0) a.f.S = LonLat(a.sum_lon, a.sum_lat) / static_cast<double>(a.f.A);
    const auto [clamped, repaired] = sanitize(a.f);
    if (diag) diag->record(clamped, repaired);
    facts.emplace_back(k, a.f);
  }
  return LevelTable(1, 1, group, std::move(facts), to_sorted(flows));
}

FlowRollup rollup_flows(std::span<const LevelTable::Flow> child_flows, Axis axis) {
  FlowMap parents;
  std::unordered_map<PackedCuboid, FlowMeasures> internal;
  for (const auto& f : child_flows) {
    const PackedCuboid po = parent_key(f.origin, axis);
    const PackedCuboid pd = parent_key(f.dest, axis);
    if (po == pd) {
      internal[po] += f.m;
    } else {
      parents[{po, pd}] += f.m;
    }
  }
  FlowRollup out;
  out.flows = to_sorted(parents);
  std::sort(out.flows.begin(), out.flows.end(), [](const auto& a, const auto& b) {
    return a.origin != b.origin ? a.origin < b.origin : a.dest < b.dest;
  });
  out.internal.assign(internal.begin(), internal.end());
  std::sort(out.internal.begin(), out.internal.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

CuboidFact rollup_cell(std::span<const CuboidFact> children, const FlowMeasures& internal,
                       Diagnostics* diag) {
  if (children.empty()) throw Error(ErrorCode::kMissingChildren, "roll-up over no children");
  CuboidFact p;
  LonLat weighted = LonLat::Zero();
  for (const auto& c : children) {
    p.R += c.R;
    p.V += c.V;
    p.A += c.A;
    p.O += c.O;
    p.I += c.I;
    p.V_flu += c.V_flu;
    if (c.A > 0) weighted += static_cast<double>(c.A) * c.S;
  }
  if (p.A > 0) p.S = weighted / static_cast<double>(p.A);
  // Moves between children no longer leave or enter the parent, and a user
  // seen in two children at either end of a move is one visitor.
  p.V -= internal.F;
  p.O -= internal.F;
  p.I -= internal.F;
  p.V_flu -= internal.F_flu;
  p.R -= internal.F_migration;
  const auto [clamped, repaired] = sanitize(p);
  if (diag) diag->record(clamped, repaired);
  return p;
}

LevelTable rollup(const LevelTable& child, Axis axis, Diagnostics* diag) {
  const FlowRollup flows = rollup_flows(child.flows(), axis);
  auto facts = child.facts();

  std::vector<std::pair<PackedCuboid, std::size_t>> order;
  order.reserve(facts.size());
  for (std::size_t i = 0; i < facts.size(); ++i) order.emplace_back(parent_key(facts[i].first, axis), i);
  std::sort(order.begin(), order.end());

  std::vector<LevelTable::Entry> out;
  std::vector<CuboidFact> group;
  for (std::size_t i = 0; i < order.size();) {
    const PackedCuboid parent = order[i].first;
    group.clear();
    for (; i < order.size() && order[i].first == parent; ++i) group.push_back(facts[order[i].second].second);
    FlowMeasures internal;
    auto it = std::lower_bound(flows.internal.begin(), flows.internal.end(), parent,
                               [](const auto& e, PackedCuboid k) { return e.first < k; });
    if (it != flows.internal.end() && it->first == parent) internal = it->second;
    out.emplace_back(parent, rollup_cell(group, internal, diag));
  }
  const int s = child.spatial_level() + (axis == Axis::kSpatial ? 1 : 0);
  const int t = child.temporal_level() + (axis == Axis::kTemporal ? 1 : 0);
  return LevelTable(s, t, child.group(), std::move(out), flows.flows);
}

std::vector<IntervalAddress> dyadic_decomposition(HourRange hours, int max_level) {
  std::vector<IntervalAddress> out;
  std::int64_t h = hours.first;
  while (h < hours.last) {
    int k = max_level - 1;
    while (k > 0 && ((h & ((std::int64_t{1} << k) - 1)) != 0 || h + (std::int64_t{1} << k) > hours.last)) --k;
    out.push_back({k + 1, h >> k});
    h += std::int64_t{1} << k;
  }
  return out;
}

Cube::Cube(const TrajectoryStore& store, TimeWindow window)
    : grid_(store.grid()), window_(window), post_count_(store.post_count()) {
  const std::size_t n = static_cast<std::size_t>(grid_.levels()) *
                        static_cast<std::size_t>(grid_.time_levels()) * kGroupCount;
  slots_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) slots_.push_back(std::make_unique<Slot>());
  for (Group g : {Group::kAll, Group::kIli}) {
    Slot& base = slot(1, 1, g);
    std::call_once(base.once, [&] {
      base.table = std::make_unique<LevelTable>(build_base(store, window_, g, &diag_));
    });
  }
  // Data extent in hours, from the (interval-major) all-group base table.
  const auto facts = slot(1, 1, Group::kAll).table->facts();
  if (!facts.empty()) {
    extent_ = {packed_interval(facts.front().first), packed_interval(facts.back().first) + 1};
  }
}

Cube::Slot& Cube::slot(int s, int t, Group g) const {
  const std::size_t i = (static_cast<std::size_t>(g) * grid_.time_levels() + (t - 1)) * grid_.levels() + (s - 1);
  return *slots_[i];
}

const LevelTable& Cube::table(int s, int t, Group g) const {
  if (s < 1 || s > grid_.levels() || t < 1 || t > grid_.time_levels()) {
    throw Error(ErrorCode::kInvalidArgument,
                "level out of range: spatial " + std::to_string(s) + ", temporal " + std::to_string(t));
  }
  Slot& sl = slot(s, t, g);
  std::call_once(sl.once, [&] {
    // Spatial roll-ups first, then temporal; every table is reachable from
    // its spatial or temporal child.
    if (t > 1) {
      sl.table = std::make_unique<LevelTable>(rollup(table(s, t - 1, g), Axis::kTemporal, &diag_));
    } else {
      sl.table = std::make_unique<LevelTable>(rollup(table(s - 1, t, g), Axis::kSpatial, &diag_));
    }
  });
  return *sl.table;
}

void Cube::materialize(int max_spatial, int max_temporal) const {
  for (Group g : {Group::kAll, Group::kIli}) {
    for (int t = 1; t <= max_temporal; ++t) {
      for (int s = 1; s <= max_spatial; ++s) table(s, t, g);
    }
  }
}

CuboidFact Cube::fact(const CuboidKey& key) const {
  if (!grid_.valid(key.cell)) throw Error(ErrorCode::kNotFound, "unknown cell " + key.cell.to_string());
  const LevelTable& tab = table(key.cell.level, key.interval.level, key.group);
  const CuboidFact* f = tab.find(pack_cuboid(key.cell.col, key.cell.row, key.interval.index));
  return f ? *f : CuboidFact{};
}

HourRange Cube::hours(const TimeWindow& w) const {
  if (w.end <= w.begin) return {};
  // Every hour the window touches, limited to hours holding data.
  const std::int64_t first = grid_.hour_index(w.begin);
  const std::int64_t last = grid_.hour_index(w.end - std::chrono::seconds{1}) + 1;
  return {std::max(first, extent_.first), std::min(last, extent_.last)};
}

CuboidFact Cube::region_aggregate(const Region& region, const TimeWindow& w, Group group) const {
  if (region.empty()) throw Error(ErrorCode::kEmptyRegion, "region covers no cells");
  if (w.end <= w.begin) throw Error(ErrorCode::kEmptyRegion, "time window is empty");
  const HourRange hr = hours(w);
  if (hr.empty()) return CuboidFact{};

  const auto intervals = dyadic_decomposition(hr, grid_.time_levels());
  std::vector<CuboidFact> pieces;
  FlowMeasures internal;
  for (const auto& cell : region.pieces()) {
    for (const auto& iv : intervals) {
      const LevelTable& tab = table(cell.level, iv.level, group);
      if (const CuboidFact* f = tab.find(pack_cuboid(cell.col, cell.row, iv.index))) {
        pieces.push_back(*f);
        internal += inter_piece_flows(region, hr, group, cell, iv);
      }
    }
  }
  if (pieces.empty()) return CuboidFact{};
  return rollup_cell(pieces, internal, &diag_);
}

FlowMeasures Cube::inter_piece_flows(const Region& region, HourRange hr, Group group,
                                     const CellAddress& cell, const IntervalAddress& iv) const {
  FlowMeasures sum;
  const LevelTable& tab = table(cell.level, iv.level, group);
  for (const auto& f : tab.outgoing(pack_cuboid(cell.col, cell.row, iv.index))) {
    const CellAddress d_cell{cell.level, packed_col(f.dest), packed_row(f.dest)};
    const IntervalAddress d_iv{iv.level, packed_interval(f.dest)};
    switch (combine(region.classify(d_cell), classify_time(d_iv, hr))) {
      case Region::Coverage::kOutside:
        break;
      case Region::Coverage::kInside:
        sum += f.m;
        break;
      case Region::Coverage::kPartial:
        sum += refine_flows(region, hr, group, cell, iv, d_cell, d_iv);
        break;
    }
  }
  return sum;
}

// Flows from p (inside) to d (partly inside), resolved at the finer level of
// whichever axis d is partial on.
FlowMeasures Cube::refine_flows(const Region& region, HourRange hr, Group group,
                                const CellAddress& p_cell, const IntervalAddress& p_iv,
                                const CellAddress& d_cell, const IntervalAddress& d_iv) const {
  const bool split_space = region.classify(d_cell) == Region::Coverage::kPartial;
  const bool split_time = classify_time(d_iv, hr) == Region::Coverage::kPartial;
  const int s = p_cell.level - (split_space ? 1 : 0);
  const int t = p_iv.level - (split_time ? 1 : 0);

  std::vector<CellAddress> cells;
  if (split_space) {
    for (int dc = 0; dc < 2; ++dc) {
      for (int dr = 0; dr < 2; ++dr) cells.push_back({s, 2 * p_cell.col + dc, 2 * p_cell.row + dr});
    }
  } else {
    cells.push_back(p_cell);
  }
  std::vector<IntervalAddress> ivs;
  if (split_time) {
    ivs = {{t, 2 * p_iv.index}, {t, 2 * p_iv.index + 1}};
  } else {
    ivs = {p_iv};
  }

  FlowMeasures sum;
  const LevelTable& tab = table(s, t, group);
  for (const auto& c : cells) {
    for (const auto& v : ivs) {
      for (const auto& f : tab.outgoing(pack_cuboid(c.col, c.row, v.index))) {
        const CellAddress e_cell{s, packed_col(f.dest), packed_row(f.dest)};
        const IntervalAddress e_iv{t, packed_interval(f.dest)};
        if (e_cell.ancestor(d_cell.level) != d_cell || e_iv.ancestor(d_iv.level) != d_iv) continue;
        switch (combine(region.classify(e_cell), classify_time(e_iv, hr))) {
          case Region::Coverage::kOutside:
            break;
          case Region::Coverage::kInside:
            sum += f.m;
            break;
          case Region::Coverage::kPartial:
            sum += refine_flows(region, hr, group, c, v, e_cell, e_iv);
            break;
        }
      }
    }
  }
  return sum;
}

std::vector<FlowRow> Cube::flow_query(std::span<const CellAddress> sources,
                                      std::span<const CellAddress> dests, const TimeWindow& w,
                                      Group group) const {
  if (sources.empty()) throw Error(ErrorCode::kInvalidArgument, "no source cells");
  const int level = sources.front().level;
  std::unordered_set<std::uint32_t> dest_set;
  auto cell_key = [](const CellAddress& c) {
    return static_cast<std::uint32_t>(c.col) << 14 | static_cast<std::uint32_t>(c.row);
  };
  for (const auto& c : sources) {
    if (!grid_.valid(c)) throw Error(ErrorCode::kNotFound, "unknown cell " + c.to_string());
    if (c.level != level) throw Error(ErrorCode::kInvalidArgument, "source cells differ in level");
  }
  for (const auto& c : dests) {
    if (!grid_.valid(c)) throw Error(ErrorCode::kNotFound, "unknown cell " + c.to_string());
    if (c.level != level) throw Error(ErrorCode::kInvalidArgument, "destination level differs");
    dest_set.insert(cell_key(c));
  }
  const HourRange hr = hours(w);
  const LevelTable& tab = table(level, 1, group);
  std::map<std::pair<CellAddress, CellAddress>, FlowMeasures> rows;
  for (const auto& src : sources) {
    for (std::int64_t h = hr.first; h < hr.last; ++h) {
      for (const auto& f : tab.outgoing(pack_cuboid(src.col, src.row, h))) {
        if (packed_interval(f.dest) >= hr.last) continue;
        const CellAddress dst{level, packed_col(f.dest), packed_row(f.dest)};
        if (dst == src) continue;
        if (!dest_set.empty() && !dest_set.count(cell_key(dst))) continue;
        rows[{src, dst}] += f.m;
      }
    }
  }
  std::vector<FlowRow> out;
  for (const auto& [k, m] : rows) {
    if (m.F > 0 || m.F_migration > 0) out.push_back({k.first, k.second, m});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const FlowRow& a, const FlowRow& b) { return a.measures.F > b.measures.F; });
  return out;
}

std::vector<std::pair<CellAddress, CuboidFact>> Cube::cells(int level, const BoundingBox& bbox,
                                                            const TimeWindow& w, Group group) const {
  const HourRange hr = hours(w);
  const LevelTable& tab = table(level, 1, group);
  std::vector<CellAddress> found;
  std::unordered_set<std::uint32_t> seen;
  for (const auto& [k, f] : tab.facts_in(hr.first, hr.last)) {
    const CellAddress c{level, packed_col(k), packed_row(k)};
    if (!seen.insert(packed_cell(k)).second) continue;
    if (bbox.intersects(grid_.cell_bounds(c))) found.push_back(c);
  }
  std::sort(found.begin(), found.end());
  std::vector<std::pair<CellAddress, CuboidFact>> out;
  out.reserve(found.size());
  for (const auto& c : found) {
    const Region r = Region::from_cells(std::span(&c, 1), grid_);
    out.emplace_back(c, region_aggregate(r, w, group));
  }
  return out;
}

}  // namespace geocube
