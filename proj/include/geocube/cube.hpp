#pragma once

#include <atomic>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "geocube/grid.hpp"
#include "geocube/geometry.hpp"
#include "geocube/trajectory.hpp"

namespace geocube {

class Region;

// Measures of one cuboid. Counts are signed so that roll-up arithmetic can be
// inspected before clamping.
struct CuboidFact {
  std::int64_t R = 0;      // residents
  std::int64_t V = 0;      // visitors
  std::int64_t A = 0;      // activities
  std::int64_t O = 0;      // out-moves
  std::int64_t I = 0;      // in-moves
  std::int64_t V_flu = 0;  // ILI visitors
  // Activity centroid (lon, lat); NaN when A == 0.
  LonLat S = LonLat::Constant(std::numeric_limits<double>::quiet_NaN());

  bool has_centroid() const { return A > 0; }
  bool operator==(const CuboidFact&) const = default;
};

struct FlowMeasures {
  std::int64_t F = 0;
  std::int64_t F_flu = 0;
  std::int64_t F_migration = 0;

  FlowMeasures& operator+=(const FlowMeasures& o) {
    F += o.F;
    F_flu += o.F_flu;
    F_migration += o.F_migration;
    return *this;
  }
  bool zero() const { return F == 0 && F_flu == 0 && F_migration == 0; }
  bool operator==(const FlowMeasures&) const = default;
};

struct FlowFact {
  CuboidKey origin;
  CuboidKey dest;
  FlowMeasures measures;
};

struct DiagnosticsSnapshot {
  std::uint64_t clamped = 0;   // cuboids where a holistic count went negative
  std::uint64_t repaired = 0;  // cuboids where V was raised to satisfy O, I, V_flu <= V
  std::uint64_t divergences() const { return clamped + repaired; }
};

class Diagnostics {
 public:
  void record(bool clamped, bool repaired) {
    if (clamped) clamped_.fetch_add(1, std::memory_order_relaxed);
    if (repaired) repaired_.fetch_add(1, std::memory_order_relaxed);
  }
  DiagnosticsSnapshot snapshot() const { return {clamped_.load(), repaired_.load()}; }

 private:
  std::atomic<std::uint64_t> clamped_{0};
  std::atomic<std::uint64_t> repaired_{0};
};

// Clamps holistic counts at zero and raises V to max(V, O, I, V_flu).
// Returns {clamped, repaired}.
std::pair<bool, bool> sanitize(CuboidFact& fact);

// Constraint suite: O <= V, I <= V, V_flu <= V, V <= A, all counts >= 0.
bool satisfies_constraints(const CuboidFact& fact);

// All cuboids of one (spatial level, temporal level, group), sparse and sorted
// by packed key (interval-major).
class LevelTable {
 public:
  struct Flow {
    PackedCuboid origin;
    PackedCuboid dest;
    FlowMeasures m;
  };
  using Entry = std::pair<PackedCuboid, CuboidFact>;

  LevelTable(int spatial_level, int temporal_level, Group group, std::vector<Entry> facts,
             std::vector<Flow> flows);

  int spatial_level() const { return s_level_; }
  int temporal_level() const { return t_level_; }
  Group group() const { return group_; }

  std::span<const Entry> facts() const { return facts_; }
  std::span<const Flow> flows() const { return flows_; }

  const CuboidFact* find(PackedCuboid key) const;
  std::span<const Flow> outgoing(PackedCuboid origin) const;
  // Facts / flows whose (origin) interval index lies in [first, last).
  std::span<const Entry> facts_in(std::int64_t first, std::int64_t last) const;
  std::span<const Flow> flows_from(std::int64_t first, std::int64_t last) const;

  CuboidKey key(PackedCuboid k) const;

 private:
  int s_level_;
  int t_level_;
  Group group_;
  std::vector<Entry> facts_;
  std::vector<Flow> flows_;
};

// Base cuboids (level 1, 1 hour) for one group from the trajectories'
// footprints inside `window`. Moves count only when both endpoints are in the
// window; in the ili group only when both endpoints are infected.
LevelTable build_base(const TrajectoryStore& store, const TimeWindow& window, Group group,
                      Diagnostics* diag = nullptr);

enum class Axis { kSpatial, kTemporal };

struct FlowRollup {
  std::vector<LevelTable::Flow> flows;                               // parent-level flows
  std::vector<std::pair<PackedCuboid, FlowMeasures>> internal;       // per parent, sorted
};

// Parent flows are sums over child pairs with different parents;
// child pairs under one parent become that parent's internal flow.
FlowRollup rollup_flows(std::span<const LevelTable::Flow> child_flows, Axis axis);

// Aggregates one parent from its children and the summed flows
// among them, then clamped/repaired. Throws Error(kMissingChildren) if empty.
CuboidFact rollup_cell(std::span<const CuboidFact> children, const FlowMeasures& internal,
                       Diagnostics* diag = nullptr);

LevelTable rollup(const LevelTable& child, Axis axis, Diagnostics* diag = nullptr);

struct FlowRow {
  CellAddress origin;
  CellAddress dest;
  FlowMeasures measures;
};

// Window expressed in base hours [first, last).
struct HourRange {
  std::int64_t first = 0;
  std::int64_t last = 0;
  bool empty() const { return last <= first; }
};

// Aligned dyadic pieces covering [first, last), each of level <= max_level.
std::vector<IntervalAddress> dyadic_decomposition(HourRange hours, int max_level);

// Immutable materialized cube over one trajectory store snapshot. Level tables
// above the base are built lazily, once, and are safe for concurrent readers.
class Cube {
 public:
  explicit Cube(const TrajectoryStore& store, TimeWindow window = TimeWindow::everything());

  const GridPyramid& grid() const { return grid_; }
  const TimeWindow& window() const { return window_; }

  const LevelTable& table(int spatial_level, int temporal_level, Group group) const;
  // Builds every table up to the given levels, both groups.
  void materialize(int max_spatial, int max_temporal) const;

  CuboidFact fact(const CuboidKey& key) const;
  HourRange hours(const TimeWindow& w) const;

  // Aggregate over the region x window, merging the largest aligned cuboids.
  // Throws Error(kEmptyRegion) when the region or window is empty.
  CuboidFact region_aggregate(const Region& region, const TimeWindow& w, Group group) const;

  // Flows between level-L cells across the window (both endpoints inside it),
  // self pairs excluded, sorted by F descending. `dests` empty means all.
  std::vector<FlowRow> flow_query(std::span<const CellAddress> sources,
                                  std::span<const CellAddress> dests, const TimeWindow& w,
                                  Group group) const;

  // Facts of every level-L cell with data in the window that intersects bbox.
  std::vector<std::pair<CellAddress, CuboidFact>> cells(int level, const BoundingBox& bbox,
                                                        const TimeWindow& w, Group group) const;

  DiagnosticsSnapshot diagnostics() const { return diag_.snapshot(); }
  std::size_t post_count() const { return post_count_; }

 private:
  struct Slot {
    std::once_flag once;
    std::unique_ptr<LevelTable> table;
  };
  Slot& slot(int s, int t, Group g) const;
  FlowMeasures inter_piece_flows(const Region& region, HourRange hours, Group group,
                                 const CellAddress& cell, const IntervalAddress& iv) const;
  FlowMeasures refine_flows(const Region& region, HourRange hours, Group group,
                            const CellAddress& p_cell, const IntervalAddress& p_iv,
                            const CellAddress& d_cell, const IntervalAddress& d_iv) const;

  GridPyramid grid_;
  TimeWindow window_;
  std::size_t post_count_ = 0;
  HourRange extent_;
  mutable Diagnostics diag_;
  mutable std::vector<std::unique_ptr<Slot>> slots_;
};

}  // namespace geocube
