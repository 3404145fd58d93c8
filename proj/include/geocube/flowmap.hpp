#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "geocube/cube.hpp"
#include "geocube/grid.hpp"

namespace geocube {

struct FlowNode {
  CellAddress cell;
  LonLat centroid;
  std::int64_t in_degree = 0;   // total inbound F
  std::int64_t out_degree = 0;  // total outbound F

  std::int64_t score() const { return in_degree + out_degree; }
};

struct FlowEdge {
  std::size_t origin = 0;  // node index
  std::size_t dest = 0;
  std::int64_t F = 0;
  std::int64_t F_flu = 0;
};

struct FlowGraph {
  std::vector<FlowNode> nodes;
  std::vector<FlowEdge> edges;

  // Rows with F > 0 become edges; degrees are the sums of incident weights.
  static FlowGraph from_rows(std::span<const FlowRow> rows,
                             const std::function<LonLat(const CellAddress&)>& centroid);
  // Edges among the given nodes only, reindexed; degrees recomputed.
  FlowGraph induced(std::span<const std::size_t> keep) const;
};

struct LayoutPolyline {
  std::size_t edge = 0;
  std::vector<LonLat> points;
  double weight = 0;
  std::int64_t weight_flu = 0;
  int bundle_id = -1;
};

// Node indices (ascending) whose score is within the top global_fraction of
// all nodes and among the top local_top_k within Chebyshev distance
// neighbor_radius of its cell. Ranking ties go to the lower cell address.
std::vector<std::size_t> critical_nodes(const FlowGraph& g, double global_fraction = 0.2,
                                        int neighbor_radius = 2, int local_top_k = 1);

struct FdebParams {
  int cycles = 6;
  int initial_subdivisions = 1;
  double step_size = 0.04;
  int iterations = 50;
  double compatibility_threshold = 0.05;
  double spring_constant = 0.1;
};

// Planar edge compatibility: product of angle, scale, position and visibility terms.
double edge_compatibility(const Eigen::Vector2d& p0, const Eigen::Vector2d& p1,
                          const Eigen::Vector2d& q0, const Eigen::Vector2d& q1);

// Force-directed edge bundling. Input polylines are taken as straight edges
// from their first to last point. Zero-length edges are passed through.
std::vector<LayoutPolyline> fdeb_bundle(const std::vector<LayoutPolyline>& edges,
                                        const FdebParams& params = {});

// Total great-circle length of the polylines, km.
double total_ink_km(std::span<const LayoutPolyline> lines);
// Single-linkage clusters of polyline midpoints within tolerance_km.
// Assigns bundle_id when `assign` is non-null.
int corridor_count(std::span<const LayoutPolyline> lines, double tolerance_km,
                   std::vector<int>* assign = nullptr);

struct SpiralDest {
  LonLat position;
  std::int64_t weight = 0;
  std::int64_t weight_flu = 0;
};

struct SpiralTree {
  enum class Kind { kSource, kTerminal, kJoin };
  struct Node {
    LonLat position;
    Kind kind = Kind::kTerminal;
    int parent = -1;            // -1 for the source
    std::int64_t weight = 0;     // flow through the node
    std::int64_t weight_flu = 0;
    std::vector<std::size_t> dests;  // input indices merged into this terminal
  };
  std::vector<Node> nodes;             // nodes[0] is the source
  std::vector<LayoutPolyline> edges;   // one per non-source node, parent -> child

  std::int64_t root_outflow() const;
};

// Flow tree from one source whose branches follow logarithmic spirals with
// the given restricting angle (0, 90) degrees. Throws Error(kInvalidArgument)
// for empty dests or a bad angle.
SpiralTree single_source_tree(const LonLat& source, std::span<const SpiralDest> dests,
                              double restricting_angle_deg = 25.0);

// True if any two edges intersect anywhere but at a shared tree vertex.
bool has_crossings(const SpiralTree& tree);

}  // namespace geocube
