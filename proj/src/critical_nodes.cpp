#include <algorithm>
#include <cmath>
#include <map>

#include "geocube/errors.hpp"
#include "geocube/flowmap.hpp"

namespace geocube {

FlowGraph FlowGraph::from_rows(std::span<const FlowRow> rows,
                               const std::function<LonLat(const CellAddress&)>& centroid) {
  FlowGraph g;
  std::map<CellAddress, std::size_t> index;
  auto node = [&](const CellAddress& c) {
    auto [it, fresh] = index.try_emplace(c, g.nodes.size());
    if (fresh) g.nodes.push_back({c, centroid(c), 0, 0});
    return it->second;
  };
  for (const auto& r : rows) {
    if (r.measures.F <= 0 || r.origin == r.dest) continue;
    const std::size_t o = node(r.origin);
    const std::size_t d = node(r.dest);
    g.edges.push_back({o, d, r.measures.F, r.measures.F_flu});
    g.nodes[o].out_degree += r.measures.F;
    g.nodes[d].in_degree += r.measures.F;
  }
  return g;
}

FlowGraph FlowGraph::induced(std::span<const std::size_t> keep) const {
  FlowGraph g;
  std::vector<long> remap(nodes.size(), -1);
  for (std::size_t i : keep) {
    remap[i] = static_cast<long>(g.nodes.size());
    g.nodes.push_back({nodes[i].cell, nodes[i].centroid, 0, 0});
  }
  for (const auto& e : edges) {
    if (remap[e.origin] < 0 || remap[e.dest] < 0) continue;
    const auto o = static_cast<std::size_t>(remap[e.origin]);
    const auto d = static_cast<std::size_t>(remap[e.dest]);
    g.edges.push_back({o, d, e.F, e.F_flu});
    g.nodes[o].out_degree += e.F;
    g.nodes[d].in_degree += e.F;
  }
  return g;
}

std::vector<std::size_t> critical_nodes(const FlowGraph& g, double global_fraction,
                                        int neighbor_radius, int local_top_k) {
  if (!(global_fraction > 0 && global_fraction <= 1)) {
    throw Error(ErrorCode::kInvalidArgument, "global_fraction must be in (0, 1]");
  }
  if (neighbor_radius < 0 || local_top_k < 1) {
    throw Error(ErrorCode::kInvalidArgument, "neighbor_radius >= 0 and local_top_k >= 1 required");
  }
  const std::size_t n = g.nodes.size();
  auto ranks_above = [&](std::size_t a, std::size_t b) {
    const auto sa = g.nodes[a].score(), sb = g.nodes[b].score();
    return sa != sb ? sa > sb : g.nodes[a].cell < g.nodes[b].cell;
  };
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), ranks_above);

  const auto global_keep = static_cast<std::size_t>(std::ceil(global_fraction * static_cast<double>(n) - 1e-9));
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < std::min(global_keep, n); ++r) {
    const std::size_t i = order[r];
    const CellAddress& c = g.nodes[i].cell;
    int better = 0;
    for (std::size_t j = 0; j < n && better < local_top_k; ++j) {
      if (j == i) continue;
      const CellAddress& o = g.nodes[j].cell;
      const int dist = std::max(std::abs(o.col - c.col), std::abs(o.row - c.row));
      if (o.level == c.level && dist <= neighbor_radius && ranks_above(j, i)) ++better;
    }
    if (better < local_top_k) out.push_back(i);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace geocube
