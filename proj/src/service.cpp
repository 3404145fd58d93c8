#include "geocube/service.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "geocube/errors.hpp"
#include "geocube/flowmap.hpp"
#include "geocube/geojson.hpp"
#include "geocube/region.hpp"
#include "geocube/risk.hpp"

namespace geocube {
namespace {

using Params = std::multimap<std::string, std::string>;

Error bad(const std::string& msg) { return Error(ErrorCode::kInvalidArgument, msg); }

std::optional<std::string> get(const Params& p, const std::string& key) {
  auto it = p.find(key);
  if (it == p.end()) return std::nullopt;
  return it->second;
}

int get_int(const Params& p, const std::string& key, std::optional<int> fallback) {
  auto v = get(p, key);
  if (!v) {
    if (!fallback) throw bad("missing parameter " + key);
    return *fallback;
  }
  try {
    std::size_t used = 0;
    const int out = std::stoi(*v, &used);
    if (used != v->size()) throw bad("");
    return out;
  } catch (const std::exception&) {
    throw bad("parameter " + key + " is not an integer");
  }
}

double get_double(const Params& p, const std::string& key, double fallback) {
  auto v = get(p, key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const double out = std::stod(*v, &used);
    if (used != v->size() || !std::isfinite(out)) throw bad("");
    return out;
  } catch (const std::exception&) {
    throw bad("parameter " + key + " is not a number");
  }
}

int level_param(const Params& p, const GridPyramid& grid, std::optional<int> fallback) {
  const int level = get_int(p, "level", fallback);
  if (level < 1 || level > grid.levels()) throw bad("level must be in 1.." + std::to_string(grid.levels()));
  return level;
}

Group group_param(const Params& p) {
  auto v = get(p, "group");
  if (!v) return Group::kAll;
  try {
    return parse_group(*v);
  } catch (const Error&) {
    throw bad("group must be all or ili");
  }
}

Timestamp parse_time(const std::string& v, const std::string& key) {
  try {
    return parse_iso8601(v);
  } catch (const Error&) {
    throw bad("parameter " + key + " is not an ISO-8601 UTC time");
  }
}

TimeWindow window_param(const Params& p) {
  TimeWindow w = TimeWindow::everything();
  if (auto t0 = get(p, "t0")) w.begin = parse_time(*t0, "t0");
  if (auto t1 = get(p, "t1")) {
    w.end = parse_time(*t1, "t1");
  } else if (get(p, "days")) {
    if (!get(p, "t0")) throw bad("days requires t0");
    const double days = get_double(p, "days", 0);
    if (!(days > 0)) throw bad("days must be positive");
    w.end = w.begin + std::chrono::seconds(static_cast<std::int64_t>(std::llround(days * kSecondsPerDay)));
  }
  if (w.end <= w.begin) throw bad("time window is empty");
  return w;
}

BoundingBox bbox_param(const Params& p, const GridPyramid& grid) {
  auto v = get(p, "bbox");
  if (!v) return grid.bbox();
  std::vector<double> vals;
  std::stringstream ss(*v);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      vals.push_back(std::stod(part));
    } catch (const std::exception&) {
      throw bad("bbox must be lon_min,lat_min,lon_max,lat_max");
    }
  }
  if (vals.size() != 4 || vals[0] > vals[2] || vals[1] > vals[3]) {
    throw bad("bbox must be lon_min,lat_min,lon_max,lat_max");
  }
  return {vals[0], vals[2], vals[1], vals[3]};
}

CellAddress cell_value(const std::string& v, const GridPyramid& grid) {
  CellAddress c;
  try {
    c = CellAddress::parse(v);
  } catch (const Error&) {
    throw bad("cell '" + v + "' is not of the form L{level}:{col}:{row}");
  }
  if (c.level < 1 || c.level > grid.levels()) throw bad("cell level out of range");
  if (!grid.valid(c)) throw Error(ErrorCode::kNotFound, "unknown cell " + v);
  return c;
}

std::vector<CellAddress> cells_param(const Params& p, const std::string& key, const GridPyramid& grid) {
  std::vector<CellAddress> out;
  for (auto [it, end] = p.equal_range(key); it != end; ++it) {
    std::stringstream ss(it->second);
    std::string part;
    while (std::getline(ss, part, ',')) out.push_back(cell_value(part, grid));
  }
  return out;
}

Json flow_rows_json(const std::vector<FlowRow>& rows) {
  Json list = Json::array();
  FlowMeasures total;
  for (const auto& r : rows) {
    Json j = to_json(r.measures);
    j["origin"] = r.origin.to_string();
    j["dest"] = r.dest.to_string();
    list.push_back(std::move(j));
    total += r.measures;
  }
  return {{"flows", list}, {"total", to_json(total)}};
}

ApiResponse ok(Json j, std::int64_t version) {
  j["version"] = version;
  return {200, j.dump()};
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kSnapshotMissing: return 503;
    default: return 400;
  }
}

}  // namespace

std::shared_ptr<const ServiceState> load_state(const SnapshotDir& dir) {
  auto state = std::make_shared<ServiceState>();
  state->manifest = dir.require_manifest();
  state->store = dir.load_trajectories(state->manifest);
  state->cube = std::make_unique<Cube>(*state->store);
  state->store->for_each([&](const Trajectory& t) {
    for (const auto& f : t.footprints()) {
      if (f.flu_flag) state->flu_points.emplace_back(f.timestamp, f.position);
    }
  });
  std::sort(state->flu_points.begin(), state->flu_points.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return state;
}

Service::Service(std::filesystem::path snapshot_dir) : dir_(std::move(snapshot_dir)) {
  state_ = load_state(dir_);
}

Service::~Service() { stop(); }

std::shared_ptr<const ServiceState> Service::state() const {
  std::lock_guard lock(mutex_);
  return state_;
}

std::int64_t Service::version() const { return state()->manifest.version; }

bool Service::reload_if_changed() {
  const auto m = dir_.manifest();
  if (!m || m->version <= version()) return false;
  auto fresh = load_state(dir_);
  std::lock_guard lock(mutex_);
  if (fresh->manifest.version <= state_->manifest.version) return false;
  state_ = std::move(fresh);
  return true;
}

ApiResponse Service::handle(const std::string& method, const std::string& path, const Params& params,
                            const std::string& body) const {
  const auto st = state();  // one snapshot for the whole request
  const Cube& cube = *st->cube;
  const GridPyramid& grid = cube.grid();
  const std::int64_t version = st->manifest.version;
  try {
    if (path == "/healthz") {
      return ok({{"status", "ok"}, {"post_count", st->manifest.post_count}, {"user_count", st->manifest.user_count}},
                version);
    }
    if (path == "/cube/cells") {
      const int level = level_param(params, grid, std::nullopt);
      const auto cells = cube.cells(level, bbox_param(params, grid), window_param(params), group_param(params));
      Json list = Json::array();
      for (const auto& [c, f] : cells) {
        Json j = to_json(f);
        j["cell"] = c.to_string();
        list.push_back(std::move(j));
      }
      return ok({{"level", level}, {"cells", list}}, version);
    }
    if (path == "/cube/region") {
      if (method != "POST") throw bad("/cube/region expects POST");
      Json req;
      try {
        req = Json::parse(body);
      } catch (const Json::exception&) {
        throw bad("request body is not JSON");
      }
      if (!req.is_object()) throw bad("request body must be an object");
      const Json* geom = req.contains("polygon") ? &req["polygon"] : req.contains("geometry") ? &req["geometry"] : nullptr;
      if (!geom) throw bad("request needs a polygon");
      Params wp;
      for (const char* key : {"t0", "t1", "group", "days"}) {
        if (req.contains(key)) wp.emplace(key, req[key].is_string() ? req[key].get<std::string>() : req[key].dump());
      }
      const Region region = Region::from_polygon(parse_polygon(*geom), grid);
      if (region.empty()) throw Error(ErrorCode::kEmptyRegion, "polygon holds no base-cell centers");
      const CuboidFact f = cube.region_aggregate(region, window_param(wp), group_param(wp));
      return ok({{"fact", to_json(f)}, {"base_cells", region.base_cell_count()}, {"pieces", region.pieces().size()}},
                version);
    }
    if (path == "/flows") {
      const auto src = cells_param(params, "src", grid);
      if (src.empty()) throw bad("missing parameter src");
      const auto dst = cells_param(params, "dst", grid);
      if (get(params, "level") && level_param(params, grid, std::nullopt) != src.front().level) {
        throw bad("level does not match the cell addresses");
      }
      const auto rows = cube.flow_query(src, dst, window_param(params), group_param(params));
      return ok(flow_rows_json(rows), version);
    }
    if (path == "/flows/single-source") {
      auto v = get(params, "cell");
      if (!v) throw bad("missing parameter cell");
      const CellAddress src = cell_value(*v, grid);
      if (get(params, "level") && level_param(params, grid, std::nullopt) != src.level) {
        throw bad("level does not match the cell address");
      }
      const double angle = get_double(params, "angle", 25.0);
      if (!(angle > 0 && angle < 90)) throw bad("angle must be in (0, 90)");
      const auto rows = cube.flow_query(std::span(&src, 1), {}, window_param(params), group_param(params));
      std::vector<SpiralDest> dests;
      std::int64_t total = 0;
      for (const auto& r : rows) {
        if (r.measures.F <= 0) continue;
        dests.push_back({grid.cell_center(r.dest), r.measures.F, r.measures.F_flu});
        total += r.measures.F;
      }
      Json out = {{"type", "FeatureCollection"}, {"features", Json::array()}, {"root_outflow", 0}};
      if (!dests.empty()) out = tree_geojson(single_source_tree(grid.cell_center(src), dests, angle));
      out["source"] = src.to_string();
      out["total_flow"] = total;
      return ok(out, version);
    }
    if (path == "/flows/multi") {
      const int level = level_param(params, grid, 4);
      const BoundingBox bbox = bbox_param(params, grid);
      const TimeWindow w = window_param(params);
      const Group g = group_param(params);
      const double fraction = get_double(params, "global_fraction", 0.2);
      const int local_k = get_int(params, "local_k", 1);
      const int radius = get_int(params, "radius", 2);
      if (!(fraction > 0 && fraction <= 1)) throw bad("global_fraction must be in (0, 1]");
      if (local_k < 1 || radius < 0) throw bad("local_k >= 1 and radius >= 0 required");

      std::vector<CellAddress> cells;
      for (const auto& [c, f] : cube.cells(level, bbox, w, g)) cells.push_back(c);
      Json out = {{"type", "FeatureCollection"}, {"features", Json::array()}};
      if (cells.empty()) return ok(out, version);
      const auto rows = cube.flow_query(cells, cells, w, g);
      const FlowGraph graph = FlowGraph::from_rows(rows, [&](const CellAddress& c) { return grid.cell_center(c); });
      if (graph.nodes.empty()) return ok(out, version);
      auto keep = critical_nodes(graph, fraction, radius, local_k);
      if (keep.empty()) {
        keep.resize(graph.nodes.size());
        for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = i;
      }
      const FlowGraph sub = graph.induced(keep);
      std::map<std::pair<std::size_t, std::size_t>, std::int64_t> weight;
      for (const auto& e : sub.edges) weight[{e.origin, e.dest}] += e.F;
      std::vector<LayoutPolyline> lines;
      for (std::size_t i = 0; i < sub.edges.size(); ++i) {
        const auto& e = sub.edges[i];
        lines.push_back({i, {sub.nodes[e.origin].centroid, sub.nodes[e.dest].centroid}, static_cast<double>(e.F), e.F_flu, -1});
      }
      auto bundled = fdeb_bundle(lines);
      std::vector<int> ids;
      corridor_count(bundled, 2.0 * grid.cell_size_deg(level) * kKmPerDegree, &ids);
      for (std::size_t i = 0; i < bundled.size(); ++i) bundled[i].bundle_id = ids[i];
      out = lines_geojson(bundled);
      for (std::size_t i = 0; i < sub.edges.size(); ++i) {
        const auto& e = sub.edges[i];
        auto back = weight.find({e.dest, e.origin});
        const std::int64_t f_ba = back == weight.end() ? 0 : back->second;
        auto& props = out["features"][i]["properties"];
        props["origin"] = sub.nodes[e.origin].cell.to_string();
        props["dest"] = sub.nodes[e.dest].cell.to_string();
        props["label"] = "Flow#: (" + std::to_string(e.F) + ", " + std::to_string(f_ba) + ")";
      }
      Json nodes = Json::array();
      for (const auto& n : sub.nodes) {
        nodes.push_back({{"cell", n.cell.to_string()}, {"in_degree", n.in_degree}, {"out_degree", n.out_degree}});
      }
      out["critical_nodes"] = nodes;
      return ok(out, version);
    }
    if (path == "/risk") {
      const int level = level_param(params, grid, 4);
      const double bandwidth = get_double(params, "bandwidth_km", 25.0);
      if (!(bandwidth > 0)) throw bad("bandwidth_km must be positive");
      const TimeWindow w = window_param(params);
      std::vector<LonLat> pts;
      for (const auto& [t, p] : st->flu_points) {
        if (w.contains(t)) pts.push_back(p);
      }
      Json out = risk_json(flu_risk_surface(pts, bandwidth, level, grid), grid);
      out["points"] = pts.size();
      return ok(out, version);
    }
    return {404, Json{{"code", "NotFound"}, {"message", "no endpoint " + path}}.dump()};
  } catch (const Error& e) {
    return {status_for(e.code()), Json{{"code", std::string(to_string(e.code()))}, {"message", e.what()}}.dump()};
  }
}

int Service::start(int port, std::chrono::milliseconds reload_interval) {
  if (running_) throw bad("service already running");
  server_ = std::make_unique<httplib::Server>();
  // httplib's default adds SO_REUSEPORT, which lets a second server share the port.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    Params params(req.params.begin(), req.params.end());
    const ApiResponse r = handle(req.method, req.path, params, req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  server_->Get(".*", route);
  server_->Post(".*", route);

  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port("127.0.0.1");
    if (bound < 0) throw Error(ErrorCode::kPortInUse, "could not bind any port");
  } else if (!server_->bind_to_port("127.0.0.1", port)) {
    throw Error(ErrorCode::kPortInUse, "port " + std::to_string(port) + " is in use");
  }
  running_ = true;
  server_thread_ = std::thread([this] { server_->listen_after_bind(); });
  reload_thread_ = std::thread([this, reload_interval] {
    while (running_) {
      std::this_thread::sleep_for(reload_interval);
      try {
        reload_if_changed();
      } catch (const std::exception&) {
        // Keep serving the current snapshot until a readable one appears.
      }
    }
  });
  server_->wait_until_ready();
  return bound;
}

void Service::stop() {
  if (!running_.exchange(false)) return;
  server_->stop();
  if (server_thread_.joinable()) server_thread_.join();
  if (reload_thread_.joinable()) reload_thread_.join();
}

void Service::serve(int port) {
  start(port);
  if (server_thread_.joinable()) server_thread_.join();
}

}  // namespace geocube
