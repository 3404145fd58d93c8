#include "geocube/snapshot.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "geocube/errors.hpp"

namespace geocube {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifest = "manifest.json";

void write_atomically(const fs::path& target, const std::string& content) {
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kUnreadableInput, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::kUnreadableInput, "write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string num(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

std::string wkt_box(const BoundingBox& b) {
  auto pt = [](double x, double y) { return num(x) + " " + num(y); };
  return "POLYGON((" + pt(b.lon_min, b.lat_min) + ", " + pt(b.lon_max, b.lat_min) + ", " +
         pt(b.lon_max, b.lat_max) + ", " + pt(b.lon_min, b.lat_max) + ", " + pt(b.lon_min, b.lat_min) + "))";
}

struct UserKey {
  std::string user;
  std::int64_t ts;
  bool operator==(const UserKey&) const = default;
};
struct UserKeyHash {
  std::size_t operator()(const UserKey& k) const {
    return std::hash<std::string>{}(k.user) ^ (std::hash<std::int64_t>{}(k.ts) * 0x9E3779B97F4A7C15ULL);
  }
};

}  // namespace

IngestReport ingest(PostSource& source, TrajectoryStore& store, const IliDictionary& dict, bool sort) {
  IngestReport report;
  std::vector<Post> posts;
  while (auto r = source.next()) {
    switch (r->status) {
      case RecordResult::Status::kMalformed: ++report.malformed; break;
      case RecordResult::Status::kOutOfBounds: ++report.out_of_bounds; break;
      case RecordResult::Status::kOk: posts.push_back(std::move(*r->post)); break;
    }
  }
  if (sort) {
    std::stable_sort(posts.begin(), posts.end(),
                     [](const Post& a, const Post& b) { return a.timestamp < b.timestamp; });
  } else {
    std::unordered_map<std::string, Timestamp> last;
    for (const auto& p : posts) {
      auto [it, fresh] = last.try_emplace(p.user_id, p.timestamp);
      if (!fresh && p.timestamp < it->second) {
        throw Error(ErrorCode::kUnsortedInput, "posts for " + p.user_id +
                                                   " are not in timestamp order; rerun with --sort");
      }
      it->second = p.timestamp;
    }
  }
  std::unordered_set<UserKey, UserKeyHash> seen;
  for (auto& p : posts) {
    UserKey key{p.user_id, seconds_since_epoch(p.timestamp)};
    if (seen.count(key) || store.contains(p.user_id, p.timestamp)) {
      ++report.duplicates;
      continue;
    }
    const auto last = store.last_timestamp(p.user_id);
    if (last && p.timestamp < *last) {
      ++report.out_of_order;
      continue;
    }
    p.flu_flag = classify_ili(p.text, dict);
    store.append_post(p);
    seen.insert(std::move(key));
    ++report.accepted;
  }
  return report;
}

void write_trajectories(const TrajectoryStore& store, std::ostream& out) {
  store.for_each([&](const Trajectory& t) {
    json fps = json::array();
    for (const auto& f : t.footprints()) {
      fps.push_back(json::array({f.position.x(), f.position.y(), format_iso8601(f.timestamp), f.flu_flag ? 1 : 0}));
    }
    out << json{{"user_id", t.user_id()}, {"footprints", fps}}.dump() << '\n';
  });
}

std::unique_ptr<TrajectoryStore> read_trajectories(std::istream& in, const GridPyramid& grid) {
  auto store = std::make_unique<TrajectoryStore>(grid);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      std::vector<Footprint> fps;
      for (const auto& f : j.at("footprints")) {
        Footprint fp;
        fp.position = LonLat(f.at(0).get<double>(), f.at(1).get<double>());
        fp.timestamp = parse_iso8601(f.at(2).get<std::string>());
        fp.flu_flag = f.at(3).get<int>() != 0;
        fps.push_back(fp);
      }
      store->insert(Trajectory::replay(j.at("user_id").get<std::string>(), fps, grid));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kSnapshotMissing,
                  "corrupt trajectory file at line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return store;
}

std::optional<SnapshotManifest> SnapshotDir::manifest() const {
  std::ifstream in(dir_ / kManifest);
  if (!in) return std::nullopt;
  json j;
  try {
    in >> j;
    SnapshotManifest m;
    m.version = j.at("version").get<std::int64_t>();
    m.created_at = parse_iso8601(j.at("created_at").get<std::string>());
    m.post_count = j.at("post_count").get<std::size_t>();
    m.user_count = j.at("user_count").get<std::size_t>();
    m.files = j.at("files").get<std::map<std::string, std::string>>();
    return m;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kSnapshotMissing, "unreadable manifest: " + std::string(e.what()));
  }
}

SnapshotManifest SnapshotDir::require_manifest() const {
  auto m = manifest();
  if (!m) throw Error(ErrorCode::kSnapshotMissing, "no snapshot manifest in " + dir_.string());
  return *m;
}

std::unique_ptr<TrajectoryStore> SnapshotDir::load_trajectories(const SnapshotManifest& m) const {
  auto it = m.files.find("trajectories");
  if (it == m.files.end()) return std::make_unique<TrajectoryStore>();
  std::ifstream in(dir_ / it->second);
  if (!in) throw Error(ErrorCode::kSnapshotMissing, "missing trajectory file " + it->second);
  return read_trajectories(in, GridPyramid{});
}

void SnapshotDir::write_manifest(const SnapshotManifest& m) const {
  const json j = {{"version", m.version},
                  {"created_at", format_iso8601(m.created_at)},
                  {"post_count", m.post_count},
                  {"user_count", m.user_count},
                  {"files", m.files}};
  write_atomically(dir_ / kManifest, j.dump(2) + "\n");
}

SnapshotManifest SnapshotDir::publish(const TrajectoryStore& store) {
  fs::create_directories(dir_);
  const auto previous = manifest();
  SnapshotManifest m;
  m.version = previous ? previous->version + 1 : 1;
  m.created_at = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  m.post_count = store.post_count();
  m.user_count = store.user_count();
  const std::string name = "trajectories.v" + std::to_string(m.version) + ".jsonl";
  std::ostringstream body;
  write_trajectories(store, body);
  write_atomically(dir_ / name, body.str());
  m.files["trajectories"] = name;
  write_manifest(m);
  return m;
}

SnapshotManifest SnapshotDir::publish_cube(const Cube& cube, int s_first, int s_last, int t_first,
                                           int t_last) {
  SnapshotManifest m = require_manifest();
  ++m.version;
  m.created_at = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  std::map<std::string, std::string> files{{"trajectories", m.files.at("trajectories")}};
  write_cube_csv(cube, dir_, ".v" + std::to_string(m.version), s_first, s_last, t_first, t_last, files);
  m.files = files;
  write_manifest(m);
  return m;
}

void write_cube_csv(const Cube& cube, const fs::path& dir, const std::string& suffix, int s_first,
                    int s_last, int t_first, int t_last, std::map<std::string, std::string>& files) {
  const GridPyramid& grid = cube.grid();
  if (s_first < 1 || s_last > grid.levels() || s_first > s_last || t_first < 1 ||
      t_last > grid.time_levels() || t_first > t_last) {
    throw Error(ErrorCode::kInvalidArgument, "level range out of bounds");
  }
  std::set<CellAddress> cells;
  std::set<IntervalAddress> intervals;
  std::ostringstream facts, flows;
  facts << "cell_id,interval_id,group,R,V,A,O,I,S_lon,S_lat,V_flu\n";
  flows << "origin_cell,dest_cell,interval_id,dest_interval_id,group,F,F_flu,F_migration\n";
  for (Group g : {Group::kAll, Group::kIli}) {
    for (int t = t_first; t <= t_last; ++t) {
      for (int s = s_first; s <= s_last; ++s) {
        const LevelTable& tab = cube.table(s, t, g);
        for (const auto& [k, f] : tab.facts()) {
          const CuboidKey key = tab.key(k);
          cells.insert(key.cell);
          intervals.insert(key.interval);
          facts << key.cell.to_string() << ',' << key.interval.to_string() << ',' << to_string(g) << ','
                << f.R << ',' << f.V << ',' << f.A << ',' << f.O << ',' << f.I << ',' << num(f.S.x())
                << ',' << num(f.S.y()) << ',' << f.V_flu << '\n';
        }
        for (const auto& fl : tab.flows()) {
          const CuboidKey o = tab.key(fl.origin);
          const CuboidKey d = tab.key(fl.dest);
          flows << o.cell.to_string() << ',' << d.cell.to_string() << ',' << o.interval.to_string() << ','
                << d.interval.to_string() << ',' << to_string(g) << ',' << fl.m.F << ',' << fl.m.F_flu
                << ',' << fl.m.F_migration << '\n';
        }
      }
    }
  }
  std::ostringstream sdim, tdim;
  sdim << "cell_id,level,geometry\n";
  for (const auto& c : cells) sdim << c.to_string() << ',' << c.level << ',' << csv_quote(wkt_box(grid.cell_bounds(c))) << '\n';
  tdim << "interval_id,level,start,end\n";
  for (const auto& iv : intervals) {
    tdim << iv.to_string() << ',' << iv.level << ',' << format_iso8601(grid.interval_start(iv)) << ','
         << format_iso8601(grid.interval_end(iv)) << '\n';
  }
  const std::pair<const char*, std::string> tables[] = {
      {"spatial_dim", sdim.str()}, {"temporal_dim", tdim.str()}, {"cuboid_facts", facts.str()}, {"flow_facts", flows.str()}};
  for (const auto& [role, body] : tables) {
    const std::string name = std::string(role) + suffix + ".csv";
    write_atomically(dir / name, body);
    files[role] = name;
  }
}

IngestReport ingest_file(const fs::path& snapshot_dir, const fs::path& input, InputFormat format,
                         bool sort, const IliDictionary& dict) {
  SnapshotDir snap(snapshot_dir);
  const auto m = snap.manifest();
  std::unique_ptr<TrajectoryStore> store =
      m ? snap.load_trajectories(*m) : std::make_unique<TrajectoryStore>();
  FileSource source(input, format);
  IngestReport report = ingest(source, *store, dict, sort);
  report.version = m ? m->version : 0;
  if (report.accepted > 0) report.version = snap.publish(*store).version;
  return report;
}

}  // namespace geocube
