#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "geocube/errors.hpp"
#include "geocube/geojson.hpp"
#include "geocube/region.hpp"
#include "geocube/service.hpp"

// After Eigen: resolv.h, pulled in here, defines a macro named _res.
#include <httplib.h>

namespace geocube {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("geocube_test_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

void write_lines(const fs::path& p, const std::vector<std::string>& lines) {
  std::ofstream out(p);
  for (const auto& l : lines) out << l << '\n';
}

void write_posts(const fs::path& p, const std::vector<Post>& posts) {
  std::ofstream out(p);
  for (const auto& post : posts) out << serialize_record(post) << '\n';
}

Json body(const ApiResponse& r) { return Json::parse(r.body); }

TEST(IngestFile, EmptyFileLeavesSnapshotUntouched) {
  TempDir dir;
  write_lines(dir / "empty.jsonl", {});
  const auto r = ingest_file(dir / "snap", dir / "empty.jsonl", InputFormat::kJsonLines, false, IliDictionary::defaults());
  EXPECT_EQ(r.accepted, 0u);
  EXPECT_EQ(r.malformed, 0u);
  EXPECT_EQ(r.out_of_bounds, 0u);
  EXPECT_EQ(r.version, 0);
  EXPECT_FALSE(SnapshotDir(dir / "snap").manifest().has_value());
  EXPECT_THROW(Service(dir / "snap"), Error);
}

TEST(IngestFile, CountsDedupAndVersions) {
  TempDir dir;
  write_lines(dir / "in.jsonl",
              {R"({"user_id":"a","lon":-118.40,"lat":33.94,"timestamp":"2014-01-29T16:00:00Z","text":"at LAX"})",
               R"({"user_id":"a","lon":-118.30,"lat":34.00,"timestamp":"2014-01-29T17:00:00Z","text":"flu"})",
               R"({"user_id":"b","lon":-112.07,"lat":33.45,"timestamp":"2014-01-29T16:30:00Z","text":"hot"})",
               R"({"user_id":"b","lon":-112.07,"timestamp":"2014-01-29T16:40:00Z","text":"broken"})"});
  const auto snap = dir / "snap";
  const auto r1 = ingest_file(snap, dir / "in.jsonl", InputFormat::kJsonLines, false, IliDictionary::defaults());
  EXPECT_EQ(r1.accepted, 3u);
  EXPECT_EQ(r1.malformed, 1u);
  EXPECT_EQ(r1.out_of_bounds, 0u);
  EXPECT_EQ(r1.version, 1);
  const auto r2 = ingest_file(snap, dir / "in.jsonl", InputFormat::kJsonLines, false, IliDictionary::defaults());
  EXPECT_EQ(r2.accepted, 0u);
  EXPECT_EQ(r2.duplicates, 3u);
  EXPECT_EQ(r2.version, 1);
  const auto m = SnapshotDir(snap).require_manifest();
  EXPECT_EQ(m.post_count, 3u);
  EXPECT_EQ(m.user_count, 2u);
  const auto store = SnapshotDir(snap).load_trajectories(m);
  EXPECT_EQ(store->post_count(), 3u);
  EXPECT_TRUE(store->find("a")->footprints().back().flu_flag);
  EXPECT_THROW(ingest_file(snap, dir / "missing.jsonl", InputFormat::kJsonLines, false, IliDictionary::defaults()),
               Error);
}

TEST(IngestFile, UnsortedInputNeedsSortFlag) {
  TempDir dir;
  write_lines(dir / "in.csv", {"user_id,lon,lat,timestamp,text", "a,-100,40,2014-01-02T05:00:00Z,late",
                               "a,-100.1,40,2014-01-02T04:00:00Z,early", "b,-100,40,2014-01-02T01:00:00Z,x",
                               "c,20,40,2014-01-02T01:00:00Z,far"});
  try {
    ingest_file(dir / "snap", dir / "in.csv", InputFormat::kCsv, false, IliDictionary::defaults());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnsortedInput);
  }
  EXPECT_FALSE(SnapshotDir(dir / "snap").manifest().has_value());
  const auto r = ingest_file(dir / "snap", dir / "in.csv", InputFormat::kCsv, true, IliDictionary::defaults());
  EXPECT_EQ(r.accepted, 3u);
  EXPECT_EQ(r.out_of_bounds, 1u);
  const auto store = SnapshotDir(dir / "snap").load_trajectories(SnapshotDir(dir / "snap").require_manifest());
  EXPECT_EQ(store->find("a")->footprints().front().timestamp, parse_iso8601("2014-01-02T04:00:00Z"));
}

TEST(IngestFile, EarlierThanStoredCountsOutOfOrder) {
  TempDir dir;
  write_lines(dir / "a.jsonl", {R"({"user_id":"a","lon":-100,"lat":40,"timestamp":"2014-01-05T00:00:00Z","text":"x"})"});
  write_lines(dir / "b.jsonl", {R"({"user_id":"a","lon":-100,"lat":40,"timestamp":"2014-01-04T00:00:00Z","text":"x"})",
                                R"({"user_id":"a","lon":-100,"lat":40,"timestamp":"2014-01-06T00:00:00Z","text":"x"})"});
  ingest_file(dir / "snap", dir / "a.jsonl", InputFormat::kJsonLines, false, IliDictionary::defaults());
  const auto r = ingest_file(dir / "snap", dir / "b.jsonl", InputFormat::kJsonLines, false, IliDictionary::defaults());
  EXPECT_EQ(r.accepted, 1u);
  EXPECT_EQ(r.out_of_order, 1u);
  EXPECT_EQ(r.version, 2);
}

TEST(Snapshot, TrajectoriesRoundTrip) {
  const auto store = fixtures::store_of(fixtures::synth(3, 50, 2));
  std::stringstream ss;
  write_trajectories(*store, ss);
  const auto back = read_trajectories(ss, store->grid());
  EXPECT_EQ(back->post_count(), store->post_count());
  EXPECT_EQ(back->user_count(), store->user_count());
  store->for_each([&](const Trajectory& t) {
    const auto o = back->find(t.user_id());
    ASSERT_TRUE(o.has_value());
    ASSERT_EQ(o->size(), t.size());
    EXPECT_EQ(o->home_cell(), t.home_cell());
    EXPECT_EQ(o->migration_log(), t.migration_log());
    for (std::size_t i = 0; i < t.size(); ++i) {
      EXPECT_EQ(o->footprints()[i].timestamp, t.footprints()[i].timestamp);
      EXPECT_EQ(o->footprints()[i].flu_flag, t.footprints()[i].flu_flag);
      EXPECT_EQ(o->footprints()[i].position, t.footprints()[i].position);
    }
  });
}

TEST(Snapshot, PublishCubeWritesTables) {
  TempDir dir;
  SnapshotDir snap(dir.path());
  const auto store = fixtures::store_of(fixtures::synth(4, 60, 2));
  snap.publish(*store);
  const Cube cube(*store);
  const auto m = snap.publish_cube(cube, 1, 3, 1, 2);
  EXPECT_EQ(m.version, 2);
  for (const char* role : {"trajectories", "spatial_dim", "temporal_dim", "cuboid_facts", "flow_facts"}) {
    ASSERT_TRUE(m.files.count(role)) << role;
    EXPECT_TRUE(fs::exists(dir.path() / m.files.at(role))) << role;
  }
  std::ifstream facts(dir.path() / m.files.at("cuboid_facts"));
  std::string header;
  std::getline(facts, header);
  EXPECT_NE(header.find("V_flu"), std::string::npos);
  std::size_t rows = 0;
  for (std::string line; std::getline(facts, line);) ++rows;
  std::size_t want = 0;
  for (Group g : {Group::kAll, Group::kIli}) {
    for (int s = 1; s <= 3; ++s) {
      for (int t = 1; t <= 2; ++t) want += cube.table(s, t, g).facts().size();
    }
  }
  EXPECT_EQ(rows, want);
  std::ifstream flows(dir.path() / m.files.at("flow_facts"));
  std::getline(flows, header);
  EXPECT_EQ(header, "origin_cell,dest_cell,interval_id,dest_interval_id,group,F,F_flu,F_migration");
}

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    posts_ = fixtures::synth(77, 300, 7);
    const auto extra = scripted_od_stream({{{-118.24, 34.05}, {-112.07, 33.45}, 40}, {{-112.07, 33.45}, {-118.24, 34.05}, 25}},
                                          default_epoch() + std::chrono::hours(200));
    posts_.insert(posts_.end(), extra.begin(), extra.end());
    write_posts(dir_ / "in.jsonl", posts_);
    report_ = ingest_file(dir_ / "snap", dir_ / "in.jsonl", InputFormat::kJsonLines, true, IliDictionary::defaults());
    service_ = std::make_unique<Service>(dir_ / "snap");
  }

  ApiResponse get(const std::string& path, std::multimap<std::string, std::string> params = {}) const {
    return service_->handle("GET", path, params);
  }

  TempDir dir_;
  std::vector<Post> posts_;
  IngestReport report_;
  std::unique_ptr<Service> service_;
};

TEST_F(ServiceTest, HealthAndRegionTotalMatchesIngest) {
  const auto h = body(get("/healthz"));
  EXPECT_EQ(h["status"], "ok");
  EXPECT_EQ(h["version"], 1);
  EXPECT_EQ(h["post_count"], report_.accepted);
  EXPECT_EQ(report_.accepted, posts_.size());
  const GridPyramid grid;
  const auto& b = grid.bbox();
  const Json poly = {{"type", "Polygon"},
                     {"coordinates",
                      {{{b.lon_min, b.lat_min}, {b.lon_max, b.lat_min}, {b.lon_max, b.lat_max}, {b.lon_min, b.lat_max},
                        {b.lon_min, b.lat_min}}}}};
  const ApiResponse r = service_->handle("POST", "/cube/region", {}, Json{{"polygon", poly}}.dump());
  ASSERT_EQ(r.status, 200) << r.body;
  const auto j = body(r);
  EXPECT_EQ(j["fact"]["A"], report_.accepted);
  EXPECT_EQ(j["base_cells"], std::int64_t{grid.cols(1)} * grid.rows(1));
}

TEST_F(ServiceTest, CellsSumToRegionActivity) {
  const std::string bbox = "-119.5,33,-111,35";
  const auto cells = body(get("/cube/cells", {{"level", "6"}, {"bbox", bbox}, {"t0", "2014-01-02T00:00:00Z"},
                                              {"t1", "2014-01-06T00:00:00Z"}}));
  std::int64_t a = 0;
  ASSERT_FALSE(cells["cells"].empty());
  for (const auto& c : cells["cells"]) {
    const Json& f = c;
    a += f["A"].get<std::int64_t>();
    CuboidFact cf;
    cf.A = f["A"];
    cf.V = f["V"];
    cf.O = f["O"];
    cf.I = f["I"];
    cf.R = f["R"];
    cf.V_flu = f["V_flu"];
    EXPECT_TRUE(satisfies_constraints(cf));
  }
  // Region over the union of those cells, same window.
  const GridPyramid grid;
  std::vector<CellAddress> list;
  for (const auto& c : cells["cells"]) list.push_back(CellAddress::parse(c["cell"].get<std::string>()));
  const auto store = SnapshotDir(dir_ / "snap").load_trajectories(SnapshotDir(dir_ / "snap").require_manifest());
  const Cube cube(*store);
  const CuboidFact f = cube.region_aggregate(Region::from_cells(list, grid),
                                             {parse_iso8601("2014-01-02T00:00:00Z"), parse_iso8601("2014-01-06T00:00:00Z")},
                                             Group::kAll);
  EXPECT_EQ(f.A, a);
}

TEST_F(ServiceTest, FlowsAndSingleSourceAgree) {
  const GridPyramid grid;
  const std::string la = grid.cell(LonLat(-118.24, 34.05), 2).to_string();
  const auto flows = body(get("/flows", {{"src", la}, {"t0", "2014-01-01T00:00:00Z"}, {"days", "10"}}));
  const auto tree = body(get("/flows/single-source", {{"cell", la}, {"level", "2"}, {"t0", "2014-01-01T00:00:00Z"}, {"days", "10"}}));
  ASSERT_FALSE(flows["flows"].empty());
  EXPECT_EQ(tree["root_outflow"], flows["total"]["F"]);
  EXPECT_EQ(tree["total_flow"], flows["total"]["F"]);
  EXPECT_EQ(tree["type"], "FeatureCollection");
  for (std::size_t i = 1; i < flows["flows"].size(); ++i) {
    EXPECT_GE(flows["flows"][i - 1]["F"].get<std::int64_t>(), flows["flows"][i]["F"].get<std::int64_t>());
  }
  const std::string la4 = grid.cell(LonLat(-118.24, 34.05), 4).to_string();
  const std::string phx4 = grid.cell(LonLat(-112.07, 33.45), 4).to_string();
  const auto od = body(get("/flows", {{"src", la4}, {"dst", phx4}, {"t0", "2014-01-09T08:00:00Z"}, {"t1", "2014-01-09T09:00:00Z"}}));
  ASSERT_EQ(od["flows"].size(), 1u);
  EXPECT_EQ(od["flows"][0]["F"], 40);
}

TEST_F(ServiceTest, MultiSourceLabelsPairs) {
  const auto r = get("/flows/multi", {{"level", "4"}, {"bbox", "-125,30,-105,40"}, {"global_fraction", "1"},
                                      {"t0", "2014-01-09T08:00:00Z"}, {"t1", "2014-01-09T09:00:00Z"}});
  ASSERT_EQ(r.status, 200) << r.body;
  const auto j = body(r);
  bool found = false;
  for (const auto& f : j["features"]) {
    EXPECT_EQ(f["geometry"]["type"], "LineString");
    if (f["properties"]["label"] == "Flow#: (40, 25)") found = true;
  }
  EXPECT_TRUE(found) << j.dump();
  EXPECT_TRUE(j.contains("critical_nodes"));
}

TEST_F(ServiceTest, RiskSurface) {
  const auto j = body(get("/risk", {{"level", "5"}, {"bandwidth_km", "30"}}));
  std::size_t flu = 0;
  for (const auto& p : posts_) flu += classify_ili(p.text, IliDictionary::defaults()) ? 1 : 0;
  EXPECT_EQ(j["points"], flu);
  EXPECT_NEAR(j["mass"].get<double>(), static_cast<double>(flu), 0.01 * static_cast<double>(flu));
}

TEST_F(ServiceTest, ErrorsAreStructured) {
  auto expect = [&](const ApiResponse& r, int status, const std::string& code) {
    EXPECT_EQ(r.status, status) << r.body;
    const auto j = body(r);
    EXPECT_EQ(j["code"], code) << r.body;
    EXPECT_TRUE(j["message"].is_string());
  };
  expect(get("/flows", {{"src", "L3:99999:1"}}), 404, "NotFound");
  expect(get("/flows", {{"src", "nonsense"}}), 400, "InvalidArgument");
  expect(get("/flows", {}), 400, "InvalidArgument");
  expect(get("/cube/cells", {}), 400, "InvalidArgument");
  expect(get("/cube/cells", {{"level", "11"}}), 400, "InvalidArgument");
  expect(get("/cube/cells", {{"level", "3"}, {"bbox", "1,2,3"}}), 400, "InvalidArgument");
  expect(get("/cube/cells", {{"level", "3"}, {"group", "sick"}}), 400, "InvalidArgument");
  expect(get("/cube/cells", {{"level", "3"}, {"t0", "2014-01-05T00:00:00Z"}, {"t1", "2014-01-04T00:00:00Z"}}), 400,
         "InvalidArgument");
  expect(get("/flows/single-source", {{"cell", "L2:10:10"}, {"angle", "95"}}), 400, "InvalidArgument");
  expect(get("/nope"), 404, "NotFound");
  expect(service_->handle("POST", "/cube/region", {}, "{"), 400, "InvalidArgument");
  expect(service_->handle("POST", "/cube/region", {}, R"({"polygon":{"type":"Point","coordinates":[0,0]}})"), 400,
         "InvalidArgument");
}

TEST_F(ServiceTest, HttpServingAndHotReload) {
  const int port = service_->start(0, std::chrono::milliseconds(50));
  ASSERT_GT(port, 0);
  httplib::Client client("127.0.0.1", port);
  auto res = client.Get("/healthz");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(Json::parse(res->body)["version"], 1);
  res = client.Get("/flows?src=L3:99999:1");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);

  Service other(dir_ / "snap");
  try {
    other.start(port);
    FAIL() << "second bind succeeded";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPortInUse);
  }

  write_lines(dir_ / "more.jsonl",
              {R"({"user_id":"late","lon":-100,"lat":40,"timestamp":"2014-01-03T00:00:00Z","text":"new"})"});
  ingest_file(dir_ / "snap", dir_ / "more.jsonl", InputFormat::kJsonLines, false, IliDictionary::defaults());
  std::int64_t seen = 1;
  for (int i = 0; i < 100 && seen < 2; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    res = client.Get("/healthz");
    ASSERT_TRUE(res);
    seen = Json::parse(res->body)["version"].get<std::int64_t>();
  }
  EXPECT_EQ(seen, 2);
  EXPECT_EQ(Json::parse(client.Get("/healthz")->body)["post_count"], report_.accepted + 1);
  service_->stop();
}

TEST(GeoJson, ParsePolygonForms) {
  const Json geom = {{"type", "Polygon"}, {"coordinates", {{{-100, 40}, {-99, 40}, {-99, 41}, {-100, 40}}}}};
  EXPECT_EQ(parse_polygon(geom).at(0).size(), 4u);
  EXPECT_EQ(parse_polygon({{"type", "Feature"}, {"geometry", geom}}).size(), 1u);
  EXPECT_EQ(parse_polygon({{"type", "FeatureCollection"}, {"features", {{{"type", "Feature"}, {"geometry", geom}}}}}).size(), 1u);
  EXPECT_THROW(parse_polygon(Json{{"type", "LineString"}}), Error);
  CuboidFact f;
  EXPECT_TRUE(to_json(f)["S"].is_null());
}

}  // namespace
}  // namespace geocube
