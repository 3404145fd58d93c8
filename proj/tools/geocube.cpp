// geocube command-line tool: synthesize, ingest, roll up, query and serve.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "geocube/errors.hpp"
#include "geocube/geojson.hpp"
#include "geocube/ingest.hpp"
#include "geocube/service.hpp"
#include "geocube/snapshot.hpp"

namespace {

using namespace geocube;

std::pair<int, int> parse_range(const std::string& text, int max) {
  const auto dots = text.find("..");
  try {
    const int lo = std::stoi(text.substr(0, dots));
    const int hi = dots == std::string::npos ? lo : std::stoi(text.substr(dots + 2));
    if (lo < 1 || hi > max || lo > hi) throw std::out_of_range("range");
    return {lo, hi};
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidArgument, "level range '" + text + "' must look like 1..10 within 1.." + std::to_string(max));
  }
}

void write_synth(const std::vector<Post>& posts, const std::string& path, InputFormat format) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kUnreadableInput, "cannot write " + path);
  if (format == InputFormat::kCsv) {
    out << "user_id,lon,lat,timestamp,text\n";
    for (const auto& p : posts) {
      out << p.user_id << ',' << nlohmann::json(p.lon).dump() << ',' << nlohmann::json(p.lat).dump() << ','
          << format_iso8601(p.timestamp) << ",\"" << p.text << "\"\n";
    }
    return;
  }
  for (const auto& p : posts) out << serialize_record(p) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatiotemporal data cube over geotagged post streams"};
  app.require_subcommand(1);

  std::string snapshot = "snapshot";

  auto* ingest_cmd = app.add_subcommand("ingest", "Ingest a post file into the snapshot");
  std::string input, format = "jsonl", dict_path;
  bool sort = false;
  ingest_cmd->add_option("--input", input, "Input file")->required();
  ingest_cmd->add_option("--format", format, "jsonl or csv")->check(CLI::IsMember({"jsonl", "json", "csv"}));
  ingest_cmd->add_flag("--sort", sort, "Sort posts by timestamp before appending");
  ingest_cmd->add_option("--dict", dict_path, "ILI keyword file, one keyword per line");
  ingest_cmd->add_option("--snapshot", snapshot, "Snapshot directory");

  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic post stream");
  SynthConfig cfg;
  double days = 7;
  std::string out_path, synth_format = "jsonl";
  synth_cmd->add_option("--users", cfg.n_users, "Number of users");
  synth_cmd->add_option("--days", days, "Duration in days");
  synth_cmd->add_option("--seed", cfg.rng_seed, "Random seed");
  synth_cmd->add_option("--posts-per-day", cfg.posts_per_user_per_day, "Mean posts per user per day");
  synth_cmd->add_option("--travel", cfg.travel_probability, "Per-post probability of starting a trip");
  synth_cmd->add_option("--ili", cfg.ili_probability, "Per-post probability of ILI text");
  synth_cmd->add_option("--format", synth_format, "jsonl or csv")->check(CLI::IsMember({"jsonl", "csv"}));
  synth_cmd->add_option("--out", out_path, "Output file")->required();

  auto* rollup_cmd = app.add_subcommand("rollup", "Materialize level tables and export them as CSV");
  std::string levels = "1..10", time_levels = "1";
  rollup_cmd->add_option("--levels", levels, "Spatial levels, e.g. 1..10");
  rollup_cmd->add_option("--time-levels", time_levels, "Temporal levels, e.g. 1..3");
  rollup_cmd->add_option("--snapshot", snapshot, "Snapshot directory");

  auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API");
  int port = 8080;
  serve_cmd->add_option("--port", port, "TCP port");
  serve_cmd->add_option("--snapshot", snapshot, "Snapshot directory");

  auto* query_cmd = app.add_subcommand("query", "Query the snapshot");
  query_cmd->require_subcommand(1);
  auto* flows_cmd = query_cmd->add_subcommand("flows", "Origin-destination flows from a cell");
  std::string from, to, t0, t1, group = "all";
  flows_cmd->add_option("--from", from, "Source cell L{level}:{col}:{row}")->required();
  flows_cmd->add_option("--to", to, "Destination cell (default: all)");
  flows_cmd->add_option("--t0", t0, "Window start, ISO-8601 UTC");
  flows_cmd->add_option("--t1", t1, "Window end, ISO-8601 UTC");
  flows_cmd->add_option("--group", group, "all or ili")->check(CLI::IsMember({"all", "ili"}));
  flows_cmd->add_option("--snapshot", snapshot, "Snapshot directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest_cmd) {
      const IliDictionary dict = dict_path.empty() ? IliDictionary::defaults() : IliDictionary::load(dict_path);
      const IngestReport r = ingest_file(snapshot, input, parse_input_format(format), sort, dict);
      std::cout << nlohmann::json{{"accepted", r.accepted},
                                  {"malformed", r.malformed},
                                  {"out_of_bounds", r.out_of_bounds},
                                  {"duplicates", r.duplicates},
                                  {"out_of_order", r.out_of_order},
                                  {"version", r.version}}
                       .dump()
                << '\n';
    } else if (*synth_cmd) {
      cfg.duration_hours = days * 24;
      const auto posts = synth_stream(cfg);
      write_synth(posts, out_path, parse_input_format(synth_format));
      std::cerr << "wrote " << posts.size() << " posts to " << out_path << '\n';
    } else if (*rollup_cmd) {
      const GridPyramid grid;
      const auto [s0, s1] = parse_range(levels, grid.levels());
      const auto [t_lo, t_hi] = parse_range(time_levels, grid.time_levels());
      SnapshotDir dir(snapshot);
      const auto store = dir.load_trajectories(dir.require_manifest());
      const Cube cube(*store);
      const auto m = dir.publish_cube(cube, s0, s1, t_lo, t_hi);
      const auto d = cube.diagnostics();
      std::cout << nlohmann::json{{"version", m.version},
                                  {"files", m.files},
                                  {"clamped", d.clamped},
                                  {"repaired", d.repaired}}
                       .dump()
                << '\n';
    } else if (*serve_cmd) {
      Service service(snapshot);
      std::cerr << "serving snapshot version " << service.version() << " on port " << port << '\n';
      service.serve(port);
    } else if (*query_cmd && *flows_cmd) {
      Service service(snapshot);
      std::multimap<std::string, std::string> params{{"src", from}, {"group", group}};
      if (!to.empty()) params.emplace("dst", to);
      if (!t0.empty()) params.emplace("t0", t0);
      if (!t1.empty()) params.emplace("t1", t1);
      const ApiResponse r = service.handle("GET", "/flows", params);
      std::cout << nlohmann::json::parse(r.body).dump(2) << '\n';
      return r.status == 200 ? 0 : 1;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return 2;
  }
  return 0;
}
