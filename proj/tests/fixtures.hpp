#pragma once
// Stream fixtures and table checks shared by the unit and acceptance tests.

#include <cmath>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "geocube/cube.hpp"
#include "geocube/snapshot.hpp"
#include "oracle.hpp"

namespace fixtures {

using namespace geocube;

inline std::unique_ptr<TrajectoryStore> store_of(const std::vector<Post>& posts) {
  auto store = std::make_unique<TrajectoryStore>();
  VectorSource src(posts);
  ingest(src, *store, IliDictionary::defaults(), true);
  return store;
}

inline std::vector<Post> synth(std::uint64_t seed, int users = 200, double days = 7) {
  SynthConfig cfg;
  cfg.n_users = users;
  cfg.duration_hours = 24 * days;
  cfg.rng_seed = seed;
  cfg.travel_probability = 0.05;
  cfg.ili_probability = 0.03;
  return synth_stream(cfg);
}

// Users walk monotonically north-east with strictly increasing times, so no
// user ever returns to a cuboid at any level. Each user's ILI status is
// constant: flagged on the first post (and the stream stays within 7 days) or
// never.
inline std::vector<Post> chain_stream(std::uint64_t seed, int users) {
  const GridPyramid grid;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> col0(6000, 6400), row0(4000, 4400), step(0, 3), pause(1, 400);
  std::uniform_int_distribution<int> count(1, 25), start(0, 24 * 3600);
  std::bernoulli_distribution flu(0.3);
  std::uniform_real_distribution<double> jitter(0.1, 0.9);
  std::vector<Post> posts;
  for (int u = 0; u < users; ++u) {
    int col = col0(rng), row = row0(rng);
    std::int64_t t = start(rng);
    const bool sick = flu(rng);
    const std::string id = "c" + std::to_string(u);
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      Post p;
      p.user_id = id;
      const double w = grid.base_cell_deg();
      p.lon = grid.bbox().lon_min + (col + jitter(rng)) * w;
      p.lat = grid.bbox().lat_min + (row + jitter(rng)) * w;
      p.timestamp = grid.epoch() + std::chrono::seconds{t};
      p.text = sick && i == 0 ? "down with the flu" : "walking";
      posts.push_back(p);
      col += step(rng);
      row += step(rng) / 2;
      t += pause(rng) * 30;
    }
  }
  return posts;
}

// Users bounce between two adjacent base cells and their infection status
// flips, so roll-ups see many internal moves and home changes.
inline std::vector<Post> bounce_stream(int users) {
  const GridPyramid grid;
  std::vector<Post> posts;
  for (int u = 0; u < users; ++u) {
    const std::string id = "b" + std::to_string(u);
    for (int i = 0; i < 12; ++i) {
      const int col = 7000 + 2 * (u % 5) + (i == 1 || i == 2 ? 1 : (i > 2 ? (i + 1) % 2 : 0));
      const LonLat c = grid.cell_center({1, col, 5000});
      Post p{id, c.x(), c.y(), grid.epoch() + std::chrono::hours(u % 3) + std::chrono::minutes(4 * i),
             i == 5 ? "fever" : "here", false};
      posts.push_back(p);
    }
  }
  return posts;
}

// N users posting in one cell at hour 2k and again at hour 2k+1.
inline std::vector<Post> two_interval_stream(int n, int k = 3) {
  const GridPyramid grid;
  const LonLat c = grid.cell_center({1, 5100, 4100});
  std::vector<Post> posts;
  for (int u = 0; u < n; ++u) {
    const std::string id = "w" + std::to_string(u);
    const auto t1 = grid.epoch() + std::chrono::hours(2 * k) + std::chrono::minutes(u % 60);
    const auto t2 = grid.epoch() + std::chrono::hours(2 * k + 1) + std::chrono::minutes((u * 7) % 60);
    posts.push_back({id, c.x(), c.y(), t1, "a", false});
    posts.push_back({id, c.x(), c.y(), t2, "b", false});
  }
  return posts;
}

inline bool close_rel(double a, double b, double rel) {
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

// Compares one level table with the oracle. Distributive measures and flows
// must match exactly; holistic counts only when `holistic` is set. Returns an
// empty string on success, otherwise the first mismatch.
inline std::string compare_table(const LevelTable& tab, const oracle::Table& ref, bool holistic) {
  std::ostringstream err;
  if (tab.facts().size() != ref.facts.size()) {
    err << "fact count " << tab.facts().size() << " vs " << ref.facts.size();
    return err.str();
  }
  for (const auto& [k, f] : tab.facts()) {
    auto it = ref.facts.find({packed_col(k), packed_row(k), packed_interval(k)});
    if (it == ref.facts.end()) return "unexpected cuboid";
    const oracle::Fact& r = it->second;
    const auto n = [](const std::set<std::string>& s) { return static_cast<std::int64_t>(s.size()); };
    auto at = [&](const char* what, std::int64_t got, std::int64_t want) {
      if (got != want && err.tellp() == 0) {
        err << what << " at " << packed_col(k) << ',' << packed_row(k) << ',' << packed_interval(k) << ": "
            << got << " vs " << want;
      }
    };
    at("A", f.A, r.A);
    at("O", f.O, r.O);
    at("I", f.I, r.I);
    if (holistic) {
      at("V", f.V, n(r.visitors));
      at("V_flu", f.V_flu, n(r.flu_visitors));
      at("R", f.R, n(r.residents));
    }
    if (r.A > 0 && (!close_rel(f.S.x(), r.sum_lon / r.A, 1e-9) || !close_rel(f.S.y(), r.sum_lat / r.A, 1e-9))) {
      if (err.tellp() == 0) err << "S mismatch";
    }
    if (r.A == 0 && f.has_centroid()) err << "centroid without activity";
    if (err.tellp() != 0) return err.str();
  }
  if (tab.flows().size() != ref.flows.size()) {
    err << "flow count " << tab.flows().size() << " vs " << ref.flows.size();
    return err.str();
  }
  for (const auto& fl : tab.flows()) {
    const oracle::Key o{packed_col(fl.origin), packed_row(fl.origin), packed_interval(fl.origin)};
    const oracle::Key d{packed_col(fl.dest), packed_row(fl.dest), packed_interval(fl.dest)};
    auto it = ref.flows.find({o, d});
    if (it == ref.flows.end()) return "unexpected flow";
    if (it->second.F != fl.m.F || it->second.F_flu != fl.m.F_flu || it->second.F_migration != fl.m.F_migration) {
      err << "flow measures " << fl.m.F << '/' << fl.m.F_flu << '/' << fl.m.F_migration << " vs "
          << it->second.F << '/' << it->second.F_flu << '/' << it->second.F_migration;
      return err.str();
    }
  }
  return {};
}

// Constraint suite over one table: returns the number of violations.
inline std::size_t violations(const LevelTable& tab) {
  std::size_t bad = 0;
  for (const auto& [k, f] : tab.facts()) bad += satisfies_constraints(f) ? 0 : 1;
  for (const auto& fl : tab.flows()) {
    if (fl.origin == fl.dest) ++bad;
    if (fl.m.F_flu > fl.m.F || fl.m.F < 0 || fl.m.F_flu < 0 || fl.m.F_migration < 0) ++bad;
  }
  return bad;
}

// Table reached from the base by a random sequence of spatial and temporal steps.
inline LevelTable random_path(const Cube& cube, int s, int t, Group g, std::mt19937_64& rng) {
  std::vector<Axis> steps(s - 1, Axis::kSpatial);
  steps.insert(steps.end(), t - 1, Axis::kTemporal);
  std::shuffle(steps.begin(), steps.end(), rng);
  if (steps.empty()) return cube.table(1, 1, g);
  LevelTable cur = rollup(cube.table(1, 1, g), steps.front());
  for (std::size_t i = 1; i < steps.size(); ++i) cur = rollup(cur, steps[i]);
  return cur;
}

}  // namespace fixtures
