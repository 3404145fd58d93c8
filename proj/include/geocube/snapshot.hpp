#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "geocube/cube.hpp"
#include "geocube/ingest.hpp"
#include "geocube/trajectory.hpp"

namespace geocube {

struct SnapshotManifest {
  std::int64_t version = 0;
  Timestamp created_at{};
  std::size_t post_count = 0;
  std::size_t user_count = 0;
  // Role ("trajectories", "cuboid_facts", ...) -> file name in the directory.
  std::map<std::string, std::string> files;
};

struct IngestReport {
  std::size_t accepted = 0;
  std::size_t malformed = 0;
  std::size_t out_of_bounds = 0;
  std::size_t duplicates = 0;
  std::size_t out_of_order = 0;  // earlier than the user's stored trajectory
  std::int64_t version = 0;      // snapshot version after the run
};

// Classifies, de-duplicates on (user_id, timestamp) and appends the posts.
// Without `sort`, a user whose posts go backwards in time raises
// Error(kUnsortedInput) before anything is appended.
IngestReport ingest(PostSource& source, TrajectoryStore& store, const IliDictionary& dict,
                    bool sort);

// A snapshot directory: manifest.json plus versioned data files. Publishing
// writes the data files first and renames the manifest into place, so a
// reader sees the old or the new version, never a mix.
class SnapshotDir {
 public:
  explicit SnapshotDir(std::filesystem::path dir) : dir_(std::move(dir)) {}

  const std::filesystem::path& path() const { return dir_; }
  std::optional<SnapshotManifest> manifest() const;
  // Throws Error(kSnapshotMissing) without a manifest.
  SnapshotManifest require_manifest() const;
  std::unique_ptr<TrajectoryStore> load_trajectories(const SnapshotManifest& m) const;

  SnapshotManifest publish(const TrajectoryStore& store);
  // Writes the dimension and fact tables as CSV and publishes them with the
  // current trajectories under a new version.
  SnapshotManifest publish_cube(const Cube& cube, int s_first, int s_last, int t_first, int t_last);

 private:
  void write_manifest(const SnapshotManifest& m) const;

  std::filesystem::path dir_;
};

// Loads the snapshot (if any), ingests the file and publishes a new version
// when at least one post was accepted.
IngestReport ingest_file(const std::filesystem::path& snapshot_dir, const std::filesystem::path& input,
                         InputFormat format, bool sort, const IliDictionary& dict);

// Trajectory file lines: {"user_id": ..., "footprints": [[lon, lat, "ts", flu], ...]}.
void write_trajectories(const TrajectoryStore& store, std::ostream& out);
std::unique_ptr<TrajectoryStore> read_trajectories(std::istream& in, const GridPyramid& grid);

void write_cube_csv(const Cube& cube, const std::filesystem::path& dir, const std::string& suffix,
                    int s_first, int s_last, int t_first, int t_last,
                    std::map<std::string, std::string>& files);

}  // namespace geocube
