#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "geocube/grid.hpp"
#include "geocube/ingest.hpp"

namespace geocube {

inline constexpr std::chrono::seconds kInfectionPeriod{7 * kSecondsPerDay};

// Base-grid (level 1) cell as (col, row).
struct BaseCell {
  int col = 0;
  int row = 0;

  std::uint32_t packed() const { return static_cast<std::uint32_t>(col) << 14 | static_cast<std::uint32_t>(row); }
  CellAddress address() const { return {1, col, row}; }
  auto operator<=>(const BaseCell&) const = default;
};

struct Footprint {
  LonLat position;
  Timestamp timestamp;
  bool flu_flag = false;
  BaseCell cell;
  // Home cell right after this footprint was appended.
  BaseCell home;
};

struct MigrationEvent {
  BaseCell from;
  BaseCell to;
  Timestamp timestamp;

  bool operator==(const MigrationEvent&) const = default;
};

struct Move {
  std::string user_id;
  LonLat from;
  LonLat to;
  Timestamp depart;
  Timestamp arrive;
  bool flu_related = false;
};

// One user's space-time trajectory with its derived measures.
class Trajectory {
 public:
  Trajectory() = default;
  explicit Trajectory(std::string user_id) : user_id_(std::move(user_id)) {}

  // Throws Error(kOutOfOrderPost) if p is earlier than the last footprint and
  // Error(kOutOfBounds) if p lies outside the grid.
  void append(const Post& p, const GridPyramid& grid);

  const std::string& user_id() const { return user_id_; }
  const std::vector<Footprint>& footprints() const { return footprints_; }
  std::size_t size() const { return footprints_.size(); }
  bool empty() const { return footprints_.empty(); }

  std::optional<BaseCell> home_cell() const;
  double gyration_radius_km() const { return gyration_km_; }
  std::optional<Timestamp> infection_until() const { return infection_until_; }
  const std::vector<MigrationEvent>& migration_log() const { return migrations_; }
  // Visit count per base cell: (packed cell -> count).
  std::unordered_map<std::uint32_t, int> visit_counts() const;
  LonLat centroid() const;

  // True iff a flu-flagged footprint lies in [t - 7 days, t].
  bool is_infected(Timestamp t) const;
  bool has_footprint_at(Timestamp t) const;

  std::vector<Move> extract_moves() const;

  // Rebuilds a trajectory from persisted footprints (replays append).
  static Trajectory replay(std::string user_id, const std::vector<Footprint>& footprints,
                           const GridPyramid& grid);

 private:
  struct Visits {
    int count = 0;
    std::size_t first_seen = 0;
  };

  void update_home(BaseCell cell, Timestamp t);
  void update_gyration();

  std::string user_id_;
  std::vector<Footprint> footprints_;
  std::unordered_map<std::uint32_t, Visits> visits_;
  std::optional<BaseCell> home_;
  std::vector<MigrationEvent> migrations_;
  std::vector<Timestamp> flu_times_;
  std::optional<Timestamp> infection_until_;
  double sum_lon_ = 0;
  double sum_lat_ = 0;
  double gyration_km_ = 0;
};

// From-scratch evaluations, independent of the incremental state.
double radius_of_gyration(const Trajectory& traj);
BaseCell home_location(const Trajectory& traj);

// Per-user trajectory store, sharded by user id so appends to distinct users
// can run concurrently. Appends to one user are serialized by its shard lock.
class TrajectoryStore {
 public:
  explicit TrajectoryStore(GridPyramid grid = GridPyramid{}) : grid_(std::move(grid)) {}
  TrajectoryStore(const TrajectoryStore& other);
  TrajectoryStore& operator=(const TrajectoryStore&) = delete;

  void append_post(const Post& p);

  const GridPyramid& grid() const { return grid_; }
  std::size_t user_count() const;
  std::size_t post_count() const;
  bool contains(const std::string& user_id, Timestamp t) const;
  std::optional<Timestamp> last_timestamp(const std::string& user_id) const;

  // Copy of one trajectory (consistent snapshot).
  std::optional<Trajectory> find(const std::string& user_id) const;
  // Visits every trajectory in user-id order.
  void for_each(const std::function<void(const Trajectory&)>& fn) const;
  std::vector<const Trajectory*> sorted() const;

  void insert(Trajectory traj);

 private:
  static constexpr std::size_t kShards = 16;
  struct Shard {
    mutable std::shared_mutex mutex;
    std::unordered_map<std::string, std::unique_ptr<Trajectory>> users;
  };
  Shard& shard_for(const std::string& user_id);
  const Shard& shard_for(const std::string& user_id) const;

  GridPyramid grid_;
  std::array<Shard, kShards> shards_;
};

}  // namespace geocube
