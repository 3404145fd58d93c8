#include "geocube/trajectory.hpp"

#include <algorithm>
#include <cmath>

#include "geocube/errors.hpp"

namespace geocube {
namespace {

BaseCell base_cell_of(const GridPyramid& grid, double lon, double lat) {
  const CellAddress c = grid.cell(lon, lat, 1);
  return {c.col, c.row};
}

BaseCell unpack_cell(std::uint32_t packed) {
  return {static_cast<int>(packed >> 14), static_cast<int>(packed & 0x3FFF)};
}

}  // namespace

void Trajectory::append(const Post& p, const GridPyramid& grid) {
  if (!footprints_.empty() && p.timestamp < footprints_.back().timestamp) {
    throw Error(ErrorCode::kOutOfOrderPost,
                "post for " + user_id_ + " at " + format_iso8601(p.timestamp) +
                    " is earlier than the last footprint");
  }
  Footprint fp;
  fp.position = LonLat(p.lon, p.lat);
  fp.timestamp = p.timestamp;
  fp.flu_flag = p.flu_flag;
  fp.cell = base_cell_of(grid, p.lon, p.lat);

  auto& v = visits_[fp.cell.packed()];
  if (v.count == 0) v.first_seen = footprints_.size();
  ++v.count;
  footprints_.push_back(fp);
  update_home(fp.cell, p.timestamp);
  footprints_.back().home = *home_;

  if (p.flu_flag) {
    flu_times_.push_back(p.timestamp);
    const Timestamp until = p.timestamp + kInfectionPeriod;
    if (!infection_until_ || *infection_until_ < until) infection_until_ = until;
  }
  sum_lon_ += p.lon;
  sum_lat_ += p.lat;
  update_gyration();
}

void Trajectory::update_home(BaseCell cell, Timestamp t) {
  if (!home_) {
    home_ = cell;
    return;
  }
  if (*home_ == cell) return;
  // Only `cell` changed count, so the argmax either stays or moves to it.
  const Visits& cand = visits_.at(cell.packed());
  const Visits& cur = visits_.at(home_->packed());
  if (cand.count > cur.count || (cand.count == cur.count && cand.first_seen < cur.first_seen)) {
    migrations_.push_back({*home_, cell, t});
    home_ = cell;
  }
}

void Trajectory::update_gyration() {
  // Centroid is O(1) from the running sums; the great-circle RMS has no
  // sufficient statistic, so the squared distances are re-accumulated.
  const LonLat c = centroid();
  double sum_sq = 0;
  for (const auto& f : footprints_) {
    const double d = great_circle_km(f.position, c);
    sum_sq += d * d;
  }
  gyration_km_ = std::sqrt(sum_sq / static_cast<double>(footprints_.size()));
}

std::optional<BaseCell> Trajectory::home_cell() const { return home_; }

std::unordered_map<std::uint32_t, int> Trajectory::visit_counts() const {
  std::unordered_map<std::uint32_t, int> out;
  for (const auto& [k, v] : visits_) out.emplace(k, v.count);
  return out;
}

LonLat Trajectory::centroid() const {
  if (footprints_.empty()) throw Error(ErrorCode::kEmptyTrajectory, "trajectory has no footprints");
  const double n = static_cast<double>(footprints_.size());
  return {sum_lon_ / n, sum_lat_ / n};
}

bool Trajectory::is_infected(Timestamp t) const {
  // Last diagnosis at or before t.
  auto it = std::upper_bound(flu_times_.begin(), flu_times_.end(), t);
  if (it == flu_times_.begin()) return false;
  --it;
  return t - *it <= kInfectionPeriod;
}

bool Trajectory::has_footprint_at(Timestamp t) const {
  auto it = std::lower_bound(footprints_.begin(), footprints_.end(), t,
                             [](const Footprint& f, Timestamp ts) { return f.timestamp < ts; });
  return it != footprints_.end() && it->timestamp == t;
}

std::vector<Move> Trajectory::extract_moves() const {
  std::vector<Move> moves;
  if (footprints_.size() < 2) return moves;
  moves.reserve(footprints_.size() - 1);
  for (std::size_t i = 1; i < footprints_.size(); ++i) {
    const Footprint& a = footprints_[i - 1];
    const Footprint& b = footprints_[i];
    moves.push_back({user_id_, a.position, b.position, a.timestamp, b.timestamp,
                     is_infected(a.timestamp) || is_infected(b.timestamp)});
  }
  return moves;
}

Trajectory Trajectory::replay(std::string user_id, const std::vector<Footprint>& footprints,
                              const GridPyramid& grid) {
  Trajectory t(std::move(user_id));
  for (const auto& f : footprints) {
    t.append({t.user_id_, f.position.x(), f.position.y(), f.timestamp, "", f.flu_flag}, grid);
  }
  return t;
}

double radius_of_gyration(const Trajectory& traj) {
  const auto& fps = traj.footprints();
  if (fps.empty()) throw Error(ErrorCode::kEmptyTrajectory, "trajectory has no footprints");
  LonLat c = LonLat::Zero();
  for (const auto& f : fps) c += f.position;
  c /= static_cast<double>(fps.size());
  double sum_sq = 0;
  for (const auto& f : fps) {
    const double d = great_circle_km(f.position, c);
    sum_sq += d * d;
  }
  return std::sqrt(sum_sq / static_cast<double>(fps.size()));
}

BaseCell home_location(const Trajectory& traj) {
  const auto& fps = traj.footprints();
  if (fps.empty()) throw Error(ErrorCode::kEmptyTrajectory, "trajectory has no footprints");
  std::unordered_map<std::uint32_t, std::pair<int, std::size_t>> counts;
  for (std::size_t i = 0; i < fps.size(); ++i) {
    auto [it, fresh] = counts.try_emplace(fps[i].cell.packed(), 0, i);
    ++it->second.first;
  }
  std::uint32_t best = 0;
  int best_count = -1;
  std::size_t best_first = 0;
  for (const auto& [cell, cf] : counts) {
    if (cf.first > best_count || (cf.first == best_count && cf.second < best_first)) {
      best = cell;
      best_count = cf.first;
      best_first = cf.second;
    }
  }
  return unpack_cell(best);
}

TrajectoryStore::TrajectoryStore(const TrajectoryStore& other) : grid_(other.grid_) {
  for (std::size_t i = 0; i < kShards; ++i) {
    std::shared_lock lock(other.shards_[i].mutex);
    for (const auto& [id, t] : other.shards_[i].users) {
      shards_[i].users.emplace(id, std::make_unique<Trajectory>(*t));
    }
  }
}

TrajectoryStore::Shard& TrajectoryStore::shard_for(const std::string& user_id) {
  return shards_[std::hash<std::string>{}(user_id) % kShards];
}
const TrajectoryStore::Shard& TrajectoryStore::shard_for(const std::string& user_id) const {
  return shards_[std::hash<std::string>{}(user_id) % kShards];
}

void TrajectoryStore::append_post(const Post& p) {
  Shard& s = shard_for(p.user_id);
  std::unique_lock lock(s.mutex);
  auto it = s.users.find(p.user_id);
  if (it == s.users.end()) {
    auto traj = std::make_unique<Trajectory>(p.user_id);
    traj->append(p, grid_);
    s.users.emplace(p.user_id, std::move(traj));
    return;
  }
  it->second->append(p, grid_);
}

void TrajectoryStore::insert(Trajectory traj) {
  Shard& s = shard_for(traj.user_id());
  std::unique_lock lock(s.mutex);
  const std::string id = traj.user_id();
  s.users[id] = std::make_unique<Trajectory>(std::move(traj));
}

std::size_t TrajectoryStore::user_count() const {
  std::size_t n = 0;
  for (const auto& s : shards_) {
    std::shared_lock lock(s.mutex);
    n += s.users.size();
  }
  return n;
}

std::size_t TrajectoryStore::post_count() const {
  std::size_t n = 0;
  for (const auto& s : shards_) {
    std::shared_lock lock(s.mutex);
    for (const auto& [id, t] : s.users) n += t->size();
  }
  return n;
}

bool TrajectoryStore::contains(const std::string& user_id, Timestamp t) const {
  const Shard& s = shard_for(user_id);
  std::shared_lock lock(s.mutex);
  auto it = s.users.find(user_id);
  return it != s.users.end() && it->second->has_footprint_at(t);
}

std::optional<Timestamp> TrajectoryStore::last_timestamp(const std::string& user_id) const {
  const Shard& s = shard_for(user_id);
  std::shared_lock lock(s.mutex);
  auto it = s.users.find(user_id);
  if (it == s.users.end() || it->second->empty()) return std::nullopt;
  return it->second->footprints().back().timestamp;
}

std::optional<Trajectory> TrajectoryStore::find(const std::string& user_id) const {
  const Shard& s = shard_for(user_id);
  std::shared_lock lock(s.mutex);
  auto it = s.users.find(user_id);
  if (it == s.users.end()) return std::nullopt;
  return *it->second;
}

std::vector<const Trajectory*> TrajectoryStore::sorted() const {
  std::vector<const Trajectory*> out;
  for (const auto& s : shards_) {
    std::shared_lock lock(s.mutex);
    for (const auto& [id, t] : s.users) out.push_back(t.get());
  }
  std::sort(out.begin(), out.end(),
            [](const Trajectory* a, const Trajectory* b) { return a->user_id() < b->user_id(); });
  return out;
}

void TrajectoryStore::for_each(const std::function<void(const Trajectory&)>& fn) const {
  for (const Trajectory* t : sorted()) fn(*t);
}

}  // namespace geocube
