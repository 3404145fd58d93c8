#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <random>

#include "geocube/errors.hpp"
#include "geocube/ingest.hpp"

namespace geocube {
namespace {

// Metro anchors for homes and trips.
constexpr std::array<std::array<double, 2>, 15> kMetros{{
    {-118.24, 34.05}, {-122.42, 37.77}, {-115.14, 36.17}, {-112.07, 33.45}, {-104.99, 39.74},
    {-111.89, 40.76}, {-87.63, 41.88},  {-74.00, 40.71},  {-71.06, 42.36},  {-84.39, 33.75},
    {-96.80, 32.78},  {-122.33, 47.61}, {-79.38, 43.65},  {-99.13, 19.43},  {-80.19, 25.76},
}};

constexpr std::array<const char*, 6> kIliTexts{
    "I have the flu today",   "coughing all night, feverish", "fever again ugh",
    "so many sneezes at work", "flu shot did not help",       "this cough will not stop"};
constexpr std::array<const char*, 7> kPlainTexts{
    "lovely weather in the city", "at the game tonight",  "coffee time",
    "heading to work",            "the influence of art", "great dinner with friends",
    "traffic is terrible"};

constexpr double kHomeSpreadKm = 15.0;
constexpr double kLocalStepKm = 1.2;
constexpr double kTripSpreadKm = 8.0;
constexpr double kReturnProbability = 0.35;

class Walker {
 public:
  explicit Walker(std::mt19937_64& rng) : rng_(rng) {}

  LonLat offset(const LonLat& anchor, double sigma_km, double max_km) {
    std::normal_distribution<double> n(0.0, sigma_km);
    const LocalProjection proj(anchor);
    for (;;) {
      const LonLat p = proj.to_lonlat(Eigen::Vector2d(n(rng_), n(rng_)));
      if (max_km <= 0 || great_circle_km(p, anchor) <= max_km) return p;
    }
  }

  LonLat metro(std::size_t i) const { return {kMetros[i][0], kMetros[i][1]}; }

 private:
  std::mt19937_64& rng_;
};

LonLat clamp_to(const BoundingBox& b, LonLat p) {
  p.x() = std::clamp(p.x(), b.lon_min, b.lon_max);
  p.y() = std::clamp(p.y(), b.lat_min, b.lat_max);
  return p;
}

std::vector<LonLat> draw_homes(const SynthConfig& cfg, std::mt19937_64& rng) {
  Walker w(rng);
  std::uniform_int_distribution<std::size_t> pick(0, kMetros.size() - 1);
  std::vector<LonLat> homes;
  homes.reserve(cfg.n_users);
  for (int u = 0; u < cfg.n_users; ++u) {
    const LonLat anchor = w.metro(pick(rng));
    homes.push_back(clamp_to(cfg.bbox, w.offset(anchor, kHomeSpreadKm, 3 * kHomeSpreadKm)));
  }
  return homes;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_users < 1) throw Error(ErrorCode::kInvalidArgument, "n_users must be >= 1");
  if (!(duration_hours > 0)) throw Error(ErrorCode::kInvalidArgument, "duration must be positive");
  if (posts_per_user_per_day < 0 || posts_per_user_per_day > 24) {
    throw Error(ErrorCode::kInvalidArgument, "posts_per_user_per_day must be in [0, 24]");
  }
  auto prob = [](double p) { return p >= 0 && p <= 1; };
  if (!prob(travel_probability) || !prob(ili_probability)) {
    throw Error(ErrorCode::kInvalidArgument, "probabilities must be in [0, 1]");
  }
}

std::vector<LonLat> synth_homes(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.rng_seed);
  return draw_homes(cfg, rng);
}

std::vector<Post> synth_stream(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.rng_seed);
  const std::vector<LonLat> homes = draw_homes(cfg, rng);
  Walker walker(rng);

  const double p_post = cfg.posts_per_user_per_day / 24.0;
  const auto total_seconds = static_cast<std::int64_t>(std::llround(cfg.duration_hours * 3600));
  const std::int64_t n_hours = (total_seconds + kSecondsPerHour - 1) / kSecondsPerHour;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick_metro(0, kMetros.size() - 1);

  std::vector<Post> posts;
  for (int u = 0; u < cfg.n_users; ++u) {
    char id[16];
    std::snprintf(id, sizeof id, "u%05d", u);
    const LonLat home = homes[u];
    std::optional<LonLat> trip;
    for (std::int64_t h = 0; h < n_hours; ++h) {
      if (unit(rng) >= p_post) continue;
      const std::int64_t span = std::min<std::int64_t>(kSecondsPerHour, total_seconds - h * kSecondsPerHour);
      std::uniform_int_distribution<std::int64_t> second(0, span - 1);
      Post p;
      p.user_id = id;
      p.timestamp = cfg.start + std::chrono::seconds{h * kSecondsPerHour + second(rng)};

      if (trip && unit(rng) < kReturnProbability) trip.reset();
      if (!trip && unit(rng) < cfg.travel_probability) {
        trip = walker.offset(walker.metro(pick_metro(rng)), kTripSpreadKm, 3 * kTripSpreadKm);
      }
      const LonLat anchor = trip ? *trip : home;
      LonLat loc = walker.offset(anchor, kLocalStepKm, kSynthHomeRadiusKm);
      if (!cfg.bbox.contains(loc.x(), loc.y())) loc = clamp_to(cfg.bbox, anchor);
      p.lon = loc.x();
      p.lat = loc.y();
      p.text = unit(rng) < cfg.ili_probability ? kIliTexts[rng() % kIliTexts.size()]
                                               : kPlainTexts[rng() % kPlainTexts.size()];
      posts.push_back(std::move(p));
    }
  }
  std::stable_sort(posts.begin(), posts.end(), [](const Post& a, const Post& b) {
    return a.timestamp < b.timestamp;
  });
  return posts;
}

std::vector<Post> scripted_od_stream(const std::vector<ScriptedTrip>& trips, Timestamp start) {
  std::vector<Post> posts;
  int user = 0;
  for (const auto& trip : trips) {
    for (int i = 0; i < trip.count; ++i, ++user) {
      char id[16];
      std::snprintf(id, sizeof id, "od%05d", user);
      const auto depart = start + std::chrono::seconds{(user % 1700)};
      posts.push_back({id, trip.origin.x(), trip.origin.y(), depart, "leaving", false});
      posts.push_back({id, trip.dest.x(), trip.dest.y(), depart + std::chrono::seconds{1800},
                       "arrived", false});
    }
  }
  std::stable_sort(posts.begin(), posts.end(), [](const Post& a, const Post& b) {
    return a.timestamp < b.timestamp;
  });
  return posts;
}

}  // namespace geocube
