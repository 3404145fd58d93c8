#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "geocube/grid.hpp"
#include "geocube/time.hpp"

namespace geocube {

// One geotagged, timestamped message from one user.
struct Post {
  std::string user_id;
  double lon = 0;
  double lat = 0;
  Timestamp timestamp{};
  std::string text;
  bool flu_flag = false;

  bool operator==(const Post&) const = default;
};

// Lowercase keyword stems. A token matches an entry when it equals the entry
// or is the entry followed by one of the suffixes s, es, ed, ing.
class IliDictionary {
 public:
  explicit IliDictionary(std::vector<std::string> entries);

  // {flu, cough, sneeze, fever}
  static IliDictionary defaults();
  // One keyword per line; blank lines and lines starting with '#' are skipped.
  static IliDictionary load(const std::filesystem::path& path);

  bool matches_token(std::string_view lowercase_token) const;
  const std::vector<std::string>& entries() const { return entries_; }

 private:
  std::vector<std::string> entries_;
};

bool classify_ili(std::string_view text, const IliDictionary& dict);

enum class InputFormat { kJsonLines, kCsv };
InputFormat parse_input_format(std::string_view name);

// Parses one JSON-lines record. Throws Error(kMalformedRecord) or
// Error(kOutOfBounds) for coordinates outside the study area.
Post parse_record(std::string_view line, const BoundingBox& bbox = kStudyArea);
std::string serialize_record(const Post& post);

// CSV with header naming user_id, lon, lat, timestamp, text (any order).
class CsvHeader {
 public:
  explicit CsvHeader(std::string_view header_line);
  Post parse(std::string_view line, const BoundingBox& bbox = kStudyArea) const;

 private:
  int user_id_ = -1, lon_ = -1, lat_ = -1, timestamp_ = -1, text_ = -1;
  std::size_t width_ = 0;
};

// RFC 4180 field splitting (quoted fields, doubled quotes).
std::vector<std::string> split_csv_line(std::string_view line);

// Result of pulling one line from a source.
struct RecordResult {
  enum class Status { kOk, kMalformed, kOutOfBounds };
  Status status = Status::kOk;
  std::optional<Post> post;
  std::string error;
};

// Seam for post sources: files today, a streaming client could slot in here.
class PostSource {
 public:
  virtual ~PostSource() = default;
  // std::nullopt at end of stream.
  virtual std::optional<RecordResult> next() = 0;
};

class FileSource final : public PostSource {
 public:
  // Throws Error(kUnreadableInput).
  FileSource(const std::filesystem::path& path, InputFormat format,
             const BoundingBox& bbox = kStudyArea);
  std::optional<RecordResult> next() override;

 private:
  std::ifstream in_;
  InputFormat format_;
  BoundingBox bbox_;
  std::optional<CsvHeader> header_;
};

class VectorSource final : public PostSource {
 public:
  explicit VectorSource(std::vector<Post> posts) : posts_(std::move(posts)) {}
  std::optional<RecordResult> next() override;

 private:
  std::vector<Post> posts_;
  std::size_t pos_ = 0;
};

struct SynthConfig {
  int n_users = 100;
  double duration_hours = 24.0 * 7;
  double posts_per_user_per_day = 5.0;  // at most 24: one Bernoulli trial per hour
  double travel_probability = 0.02;
  double ili_probability = 0.02;
  std::uint64_t rng_seed = 1;
  Timestamp start = default_epoch();
  BoundingBox bbox = kStudyArea;

  void validate() const;
};

// Neighbourhood radius that bounds every non-travel post around home.
inline constexpr double kSynthHomeRadiusKm = 5.0;

// Home-anchored walk with rare long-range trips; sorted by timestamp,
// deterministic for a seed.
std::vector<Post> synth_stream(const SynthConfig& cfg);

// Homes chosen by synth_stream, exposed for fixtures.
std::vector<LonLat> synth_homes(const SynthConfig& cfg);

// Scripted origin-destination fixture: for each entry `count` fresh users post
// once at `origin` then once at `dest`, both inside [start, start + 1h).
struct ScriptedTrip {
  LonLat origin;
  LonLat dest;
  int count = 0;
};
std::vector<Post> scripted_od_stream(const std::vector<ScriptedTrip>& trips, Timestamp start);

}  // namespace geocube
