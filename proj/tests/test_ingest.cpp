#include <filesystem>
#include <cstdio>
#include <fstream>
#include <map>

#include <gtest/gtest.h>

#include "geocube/errors.hpp"
#include "geocube/ingest.hpp"

namespace geocube {
namespace {

TEST(Ingest, ParsesJsonRecord) {
  const Post p = parse_record(
      R"({"user_id":"a1","lon":-118.2,"lat":34.0,"timestamp":"2014-01-02T03:04:05Z","text":"hi"})");
  EXPECT_EQ(p.user_id, "a1");
  EXPECT_DOUBLE_EQ(p.lon, -118.2);
  EXPECT_DOUBLE_EQ(p.lat, 34.0);
  EXPECT_EQ(format_iso8601(p.timestamp), "2014-01-02T03:04:05Z");
  EXPECT_EQ(parse_record(serialize_record(p)), p);
}

TEST(Ingest, NumericUserId) {
  const Post p = parse_record(R"({"user_id":42,"lon":-100,"lat":40,"timestamp":"2014-01-02T00:00:00Z","text":""})");
  EXPECT_EQ(p.user_id, "42");
}

TEST(Ingest, RejectsMalformedAndOutOfBounds) {
  auto code = [](const std::string& line) {
    try {
      parse_record(line);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kNotFound;
  };
  EXPECT_EQ(code("{not json"), ErrorCode::kMalformedRecord);
  EXPECT_EQ(code(R"({"user_id":"a","lon":-100,"lat":40,"text":"x"})"), ErrorCode::kMalformedRecord);
  EXPECT_EQ(code(R"({"user_id":"a","lon":"x","lat":40,"timestamp":"2014-01-02T00:00:00Z","text":"x"})"),
            ErrorCode::kMalformedRecord);
  EXPECT_EQ(code(R"({"user_id":"a","lon":10,"lat":40,"timestamp":"2014-01-02T00:00:00Z","text":"x"})"),
            ErrorCode::kOutOfBounds);
}

TEST(Ingest, CsvHeaderAnyOrder) {
  const CsvHeader h("timestamp,text,lat,lon,user_id");
  const Post p = h.parse(R"(2014-01-02T00:00:00Z,"cough, cough ""bad""",40.5,-100.25,u7)");
  EXPECT_EQ(p.user_id, "u7");
  EXPECT_EQ(p.text, "cough, cough \"bad\"");
  EXPECT_DOUBLE_EQ(p.lon, -100.25);
  EXPECT_THROW(CsvHeader("user_id,lon,lat"), Error);
  EXPECT_THROW(h.parse("2014-01-02T00:00:00Z,x,40"), Error);
}

TEST(Ingest, IliClassification) {
  const auto dict = IliDictionary::defaults();
  EXPECT_TRUE(classify_ili("I have the flu today", dict));
  EXPECT_FALSE(classify_ili("the influence of art", dict));
  EXPECT_TRUE(classify_ili("Coughing all night", dict));
  EXPECT_TRUE(classify_ili("FEVER!!", dict));
  EXPECT_TRUE(classify_ili("so many sneezes", dict));
  EXPECT_FALSE(classify_ili("fluent in french", dict));
  EXPECT_FALSE(classify_ili("", dict));
}

TEST(Ingest, DictionaryFile) {
  const auto path = std::filesystem::temp_directory_path() / "geocube_dict_test.txt";
  {
    std::ofstream out(path);
    out << "# comment\n\nchills\nAche\n";
  }
  const auto dict = IliDictionary::load(path);
  EXPECT_EQ(dict.entries().size(), 2u);
  EXPECT_TRUE(classify_ili("terrible chills", dict));
  EXPECT_TRUE(classify_ili("aches everywhere", dict));
  EXPECT_FALSE(classify_ili("flu", dict));
  std::filesystem::remove(path);
  EXPECT_THROW(IliDictionary::load("/nonexistent/dict.txt"), Error);
}

TEST(Ingest, FileSourceCountsStatuses) {
  const auto path = std::filesystem::temp_directory_path() / "geocube_source_test.jsonl";
  {
    std::ofstream out(path);
    out << R"({"user_id":"a","lon":-100,"lat":40,"timestamp":"2014-01-02T00:00:00Z","text":"x"})" << '\n'
        << "garbage\n\n"
        << R"({"user_id":"a","lon":50,"lat":40,"timestamp":"2014-01-02T00:00:00Z","text":"x"})" << '\n';
  }
  FileSource src(path, InputFormat::kJsonLines);
  int ok = 0, bad = 0, oob = 0;
  while (auto r = src.next()) {
    switch (r->status) {
      case RecordResult::Status::kOk: ++ok; break;
      case RecordResult::Status::kMalformed: ++bad; break;
      case RecordResult::Status::kOutOfBounds: ++oob; break;
    }
  }
  EXPECT_EQ(ok, 1);
  EXPECT_EQ(bad, 1);
  EXPECT_EQ(oob, 1);
  std::filesystem::remove(path);
}

TEST(Synth, DeterministicAndBounded) {
  SynthConfig cfg;
  cfg.n_users = 50;
  cfg.rng_seed = 11;
  const auto a = synth_stream(cfg);
  const auto b = synth_stream(cfg);
  EXPECT_EQ(a, b);
  ASSERT_FALSE(a.empty());
  cfg.rng_seed = 12;
  EXPECT_NE(synth_stream(cfg), a);
  for (std::size_t i = 1; i < a.size(); ++i) EXPECT_LE(a[i - 1].timestamp, a[i].timestamp);
  for (const auto& p : a) {
    EXPECT_TRUE(kStudyArea.contains(p.lon, p.lat));
    EXPECT_GE(p.timestamp, cfg.start);
    EXPECT_LT(p.timestamp, cfg.start + std::chrono::hours(24 * 7));
  }
}

TEST(Synth, ValidatesConfig) {
  SynthConfig cfg;
  cfg.n_users = 0;
  EXPECT_THROW(synth_stream(cfg), Error);
  cfg.n_users = 1;
  cfg.posts_per_user_per_day = 30;
  EXPECT_THROW(synth_stream(cfg), Error);
}

TEST(Synth, ScriptedTrips) {
  const Timestamp start = default_epoch() + std::chrono::hours(5);
  const auto posts = scripted_od_stream({{{-118.24, 34.05}, {-112.07, 33.45}, 3}}, start);
  ASSERT_EQ(posts.size(), 6u);
  for (const auto& p : posts) {
    EXPECT_GE(p.timestamp, start);
    EXPECT_LT(p.timestamp, start + std::chrono::hours(1));
  }
}

}  // namespace
}  // namespace geocube

namespace geocube {
namespace {

TEST(Synth, DegenerateConfigGivesOnePost) {
  SynthConfig cfg;
  cfg.n_users = 1;
  cfg.duration_hours = 1;
  cfg.posts_per_user_per_day = 24;
  const auto posts = synth_stream(cfg);
  ASSERT_EQ(posts.size(), 1u);
  EXPECT_LE(great_circle_km(LonLat(posts[0].lon, posts[0].lat), synth_homes(cfg)[0]), kSynthHomeRadiusKm);
}

TEST(Synth, NoTravelStaysNearHome) {
  SynthConfig cfg;
  cfg.n_users = 100;
  cfg.travel_probability = 0;
  const auto homes = synth_homes(cfg);
  std::map<std::string, LonLat> home_of;
  for (int u = 0; u < cfg.n_users; ++u) {
    char id[16];
    std::snprintf(id, sizeof id, "u%05d", u);
    home_of[id] = homes[u];
  }
  for (const auto& p : synth_stream(cfg)) {
    ASSERT_LE(great_circle_km(LonLat(p.lon, p.lat), home_of.at(p.user_id)), kSynthHomeRadiusKm + 1e-9);
  }
}

TEST(Ingest, ClassificationIsCaseInsensitive) {
  const auto dict = IliDictionary::defaults();
  for (const char* t : {"FLU season", "Sneezed twice", "COUGHES", "the Influence", "Fevered brow"}) {
    std::string lower(t);
    for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    EXPECT_EQ(classify_ili(t, dict), classify_ili(lower, dict)) << t;
  }
  EXPECT_FALSE(classify_ili("lovely weather in LA", dict));
  EXPECT_TRUE(classify_ili("coughing all night, feverish", dict));
  EXPECT_THROW(IliDictionary({"bad entry"}), Error);
  EXPECT_THROW(IliDictionary({}), Error);
}

}  // namespace
}  // namespace geocube
