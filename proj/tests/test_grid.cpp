#include <random>

#include <gtest/gtest.h>

#include "geocube/errors.hpp"
#include "geocube/grid.hpp"

namespace geocube {
namespace {

TEST(Grid, LevelDimensions) {
  const GridPyramid grid;
  EXPECT_EQ(grid.cols(1), 13312);
  EXPECT_EQ(grid.rows(1), 9216);
  EXPECT_EQ(grid.cols(10), 26);
  EXPECT_EQ(grid.rows(10), 18);
  EXPECT_EQ(grid.levels(), 10);
  EXPECT_EQ(grid.time_levels(), 10);
}

TEST(Grid, NestingForRandomPoints) {
  const GridPyramid grid;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lon(kStudyArea.lon_min, kStudyArea.lon_max);
  std::uniform_real_distribution<double> lat(kStudyArea.lat_min, kStudyArea.lat_max);
  for (int i = 0; i < 100000; ++i) {
    const double x = lon(rng), y = lat(rng);
    CellAddress prev = grid.cell(x, y, 1);
    for (int l = 2; l <= grid.levels(); ++l) {
      const CellAddress c = grid.cell(x, y, l);
      ASSERT_EQ(prev.parent(), c);
      ASSERT_TRUE(grid.valid(c));
      prev = c;
    }
  }
}

TEST(Grid, BoundsAndCenters) {
  const GridPyramid grid;
  const CellAddress c = grid.cell(-100.0, 40.0, 5);
  const BoundingBox b = grid.cell_bounds(c);
  EXPECT_TRUE(b.contains(-100.0, 40.0));
  EXPECT_EQ(grid.cell(grid.cell_center(c), 5), c);
  EXPECT_NEAR(b.lon_max - b.lon_min, grid.cell_size_deg(5), 1e-12);
  EXPECT_GT(grid.cell_area_km2(c), 0.0);
}

TEST(Grid, OutOfBounds) {
  const GridPyramid grid;
  try {
    grid.cell(0.0, 0.0, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOutOfBounds);
  }
  EXPECT_FALSE(grid.valid({10, 26, 0}));
  EXPECT_FALSE(grid.valid({1, -1, 0}));
}

TEST(Grid, CellAddressText) {
  const CellAddress c = CellAddress::parse("L4:12:7");
  EXPECT_EQ(c, (CellAddress{4, 12, 7}));
  EXPECT_EQ(c.to_string(), "L4:12:7");
  EXPECT_THROW(CellAddress::parse("L4:12"), Error);
  EXPECT_THROW(CellAddress::parse("4:1:2"), Error);
}

TEST(Grid, HourIntervals) {
  const GridPyramid grid;
  const Timestamp t = grid.epoch() + std::chrono::hours(37) + std::chrono::minutes(5);
  EXPECT_EQ(grid.hour_index(t), 37);
  EXPECT_EQ(grid.interval(t, 3), (IntervalAddress{3, 9}));
  EXPECT_EQ(grid.interval_start({3, 9}), grid.epoch() + std::chrono::hours(36));
  EXPECT_EQ(grid.interval_end({3, 9}), grid.epoch() + std::chrono::hours(40));
  EXPECT_EQ(grid.hour_index(grid.epoch() - std::chrono::seconds(1)), -1);
}

TEST(Time, Iso8601RoundTrip) {
  const Timestamp t = parse_iso8601("2014-02-03T04:05:06Z");
  EXPECT_EQ(format_iso8601(t), "2014-02-03T04:05:06Z");
  EXPECT_EQ(parse_iso8601("2014-02-03T04:05:06+00:00"), t);
  EXPECT_EQ(parse_iso8601("2014-02-03T04:05:06.75Z"), t);
  EXPECT_THROW(parse_iso8601("2014-02-30T04:05:06Z"), Error);
  EXPECT_THROW(parse_iso8601("yesterday"), Error);
}

}  // namespace
}  // namespace geocube
