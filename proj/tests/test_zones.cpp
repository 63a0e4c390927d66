#include <gtest/gtest.h>

#include <random>

#include "nlight/error.hpp"
#include "nlight/zones.hpp"

using namespace nlight;

TEST(ZoneSet, Construction) {
    auto zs = build_zoneset(0, 0, 10, 2, 2);
    EXPECT_EQ(zs.size(), 4u);
    EXPECT_EQ(assign_point(zs, 0, 0), zs.id(0, 0));
    EXPECT_EQ(assign_point(zs, 9.999, 9.999), zs.id(0, 0));

    auto column = build_zoneset(5, -5, 1, 1, 3);
    EXPECT_EQ(column.size(), 3u);
    EXPECT_EQ(assign_point(column, 5.5, -4.5), column.id(0, 0));
    EXPECT_EQ(assign_point(column, 5.5, -2.5), column.id(0, 2));

    try {
        build_zoneset(0, 0, 0, 2, 2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidDimension);
    }
}

TEST(ZoneSet, HalfOpenAssignment) {
    auto zs = build_zoneset(0, 0, 10, 2, 2);
    EXPECT_EQ(assign_point(zs, 5, 5), zs.id(0, 0));
    EXPECT_EQ(assign_point(zs, 10, 0), zs.id(1, 0));
    EXPECT_EQ(assign_point(zs, 0, 10), zs.id(0, 1));
    EXPECT_FALSE(assign_point(zs, 25, 5));
    EXPECT_FALSE(assign_point(zs, 20, 5));
    EXPECT_FALSE(assign_point(zs, -0.001, 5));
}

TEST(ZonalLight, Aggregation) {
    RasterGrid g(2, 2, 0, 0, 1, -9999, {1, 2, 3, 4});
    auto whole = zonal_light(build_zoneset(0, 0, 2, 1, 1), g);
    ASSERT_EQ(whole.stats.size(), 1u);
    EXPECT_DOUBLE_EQ(whole.stats[0].sum_light, 10);
    EXPECT_EQ(whole.stats[0].cell_count, 4u);
    EXPECT_DOUBLE_EQ(whole.stats[0].mean_light, 2.5);

    // Row 0 of the raster is the northern row, zone row 0 the southern one.
    auto cells = zonal_light(build_zoneset(0, 0, 1, 2, 2), g);
    EXPECT_DOUBLE_EQ(cells.stats[0].sum_light, 3);
    EXPECT_DOUBLE_EQ(cells.stats[1].sum_light, 4);
    EXPECT_DOUBLE_EQ(cells.stats[2].sum_light, 1);
    EXPECT_DOUBLE_EQ(cells.stats[3].sum_light, 2);
}

TEST(ZonalLight, NodataExcluded) {
    RasterGrid g(2, 1, 0, 0, 1, -9999, {-9999, 5});
    auto r = zonal_light(build_zoneset(0, 0, 2, 1, 1), g);
    EXPECT_DOUBLE_EQ(r.stats[0].sum_light, 5);
    EXPECT_EQ(r.stats[0].cell_count, 1u);
}

TEST(ZonalLight, CellsOutsideCounted) {
    RasterGrid g(3, 1, 0, 0, 1, -9999, {1, 1, 1});
    auto r = zonal_light(build_zoneset(0, 0, 1, 2, 1), g);
    EXPECT_EQ(r.cells_outside, 1u);
}

TEST(ZonalPoints, Counting) {
    auto zs = build_zoneset(0, 0, 10, 2, 1);
    std::vector<PointRecord> pts = {{1, 1, "office", 1}, {2, 2, "office", 1}, {3, 3, "office", 1}, {50, 1, "office", 1}};
    auto r = zonal_points(zs, pts);
    EXPECT_EQ(r.stats[0].point_count, 3u);
    EXPECT_EQ(r.stats[1].point_count, 0u);
    EXPECT_TRUE(r.stats[0].presence);
    EXPECT_FALSE(r.stats[1].presence);
    EXPECT_EQ(r.points_outside, 1u);

    auto empty = zonal_points(zs, {});
    for (const auto& s : empty.stats) EXPECT_EQ(s.point_count, 0u);
}

TEST(ZonalPoints, PartitionProperty) {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(-5, 45);
    auto zs = build_zoneset(0, 0, 10, 4, 4);
    std::vector<PointRecord> pts;
    std::size_t inside = 0;
    for (int i = 0; i < 500; ++i) {
        // Snap half the points onto zone edges.
        double x = u(gen), y = u(gen);
        if (i % 2) x = std::round(x / 10) * 10;
        pts.push_back({x, y, "p", 1});
        if (x >= 0 && x < 40 && y >= 0 && y < 40) ++inside;
    }
    auto r = zonal_points(zs, pts);
    std::size_t total = 0;
    for (const auto& s : r.stats) total += s.point_count;
    EXPECT_EQ(total, inside);
    EXPECT_EQ(total + r.points_outside, pts.size());
}

TEST(ZoneThresholds, CellAndZoneStages) {
    RasterGrid g(2, 1, 0, 0, 1, -9999, {5, 50});
    auto zs = build_zoneset(0, 0, 1, 2, 1);
    auto cut = apply_zone_thresholds(zs, g, {{0, 10}, {1, 60}});
    EXPECT_DOUBLE_EQ(cut.at(0, 0), 0);
    EXPECT_DOUBLE_EQ(cut.at(0, 1), 0);

    auto stats = zonal_light(zs, g).stats;
    auto zoned = threshold_zone_stats(stats, {{1, 40}});
    EXPECT_DOUBLE_EQ(zoned[0].sum_light, 5);
    EXPECT_DOUBLE_EQ(zoned[1].sum_light, 50);
}

TEST(PointsCsv, RoundTrip) {
    std::vector<PointRecord> pts = {{1.5, 2.25, "office", 1}, {-3, 4, "branch", 2}};
    auto back = parse_points_csv(points_to_csv(pts));
    ASSERT_EQ(back.size(), 2u);
    EXPECT_DOUBLE_EQ(back[1].x, -3);
    EXPECT_EQ(back[1].kind, "branch");
    EXPECT_DOUBLE_EQ(back[1].weight, 2);
    EXPECT_THROW(parse_points_csv("a,b\n1,2\n"), Error);
}
