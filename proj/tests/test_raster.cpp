#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nlight/error.hpp"
#include "nlight/raster.hpp"

using namespace nlight;

namespace {

RasterGrid row_grid(std::vector<double> v, double nodata = -9999) {
    const std::size_t n = v.size();
    return RasterGrid(n, 1, 0.0, 0.0, 1.0, nodata, std::move(v));
}

std::vector<double> values_of(const RasterGrid& g) {
    return {g.values().begin(), g.values().end()};
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no nlight::Error thrown";
    return ErrorCode::IoError;
}

const char* kHeader = "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n";

}  // namespace

TEST(AsciiGrid, ParsesHeaderAndBody) {
    auto g = parse_ascii_grid(std::string(kHeader) + "1 2\n3 4\n");
    EXPECT_EQ(g.ncols(), 2u);
    EXPECT_EQ(g.nrows(), 2u);
    EXPECT_EQ(values_of(g), (std::vector<double>{1, 2, 3, 4}));
    EXPECT_DOUBLE_EQ(g.nodata(), -9999);
}

TEST(AsciiGrid, HeaderKeysAreCaseInsensitive) {
    auto g = parse_ascii_grid("NCOLS 1\nNROWS 1\nXLLCORNER 5\nYLLCORNER 6\nCELLSIZE 2\nnodata_value -1\n7\n");
    EXPECT_DOUBLE_EQ(g.xll(), 5);
    EXPECT_DOUBLE_EQ(g.cellsize(), 2);
    EXPECT_DOUBLE_EQ(g.at(0, 0), 7);
}

TEST(AsciiGrid, Errors) {
    EXPECT_EQ(code_of([] { parse_ascii_grid(std::string(kHeader) + "1 2 3\n"); }), ErrorCode::CountMismatch);
    EXPECT_EQ(code_of([] { parse_ascii_grid(std::string(kHeader) + "1 2 3 x\n"); }), ErrorCode::NonNumeric);
    EXPECT_EQ(code_of([] { parse_ascii_grid("ncols 2\nnrows 2\n1 2 3 4\n"); }), ErrorCode::MalformedHeader);
    EXPECT_EQ(code_of([] { parse_ascii_grid("ncols 0\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n"); }),
              ErrorCode::MalformedHeader);
}

TEST(AsciiGrid, RoundTrip) {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(-5, 100);
    std::vector<double> v(12);
    for (auto& x : v) x = u(gen);
    RasterGrid g(4, 3, 10.5, -3.25, 0.5, -9999, v);
    EXPECT_EQ(parse_ascii_grid(serialize_ascii_grid(g)), g);
}

TEST(AdjustDn, ClampsNegatives) {
    EXPECT_EQ(values_of(adjust_dn(row_grid({-3, 0, 7}))), (std::vector<double>{0, 0, 7}));
    auto g = row_grid({1, 2, 3});
    EXPECT_EQ(adjust_dn(g), g);
}

TEST(AdjustDn, KeepsNodata) {
    auto out = adjust_dn(row_grid({-9999, -1, 2}));
    EXPECT_EQ(values_of(out), (std::vector<double>{-9999, 0, 2}));
}

TEST(Threshold, UrbanExtentAndBlooming) {
    auto urban = apply_threshold(row_grid({5, 10, 39, 40, 68}), {ThresholdMode::UrbanExtent, 40});
    EXPECT_EQ(values_of(urban), (std::vector<double>{0, 0, 0, 40, 68}));
    auto bloom = apply_threshold(row_grid({9, 10, 11}), {ThresholdMode::BloomingFloor, 10});
    EXPECT_EQ(values_of(bloom), (std::vector<double>{0, 10, 11}));
    auto g = row_grid({1, 2, 3});
    EXPECT_EQ(apply_threshold(g, {ThresholdMode::BloomingFloor, 0}), g);
}

TEST(Threshold, RejectsNegativeInput) {
    EXPECT_EQ(code_of([] { apply_threshold(row_grid({-1, 5}), {ThresholdMode::BloomingFloor, 10}); }),
              ErrorCode::NegativeInput);
}

TEST(TotalDn, ExcludesNodata) {
    EXPECT_DOUBLE_EQ(total_dn(row_grid({1, 2, 3, 4})), 10);
    EXPECT_DOUBLE_EQ(total_dn(row_grid({1, -9999, 3})), 4);
    EXPECT_DOUBLE_EQ(total_dn(row_grid({-9999, -9999})), 0);
}

TEST(ThresholdMode, Names) {
    EXPECT_EQ(parse_threshold_mode("urban_extent"), ThresholdMode::UrbanExtent);
    EXPECT_EQ(parse_threshold_mode(to_string(ThresholdMode::BloomingFloor)), ThresholdMode::BloomingFloor);
    EXPECT_THROW(parse_threshold_mode("bright"), Error);
}
