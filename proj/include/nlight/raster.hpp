#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nlight {

/// Georeferenced grid of digital numbers (DN) in ESRI ASCII layout.
///
/// Values are row-major with row 0 the northernmost row. Cells equal to
/// `nodata` are excluded from every aggregate and are never rewritten by
/// the preprocessing operations.
class RasterGrid {
public:
    RasterGrid(std::size_t ncols, std::size_t nrows, double xll, double yll, double cellsize,
               double nodata, std::vector<double> values);

    std::size_t ncols() const noexcept { return ncols_; }
    std::size_t nrows() const noexcept { return nrows_; }
    double xll() const noexcept { return xll_; }
    double yll() const noexcept { return yll_; }
    double cellsize() const noexcept { return cellsize_; }
    double nodata() const noexcept { return nodata_; }
    std::span<const double> values() const noexcept { return values_; }

    double at(std::size_t row, std::size_t col) const { return values_[row * ncols_ + col]; }
    bool is_nodata(double v) const noexcept {
        return v == nodata_ || (v != v && nodata_ != nodata_);
    }

    /// Map coordinates of the center of cell (row, col).
    double cell_center_x(std::size_t col) const noexcept;
    double cell_center_y(std::size_t row) const noexcept;

    /// Same geometry and nodata sentinel, new values.
    RasterGrid with_values(std::vector<double> values) const;

    friend bool operator==(const RasterGrid&, const RasterGrid&) = default;

private:
    std::size_t ncols_;
    std::size_t nrows_;
    double xll_;
    double yll_;
    double cellsize_;
    double nodata_;
    std::vector<double> values_;
};

enum class ThresholdMode { UrbanExtent, BloomingFloor };

struct ThresholdSpec {
    ThresholdMode mode = ThresholdMode::BloomingFloor;
    double value = 0.0;
};

inline constexpr double kUrbanExtentThreshold = 40.0;
inline constexpr double kBloomingFloorThreshold = 10.0;

RasterGrid parse_ascii_grid(std::string_view text);
std::string serialize_ascii_grid(const RasterGrid& grid);

/// Clamps negative DN to zero; nodata cells are left alone.
RasterGrid adjust_dn(const RasterGrid& grid);

/// Zeroes every cell with DN below the threshold. DN equal to the threshold
/// is kept. Throws NegativeInput if the grid was not adjusted first.
RasterGrid apply_threshold(const RasterGrid& grid, const ThresholdSpec& spec);

double total_dn(const RasterGrid& grid);

ThresholdMode parse_threshold_mode(std::string_view name);
std::string_view to_string(ThresholdMode mode) noexcept;

}  // namespace nlight
