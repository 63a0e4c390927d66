#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nlight/raster.hpp"

namespace nlight {

using ZoneId = std::size_t;

/// Square analysis zones tiling a rectangle from a lower-left origin.
///
/// Zone (col, row) covers [x0 + col*s, x0 + (col+1)*s) x [y0 + row*s, y0 + (row+1)*s),
/// rows counting northward from the origin. Its flat id is row * ncols + col.
class ZoneSet {
public:
    ZoneSet(double origin_x, double origin_y, double zone_size, std::size_t ncols, std::size_t nrows);

    double origin_x() const noexcept { return origin_x_; }
    double origin_y() const noexcept { return origin_y_; }
    double zone_size() const noexcept { return zone_size_; }
    std::size_t ncols() const noexcept { return ncols_; }
    std::size_t nrows() const noexcept { return nrows_; }
    std::size_t size() const noexcept { return ncols_ * nrows_; }

    ZoneId id(std::size_t col, std::size_t row) const noexcept { return row * ncols_ + col; }
    std::size_t col_of(ZoneId id) const noexcept { return id % ncols_; }
    std::size_t row_of(ZoneId id) const noexcept { return id / ncols_; }

    double center_x(ZoneId id) const noexcept;
    double center_y(ZoneId id) const noexcept;

    std::optional<ZoneId> locate(double x, double y) const noexcept;

private:
    double origin_x_;
    double origin_y_;
    double zone_size_;
    std::size_t ncols_;
    std::size_t nrows_;
};

ZoneSet build_zoneset(double origin_x, double origin_y, double zone_size, std::size_t ncols,
                      std::size_t nrows);

std::optional<ZoneId> assign_point(const ZoneSet& zs, double x, double y);

struct PointRecord {
    double x = 0.0;
    double y = 0.0;
    std::string kind;
    double weight = 1.0;
};

struct ZoneStats {
    ZoneId zone = 0;
    double sum_light = 0.0;
    double mean_light = 0.0;
    std::size_t cell_count = 0;
    std::size_t point_count = 0;
    bool presence = false;
};

struct ZonalLightResult {
    std::vector<ZoneStats> stats;  // one entry per zone, ordered by id
    std::size_t cells_outside = 0;
};

struct ZonalPointsResult {
    std::vector<ZoneStats> stats;
    std::size_t points_outside = 0;
};

/// Sums each non-nodata cell into the zone holding the cell center.
ZonalLightResult zonal_light(const ZoneSet& zs, const RasterGrid& grid);

ZonalPointsResult zonal_points(const ZoneSet& zs, const std::vector<PointRecord>& points);

/// Light and point results combined zone-by-zone.
std::vector<ZoneStats> merge_zone_stats(const std::vector<ZoneStats>& light,
                                        const std::vector<ZoneStats>& points);

/// Zone-specific thresholds applied to raster cells, keyed by zone id.
/// Cells whose center lies in a zone without an entry are unchanged.
RasterGrid apply_zone_thresholds(const ZoneSet& zs, const RasterGrid& grid,
                                 const std::map<ZoneId, double>& thresholds);

/// Zero sum/mean for zones whose mean light falls below their threshold.
std::vector<ZoneStats> threshold_zone_stats(std::vector<ZoneStats> stats,
                                            const std::map<ZoneId, double>& thresholds);

std::vector<PointRecord> parse_points_csv(std::string_view text);
std::string points_to_csv(const std::vector<PointRecord>& points);
std::string zone_stats_to_csv(const std::vector<ZoneStats>& stats);

/// `zone_id,threshold` rows.
std::map<ZoneId, double> parse_zone_thresholds_csv(std::string_view text);

}  // namespace nlight
