#include "nlight/zones.hpp"

#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "nlight/csv.hpp"
#include "nlight/error.hpp"

namespace nlight {

ZoneSet::ZoneSet(double origin_x, double origin_y, double zone_size, std::size_t ncols, std::size_t nrows)
    : origin_x_(origin_x), origin_y_(origin_y), zone_size_(zone_size), ncols_(ncols), nrows_(nrows) {
    if (!(zone_size > 0.0) || !std::isfinite(zone_size))
        throw Error(ErrorCode::InvalidDimension, "zone size must be positive");
    if (ncols == 0 || nrows == 0)
        throw Error(ErrorCode::InvalidDimension, "zone grid needs at least one row and column");
    if (!std::isfinite(origin_x) || !std::isfinite(origin_y))
        throw Error(ErrorCode::InvalidDimension, "zone origin must be finite");
}

double ZoneSet::center_x(ZoneId id) const noexcept {
    return origin_x_ + (static_cast<double>(col_of(id)) + 0.5) * zone_size_;
}

double ZoneSet::center_y(ZoneId id) const noexcept {
    return origin_y_ + (static_cast<double>(row_of(id)) + 0.5) * zone_size_;
}

namespace {

// Index of the half-open interval [origin + k*s, origin + (k+1)*s) holding v.
std::optional<std::size_t> interval_index(double v, double origin, double size, std::size_t count) {
    if (!std::isfinite(v)) return std::nullopt;
    double k = std::floor((v - origin) / size);
    if (k < -1.0 || k > static_cast<double>(count)) return std::nullopt;
    // The division can round across an edge; settle it against the edges themselves.
    if (v < origin + k * size) k -= 1.0;
    else if (v >= origin + (k + 1.0) * size) k += 1.0;
    if (k < 0.0 || k >= static_cast<double>(count)) return std::nullopt;
    return static_cast<std::size_t>(k);
}

}  // namespace

std::optional<ZoneId> ZoneSet::locate(double x, double y) const noexcept {
    auto col = interval_index(x, origin_x_, zone_size_, ncols_);
    if (!col) return std::nullopt;
    auto row = interval_index(y, origin_y_, zone_size_, nrows_);
    if (!row) return std::nullopt;
    return id(*col, *row);
}

ZoneSet build_zoneset(double origin_x, double origin_y, double zone_size, std::size_t ncols,
                      std::size_t nrows) {
    return ZoneSet(origin_x, origin_y, zone_size, ncols, nrows);
}

std::optional<ZoneId> assign_point(const ZoneSet& zs, double x, double y) {
    return zs.locate(x, y);
}

namespace {

std::vector<ZoneStats> empty_stats(const ZoneSet& zs) {
    std::vector<ZoneStats> stats(zs.size());
    for (ZoneId id = 0; id < stats.size(); ++id) stats[id].zone = id;
    return stats;
}

// Per-cell zone lookup; column and row lookups are separable.
struct CellZoneMap {
    std::vector<std::optional<std::size_t>> col;
    std::vector<std::optional<std::size_t>> row;
};

CellZoneMap map_cells(const ZoneSet& zs, const RasterGrid& grid) {
    CellZoneMap m;
    m.col.resize(grid.ncols());
    m.row.resize(grid.nrows());
    for (std::size_t c = 0; c < grid.ncols(); ++c)
        m.col[c] = interval_index(grid.cell_center_x(c), zs.origin_x(), zs.zone_size(), zs.ncols());
    for (std::size_t r = 0; r < grid.nrows(); ++r)
        m.row[r] = interval_index(grid.cell_center_y(r), zs.origin_y(), zs.zone_size(), zs.nrows());
    return m;
}

}  // namespace

ZonalLightResult zonal_light(const ZoneSet& zs, const RasterGrid& grid) {
    ZonalLightResult result;
    result.stats = empty_stats(zs);
    const CellZoneMap cells = map_cells(zs, grid);
    for (std::size_t r = 0; r < grid.nrows(); ++r) {
        for (std::size_t c = 0; c < grid.ncols(); ++c) {
            const double v = grid.at(r, c);
            if (grid.is_nodata(v)) continue;
            if (!cells.row[r] || !cells.col[c]) {
                ++result.cells_outside;
                continue;
            }
            auto& s = result.stats[zs.id(*cells.col[c], *cells.row[r])];
            s.sum_light += v;
            ++s.cell_count;
        }
    }
    for (auto& s : result.stats) {
        s.mean_light = s.cell_count > 0 ? s.sum_light / static_cast<double>(s.cell_count) : 0.0;
    }
    return result;
}

ZonalPointsResult zonal_points(const ZoneSet& zs, const std::vector<PointRecord>& points) {
    ZonalPointsResult result;
    result.stats = empty_stats(zs);
    for (const auto& p : points) {
        auto id = zs.locate(p.x, p.y);
        if (!id) {
            ++result.points_outside;
            continue;
        }
        ++result.stats[*id].point_count;
    }
    for (auto& s : result.stats) s.presence = s.point_count > 0;
    return result;
}

std::vector<ZoneStats> merge_zone_stats(const std::vector<ZoneStats>& light,
                                        const std::vector<ZoneStats>& points) {
    if (light.size() != points.size())
        throw Error(ErrorCode::MismatchedSamples, "zone stats come from different zone sets");
    std::vector<ZoneStats> out = light;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].point_count = points[i].point_count;
        out[i].presence = points[i].presence;
    }
    return out;
}

RasterGrid apply_zone_thresholds(const ZoneSet& zs, const RasterGrid& grid,
                                 const std::map<ZoneId, double>& thresholds) {
    for (const auto& [id, t] : thresholds) {
        if (id >= zs.size()) throw Error(ErrorCode::InvalidArgument, fmt::format("zone {} out of range", id));
        if (!(t >= 0.0)) throw Error(ErrorCode::InvalidArgument, "threshold value must be non-negative");
    }
    const CellZoneMap cells = map_cells(zs, grid);
    std::vector<double> out(grid.values().begin(), grid.values().end());
    for (std::size_t r = 0; r < grid.nrows(); ++r) {
        for (std::size_t c = 0; c < grid.ncols(); ++c) {
            double& v = out[r * grid.ncols() + c];
            if (grid.is_nodata(v)) continue;
            if (v < 0.0)
                throw Error(ErrorCode::NegativeInput, "negative DN found; run adjust_dn before thresholding");
            if (!cells.row[r] || !cells.col[c]) continue;
            auto it = thresholds.find(zs.id(*cells.col[c], *cells.row[r]));
            if (it != thresholds.end() && v < it->second) v = 0.0;
        }
    }
    return grid.with_values(std::move(out));
}

std::vector<ZoneStats> threshold_zone_stats(std::vector<ZoneStats> stats,
                                            const std::map<ZoneId, double>& thresholds) {
    for (auto& s : stats) {
        auto it = thresholds.find(s.zone);
        if (it != thresholds.end() && s.mean_light < it->second) {
            s.sum_light = 0.0;
            s.mean_light = 0.0;
        }
    }
    return stats;
}

std::vector<PointRecord> parse_points_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::MalformedHeader, "points CSV is empty");
    auto header = split_csv_line(line);
    const bool has_weight = header.size() == 4 && header[3] == "weight";
    if (header.size() < 3 || header[0] != "x" || header[1] != "y" || header[2] != "kind" ||
        (header.size() == 4 && !has_weight) || header.size() > 4)
        throw Error(ErrorCode::MalformedHeader, "points CSV header must be x,y,kind[,weight]");

    std::vector<PointRecord> points;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw Error(ErrorCode::CountMismatch, fmt::format("points CSV line {}: wrong field count", line_no));
        auto x = parse_double(fields[0]);
        auto y = parse_double(fields[1]);
        if (!x || !y) throw Error(ErrorCode::NonNumeric, fmt::format("points CSV line {}: bad coordinate", line_no));
        PointRecord p{*x, *y, fields[2], 1.0};
        if (has_weight) {
            auto w = parse_double(fields[3]);
            if (!w || *w < 0.0)
                throw Error(ErrorCode::NonNumeric, fmt::format("points CSV line {}: bad weight", line_no));
            p.weight = *w;
        }
        points.push_back(std::move(p));
    }
    return points;
}

std::string points_to_csv(const std::vector<PointRecord>& points) {
    std::string out = "x,y,kind,weight\n";
    for (const auto& p : points) {
        out += join_csv_line({format_exact(p.x), format_exact(p.y), p.kind, format_exact(p.weight)});
        out += '\n';
    }
    return out;
}

std::string zone_stats_to_csv(const std::vector<ZoneStats>& stats) {
    std::string out = "zone_id,sum_light,mean_light,cell_count,point_count,presence\n";
    for (const auto& s : stats) {
        out += fmt::format("{},{},{},{},{},{}\n", s.zone, format_csv_number(s.sum_light),
                           format_csv_number(s.mean_light), s.cell_count, s.point_count,
                           s.presence ? 1 : 0);
    }
    return out;
}

std::map<ZoneId, double> parse_zone_thresholds_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::MalformedHeader, "threshold CSV is empty");
    auto header = split_csv_line(line);
    if (header.size() != 2 || header[0] != "zone_id" || header[1] != "threshold")
        throw Error(ErrorCode::MalformedHeader, "threshold CSV header must be zone_id,threshold");
    std::map<ZoneId, double> out;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto f = split_csv_line(line);
        auto id = f.size() == 2 ? parse_double(f[0]) : std::nullopt;
        auto t = f.size() == 2 ? parse_double(f[1]) : std::nullopt;
        if (!id || !t || *id < 0 || *id != std::floor(*id))
            throw Error(ErrorCode::NonNumeric, "bad threshold CSV row: " + line);
        if (!out.emplace(static_cast<ZoneId>(*id), *t).second)
            throw Error(ErrorCode::DuplicateKey, "duplicate zone in threshold CSV: " + f[0]);
    }
    return out;
}

}  // namespace nlight
