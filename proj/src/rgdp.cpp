#include "nlight/rgdp.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "nlight/csv.hpp"
#include "nlight/error.hpp"

namespace nlight {

ProvinceMapping parse_province_mapping_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::MalformedHeader, "province mapping CSV is empty");
    auto header = split_csv_line(line);
    if (header.size() != 2 || header[0] != "zone_id" || header[1] != "province")
        throw Error(ErrorCode::MalformedHeader, "province mapping header must be zone_id,province");
    ProvinceMapping mapping;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto f = split_csv_line(line);
        auto id = f.size() == 2 ? parse_double(f[0]) : std::nullopt;
        if (!id || *id < 0 || *id != std::floor(*id) || f[1].empty())
            throw Error(ErrorCode::NonNumeric, "bad province mapping row: " + line);
        if (!mapping.emplace(static_cast<ZoneId>(*id), f[1]).second)
            throw Error(ErrorCode::DuplicateKey, "zone mapped twice: " + f[0]);
    }
    return mapping;
}

std::string province_mapping_to_csv(const ProvinceMapping& mapping) {
    std::string out = "zone_id,province\n";
    for (const auto& [id, name] : mapping) out += join_csv_line({std::to_string(id), name}) + '\n';
    return out;
}

double r_gdp(double gdp, double dn_sum) {
    if (!(dn_sum > 0.0)) throw Error(ErrorCode::ZeroLight, "province has no light (dn_sum <= 0)");
    return gdp / dn_sum;
}

std::map<std::string, double> province_light(const ZoneSet& zs, const RasterGrid& grid,
                                             const ProvinceMapping& mapping) {
    const auto zonal = zonal_light(zs, grid);
    std::map<std::string, double> sums;
    for (const auto& [id, province] : mapping) {
        if (id >= zonal.stats.size())
            throw Error(ErrorCode::InvalidArgument, fmt::format("province mapping names zone {} outside the grid", id));
        sums[province] += zonal.stats[id].sum_light;
    }
    return sums;
}

RgdpSeries r_gdp_series(const ObservationTable& panel, const std::map<int, RasterGrid>& rasters,
                        const ZoneSet& zs, const ProvinceMapping& mapping, std::string_view gdp_column) {
    std::map<int, std::map<std::string, double>> light;
    for (const auto& [year, grid] : rasters) light[year] = province_light(zs, grid, mapping);
    std::set<std::string> provinces;
    for (const auto& [id, name] : mapping) provinces.insert(name);

    RgdpSeries out;
    auto skip = [&](const std::string& province, int year, std::string_view why) {
        ++out.skipped;
        out.skip_reasons.push_back(fmt::format("{}:{}:{}", province, year, why));
    };
    const bool has_gdp = panel.has_column(gdp_column);
    for (const auto& province : provinces) {
        for (const auto& [year, sums] : light) {
            auto row = panel.find_row(province, year);
            auto gdp = row && has_gdp ? panel.get(*row, gdp_column) : std::nullopt;
            if (!gdp) {
                skip(province, year, "missing_gdp");
                continue;
            }
            const double dn = sums.at(province);
            if (!(dn > 0.0)) {
                skip(province, year, "zero_light");
                continue;
            }
            out.records.push_back({province, year, *gdp, dn, r_gdp(*gdp, dn)});
        }
    }
    return out;
}

ProportionTable proportion_table(const ObservationTable& panel, std::string_view column) {
    const auto& values = panel.column(column);
    std::set<std::string> provinces;
    std::set<int> years;
    for (std::size_t r = 0; r < panel.row_count(); ++r) {
        if (!values[r]) continue;
        provinces.insert(panel.keys()[r].unit);
        years.insert(panel.keys()[r].year);
    }
    ProportionTable t;
    t.provinces.assign(provinces.begin(), provinces.end());
    t.years.assign(years.begin(), years.end());
    t.share.assign(t.provinces.size(), std::vector<std::optional<double>>(t.years.size()));
    for (std::size_t y = 0; y < t.years.size(); ++y) {
        double total = 0.0;
        for (const auto& p : t.provinces) {
            auto row = panel.find_row(p, t.years[y]);
            if (row && values[*row]) total += *values[*row];
        }
        if (total == 0.0)
            throw Error(ErrorCode::ZeroColumnTotal, fmt::format("{} sums to zero in {}", column, t.years[y]));
        for (std::size_t p = 0; p < t.provinces.size(); ++p) {
            auto row = panel.find_row(t.provinces[p], t.years[y]);
            if (row && values[*row]) t.share[p][y] = *values[*row] / total;
        }
    }
    return t;
}

std::string rgdp_to_csv(const RgdpSeries& s) {
    std::string out = "province,year,gdp,dn_sum,r_gdp\n";
    for (const auto& r : s.records) {
        out += join_csv_line({r.province, std::to_string(r.year), format_csv_number(r.gdp),
                              format_csv_number(r.dn_sum), format_csv_number(r.r_gdp)}) +
               '\n';
    }
    return out;
}

std::string proportions_to_csv(const ProportionTable& t) {
    std::vector<std::string> header = {"province"};
    for (int y : t.years) header.push_back(std::to_string(y));
    std::string out = join_csv_line(header) + '\n';
    for (std::size_t p = 0; p < t.provinces.size(); ++p) {
        std::vector<std::string> row = {t.provinces[p]};
        for (const auto& v : t.share[p]) row.push_back(v ? format_csv_number(*v) : std::string());
        out += join_csv_line(row) + '\n';
    }
    return out;
}

}  // namespace nlight
