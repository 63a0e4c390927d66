#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nlight/raster.hpp"
#include "nlight/table.hpp"
#include "nlight/zones.hpp"

namespace nlight {

/// Zone id -> province name.
using ProvinceMapping = std::map<ZoneId, std::string>;

ProvinceMapping parse_province_mapping_csv(std::string_view text);
std::string province_mapping_to_csv(const ProvinceMapping& mapping);

struct RgdpRecord {
    std::string province;
    int year = 0;
    double gdp = 0.0;
    double dn_sum = 0.0;
    double r_gdp = 0.0;
};

/// GDP per unit of summed light. Throws ZeroLight when dn_sum <= 0.
double r_gdp(double gdp, double dn_sum);

/// Summed light per province; zones without a province are ignored.
std::map<std::string, double> province_light(const ZoneSet& zs, const RasterGrid& grid,
                                             const ProvinceMapping& mapping);

struct RgdpSeries {
    std::vector<RgdpRecord> records;  // ordered by (province, year)
    std::size_t skipped = 0;
    std::vector<std::string> skip_reasons;
};

/// One record per (province, raster year) that has both a GDP value in the
/// panel (unit = province) and positive light. Anything else is skipped and
/// tallied.
RgdpSeries r_gdp_series(const ObservationTable& panel, const std::map<int, RasterGrid>& rasters,
                        const ZoneSet& zs, const ProvinceMapping& mapping, std::string_view gdp_column = "gdp");

struct ProportionTable {
    std::vector<std::string> provinces;  // sorted
    std::vector<int> years;              // sorted
    std::vector<std::vector<std::optional<double>>> share;  // [province][year]
};

/// share(p, y) = value(p, y) / sum over provinces of value(., y).
ProportionTable proportion_table(const ObservationTable& panel, std::string_view column);

std::string rgdp_to_csv(const RgdpSeries& s);
std::string proportions_to_csv(const ProportionTable& t);

}  // namespace nlight
