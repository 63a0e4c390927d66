#include "nlight/synth.hpp"

#include <cmath>

#include <fmt/format.h>
#include <json.hpp>

#include "nlight/csv.hpp"
#include "nlight/error.hpp"
#include "nlight/panel.hpp"

namespace nlight {

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    cached_ = v * f;
    has_cached_ = true;
    return u * f;
}

std::uint64_t Rng::poisson(double mean) {
    if (!(mean >= 0.0) || !std::isfinite(mean)) throw Error(ErrorCode::InvalidArgument, "poisson mean must be finite");
    if (mean == 0.0) return 0;
    if (mean < 30.0) {
        const double limit = std::exp(-mean);
        std::uint64_t k = 0;
        double prod = uniform();
        while (prod > limit) {
            ++k;
            prod *= uniform();
        }
        return k;
    }
    const double draw = std::round(mean + std::sqrt(mean) * normal());
    return draw > 0.0 ? static_cast<std::uint64_t>(draw) : 0;
}

void SynthSpec::validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidSpec, what); };
    if (n_provinces < 1 || zones_per_province < 1 || years < 1 || cells_per_zone < 1)
        fail("all counts must be at least 1");
    if (n_provinces > 999) fail("at most 999 provinces");
    if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) fail("noise_sd must be non-negative");
    if (!(gdp_report_noise >= 0.0) || !std::isfinite(gdp_report_noise)) fail("gdp_report_noise must be non-negative");
    if (!(cellsize > 0.0) || !std::isfinite(cellsize)) fail("cellsize must be positive");
    if (!(gdp_scale > 0.0) || !std::isfinite(gdp_scale)) fail("gdp_scale must be positive");
    if (!(insurance_intensity >= 0.0) || !std::isfinite(insurance_intensity))
        fail("insurance_intensity must be non-negative");
    if (!std::isfinite(elasticity) || !std::isfinite(intercept) || !std::isfinite(elasticity_gradient))
        fail("link parameters must be finite");
}

namespace {

std::string province_name(std::size_t p) {
    return fmt::format("P{:03}", p + 1);
}

}  // namespace

SynthWorld generate(const SynthSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    const std::size_t P = spec.n_provinces;
    const std::size_t Z = spec.zones_per_province;
    const std::size_t cpz = spec.cells_per_zone;
    const double zone_size = spec.cellsize * static_cast<double>(cpz);
    ZoneSet zones(0.0, 0.0, zone_size, Z, P);
    const std::size_t nzones = zones.size();

    SynthWorld w{spec, zones, {}, {}, {}, {}, {}, {}, {}};
    for (ZoneId id = 0; id < nzones; ++id) w.provinces[id] = province_name(zones.row_of(id));

    // Draw order is part of the output contract; do not reorder.
    std::vector<double> base_gdp(P), growth(P);
    for (std::size_t p = 0; p < P; ++p) {
        base_gdp[p] = spec.gdp_scale * std::exp(0.8 * rng.normal());
        growth[p] = 0.03 + 0.02 * rng.normal();
    }

    std::vector<double> share(nzones), population(nzones), insured_rate(nzones);
    for (ZoneId id = 0; id < nzones; ++id) {
        share[id] = std::exp(0.6 * rng.normal());
        population[id] = 5e4 * std::exp(0.7 * rng.normal());
        insured_rate[id] = 0.05 + 0.25 * rng.uniform();
    }
    for (std::size_t p = 0; p < P; ++p) {
        double total = 0.0;
        for (std::size_t c = 0; c < Z; ++c) total += share[zones.id(c, p)];
        for (std::size_t c = 0; c < Z; ++c) share[zones.id(c, p)] /= total;
    }

    const std::size_t ncols = Z * cpz, nrows = P * cpz;
    auto zone_of_cell = [&](std::size_t r, std::size_t c) { return zones.id(c / cpz, (nrows - 1 - r) / cpz); };
    std::vector<double> cell_weight(ncols * nrows);
    std::vector<double> zone_weight_total(nzones, 0.0);
    for (std::size_t r = 0; r < nrows; ++r) {
        for (std::size_t c = 0; c < ncols; ++c) {
            const double u = std::exp(0.5 * rng.normal());
            cell_weight[r * ncols + c] = u;
            zone_weight_total[zone_of_cell(r, c)] += u;
        }
    }

    w.zone_elasticity.resize(nzones);
    for (ZoneId id = 0; id < nzones; ++id) {
        const double u = (static_cast<double>(zones.col_of(id)) + 0.5) / static_cast<double>(Z);
        w.zone_elasticity[id] = spec.elasticity + spec.elasticity_gradient * (2.0 * u - 1.0);
    }

    struct ZoneYear {
        double latent_gdp, population, premiums, insured;
    };
    std::vector<std::vector<ZoneYear>> zone_years(spec.years, std::vector<ZoneYear>(nzones));

    for (std::size_t t = 0; t < spec.years; ++t) {
        const int year = spec.first_year + static_cast<int>(t);
        std::vector<double> province_gdp(P);
        for (std::size_t p = 0; p < P; ++p)
            province_gdp[p] = base_gdp[p] * std::exp(growth[p] * static_cast<double>(t) + 0.02 * rng.normal());

        std::vector<double> zone_light(nzones);
        for (ZoneId id = 0; id < nzones; ++id) {
            auto& zy = zone_years[t][id];
            zy.latent_gdp = province_gdp[zones.row_of(id)] * share[id];
            zy.population = population[id] * std::exp(0.01 * static_cast<double>(t));
            zy.insured = insured_rate[id] * zy.population;
            zone_light[id] =
                std::exp(spec.intercept + w.zone_elasticity[id] * std::log(zy.latent_gdp) + spec.noise_sd * rng.normal());
        }
        for (ZoneId id = 0; id < nzones; ++id)
            zone_years[t][id].premiums = 0.02 * zone_years[t][id].latent_gdp * std::exp(0.1 * rng.normal());

        std::vector<double> radiance(ncols * nrows), saturated(ncols * nrows);
        for (std::size_t r = 0; r < nrows; ++r) {
            for (std::size_t c = 0; c < ncols; ++c) {
                const ZoneId id = zone_of_cell(r, c);
                const double dn = zone_light[id] * cell_weight[r * ncols + c] / zone_weight_total[id];
                radiance[r * ncols + c] = dn;
                saturated[r * ncols + c] = std::min(dn, kSaturationDn);
            }
        }
        w.radiance.emplace(year, RasterGrid(ncols, nrows, 0.0, 0.0, spec.cellsize, -9999.0, std::move(radiance)));
        w.saturated.emplace(year, RasterGrid(ncols, nrows, 0.0, 0.0, spec.cellsize, -9999.0, std::move(saturated)));
    }

    // Offices are static, placed from first-year activity.
    for (ZoneId id = 0; id < nzones; ++id) {
        const std::uint64_t count = rng.poisson(spec.insurance_intensity * zone_years[0][id].latent_gdp);
        const double x0 = zones.origin_x() + static_cast<double>(zones.col_of(id)) * zone_size;
        const double y0 = zones.origin_y() + static_cast<double>(zones.row_of(id)) * zone_size;
        for (std::uint64_t k = 0; k < count; ++k) {
            const double px = x0 + rng.uniform() * zone_size;
            const double py = y0 + rng.uniform() * zone_size;
            w.points.push_back({px, py, "insurance_office", 1.0});
        }
    }
    const auto office_counts = zonal_points(zones, w.points).stats;

    const std::vector<std::string_view> zone_columns = {
        "x", "y", "latent_gdp", var::kGdp, var::kTotalPopulation, var::kGdpPerCapita, var::kRadianceLight,
        var::kSaturatedLight, var::kInsuranceCount, var::kInsurancePremiums, var::kInsuredPopulation};
    for (auto c : zone_columns) w.zone_panel.ensure_column(c);
    const std::vector<std::string_view> province_columns = {
        "latent_gdp", var::kGdp, var::kTotalPopulation, var::kGdpPerCapita, var::kRadianceLight,
        var::kSaturatedLight, var::kInsuranceCount, var::kInsurancePremiums, var::kInsuredPopulation};
    for (auto c : province_columns) w.province_panel.ensure_column(c);

    // Reported GDP noise has its own stream so the latent world does not depend on it.
    std::vector<std::vector<double>> reported(spec.years, std::vector<double>(nzones));
    Rng report_rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
    for (std::size_t t = 0; t < spec.years; ++t)
        for (ZoneId id = 0; id < nzones; ++id)
            reported[t][id] = zone_years[t][id].latent_gdp * std::exp(spec.gdp_report_noise * report_rng.normal());

    for (std::size_t t = 0; t < spec.years; ++t) {
        const int year = spec.first_year + static_cast<int>(t);
        const auto rad = zonal_light(zones, w.radiance.at(year)).stats;
        const auto sat = zonal_light(zones, w.saturated.at(year)).stats;
        std::vector<std::map<std::string_view, double>> province_sums(P);
        for (ZoneId id = 0; id < nzones; ++id) {
            const auto& zy = zone_years[t][id];
            const std::size_t row = w.zone_panel.add_row(std::to_string(id), year);
            const std::map<std::string_view, double> values = {
                {"x", zones.center_x(id)},
                {"y", zones.center_y(id)},
                {"latent_gdp", zy.latent_gdp},
                {var::kGdp, reported[t][id]},
                {var::kTotalPopulation, zy.population},
                {var::kGdpPerCapita, reported[t][id] / zy.population},
                {var::kRadianceLight, rad[id].sum_light},
                {var::kSaturatedLight, sat[id].sum_light},
                {var::kInsuranceCount, static_cast<double>(office_counts[id].point_count)},
                {var::kInsurancePremiums, zy.premiums},
                {var::kInsuredPopulation, zy.insured}};
            for (const auto& [name, v] : values) w.zone_panel.set(row, name, v);
            auto& sums = province_sums[zones.row_of(id)];
            for (auto c : province_columns)
                if (c != var::kGdpPerCapita) sums[c] += values.at(c);
        }
        for (std::size_t p = 0; p < P; ++p) {
            const std::size_t row = w.province_panel.add_row(province_name(p), year);
            auto& sums = province_sums[p];
            sums[var::kGdpPerCapita] = sums[var::kGdp] / sums[var::kTotalPopulation];
            for (const auto& [name, v] : sums) w.province_panel.set(row, name, v);
        }
    }
    w.zone_panel = derive_indicators(w.zone_panel);
    w.province_panel = derive_indicators(w.province_panel);
    return w;
}

std::string synth_manifest_json(const SynthWorld& world) {
    const auto& s = world.spec;
    nlohmann::ordered_json files = nlohmann::ordered_json::array();
    for (const auto& [year, g] : world.radiance) {
        files.push_back(fmt::format("rasters/radiance_{}.asc", year));
        files.push_back(fmt::format("rasters/saturated_{}.asc", year));
    }
    for (const char* f : {"points.csv", "provinces.csv", "panel_zones.csv", "panel_provinces.csv"}) files.push_back(f);

    nlohmann::ordered_json j = {
        {"seed", s.seed},
        {"generator", kGeneratorName},
        {"uniform", "(next >> 11) * 2^-53"},
        {"normal", kNormalAlgorithm},
        {"poisson", "knuth below mean 30, rounded normal above"},
        {"truth",
         {{"intercept", s.intercept},
          {"elasticity", s.elasticity},
          {"noise_sd", s.noise_sd},
          {"elasticity_gradient", s.elasticity_gradient},
          {"gdp_report_noise", s.gdp_report_noise},
          {"link", "ln(light) = a + b ln(latent_gdp) + e"}}},
        {"spec",
         {{"n_provinces", s.n_provinces},
          {"zones_per_province", s.zones_per_province},
          {"years", s.years},
          {"first_year", s.first_year},
          {"insurance_intensity", s.insurance_intensity},
          {"gdp_scale", s.gdp_scale},
          {"cellsize", s.cellsize},
          {"cells_per_zone", s.cells_per_zone}}},
        {"zones",
         {{"origin_x", world.zones.origin_x()},
          {"origin_y", world.zones.origin_y()},
          {"zone_size", world.zones.zone_size()},
          {"ncols", world.zones.ncols()},
          {"nrows", world.zones.nrows()}}},
        {"files", files}};
    return j.dump(2) + '\n';
}

std::map<std::string, std::string> synth_files(const SynthWorld& world) {
    std::map<std::string, std::string> files;
    for (const auto& [year, g] : world.radiance)
        files[fmt::format("rasters/radiance_{}.asc", year)] = serialize_ascii_grid(g);
    for (const auto& [year, g] : world.saturated)
        files[fmt::format("rasters/saturated_{}.asc", year)] = serialize_ascii_grid(g);
    files["points.csv"] = points_to_csv(world.points);
    files["provinces.csv"] = province_mapping_to_csv(world.provinces);
    files["panel_zones.csv"] = table_to_csv(world.zone_panel);
    files["panel_provinces.csv"] = table_to_csv(world.province_panel);
    files["manifest.json"] = synth_manifest_json(world);
    return files;
}

ObservationTable inject_inferior_proxy(const ObservationTable& table, const std::string& column, double sigma,
                                       std::uint64_t seed) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
        throw Error(ErrorCode::InvalidArgument, "degradation sigma must be non-negative");
    ObservationTable out = table;
    auto& col = out.column(column);
    if (sigma == 0.0) return out;
    Rng rng(seed);
    for (auto& cell : col) {
        const double z = rng.normal();  // drawn for every row so rows stay aligned with the stream
        if (cell && *cell > 0.0) cell = *cell * std::exp(sigma * z);
    }
    return out;
}

}  // namespace nlight
