#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "nlight/raster.hpp"
#include "nlight/rgdp.hpp"
#include "nlight/table.hpp"
#include "nlight/zones.hpp"

namespace nlight {

/// Seeded generator with a fully specified output stream.
///
/// Engine: std::mt19937_64 (its output sequence is fixed by the C++
/// standard). Uniforms take the top 53 bits: (next >> 11) * 2^-53.
/// Normals use the Marsaglia polar method with u, v = 2U - 1, returning
/// u*f first and caching v*f for the next call. Poisson draws use Knuth's
/// product-of-uniforms method below a mean of 30 and a rounded normal
/// approximation above it.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    double uniform();
    double normal();
    std::uint64_t poisson(double mean);

private:
    std::mt19937_64 engine_;
    bool has_cached_ = false;
    double cached_ = 0.0;
};

inline constexpr const char* kGeneratorName = "mt19937_64";
inline constexpr const char* kNormalAlgorithm = "marsaglia-polar";
inline constexpr double kSaturationDn = 63.0;

struct SynthSpec {
    std::uint64_t seed = 42;
    std::size_t n_provinces = 5;
    std::size_t zones_per_province = 20;
    std::size_t years = 3;
    int first_year = 2012;
    double elasticity = 0.8;            // b in ln(light) = a + b ln(gdp) + e
    double intercept = 1.0;             // a
    double noise_sd = 0.05;             // sd of e
    double elasticity_gradient = 0.0;   // b drifts by +-gradient from west to east
    double gdp_report_noise = 0.0;      // log-space sd of reported gdp around latent_gdp
    double insurance_intensity = 1e-3;  // expected offices per unit zone GDP
    double gdp_scale = 1e5;             // median provincial GDP
    double cellsize = 1.0;
    std::size_t cells_per_zone = 4;     // zone side, in cells

    void validate() const;
};

struct SynthWorld {
    SynthSpec spec;
    ZoneSet zones;
    ProvinceMapping provinces;
    std::map<int, RasterGrid> radiance;
    std::map<int, RasterGrid> saturated;
    std::vector<PointRecord> points;
    ObservationTable zone_panel;      // unit = zone id
    ObservationTable province_panel;  // unit = province name
    std::vector<double> zone_elasticity;
};

/// Builds a mutually consistent world: the panels' light columns are the
/// zonal sums of the emitted rasters, and insurance counts are the zonal
/// counts of the emitted points.
SynthWorld generate(const SynthSpec& spec);

/// Relative path -> file contents, byte-for-byte deterministic in the spec.
std::map<std::string, std::string> synth_files(const SynthWorld& world);
std::string synth_manifest_json(const SynthWorld& world);

/// Multiplies every positive value in `column` by exp(sigma * z), z standard
/// normal drawn from `seed`. sigma == 0 returns the table unchanged.
ObservationTable inject_inferior_proxy(const ObservationTable& table, const std::string& column, double sigma,
                                       std::uint64_t seed);

}  // namespace nlight
