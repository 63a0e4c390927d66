#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nlight/raster.hpp"
#include "nlight/synth.hpp"

namespace nlight {

struct ZoneGridConfig {
    double origin_x = 0.0;
    double origin_y = 0.0;
    double size = 0.0;
    std::size_t ncols = 0;
    std::size_t nrows = 0;
};

/// One proxy model for `compare`. An empty predictor is the intercept-only
/// model; an empty response falls back to the run's response.
struct CandidateConfig {
    std::string label;
    std::string response;
    std::string predictor;
};

/// Everything a command may need, loadable from a JSON document and
/// overridable by flags.
struct PipelineConfig {
    // inputs
    std::string raster;
    std::map<int, std::string> rasters;
    std::string points;
    std::string panel;
    std::string provinces;
    std::string region_thresholds;
    std::string zones_from;  // synth manifest holding the zone grid

    std::optional<ZoneGridConfig> zones;
    std::vector<ThresholdSpec> thresholds;
    std::string threshold_stage = "cell";

    // analysis
    std::string response;
    std::vector<std::string> predictors;
    std::vector<std::string> vars;
    std::vector<std::string> log_vars;
    std::string log_policy = "drop";
    bool linear = false;
    bool joint = false;
    bool intercept = true;
    bool listwise = false;
    bool derive = false;
    std::string density_basis;
    std::optional<int> year;
    std::pair<std::string, std::string> coords{"x", "y"};

    // gwr
    std::string kernel = "bisquare";
    std::vector<std::size_t> neighbors;
    std::optional<double> bandwidth;

    // compare
    std::vector<CandidateConfig> candidates;
    std::string baseline;
    std::string method = "ols";

    // rgdp
    std::string proportion_var;
    std::string gdp_column = "gdp";

    SynthSpec synth;

    std::string out = ".";
    std::size_t threads = 0;  // 0 = all cores
    bool dry_run = false;
};

std::string config_to_json(const PipelineConfig& c);
PipelineConfig config_from_json(const std::string& text);

/// Entry point shared by the executable and the tests.
///
/// Exit codes: 0 success; 1 invalid arguments, configuration or inputs (an
/// error object is written to `err` as JSON); 2 numerical failure. Output
/// files are only published once the whole command has succeeded.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nlight
