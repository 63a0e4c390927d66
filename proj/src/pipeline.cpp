#include "nlight/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <ostream>
#include <set>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "nlight/csv.hpp"
#include "nlight/error.hpp"
#include "nlight/modelcmp.hpp"
#include "nlight/panel.hpp"
#include "nlight/regress.hpp"
#include "nlight/rgdp.hpp"
#include "nlight/table.hpp"
#include "nlight/zones.hpp"

namespace nlight {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// configuration document

namespace {

[[noreturn]] void invalid(const std::string& message) {
    throw Error(ErrorCode::InvalidArgument, message);
}

template <typename T>
void read_key(const json& section, const char* key, T& target) {
    if (!section.contains(key)) return;
    try {
        target = section.at(key).get<T>();
    } catch (const json::exception& e) {
        invalid(fmt::format("config key '{}': {}", key, e.what()));
    }
}

void reject_unknown(const json& section, std::initializer_list<std::string_view> known, std::string_view where) {
    for (const auto& [key, value] : section.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end())
            invalid(fmt::format("unknown config key '{}' in {}", key, where));
    }
}

const json& section_of(const json& doc, const char* name) {
    static const json empty = json::object();
    if (!doc.contains(name)) return empty;
    if (!doc.at(name).is_object()) invalid(fmt::format("config section '{}' must be an object", name));
    return doc.at(name);
}

}  // namespace

std::string config_to_json(const PipelineConfig& c) {
    json rasters = json::object();
    for (const auto& [year, path] : c.rasters) rasters[std::to_string(year)] = path;
    json thresholds = json::array();
    for (const auto& t : c.thresholds) thresholds.push_back({{"mode", to_string(t.mode)}, {"value", t.value}});
    json candidates = json::array();
    for (const auto& cand : c.candidates)
        candidates.push_back({{"label", cand.label}, {"response", cand.response}, {"predictor", cand.predictor}});

    json j;
    j["inputs"] = {{"raster", c.raster},           {"rasters", rasters},     {"points", c.points},
                   {"panel", c.panel},             {"provinces", c.provinces},
                   {"region_thresholds", c.region_thresholds}, {"zones_from", c.zones_from}};
    j["zones"] = c.zones ? json{{"origin", {c.zones->origin_x, c.zones->origin_y}},
                                {"size", c.zones->size},
                                {"dims", {c.zones->ncols, c.zones->nrows}}}
                         : json(nullptr);
    j["thresholds"] = {{"specs", thresholds}, {"stage", c.threshold_stage}};
    j["analysis"] = {{"response", c.response},
                     {"predictors", c.predictors},
                     {"vars", c.vars},
                     {"log_vars", c.log_vars},
                     {"log_policy", c.log_policy},
                     {"linear", c.linear},
                     {"joint", c.joint},
                     {"intercept", c.intercept},
                     {"listwise", c.listwise},
                     {"derive", c.derive},
                     {"density_basis", c.density_basis},
                     {"year", c.year ? json(*c.year) : json(nullptr)},
                     {"coords", {c.coords.first, c.coords.second}}};
    j["gwr"] = {{"kernel", c.kernel},
                {"neighbors", c.neighbors},
                {"bandwidth", c.bandwidth ? json(*c.bandwidth) : json(nullptr)}};
    j["compare"] = {{"candidates", candidates}, {"baseline", c.baseline}, {"method", c.method}};
    j["rgdp"] = {{"proportion_var", c.proportion_var}, {"gdp_column", c.gdp_column}};
    const auto& s = c.synth;
    j["synth"] = {{"seed", s.seed},
                  {"n_provinces", s.n_provinces},
                  {"zones_per_province", s.zones_per_province},
                  {"years", s.years},
                  {"first_year", s.first_year},
                  {"elasticity", s.elasticity},
                  {"intercept", s.intercept},
                  {"noise_sd", s.noise_sd},
                  {"elasticity_gradient", s.elasticity_gradient},
                  {"gdp_report_noise", s.gdp_report_noise},
                  {"insurance_intensity", s.insurance_intensity},
                  {"gdp_scale", s.gdp_scale},
                  {"cellsize", s.cellsize},
                  {"cells_per_zone", s.cells_per_zone}};
    j["output"] = {{"dir", c.out}, {"threads", c.threads}, {"dry_run", c.dry_run}};
    return j.dump(2) + '\n';
}

PipelineConfig config_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        invalid(fmt::format("config is not valid JSON: {}", e.what()));
    }
    if (!doc.is_object()) invalid("config must be a JSON object");
    reject_unknown(doc, {"inputs", "zones", "thresholds", "analysis", "gwr", "compare", "rgdp", "synth", "output"},
                   "top level");

    PipelineConfig c;
    const auto& in = section_of(doc, "inputs");
    reject_unknown(in, {"raster", "rasters", "points", "panel", "provinces", "region_thresholds", "zones_from"}, "inputs");
    read_key(in, "raster", c.raster);
    read_key(in, "points", c.points);
    read_key(in, "panel", c.panel);
    read_key(in, "provinces", c.provinces);
    read_key(in, "region_thresholds", c.region_thresholds);
    read_key(in, "zones_from", c.zones_from);
    if (in.contains("rasters")) {
        std::map<std::string, std::string> by_year;
        read_key(in, "rasters", by_year);
        for (const auto& [year, path] : by_year) {
            auto y = parse_double(year);
            if (!y || *y != std::floor(*y)) invalid(fmt::format("raster year '{}' is not an integer", year));
            c.rasters[static_cast<int>(*y)] = path;
        }
    }

    if (doc.contains("zones") && !doc.at("zones").is_null()) {
        const auto& z = section_of(doc, "zones");
        reject_unknown(z, {"origin", "size", "dims"}, "zones");
        ZoneGridConfig g;
        std::vector<double> origin;
        std::vector<std::size_t> dims;
        read_key(z, "origin", origin);
        read_key(z, "size", g.size);
        read_key(z, "dims", dims);
        if (origin.size() != 2 || dims.size() != 2) invalid("zones needs origin [x, y] and dims [cols, rows]");
        g.origin_x = origin[0];
        g.origin_y = origin[1];
        g.ncols = dims[0];
        g.nrows = dims[1];
        c.zones = g;
    }

    const auto& th = section_of(doc, "thresholds");
    reject_unknown(th, {"specs", "stage"}, "thresholds");
    read_key(th, "stage", c.threshold_stage);
    if (th.contains("specs")) {
        for (const auto& s : th.at("specs")) {
            ThresholdSpec spec;
            std::string mode;
            read_key(s, "mode", mode);
            spec.mode = parse_threshold_mode(mode);
            read_key(s, "value", spec.value);
            c.thresholds.push_back(spec);
        }
    }

    const auto& a = section_of(doc, "analysis");
    reject_unknown(a, {"response", "predictors", "vars", "log_vars", "log_policy", "linear", "joint", "intercept",
                       "listwise", "derive", "density_basis", "year", "coords"},
                   "analysis");
    read_key(a, "response", c.response);
    read_key(a, "predictors", c.predictors);
    read_key(a, "vars", c.vars);
    read_key(a, "log_vars", c.log_vars);
    read_key(a, "log_policy", c.log_policy);
    read_key(a, "linear", c.linear);
    read_key(a, "joint", c.joint);
    read_key(a, "intercept", c.intercept);
    read_key(a, "listwise", c.listwise);
    read_key(a, "derive", c.derive);
    read_key(a, "density_basis", c.density_basis);
    if (a.contains("year") && !a.at("year").is_null()) {
        int y = 0;
        read_key(a, "year", y);
        c.year = y;
    }
    if (a.contains("coords")) {
        std::vector<std::string> coords;
        read_key(a, "coords", coords);
        if (coords.size() != 2) invalid("coords must name two columns");
        c.coords = {coords[0], coords[1]};
    }

    const auto& g = section_of(doc, "gwr");
    reject_unknown(g, {"kernel", "neighbors", "bandwidth"}, "gwr");
    read_key(g, "kernel", c.kernel);
    read_key(g, "neighbors", c.neighbors);
    if (g.contains("bandwidth") && !g.at("bandwidth").is_null()) {
        double b = 0.0;
        read_key(g, "bandwidth", b);
        c.bandwidth = b;
    }

    const auto& cmp = section_of(doc, "compare");
    reject_unknown(cmp, {"candidates", "baseline", "method"}, "compare");
    read_key(cmp, "baseline", c.baseline);
    read_key(cmp, "method", c.method);
    if (cmp.contains("candidates")) {
        for (const auto& cand : cmp.at("candidates")) {
            CandidateConfig cc;
            read_key(cand, "label", cc.label);
            read_key(cand, "response", cc.response);
            read_key(cand, "predictor", cc.predictor);
            c.candidates.push_back(cc);
        }
    }

    const auto& r = section_of(doc, "rgdp");
    reject_unknown(r, {"proportion_var", "gdp_column"}, "rgdp");
    read_key(r, "proportion_var", c.proportion_var);
    read_key(r, "gdp_column", c.gdp_column);

    const auto& s = section_of(doc, "synth");
    reject_unknown(s, {"seed", "n_provinces", "zones_per_province", "years", "first_year", "elasticity", "intercept",
                       "noise_sd", "elasticity_gradient", "gdp_report_noise", "insurance_intensity", "gdp_scale", "cellsize",
                       "cells_per_zone"},
                   "synth");
    read_key(s, "seed", c.synth.seed);
    read_key(s, "n_provinces", c.synth.n_provinces);
    read_key(s, "zones_per_province", c.synth.zones_per_province);
    read_key(s, "years", c.synth.years);
    read_key(s, "first_year", c.synth.first_year);
    read_key(s, "elasticity", c.synth.elasticity);
    read_key(s, "intercept", c.synth.intercept);
    read_key(s, "noise_sd", c.synth.noise_sd);
    read_key(s, "elasticity_gradient", c.synth.elasticity_gradient);
    read_key(s, "gdp_report_noise", c.synth.gdp_report_noise);
    read_key(s, "insurance_intensity", c.synth.insurance_intensity);
    read_key(s, "gdp_scale", c.synth.gdp_scale);
    read_key(s, "cellsize", c.synth.cellsize);
    read_key(s, "cells_per_zone", c.synth.cells_per_zone);

    const auto& o = section_of(doc, "output");
    reject_unknown(o, {"dir", "threads", "dry_run"}, "output");
    read_key(o, "dir", c.out);
    read_key(o, "threads", c.threads);
    read_key(o, "dry_run", c.dry_run);
    return c;
}

// ---------------------------------------------------------------------------
// flag parsing helpers

namespace {

std::vector<std::string> split_list(const std::string& s, char sep = ',') {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::vector<std::string> list_values(const std::vector<std::string>& results) {
    std::vector<std::string> out;
    for (const auto& r : results)
        for (auto& v : split_list(r)) out.push_back(std::move(v));
    return out;
}

double to_double(const std::string& s, std::string_view what) {
    auto v = parse_double(s);
    if (!v || !std::isfinite(*v)) invalid(fmt::format("{}: '{}' is not a number", what, s));
    return *v;
}

std::size_t to_count(const std::string& s, std::string_view what) {
    const double v = to_double(s, what);
    if (v < 0 || v != std::floor(v)) invalid(fmt::format("{}: '{}' is not a non-negative integer", what, s));
    return static_cast<std::size_t>(v);
}

int to_int(const std::string& s, std::string_view what) {
    const double v = to_double(s, what);
    if (v != std::floor(v) || std::abs(v) > 1e6) invalid(fmt::format("{}: '{}' is not an integer", what, s));
    return static_cast<int>(v);
}

std::pair<double, double> to_pair(const std::string& s, std::string_view what) {
    auto parts = split_list(s);
    if (parts.size() != 2) invalid(fmt::format("{} expects two comma-separated values", what));
    return {to_double(parts[0], what), to_double(parts[1], what)};
}

ThresholdSpec parse_threshold_flag(const std::string& s) {
    const auto eq = s.find('=');
    ThresholdSpec t;
    if (eq == std::string::npos) {
        t.mode = parse_threshold_mode(s);
        t.value = t.mode == ThresholdMode::UrbanExtent ? kUrbanExtentThreshold : kBloomingFloorThreshold;
    } else {
        t.mode = parse_threshold_mode(s.substr(0, eq));
        t.value = to_double(s.substr(eq + 1), "--threshold");
    }
    if (!(t.value >= 0.0)) invalid("threshold value must be non-negative");
    return t;
}

CandidateConfig parse_candidate_flag(const std::string& s) {
    const auto eq = s.rfind('=');
    if (eq == std::string::npos || eq == 0) invalid(fmt::format("--candidate '{}' must be label=[response~]predictor", s));
    CandidateConfig c;
    c.label = s.substr(0, eq);
    std::string rhs = s.substr(eq + 1);
    const auto tilde = rhs.find('~');
    if (tilde != std::string::npos) {
        c.response = rhs.substr(0, tilde);
        c.predictor = rhs.substr(tilde + 1);
    } else {
        c.predictor = rhs;
    }
    return c;
}

struct FlagDef {
    const char* name;
    const char* help;
    bool is_flag = false;
    bool multi = false;
};

// Every flag any command understands, and how it lands in the config.
const std::vector<FlagDef>& flag_table() {
    static const std::vector<FlagDef> table = {
        {"--out", "output directory"},
        {"--threads", "worker threads for local fits (default: all cores)"},
        {"--dry-run", "validate inputs and configuration only", true},
        {"--seed", "generator seed (u64)"},
        {"--provinces-count", "number of provinces"},
        {"--zones-per-province", "zones per province"},
        {"--years", "number of years"},
        {"--first-year", "first year"},
        {"--elasticity", "light-GDP elasticity b"},
        {"--intercept", "link intercept a"},
        {"--noise-sd", "log-space link noise sd"},
        {"--elasticity-gradient", "west-east drift of the elasticity"},
        {"--gdp-noise", "log-space noise sd of reported gdp"},
        {"--insurance-intensity", "offices per unit zone GDP"},
        {"--gdp-scale", "median provincial GDP"},
        {"--cellsize", "raster cell size"},
        {"--cells-per-zone", "zone side in cells"},
        {"--raster", "ESRI ASCII raster"},
        {"--rasters", "year=path raster list", false, true},
        {"--points", "points CSV x,y,kind[,weight]"},
        {"--panel", "observation table CSV"},
        {"--provinces", "zone_id,province mapping CSV"},
        {"--zones-from", "take the zone grid from a synth manifest"},
        {"--zone-origin", "lower-left corner x,y of the zone grid"},
        {"--zone-size", "zone side length in map units"},
        {"--zone-dims", "zone grid columns,rows"},
        {"--threshold", "mode[=value], mode urban_extent|blooming_floor", false, true},
        {"--region-thresholds", "zone_id,threshold CSV"},
        {"--threshold-stage", "regional thresholds on cells or zone means: cell|zone"},
        {"--log", "columns to log-transform", false, true},
        {"--log-policy", "drop|offset=<eps>"},
        {"--linear", "do not log-transform model variables", true},
        {"--derive", "derive density and presence indicators", true},
        {"--density-basis", "premium density denominator: insured|total"},
        {"--year", "restrict to one year"},
        {"--response", "response column"},
        {"--predictors", "predictor columns", false, true},
        {"--joint", "fit all predictors jointly instead of one per model", true},
        {"--no-intercept", "fit without an intercept", true},
        {"--vars", "columns to report", false, true},
        {"--listwise", "listwise instead of pairwise deletion", true},
        {"--coords", "coordinate columns x,y"},
        {"--kernel", "bisquare|gaussian|uniform"},
        {"--neighbors", "adaptive neighbor candidates", false, true},
        {"--bandwidth", "fixed kernel bandwidth (overrides --neighbors)"},
        {"--candidate", "label=[response~]predictor", false, true},
        {"--baseline", "baseline candidate label for the likelihood ratio"},
        {"--method", "ols|gwr"},
        {"--proportion-var", "column for the provincial proportion table"},
        {"--gdp-column", "GDP column for R_GDP"},
    };
    return table;
}

void apply_flag(PipelineConfig& c, const std::string& name, const std::vector<std::string>& values) {
    const std::string v = values.empty() ? std::string() : values.back();
    auto& s = c.synth;
    if (name == "--out") c.out = v;
    else if (name == "--threads") c.threads = to_count(v, name);
    else if (name == "--dry-run") c.dry_run = true;
    else if (name == "--seed") {
        try {
            std::size_t pos = 0;
            s.seed = std::stoull(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
        } catch (const std::exception&) {
            invalid(fmt::format("--seed: '{}' is not an unsigned 64-bit integer", v));
        }
    }
    else if (name == "--provinces-count") s.n_provinces = to_count(v, name);
    else if (name == "--zones-per-province") s.zones_per_province = to_count(v, name);
    else if (name == "--years") s.years = to_count(v, name);
    else if (name == "--first-year") s.first_year = to_int(v, name);
    else if (name == "--elasticity") s.elasticity = to_double(v, name);
    else if (name == "--intercept") s.intercept = to_double(v, name);
    else if (name == "--noise-sd") s.noise_sd = to_double(v, name);
    else if (name == "--elasticity-gradient") s.elasticity_gradient = to_double(v, name);
    else if (name == "--gdp-noise") s.gdp_report_noise = to_double(v, name);
    else if (name == "--insurance-intensity") s.insurance_intensity = to_double(v, name);
    else if (name == "--gdp-scale") s.gdp_scale = to_double(v, name);
    else if (name == "--cellsize") s.cellsize = to_double(v, name);
    else if (name == "--cells-per-zone") s.cells_per_zone = to_count(v, name);
    else if (name == "--raster") c.raster = v;
    else if (name == "--rasters") {
        c.rasters.clear();
        for (const auto& item : list_values(values)) {
            const auto eq = item.find('=');
            if (eq == std::string::npos) invalid(fmt::format("--rasters entry '{}' must be year=path", item));
            c.rasters[to_int(item.substr(0, eq), name)] = item.substr(eq + 1);
        }
    }
    else if (name == "--points") c.points = v;
    else if (name == "--panel") c.panel = v;
    else if (name == "--provinces") c.provinces = v;
    else if (name == "--zones-from") c.zones_from = v;
    else if (name == "--zone-origin" || name == "--zone-size" || name == "--zone-dims") {
        if (!c.zones) c.zones = ZoneGridConfig{};
        if (name == "--zone-origin") std::tie(c.zones->origin_x, c.zones->origin_y) = to_pair(v, name);
        else if (name == "--zone-size") c.zones->size = to_double(v, name);
        else {
            auto parts = split_list(v);
            if (parts.size() != 2) invalid("--zone-dims expects cols,rows");
            c.zones->ncols = to_count(parts[0], name);
            c.zones->nrows = to_count(parts[1], name);
        }
    }
    else if (name == "--threshold") {
        c.thresholds.clear();
        for (const auto& item : values) c.thresholds.push_back(parse_threshold_flag(item));
    }
    else if (name == "--region-thresholds") c.region_thresholds = v;
    else if (name == "--threshold-stage") c.threshold_stage = v;
    else if (name == "--log") c.log_vars = list_values(values);
    else if (name == "--log-policy") c.log_policy = v;
    else if (name == "--linear") c.linear = true;
    else if (name == "--derive") c.derive = true;
    else if (name == "--density-basis") c.density_basis = v;
    else if (name == "--year") c.year = to_int(v, name);
    else if (name == "--response") c.response = v;
    else if (name == "--predictors") c.predictors = list_values(values);
    else if (name == "--joint") c.joint = true;
    else if (name == "--no-intercept") c.intercept = false;
    else if (name == "--vars") c.vars = list_values(values);
    else if (name == "--listwise") c.listwise = true;
    else if (name == "--coords") {
        auto parts = split_list(v);
        if (parts.size() != 2) invalid("--coords expects two column names");
        c.coords = {parts[0], parts[1]};
    }
    else if (name == "--kernel") c.kernel = v;
    else if (name == "--neighbors") {
        c.neighbors.clear();
        for (const auto& item : list_values(values)) c.neighbors.push_back(to_count(item, name));
    }
    else if (name == "--bandwidth") c.bandwidth = to_double(v, name);
    else if (name == "--candidate") {
        c.candidates.clear();
        for (const auto& item : values) c.candidates.push_back(parse_candidate_flag(item));
    }
    else if (name == "--baseline") c.baseline = v;
    else if (name == "--method") c.method = v;
    else if (name == "--proportion-var") c.proportion_var = v;
    else if (name == "--gdp-column") c.gdp_column = v;
    else invalid(fmt::format("unhandled flag {}", name));
}

// ---------------------------------------------------------------------------
// shared command plumbing

struct Context {
    PipelineConfig cfg;
    std::ostream& out;
    json diagnostics = json::object();
};

void require_file(const std::string& path, std::string_view what) {
    if (path.empty()) invalid(fmt::format("missing required input: {}", what));
    std::error_code ec;
    if (!fs::is_regular_file(path, ec))
        throw Error(ErrorCode::IoError, fmt::format("{} not found: {}", what, path));
}

LogPolicy parse_log_policy(const std::string& s) {
    if (s == "drop") return LogPolicy::drop();
    if (s.rfind("offset=", 0) == 0) {
        const double eps = to_double(s.substr(7), "--log-policy");
        if (!(eps > 0.0)) invalid("log offset must be positive");
        return LogPolicy::offset(eps);
    }
    invalid(fmt::format("--log-policy '{}' must be drop or offset=<eps>", s));
}

std::size_t thread_count(const PipelineConfig& c) {
    if (c.threads > 0) return c.threads;
    return std::max(1u, std::thread::hardware_concurrency());
}

ZoneSet resolve_zones(const PipelineConfig& c) {
    if (!c.zones_from.empty()) {
        require_file(c.zones_from, "zone manifest");
        json m;
        try {
            m = json::parse(read_text_file(c.zones_from));
            const auto& z = m.at("zones");
            return build_zoneset(z.at("origin_x").get<double>(), z.at("origin_y").get<double>(),
                                 z.at("zone_size").get<double>(), z.at("ncols").get<std::size_t>(),
                                 z.at("nrows").get<std::size_t>());
        } catch (const json::exception& e) {
            invalid(fmt::format("zone manifest {}: {}", c.zones_from, e.what()));
        }
    }
    if (!c.zones) invalid("zone grid required: --zone-origin, --zone-size, --zone-dims (or --zones-from)");
    if (!(c.zones->size > 0.0) || c.zones->ncols == 0 || c.zones->nrows == 0)
        throw Error(ErrorCode::InvalidDimension, "zone grid needs --zone-size > 0 and --zone-dims cols,rows >= 1");
    return build_zoneset(c.zones->origin_x, c.zones->origin_y, c.zones->size, c.zones->ncols, c.zones->nrows);
}

// year -> path; a single --raster is keyed by year 0.
std::map<int, std::string> raster_inputs(const PipelineConfig& c) {
    std::map<int, std::string> out = c.rasters;
    if (!c.raster.empty()) {
        if (!out.empty()) invalid("use either --raster or --rasters, not both");
        out[0] = c.raster;
    }
    if (out.empty()) invalid("missing required input: raster (--raster or --rasters)");
    for (const auto& [year, path] : out) require_file(path, "raster");
    return out;
}

void validate_stage(const PipelineConfig& c) {
    if (c.threshold_stage != "cell" && c.threshold_stage != "zone")
        invalid(fmt::format("--threshold-stage '{}' must be cell or zone", c.threshold_stage));
}

RasterGrid preprocess(const RasterGrid& raw, const PipelineConfig& c) {
    RasterGrid g = adjust_dn(raw);
    for (const auto& t : c.thresholds) g = apply_threshold(g, t);
    return g;
}

std::string year_suffix(int year) {
    return year == 0 ? std::string() : fmt::format("_{}", year);
}

ObservationTable load_panel(Context& ctx) {
    require_file(ctx.cfg.panel, "panel");
    ObservationTable t = parse_table_csv(read_text_file(ctx.cfg.panel));
    if (ctx.cfg.year) {
        t = t.filter_year(*ctx.cfg.year);
        if (t.row_count() == 0) invalid(fmt::format("panel has no rows for year {}", *ctx.cfg.year));
    }
    if (ctx.cfg.derive) {
        DeriveOptions opts;
        if (ctx.cfg.density_basis == "insured") opts.density_basis = DensityBasis::InsuredPopulation;
        else if (ctx.cfg.density_basis == "total") opts.density_basis = DensityBasis::TotalPopulation;
        else invalid("--derive needs --density-basis insured|total");
        t = derive_indicators(t, opts);
    }
    return t;
}

void require_columns(const ObservationTable& t, const std::vector<std::string>& cols) {
    for (const auto& c : cols)
        if (!t.has_column(c)) throw Error(ErrorCode::MissingColumn, fmt::format("panel has no column '{}'", c));
}

void record_diagnostics(Context& ctx, const ObservationTable& t) {
    for (const auto& [label, count] : t.diagnostics()) ctx.diagnostics[label] = count;
}

// Columns entering a regression are logged unless --linear; explicit --log wins.
ObservationTable apply_model_logs(Context& ctx, const ObservationTable& t, std::vector<std::string> model_vars) {
    const LogPolicy policy = parse_log_policy(ctx.cfg.log_policy);
    std::vector<std::string> vars = ctx.cfg.linear ? std::vector<std::string>{}
                                   : ctx.cfg.log_vars.empty() ? std::move(model_vars)
                                                              : ctx.cfg.log_vars;
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
    require_columns(t, vars);
    ObservationTable logged = log_transform(t, vars, policy);
    record_diagnostics(ctx, logged);
    return logged;
}

void finish(Context& ctx, OutputSet& outputs, std::string_view command) {
    json summary = {{"command", command}, {"outputs", outputs.paths()}, {"diagnostics", ctx.diagnostics}};
    if (ctx.cfg.dry_run) {
        summary["dry_run"] = true;
        ctx.out << summary.dump() << '\n';
        return;
    }
    outputs.commit();
    ctx.out << summary.dump() << '\n';
}

// ---------------------------------------------------------------------------
// commands

void cmd_synth(Context& ctx) {
    ctx.cfg.synth.validate();
    OutputSet outputs(ctx.cfg.out);
    if (!ctx.cfg.dry_run) {
        SynthWorld world = generate(ctx.cfg.synth);
        for (auto& [path, contents] : synth_files(world)) outputs.add(path, std::move(contents));
    }
    finish(ctx, outputs, "synth");
}

void cmd_ingest(Context& ctx) {
    const auto inputs = raster_inputs(ctx.cfg);
    std::map<int, RasterGrid> raw;
    for (const auto& [year, path] : inputs) raw.emplace(year, parse_ascii_grid(read_text_file(path)));

    OutputSet outputs(ctx.cfg.out);
    json summary = json::object();
    for (const auto& [year, grid] : raw) {
        std::size_t negative = 0, nodata = 0;
        for (double v : grid.values()) {
            if (grid.is_nodata(v)) ++nodata;
            else if (v < 0.0) ++negative;
        }
        const RasterGrid adjusted = adjust_dn(grid);
        const RasterGrid processed = preprocess(grid, ctx.cfg);
        const std::string key = year == 0 ? "raster" : std::to_string(year);
        summary[key] = {{"ncols", grid.ncols()},
                        {"nrows", grid.nrows()},
                        {"nodata_cells", nodata},
                        {"negative_cells", negative},
                        {"total_dn_raw", total_dn(grid)},
                        {"total_dn_adjusted", total_dn(adjusted)},
                        {"total_dn_processed", total_dn(processed)}};
        outputs.add(fmt::format("processed{}.asc", year_suffix(year)), serialize_ascii_grid(processed));
    }
    json thresholds = json::array();
    for (const auto& t : ctx.cfg.thresholds) thresholds.push_back({{"mode", to_string(t.mode)}, {"value", t.value}});
    outputs.add("ingest.json", json{{"thresholds", thresholds}, {"rasters", summary}}.dump(2) + '\n');
    finish(ctx, outputs, "ingest");
}

void cmd_zonal(Context& ctx) {
    validate_stage(ctx.cfg);
    const auto inputs = raster_inputs(ctx.cfg);
    const ZoneSet zs = resolve_zones(ctx.cfg);
    std::map<ZoneId, double> regional;
    if (!ctx.cfg.region_thresholds.empty()) {
        require_file(ctx.cfg.region_thresholds, "region thresholds");
        regional = parse_zone_thresholds_csv(read_text_file(ctx.cfg.region_thresholds));
        for (const auto& [id, t] : regional)
            if (id >= zs.size()) invalid(fmt::format("region threshold names zone {} outside the grid", id));
    }
    std::optional<std::vector<PointRecord>> points;
    if (!ctx.cfg.points.empty()) {
        require_file(ctx.cfg.points, "points");
        points = parse_points_csv(read_text_file(ctx.cfg.points));
    }
    std::map<int, RasterGrid> raw;
    for (const auto& [year, path] : inputs) raw.emplace(year, parse_ascii_grid(read_text_file(path)));

    OutputSet outputs(ctx.cfg.out);
    json summary = json::object();
    std::optional<ZonalPointsResult> point_stats;
    if (points) point_stats = zonal_points(zs, *points);
    for (const auto& [year, grid] : raw) {
        RasterGrid g = preprocess(grid, ctx.cfg);
        if (!regional.empty() && ctx.cfg.threshold_stage == "cell") g = apply_zone_thresholds(zs, g, regional);
        auto light = zonal_light(zs, g);
        auto stats = light.stats;
        if (!regional.empty() && ctx.cfg.threshold_stage == "zone") stats = threshold_zone_stats(stats, regional);
        if (point_stats) stats = merge_zone_stats(stats, point_stats->stats);
        double zone_total = 0.0;
        for (const auto& s : stats) zone_total += s.sum_light;
        summary[year == 0 ? "raster" : std::to_string(year)] = {{"total_dn", total_dn(g)},
                                                                 {"zone_sum", zone_total},
                                                                 {"cells_outside", light.cells_outside}};
        outputs.add(fmt::format("zonal{}.csv", year_suffix(year)), zone_stats_to_csv(stats));
    }
    json doc = {{"zones", {{"origin_x", zs.origin_x()}, {"origin_y", zs.origin_y()}, {"zone_size", zs.zone_size()},
                           {"ncols", zs.ncols()}, {"nrows", zs.nrows()}}},
                {"threshold_stage", ctx.cfg.threshold_stage},
                {"rasters", summary}};
    if (point_stats) {
        doc["points_total"] = points->size();
        doc["points_outside"] = point_stats->points_outside;
        ctx.diagnostics["points_outside"] = point_stats->points_outside;
    }
    outputs.add("zonal.json", doc.dump(2) + '\n');
    finish(ctx, outputs, "zonal");
}

std::vector<std::string> report_vars(const PipelineConfig& c, const ObservationTable& t) {
    if (!c.vars.empty()) return c.vars;
    std::vector<std::string> vars;
    for (const auto& name : t.column_names())
        if (name != c.coords.first && name != c.coords.second) vars.push_back(name);
    return vars;
}

void cmd_stats(Context& ctx) {
    ObservationTable t = load_panel(ctx);
    const auto vars = report_vars(ctx.cfg, t);
    require_columns(t, vars);
    if (!ctx.cfg.log_vars.empty()) {
        require_columns(t, ctx.cfg.log_vars);
        t = log_transform(t, ctx.cfg.log_vars, parse_log_policy(ctx.cfg.log_policy));
    }
    record_diagnostics(ctx, t);
    const SummaryReport report = summarize(t, vars);
    OutputSet outputs(ctx.cfg.out);
    outputs.add("summary.csv", summary_to_csv(report));
    outputs.add("summary.json", summary_to_json(report));
    finish(ctx, outputs, "stats");
}

void cmd_corr(Context& ctx) {
    ObservationTable t = load_panel(ctx);
    const auto vars = report_vars(ctx.cfg, t);
    require_columns(t, vars);
    if (vars.size() < 2) invalid("correlation needs at least two variables");

    OutputSet outputs(ctx.cfg.out);
    // Plot data for log GDP/capita against log radiance, from the untransformed table.
    if (t.has_column(var::kGdpPerCapita) && t.has_column(var::kRadianceLight)) {
        std::string scatter = "unit,year,log_gdp_per_capita,log_radiance_light\n";
        const auto& g = t.column(var::kGdpPerCapita);
        const auto& l = t.column(var::kRadianceLight);
        for (std::size_t r = 0; r < t.row_count(); ++r) {
            if (!g[r] || !l[r] || !(*g[r] > 0.0) || !(*l[r] > 0.0)) continue;
            scatter += join_csv_line({t.keys()[r].unit, std::to_string(t.keys()[r].year),
                                      format_csv_number(std::log(*g[r])), format_csv_number(std::log(*l[r]))}) +
                       '\n';
        }
        outputs.add("scatter_gdp_per_capita_radiance.csv", std::move(scatter));
    }
    if (!ctx.cfg.log_vars.empty()) {
        require_columns(t, ctx.cfg.log_vars);
        t = log_transform(t, ctx.cfg.log_vars, parse_log_policy(ctx.cfg.log_policy));
    }
    record_diagnostics(ctx, t);
    const CorrelationMatrix m =
        correlation_matrix(t, vars, ctx.cfg.listwise ? MissingPolicy::Listwise : MissingPolicy::Pairwise);
    outputs.add("correlation.csv", correlation_to_csv(m));
    outputs.add("correlation.json", correlation_to_json(m));
    finish(ctx, outputs, "corr");
}

std::vector<std::vector<std::string>> predictor_sets(const PipelineConfig& c) {
    if (c.predictors.empty()) invalid("missing --predictors");
    if (c.joint) return {c.predictors};
    std::vector<std::vector<std::string>> sets;
    for (const auto& p : c.predictors) sets.push_back({p});
    return sets;
}

void cmd_ols(Context& ctx) {
    if (ctx.cfg.response.empty()) invalid("missing --response");
    const auto sets = predictor_sets(ctx.cfg);
    ObservationTable t = load_panel(ctx);
    std::vector<std::string> model_vars = ctx.cfg.predictors;
    model_vars.push_back(ctx.cfg.response);
    require_columns(t, model_vars);
    t = apply_model_logs(ctx, t, model_vars);

    json fits = json::array();
    std::string csv = "model,term,estimate\n";
    for (const auto& preds : sets) {
        const RegressionProblem p = problem_from_table(t, ctx.cfg.response, preds, ctx.cfg.intercept);
        const FitResult fit = ols_fit(p);
        fits.push_back(json::parse(fit_to_json(p, fit)));
        const std::string model = fmt::format("{}", fmt::join(preds, "+"));
        const auto names = p.coefficient_names();
        for (std::size_t i = 0; i < names.size(); ++i)
            csv += join_csv_line({model, names[i], format_csv_number(fit.coefficients(static_cast<Eigen::Index>(i)))}) + '\n';
    }
    OutputSet outputs(ctx.cfg.out);
    outputs.add("ols.json", fits.dump(2) + '\n');
    outputs.add("ols.csv", std::move(csv));
    finish(ctx, outputs, "ols");
}

std::vector<std::size_t> default_neighbor_candidates(std::size_t n, std::size_t p) {
    std::set<std::size_t> out;
    for (double f : {0.1, 0.2, 0.3, 0.5, 0.75}) {
        auto c = static_cast<std::size_t>(std::lround(f * static_cast<double>(n)));
        c = std::clamp<std::size_t>(c, p + 1, n - 1);
        out.insert(c);
    }
    return {out.begin(), out.end()};
}

struct GwrRun {
    LocalFitSet local;
    NeighborSelection selection;
};

GwrRun run_gwr(const PipelineConfig& c, const RegressionProblem& p, std::size_t threads) {
    const KernelKind kind = parse_kernel_kind(c.kernel);
    GwrRun run;
    if (c.bandwidth) {
        run.local = gwr_fit(p, KernelSpec::fixed(kind, *c.bandwidth), threads);
    } else {
        if (p.n() < p.p() + 2)
            throw Error(ErrorCode::NotEnoughLocations, fmt::format("{} observations are too few for GWR", p.n()));
        const auto candidates = c.neighbors.empty() ? default_neighbor_candidates(p.n(), p.p()) : c.neighbors;
        run.selection = select_neighbors(p, kind, candidates, threads);
        run.local = gwr_fit(p, KernelSpec::adaptive(kind, run.selection.neighbors), threads);
    }
    if (!run.local.ok()) {
        std::vector<std::string> failed;
        for (std::size_t i = 0; i < run.local.locations.size(); ++i)
            if (run.local.locations[i].error) failed.push_back(fmt::format("{}:{}", i, *run.local.locations[i].error));
        throw Error(ErrorCode::RankDeficient, fmt::format("local fits failed at {}", fmt::join(failed, ", ")));
    }
    return run;
}

json selection_json(const GwrRun& run) {
    json scores = json::array();
    for (const auto& [n, s] : run.selection.scores) scores.push_back({{"neighbors", n}, {"gwr_aic", s ? json(*s) : json(nullptr)}});
    return scores;
}

void cmd_gwr(Context& ctx) {
    if (ctx.cfg.response.empty()) invalid("missing --response");
    parse_kernel_kind(ctx.cfg.kernel);
    if (ctx.cfg.bandwidth && !(*ctx.cfg.bandwidth > 0.0)) invalid("--bandwidth must be positive");
    const auto sets = predictor_sets(ctx.cfg);
    ObservationTable t = load_panel(ctx);
    std::vector<std::string> model_vars = ctx.cfg.predictors;
    model_vars.push_back(ctx.cfg.response);
    require_columns(t, model_vars);
    require_columns(t, {ctx.cfg.coords.first, ctx.cfg.coords.second});
    t = apply_model_logs(ctx, t, model_vars);
    const std::size_t threads = thread_count(ctx.cfg);

    OutputSet outputs(ctx.cfg.out);
    std::vector<GwrReportRow> rows;
    json models = json::array();
    for (const auto& preds : sets) {
        const RegressionProblem p = problem_from_table(t, ctx.cfg.response, preds, ctx.cfg.intercept, ctx.cfg.coords);
        const FitResult ols = ols_fit(p);
        const GwrRun run = run_gwr(ctx.cfg, p, threads);
        const std::size_t offset = p.intercept ? 1 : 0;
        for (std::size_t i = 0; i < preds.size(); ++i) rows.push_back(make_report_row(preds[i], i + offset, ols, run.local));

        const std::string model = fmt::format("{}", fmt::join(preds, "+"));
        json coefs = json::array();
        for (const auto& s : coefficient_summary(run.local, p.coefficient_names()))
            coefs.push_back({{"term", s.name}, {"min", s.min}, {"lower_quartile", s.lower_quartile}, {"mean", s.mean},
                             {"upper_quartile", s.upper_quartile}, {"max", s.max}});
        models.push_back({{"model", model},
                          {"response", ctx.cfg.response},
                          {"n", run.local.n},
                          {"kernel", ctx.cfg.kernel},
                          {"neighbors", run.local.neighbors},
                          {"bandwidth", ctx.cfg.bandwidth ? json(*ctx.cfg.bandwidth) : json(nullptr)},
                          {"neighbor_scores", selection_json(run)},
                          {"effective_parameters", run.local.effective_parameters},
                          {"residual_squares", run.local.residual_squares},
                          {"gwr_aic", run.local.gwr_aic},
                          {"r_squared", run.local.r_squared},
                          {"ols", json::parse(fit_to_json(p, ols))},
                          {"coefficients", coefs}});
        outputs.add(fmt::format("gwr_surface_{}.csv", fmt::join(preds, "+")), gwr_surface_to_csv(p, run.local));
    }
    outputs.add("gwr_report.csv", gwr_report_to_csv(rows));
    outputs.add("gwr.json", models.dump(2) + '\n');
    finish(ctx, outputs, "gwr");
}

std::vector<CandidateConfig> default_candidates(const ObservationTable& t) {
    std::vector<CandidateConfig> out;
    const std::vector<std::pair<const char*, std::string_view>> defaults = {
        {"Model 1 (GDP)", var::kGdp},
        {"Model 2 (GDP/Capita)", var::kGdpPerCapita},
        {"Model 3 (Radiance light)", var::kRadianceLight},
        {"Model 4 (Saturated light)", var::kSaturatedLight}};
    for (const auto& [label, column] : defaults)
        if (t.has_column(column)) out.push_back({label, "", std::string(column)});
    return out;
}

inline constexpr const char* kInterceptBaseline = "Model 0 (Intercept only)";

void cmd_compare(Context& ctx) {
    if (ctx.cfg.method != "ols" && ctx.cfg.method != "gwr")
        invalid(fmt::format("--method '{}' must be ols or gwr", ctx.cfg.method));
    if (ctx.cfg.method == "gwr") parse_kernel_kind(ctx.cfg.kernel);
    ObservationTable t = load_panel(ctx);

    std::vector<CandidateConfig> cands = ctx.cfg.candidates.empty() ? default_candidates(t) : ctx.cfg.candidates;
    std::string baseline = ctx.cfg.baseline;
    if (baseline.empty()) {
        baseline = kInterceptBaseline;
        cands.push_back({baseline, "", ""});
    }
    if (baseline == "none") baseline.clear();
    for (auto& c : cands) {
        if (c.response.empty()) c.response = ctx.cfg.response;
        if (c.response.empty()) invalid(fmt::format("candidate '{}' has no response (use --response)", c.label));
    }
    if (cands.size() < 2) invalid("comparison needs at least two candidates");

    // Same rows for every candidate, so the likelihood ratios are comparable.
    std::vector<std::string> model_vars;
    for (const auto& c : cands) {
        model_vars.push_back(c.response);
        if (!c.predictor.empty()) model_vars.push_back(c.predictor);
    }
    require_columns(t, model_vars);
    if (ctx.cfg.method == "gwr") require_columns(t, {ctx.cfg.coords.first, ctx.cfg.coords.second});
    t = apply_model_logs(ctx, t, model_vars);
    {
        ObservationTable complete;
        for (const auto& n : t.column_names()) complete.ensure_column(n);
        std::vector<std::string> needed = model_vars;
        if (ctx.cfg.method == "gwr") {
            needed.push_back(ctx.cfg.coords.first);
            needed.push_back(ctx.cfg.coords.second);
        }
        std::size_t dropped = 0;
        for (std::size_t r = 0; r < t.row_count(); ++r) {
            bool ok = std::all_of(needed.begin(), needed.end(), [&](const auto& v) { return t.get(r, v).has_value(); });
            if (!ok) {
                ++dropped;
                continue;
            }
            const std::size_t row = complete.add_row(t.keys()[r].unit, t.keys()[r].year);
            for (const auto& n : t.column_names()) complete.set(row, n, t.get(r, n));
        }
        if (dropped) ctx.diagnostics["compare_rows_dropped"] = dropped;
        t = std::move(complete);
    }

    const std::size_t threads = thread_count(ctx.cfg);
    std::vector<CandidateModel> models;
    json details = json::array();
    for (const auto& c : cands) {
        std::vector<std::string> preds;
        if (!c.predictor.empty()) preds.push_back(c.predictor);
        std::optional<std::pair<std::string, std::string>> coords;
        if (ctx.cfg.method == "gwr") coords = ctx.cfg.coords;
        const RegressionProblem p = problem_from_table(t, c.response, preds, true, coords);
        if (ctx.cfg.method == "ols") {
            const FitResult fit = ols_fit(p);
            models.push_back(candidate_from_ols(c.label, p, fit));
            details.push_back({{"model", c.label}, {"response", c.response}, {"predictor", c.predictor},
                               {"n", fit.n}, {"k_effective", p.p()}, {"rss", fit.rss}});
        } else {
            const GwrRun run = run_gwr(ctx.cfg, p, threads);
            models.push_back(candidate_from_gwr(c.label, p, run.local));
            details.push_back({{"model", c.label}, {"response", c.response}, {"predictor", c.predictor},
                               {"n", run.local.n}, {"k_effective", run.local.effective_parameters},
                               {"rss", run.local.residual_squares}, {"neighbors", run.local.neighbors}});
        }
    }
    const ModelComparison cmp = compare(models, baseline);
    json doc = json::parse(comparison_to_json(cmp));
    doc["method"] = ctx.cfg.method;
    doc["fits"] = details;

    OutputSet outputs(ctx.cfg.out);
    outputs.add("comparison.csv", comparison_to_csv(cmp));
    outputs.add("comparison.json", doc.dump(2) + '\n');
    finish(ctx, outputs, "compare");
}

void cmd_rgdp(Context& ctx) {
    validate_stage(ctx.cfg);
    const auto inputs = raster_inputs(ctx.cfg);
    if (inputs.count(0)) invalid("rgdp needs year-keyed rasters (--rasters year=path)");
    const ZoneSet zs = resolve_zones(ctx.cfg);
    require_file(ctx.cfg.provinces, "province mapping");
    const ProvinceMapping mapping = parse_province_mapping_csv(read_text_file(ctx.cfg.provinces));
    for (const auto& [id, name] : mapping)
        if (id >= zs.size()) invalid(fmt::format("province mapping names zone {} outside the grid", id));
    std::map<ZoneId, double> regional;
    if (!ctx.cfg.region_thresholds.empty()) {
        require_file(ctx.cfg.region_thresholds, "region thresholds");
        regional = parse_zone_thresholds_csv(read_text_file(ctx.cfg.region_thresholds));
    }
    if (!regional.empty() && ctx.cfg.threshold_stage != "cell")
        invalid("rgdp applies regional thresholds to cells only (--threshold-stage cell)");
    const ObservationTable t = load_panel(ctx);
    require_columns(t, {ctx.cfg.gdp_column});
    if (!ctx.cfg.proportion_var.empty()) require_columns(t, {ctx.cfg.proportion_var});

    std::map<int, RasterGrid> grids;
    for (const auto& [year, path] : inputs) {
        RasterGrid g = preprocess(parse_ascii_grid(read_text_file(path)), ctx.cfg);
        if (!regional.empty()) g = apply_zone_thresholds(zs, g, regional);
        grids.emplace(year, std::move(g));
    }
    const RgdpSeries series = r_gdp_series(t, grids, zs, mapping, ctx.cfg.gdp_column);
    if (series.skipped) ctx.diagnostics["rgdp_skipped"] = series.skipped;

    OutputSet outputs(ctx.cfg.out);
    outputs.add("rgdp.csv", rgdp_to_csv(series));
    json records = json::array();
    for (const auto& r : series.records)
        records.push_back({{"province", r.province}, {"year", r.year}, {"gdp", r.gdp}, {"dn_sum", r.dn_sum},
                           {"r_gdp", r.r_gdp}});
    outputs.add("rgdp.json", json{{"records", records}, {"skipped", series.skipped}, {"skip_reasons", series.skip_reasons}}
                                     .dump(2) + '\n');
    if (!ctx.cfg.proportion_var.empty())
        outputs.add("proportions.csv", proportions_to_csv(proportion_table(t, ctx.cfg.proportion_var)));
    finish(ctx, outputs, "rgdp");
}

struct CommandDef {
    const char* name;
    const char* help;
    void (*run)(Context&);
    std::vector<const char*> flags;
};

const std::vector<CommandDef>& commands() {
    static const std::vector<CommandDef> table = {
        {"synth", "generate a synthetic world with known ground truth", cmd_synth,
         {"--seed", "--provinces-count", "--zones-per-province", "--years", "--first-year", "--elasticity",
          "--intercept", "--noise-sd", "--elasticity-gradient", "--gdp-noise", "--insurance-intensity", "--gdp-scale", "--cellsize",
          "--cells-per-zone"}},
        {"ingest", "clamp negative DN and apply thresholds to rasters", cmd_ingest,
         {"--raster", "--rasters", "--threshold"}},
        {"zonal", "per-zone light sums and point counts", cmd_zonal,
         {"--raster", "--rasters", "--threshold", "--points", "--zones-from", "--zone-origin", "--zone-size",
          "--zone-dims", "--region-thresholds", "--threshold-stage"}},
        {"stats", "summary statistics of panel variables", cmd_stats,
         {"--panel", "--vars", "--log", "--log-policy", "--year", "--derive", "--density-basis", "--coords"}},
        {"corr", "Pearson correlation matrix and scatter data", cmd_corr,
         {"--panel", "--vars", "--log", "--log-policy", "--year", "--derive", "--density-basis", "--listwise",
          "--coords"}},
        {"ols", "global least squares fits", cmd_ols,
         {"--panel", "--response", "--predictors", "--joint", "--no-intercept", "--log", "--log-policy", "--linear",
          "--year", "--derive", "--density-basis"}},
        {"gwr", "geographically weighted regression and coefficient report", cmd_gwr,
         {"--panel", "--response", "--predictors", "--joint", "--no-intercept", "--log", "--log-policy", "--linear",
          "--year", "--derive", "--density-basis", "--coords", "--kernel", "--neighbors", "--bandwidth"}},
        {"compare", "rank proxy models by likelihood ratio, BIC and AIC", cmd_compare,
         {"--panel", "--response", "--candidate", "--baseline", "--method", "--log", "--log-policy", "--linear",
          "--year", "--derive", "--density-basis", "--coords", "--kernel", "--neighbors", "--bandwidth"}},
        {"rgdp", "GDP per unit light by province and year", cmd_rgdp,
         {"--panel", "--rasters", "--threshold", "--zones-from", "--zone-origin", "--zone-size", "--zone-dims",
          "--provinces", "--region-thresholds", "--threshold-stage", "--proportion-var", "--gdp-column", "--year",
          "--derive", "--density-basis"}},
    };
    return table;
}

void write_error(std::ostream& err, std::string_view code, const std::string& message) {
    err << json{{"error", code}, {"message", message}}.dump() << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Nighttime-light economic analysis pipeline", "nlight"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON configuration document")->check(CLI::ExistingFile);

    struct Registered {
        const CommandDef* command;
        CLI::App* app;
        std::vector<std::pair<std::string, CLI::Option*>> options;
    };
    std::vector<Registered> registered;
    for (const auto& cmd : commands()) {
        Registered r{&cmd, app.add_subcommand(cmd.name, cmd.help), {}};
        r.app->add_option("--config", config_path, "JSON configuration document")->check(CLI::ExistingFile);
        std::vector<const char*> flags = {"--out", "--threads", "--dry-run"};
        flags.insert(flags.end(), cmd.flags.begin(), cmd.flags.end());
        for (const char* name : flags) {
            auto it = std::find_if(flag_table().begin(), flag_table().end(),
                                   [&](const FlagDef& f) { return std::string_view(f.name) == name; });
            CLI::Option* opt = it->is_flag ? r.app->add_flag(name, it->help) : r.app->add_option(name, it->help);
            if (!it->is_flag) {
                opt->multi_option_policy(it->multi ? CLI::MultiOptionPolicy::TakeAll : CLI::MultiOptionPolicy::TakeLast);
            }
            r.options.emplace_back(name, opt);
        }
        registered.push_back(std::move(r));
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        write_error(err, "InvalidArgument", e.what());
        return 1;
    }

    try {
        for (auto& r : registered) {
            if (!r.app->parsed()) continue;
            PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : config_from_json(read_text_file(config_path));
            for (const auto& [name, opt] : r.options) {
                if (opt->count() == 0) continue;
                apply_flag(cfg, name, opt->results());
            }
            Context ctx{std::move(cfg), out};
            r.command->run(ctx);
            return 0;
        }
        write_error(err, "InvalidArgument", "no command given");
        return 1;
    } catch (const Error& e) {
        write_error(err, to_string(e.code()), e.what());
        return is_numerical(e.code()) ? 2 : 1;
    } catch (const std::exception& e) {
        write_error(err, "Internal", e.what());
        return 2;
    }
}

}  // namespace nlight
