#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nlight/csv.hpp"
#include "nlight/pipeline.hpp"

using namespace nlight;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("nlight_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                                            ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& rel) const { return (path / rel).string(); }
};

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

int run_binary(const std::string& args) {
    const int status = std::system((std::string(NLIGHT_BINARY) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream(path) << text;
}

std::size_t file_count(const fs::path& dir) {
    if (!fs::exists(dir)) return 0;
    std::size_t n = 0;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) ++n;
    return n;
}

}  // namespace

TEST(Cli, HelpExitsZero) {
    EXPECT_EQ(run({"--help"}).code, 0);
    EXPECT_EQ(run_binary("gwr --help"), 0);
}

TEST(Cli, UnknownFlagIsUsageError) {
    auto r = run({"stats", "--bogus"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("\"error\""), std::string::npos);
}

TEST(Cli, MissingRasterWritesNothing) {
    TempDir tmp;
    const auto out = tmp / "out";
    EXPECT_EQ(run_binary("ingest --raster " + (tmp / "absent.asc") + " --out " + out), 1);
    EXPECT_EQ(file_count(out), 0u);
    auto r = run({"zonal", "--raster", tmp / "absent.asc", "--zone-origin", "0,0", "--zone-size", "1", "--zone-dims",
                  "1,1", "--out", out});
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(nlohmann::json::parse(r.err).at("error"), "IoError");
    EXPECT_EQ(file_count(out), 0u);
}

TEST(Cli, CorrOnTwoColumns) {
    TempDir tmp;
    write_file(tmp / "t.csv", "unit,year,a,b\nu1,2012,1,2\nu2,2012,2,1\nu3,2012,3,5\n");
    auto r = run({"corr", "--panel", tmp / "t.csv", "--out", tmp / "o"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto csv = read_text_file(tmp / "o/correlation.csv");
    std::istringstream in(csv);
    std::string header, row_a, row_b, extra;
    std::getline(in, header);
    std::getline(in, row_a);
    std::getline(in, row_b);
    EXPECT_EQ(header, "variable,a,b");
    EXPECT_EQ(row_a.substr(0, 4), "a,1,");
    EXPECT_EQ(row_b.substr(row_b.size() - 2), ",1");
    EXPECT_FALSE(std::getline(in, extra));
}

TEST(Cli, DryRunWritesNothing) {
    TempDir tmp;
    auto r = run({"synth", "--dry-run", "--out", tmp / "o"});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(file_count(tmp.path / "o"), 0u);
}

TEST(Cli, InvalidSpecIsExitOne) {
    TempDir tmp;
    auto r = run({"synth", "--years", "0", "--out", tmp / "o"});
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(nlohmann::json::parse(r.err).at("error"), "InvalidSpec");
}

TEST(Cli, RankDeficientIsExitTwo) {
    TempDir tmp;
    write_file(tmp / "t.csv", "unit,year,y,a\nu1,2012,1,2\nu2,2012,2,2\nu3,2012,3,2\n");
    auto r = run({"ols", "--panel", tmp / "t.csv", "--response", "y", "--predictors", "a", "--linear", "--out", tmp / "o"});
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(file_count(tmp.path / "o"), 0u);
}

TEST(Cli, SynthGwrCompareEndToEnd) {
    TempDir tmp;
    const auto world = tmp / "world";
    ASSERT_EQ(run({"synth", "--seed", "7", "--years", "1", "--provinces-count", "4", "--zones-per-province", "15",
                   "--gdp-noise", "0.3", "--out", world})
                  .code,
              0);
    auto g = run({"gwr", "--panel", world + "/panel_zones.csv", "--response", "radiance_light", "--predictors",
                  "latent_gdp", "--out", tmp / "gwr"});
    ASSERT_EQ(g.code, 0) << g.err;
    EXPECT_TRUE(fs::exists(tmp / "gwr/gwr_report.csv"));

    auto c = run({"compare", "--panel", world + "/panel_zones.csv", "--response", "latent_gdp", "--out", tmp / "cmp"});
    ASSERT_EQ(c.code, 0) << c.err;
    auto doc = nlohmann::json::parse(read_text_file(tmp / "cmp/comparison.json"));
    EXPECT_EQ(doc.at("overall_winner"), "Model 3 (Radiance light)");

    auto z = run({"zonal", "--rasters", "2012=" + world + "/rasters/radiance_2012.asc", "--zones-from",
                  world + "/manifest.json", "--points", world + "/points.csv", "--out", tmp / "zonal"});
    ASSERT_EQ(z.code, 0) << z.err;
    auto zj = nlohmann::json::parse(read_text_file(tmp / "zonal/zonal.json"));
    EXPECT_EQ(zj.at("points_outside"), 0);
}

TEST(Cli, ConfigFileAndRoundTrip) {
    TempDir tmp;
    PipelineConfig cfg;
    cfg.synth.seed = 99;
    cfg.synth.years = 1;
    cfg.zones = ZoneGridConfig{1, 2, 3, 4, 5};
    cfg.thresholds.push_back({ThresholdMode::UrbanExtent, 40});
    cfg.candidates.push_back({"m", "", "radiance_light"});
    cfg.rasters[2013] = "r.asc";
    cfg.year = 2013;
    cfg.out = tmp / "from_config";
    const auto text = config_to_json(cfg);
    EXPECT_EQ(config_to_json(config_from_json(text)), text);

    write_file(tmp / "cfg.json", text);
    auto r = run({"synth", "--config", tmp / "cfg.json"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto manifest = nlohmann::json::parse(read_text_file(tmp / "from_config/manifest.json"));
    EXPECT_EQ(manifest.at("seed"), 99);

    write_file(tmp / "bad.json", R"({"synth": {"sead": 1}})");
    EXPECT_EQ(run({"synth", "--config", tmp / "bad.json"}).code, 1);
}

TEST(Cli, StatsAndRgdp) {
    TempDir tmp;
    const auto world = tmp / "world";
    ASSERT_EQ(run({"synth", "--years", "2", "--out", world}).code, 0);
    auto s = run({"stats", "--panel", world + "/panel_provinces.csv", "--vars", "gdp,radiance_light", "--out", tmp / "s"});
    ASSERT_EQ(s.code, 0) << s.err;
    EXPECT_EQ(read_text_file(tmp / "s/summary.csv").substr(0, 37), "variable,n,min,max,mean,std_deviation");

    auto r = run({"rgdp", "--panel", world + "/panel_provinces.csv", "--rasters",
                  "2012=" + world + "/rasters/radiance_2012.asc,2013=" + world + "/rasters/radiance_2013.asc",
                  "--zones-from", world + "/manifest.json", "--provinces", world + "/provinces.csv",
                  "--proportion-var", "gdp", "--out", tmp / "r"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto doc = nlohmann::json::parse(read_text_file(tmp / "r/rgdp.json"));
    EXPECT_EQ(doc.at("records").size(), 10u);
}
