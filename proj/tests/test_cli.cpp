#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "compop/error.hpp"
#include "compop/pipeline.hpp"

using namespace compop;
namespace fs = std::filesystem;

namespace {

// Desk-scale NLoS scene small enough for unit tests.
ScenarioConfig small_nlos() {
    ScenarioConfig c = load_config(std::string(COMPOP_CONFIG_DIR) + "/desk_nlos.json");
    c.surfaces.resize(3);
    c.tv.antenna_count = 12;
    c.waveform.tone_count = 64;
    c.waveform.delta_hz = 1.5e9 / 63;
    c.pipeline.box_extent_m = {4.0, 2.0, 4.0};
    c.pipeline.voxel_pitch_m = std::array<double, 3>{0.05, 0.05, 0.1};
    c.sweep = {{8.0}, {3}, {64}, 1};
    return c;
}

fs::path temp_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("compop_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

fs::path write_config(const ScenarioConfig& c, const fs::path& dir) {
    const fs::path p = dir / "config.json";
    std::ofstream(p) << to_json(c);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(COMPOP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, RoundTrip) {
    for (const auto& c : {reference_los_config(), reference_nlos_config(), small_nlos()}) {
        EXPECT_EQ(config_from_json(to_json(c)), c);
        EXPECT_EQ(to_json(config_from_json(to_json(c))), to_json(c));
    }
}

TEST(Config, ShippedFilesParse) {
    for (const char* name : {"los_reference.json", "nlos_reference.json", "desk_nlos.json"})
        EXPECT_NO_THROW(validate_config(load_config(std::string(COMPOP_CONFIG_DIR) + "/" + name))) << name;
}

TEST(Config, UnknownKeyIsRejected) {
    auto j = nlohmann::json::parse(to_json(small_nlos()));
    j["waveform"]["delta_mhz"] = 1.0;
    try {
        config_from_json(j.dump());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Parse);
    }
    EXPECT_THROW(config_from_json("{not json"), Error);
}

TEST(Config, HashTracksContent) {
    auto a = small_nlos(), b = small_nlos();
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.noise.seed = 2;
    EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Validation, TooFewSvAntennas) {
    auto c = reference_los_config();
    c.sv.rows = 1;
    c.sv.cols = 3;
    try {
        validate_config(c);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidConfig);
        EXPECT_NE(std::string(e.what()).find("min-sv-antennas"), std::string::npos);
    }
}

TEST(Validation, TwoSurfacesWithoutLos) {
    auto c = small_nlos();
    c.surfaces.resize(2);
    EXPECT_THROW(validate_config(c), Error);
}

TEST(Stats, MedianAndIqr) {
    EXPECT_DOUBLE_EQ(median_of({3, 1, 2}), 2.0);
    EXPECT_DOUBLE_EQ(median_of({4, 1, 2, 3}), 2.5);
    EXPECT_DOUBLE_EQ(iqr_of({1, 2, 3, 4, 5}), 2.0);
    EXPECT_DOUBLE_EQ(iqr_of({7}), 0.0);
}

TEST(Pipeline, NlosIsDeterministic) {
    const auto c = small_nlos();
    const auto a = run_nlos(c).to_json();
    RunOptions one_worker;
    one_worker.workers = 1;
    RunOptions two_workers;
    two_workers.workers = 2;
    EXPECT_EQ(a, run_nlos(c, one_worker).to_json());
    EXPECT_EQ(a, run_nlos(c, two_workers).to_json());
    RunOptions other_seed;
    other_seed.seed = 77;
    EXPECT_NE(a, run_nlos(c, other_seed).to_json());
}

TEST(Pipeline, NoiselessNlosRecoversAnchor) {
    auto c = small_nlos();
    c.noise.snr_db.reset();
    c.noise.phase_sigma_rad = 0.0;
    const auto r = run_nlos(c);
    ASSERT_EQ(r.trials.size(), 1u);
    const auto& t = r.trials[0];
    ASSERT_TRUE(t.ok) << t.error;
    EXPECT_EQ(t.surfaces.size(), 3u);
    EXPECT_LT(t.sigma_err_s, 1e-12);
    for (const auto& s : t.surfaces) EXPECT_LT(std::abs(s.slope_err), 0.05);
    for (const auto& p : t.paths) EXPECT_LT(p.anchor_err_m, 1e-6);
    // The 8x8 aperture is far coarser than lambda/4, so grating lobes keep
    // the image error near the range resolution scale.
    EXPECT_LT(t.hausdorff_m, 1.5);
}

TEST(Pipeline, SweepSinglePointGivesOneRow) {
    const auto r = run_sweep(small_nlos());
    ASSERT_EQ(r.rows.size(), 1u);
    EXPECT_EQ(r.rows[0].trials, 1);
    const std::string csv = r.sweep_csv();
    EXPECT_EQ(csv.rfind("distance_m,surface_count,sv_antenna_count,trials,hausdorff_med_m,hausdorff_iqr_m,fail_rate\n", 0),
              0u);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
}

TEST(Pipeline, ReportCarriesProvenance) {
    const auto c = small_nlos();
    const auto j = nlohmann::json::parse(run_nlos(c).to_json());
    EXPECT_EQ(j["provenance"]["config_hash"], config_hash(c));
    EXPECT_EQ(j["provenance"]["seed"], c.noise.seed);
    EXPECT_EQ(j["provenance"]["version"], kVersion);
    const auto m = nlohmann::json::parse(run_nlos(c).metrics_json());
    for (const char* key : {"hausdorff_m", "sigma_err_s", "anchor_err_m"}) EXPECT_TRUE(m.contains(key)) << key;
}

TEST(Cli, ValidateExitCodes) {
    const auto dir = temp_dir("validate");
    EXPECT_EQ(run_cli("validate --config " + write_config(small_nlos(), dir).string()), 0);
    auto bad = small_nlos();
    bad.sv.rows = 1;
    bad.sv.cols = 3;
    EXPECT_EQ(run_cli("validate --config " + write_config(bad, dir).string()), 2);
    EXPECT_NE(run_cli("validate --config " + (dir / "missing.json").string()), 0);
}

TEST(Cli, RunNlosWritesOutputs) {
    const auto dir = temp_dir("run");
    const auto cfg = write_config(small_nlos(), dir).string();
    ASSERT_EQ(run_cli("run-nlos --config " + cfg + " --out-dir " + (dir / "a").string() + " --emit-spectrum xz"), 0);
    ASSERT_EQ(run_cli("run-nlos --config " + cfg + " --out-dir " + (dir / "b").string() + " --workers 2"), 0);
    EXPECT_TRUE(fs::exists(dir / "a" / "metrics.json"));
    EXPECT_TRUE(fs::exists(dir / "a" / "spectrum_path1.csv"));
    EXPECT_FALSE(fs::exists(dir / "b" / "spectrum_path1.csv"));
    EXPECT_EQ(slurp(dir / "a" / "report.json"), slurp(dir / "b" / "report.json"));
}

TEST(Cli, ReferenceConfigRoundTrips) {
    const auto dir = temp_dir("reference");
    const std::string cmd = std::string(COMPOP_CLI_PATH) + " reference-config nlos > " + (dir / "r.json").string();
    ASSERT_EQ(std::system(cmd.c_str()), 0);
    EXPECT_EQ(load_config((dir / "r.json").string()), reference_nlos_config());
}
