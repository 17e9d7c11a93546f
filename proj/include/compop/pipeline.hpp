#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "compop/combining.hpp"
#include "compop/imaging.hpp"
#include "compop/scenario.hpp"
#include "compop/sync.hpp"

namespace compop {

inline constexpr const char* kVersion = "0.1.0";

struct RunOptions {
    std::optional<std::uint64_t> seed;       // overrides noise.seed
    std::optional<int> workers;              // overrides config.workers
    std::optional<SlicePlane> spectrum_plane;  // keep one slice per path
};

struct PathReport {
    int path_id = 0;
    bool ok = false;
    std::string error;
    Point3 x_a;
    Point3 x_b;
    double sigma_hat = 0.0;
    double sigma_discrepancy_s = 0.0;
    bool converged = false;
    int detections = 0;
    double anchor_err_m = 0.0;               // against the mirrored (virtual) anchor
    std::optional<double> hausdorff_m;       // mapped path cloud against the TV
    std::string spectrum_csv;
};

struct SurfaceReport {
    int path_id = 0;
    double slope_err = 0.0;
    double intercept_err_m = 0.0;
};

struct TrialReport {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    std::vector<std::string> warnings;
    double hausdorff_m = 0.0;
    double sigma_err_s = 0.0;
    double anchor_err_m = 0.0;
    double rmse_m = 0.0;  // diagnostic only
    int clock_clusters = 0;
    std::vector<SurfaceReport> surfaces;
    std::vector<PathReport> paths;
    PointCloud cloud;
};

struct SweepRow {
    double distance_m = 0.0;
    int surface_count = 0;
    int sv_antenna_count = 0;
    int trials = 0;
    double hausdorff_med_m = 0.0;
    double hausdorff_iqr_m = 0.0;
    double fail_rate = 0.0;
};

struct RunReport {
    std::string mode;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::vector<TrialReport> trials;
    std::vector<SweepRow> rows;

    std::string to_json() const;
    /// Flat metrics of the first trial.
    std::string metrics_json() const;
    std::string sweep_csv() const;
};

/// Throws Error(InvalidConfig) listing every error-level violation.
ValidationReport validate_config(const ScenarioConfig& config);

RunReport run_los(const ScenarioConfig& config, const RunOptions& options = {});
RunReport run_nlos(const ScenarioConfig& config, const RunOptions& options = {});
RunReport run_sweep(const ScenarioConfig& config, const RunOptions& options = {});

/// One NLoS-style trial (LoS-only when the config has no surfaces).
TrialReport run_trial(const ScenarioConfig& config, std::uint64_t seed, bool los_only, const RunOptions& options);

double median_of(std::vector<double> v);
/// Q3 - Q1 with linear interpolation between order statistics.
double iqr_of(std::vector<double> v);

}  // namespace compop
