#include "compop/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "compop/analysis.hpp"
#include "compop/error.hpp"

namespace compop {

using nlohmann::json;

namespace {

constexpr std::uint64_t kStreamTrial = 30;

template <typename F>
void parallel_for(std::size_t n, int workers, F&& body) {
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const auto count = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    for (std::size_t w = 0; w < count; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) body(i);
        });
    for (auto& t : pool) t.join();
}

Error staged(const char* stage, const std::exception& e) {
    if (const auto* err = dynamic_cast<const Error*>(&e))
        return Error(err->kind(), std::string(stage) + ": " + err->what());
    return Error(ErrorKind::InvalidConfig, std::string(stage) + ": " + e.what());
}

struct PathOutcome {
    PathReport report;
    std::optional<VirtualDetection> detection;
    double clock_std = 0.0;
};

double aperture_width(const PointCloud& sv) {
    double lo_x = sv[0].x, hi_x = sv[0].x, lo_y = sv[0].y, hi_y = sv[0].y;
    for (const auto& p : sv) {
        lo_x = std::min(lo_x, p.x);
        hi_x = std::max(hi_x, p.x);
        lo_y = std::min(lo_y, p.y);
        hi_y = std::max(hi_y, p.y);
    }
    return std::max(hi_x - lo_x, hi_y - lo_y);
}

constexpr double kDefaultVoxelBudget = 8.0e6;

PathOutcome process_path(PathObservation obs, const Scene& scene, const ScenarioConfig& config,
                         const RunOptions& options) {
    PathOutcome out;
    PathReport& rep = out.report;
    rep.path_id = obs.path_id;
    const FrequencyGrid grid = config.waveform.grid();
    const PointCloud& sv = scene.sv_antennas;

    PathSync sync;
    try {
        SolverOptions solver;
        solver.phase_sigma = config.noise.phase_sigma_rad;
        sync = synchronise_path(obs, sv, grid.delta, solver);
    } catch (const std::exception& e) {
        rep.error = staged("sync", e).what();
        return out;
    }
    rep.x_a = sync.a.x_anchor;
    rep.x_b = sync.b.x_anchor;
    rep.sigma_hat = sync.sigma_hat;
    rep.sigma_discrepancy_s = sync.sigma_discrepancy;
    rep.converged = sync.a.converged && sync.b.converged;
    out.clock_std = std::sqrt(std::pow(config.noise.phase_sigma_rad / (2.0 * kPi * grid.delta), 2) /
                                  static_cast<double>(sv.size()) +
                              sync.a.covariance.trace() / (kSpeedOfLight * kSpeedOfLight));

    ScenePath truth_path;
    for (const auto& p : scene.paths())
        if (p.id == obs.path_id) truth_path = p;
    const Point3 true_anchor = virtual_cloud(truth_path, {scene.anchor(false)})[0];
    rep.anchor_err_m = distance(rep.x_a, true_anchor);

    PointCloud peaks;
    try {
        compensate_clock(obs, grid, sync.sigma_hat);
        const double az = obs.aoa_azimuth;
        PointCloud sv_frame;
        sv_frame.reserve(sv.size());
        for (const auto& p : sv) sv_frame.push_back(rotate_about_y(p, -az));
        const Point3 anchor = rotate_about_y(rep.x_a, -az);

        VoxelBox box;
        box.center = anchor;
        box.extent = {config.pipeline.box_extent_m[0], config.pipeline.box_extent_m[1],
                      config.pipeline.box_extent_m[2]};
        if (config.pipeline.voxel_pitch_m) {
            const auto& v = *config.pipeline.voxel_pitch_m;
            box.max_spacing = {v[0], v[1], v[2]};
        } else {
            const double range = std::max(distance(anchor, centroid(sv_frame)), 1.0);
            const double dy = azimuth_resolution(range, aperture_width(sv_frame), grid.center());
            const double dz = range_resolution(grid);
            box.max_spacing = {0.5 * dy, 0.5 * dy, 0.5 * dz};
            // A noisy anchor close to the SV would otherwise ask for
            // millimetre voxels over the whole box.
            const double voxels = (box.extent.x / box.max_spacing.x) * (box.extent.y / box.max_spacing.y) *
                                  (box.extent.z / box.max_spacing.z);
            if (voxels > kDefaultVoxelBudget) {
                const double grow = std::sqrt(voxels / kDefaultVoxelBudget);
                box.max_spacing.x *= grow;
                box.max_spacing.y *= grow;
            }
        }
        ImagingOptions img;
        img.aperture_spacing = config.pipeline.aperture_spacing_m;
        const PowerSpectrum phi = image_aperture(obs.sfcw, sv_frame, grid, box, img);
        for (const auto& p : detect_peaks(phi, config.pipeline.nu)) peaks.push_back(rotate_about_y(p, az));
        if (options.spectrum_plane) {
            const auto idx = argmax_voxel(phi);
            std::ostringstream os;
            write_slice_csv(os, phi, *options.spectrum_plane, idx[0], idx[1], idx[2]);
            rep.spectrum_csv = os.str();
        }
    } catch (const std::exception& e) {
        rep.error = staged("imaging", e).what();
        peaks.clear();
    }
    rep.detections = static_cast<int>(peaks.size());
    try {
        out.detection = make_detection(obs.path_id, rep.x_a, rep.x_b, std::move(peaks), rep.sigma_hat, obs.path_id == 0);
        rep.ok = rep.error.empty();
    } catch (const std::exception& e) {
        rep.error = staged("combining", e).what();
    }
    return out;
}

double circular_mean_clock(const std::vector<VirtualDetection>& cluster, double delta) {
    const double ref = cluster[0].sigma_hat;
    double sum = 0.0;
    for (const auto& d : cluster) sum += wrap_clock(d.sigma_hat - ref, delta);
    return wrap_clock(ref + sum / static_cast<double>(cluster.size()), delta);
}

json point_json(const Point3& p) { return json::array({p.x, p.y, p.z}); }

json trial_json(const TrialReport& t, bool with_cloud) {
    json j;
    j["seed"] = t.seed;
    j["ok"] = t.ok;
    if (!t.error.empty()) j["error"] = t.error;
    j["warnings"] = t.warnings;
    if (t.ok) {
        j["hausdorff_m"] = t.hausdorff_m;
        j["sigma_err_s"] = t.sigma_err_s;
        j["anchor_err_m"] = t.anchor_err_m;
        j["rmse_m_diagnostic"] = t.rmse_m;
        j["clock_clusters"] = t.clock_clusters;
        j["surfaces"] = json::array();
        for (const auto& s : t.surfaces)
            j["surfaces"].push_back(
                {{"path_id", s.path_id}, {"slope_err", s.slope_err}, {"intercept_err_m", s.intercept_err_m}});
    }
    j["paths"] = json::array();
    for (const auto& p : t.paths) {
        json pj{{"path_id", p.path_id},
                {"ok", p.ok},
                {"x_a_m", point_json(p.x_a)},
                {"x_b_m", point_json(p.x_b)},
                {"sigma_hat_s", p.sigma_hat},
                {"sigma_discrepancy_s", p.sigma_discrepancy_s},
                {"converged", p.converged},
                {"detections", p.detections},
                {"anchor_err_m", p.anchor_err_m}};
        if (p.hausdorff_m) pj["hausdorff_m"] = *p.hausdorff_m;
        if (!p.error.empty()) pj["error"] = p.error;
        j["paths"].push_back(pj);
    }
    if (with_cloud) {
        j["cloud_m"] = json::array();
        for (const auto& p : t.cloud) j["cloud_m"].push_back(point_json(p));
    }
    return j;
}

ScenarioConfig sweep_point(const ScenarioConfig& base, double distance_m, int surfaces, int sv_count) {
    ScenarioConfig c = base;
    const Point3 center{base.tv.center_m[0], base.tv.center_m[1], base.tv.center_m[2]};
    const double r = norm(center);
    if (!(r > 0.0)) throw Error(ErrorKind::InvalidConfig, "distance sweep needs a TV centre away from the SV");
    const Point3 moved = center * (distance_m / r);
    c.tv.center_m = {moved.x, moved.y, moved.z};
    if (surfaces > static_cast<int>(base.surfaces.size()) || surfaces < 0)
        throw Error(ErrorKind::InvalidConfig, "sweep asks for " + std::to_string(surfaces) + " surfaces but only " +
                                                  std::to_string(base.surfaces.size()) + " are configured");
    c.surfaces.resize(static_cast<std::size_t>(surfaces));
    if (sv_count < 1) throw Error(ErrorKind::InvalidConfig, "SV antenna count must be positive");
    const int rows = std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(sv_count)))));
    c.sv.rows = rows;
    c.sv.cols = std::max(1, static_cast<int>(std::lround(static_cast<double>(sv_count) / rows)));
    return c;
}

}  // namespace

double median_of(std::vector<double> v) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double iqr_of(std::vector<double> v) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(v.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
    };
    return quantile(0.75) - quantile(0.25);
}

ValidationReport validate_config(const ScenarioConfig& config) {
    const Scene scene = build_scene(config, config.noise.seed);
    const FrequencyGrid grid = config.waveform.grid();
    config.waveform.signature().check(grid);
    config.noise_model(config.noise.seed).check();
    if (!(config.pipeline.nu > 0.0 && config.pipeline.nu <= 1.0))
        throw Error(ErrorKind::InvalidConfig, "pipeline.nu must lie in (0, 1]");
    ValidationReport report = validate_scene(scene, grid);
    std::string errors;
    for (const auto& v : report.violations)
        if (v.severity == Severity::Error) errors += (errors.empty() ? "" : "; ") + v.rule + ": " + v.message;
    if (!errors.empty()) throw Error(ErrorKind::InvalidConfig, "validation failed: " + errors);
    return report;
}

TrialReport run_trial(const ScenarioConfig& config, std::uint64_t seed, bool los_only, const RunOptions& options) {
    TrialReport trial;
    trial.seed = seed;
    try {
        const Scene scene = build_scene(config, seed);
        const FrequencyGrid grid = config.waveform.grid();
        const SignatureConfig sig = config.waveform.signature();
        sig.check(grid);
        const ValidationReport validation = validate_scene(scene, grid);
        std::string errors;
        for (const auto& v : validation.violations) {
            if (v.severity == Severity::Warning)
                trial.warnings.push_back(v.rule + ": " + v.message);
            else
                errors += (errors.empty() ? "" : "; ") + v.rule + ": " + v.message;
        }
        if (!errors.empty()) throw Error(ErrorKind::InvalidConfig, "validation failed: " + errors);
        if (los_only && !scene.has_los) throw Error(ErrorKind::InvalidConfig, "LoS run requested but has_los is false");

        const NoiseModel noise = config.noise_model(seed);
        std::vector<PathObservation> obs;
        try {
            obs = resolve_paths(merge_observations(simulate_signature(scene, sig, noise),
                                                   simulate_sfcw(scene, grid, noise, 0.0)));
        } catch (const std::exception& e) {
            throw staged("channel", e);
        }
        if (los_only) obs.erase(std::remove_if(obs.begin(), obs.end(), [](const auto& o) { return o.path_id != 0; }),
                                obs.end());

        std::vector<PathOutcome> outcomes(obs.size());
        parallel_for(obs.size(), options.workers.value_or(config.workers),
                     [&](std::size_t i) { outcomes[i] = process_path(std::move(obs[i]), scene, config, options); });

        std::vector<VirtualDetection> detections;
        double clock_std = 0.0;
        for (const auto& o : outcomes) {
            trial.paths.push_back(o.report);
            if (o.detection) {
                detections.push_back(*o.detection);
                clock_std = std::max(clock_std, o.clock_std);
            }
        }
        const PointCloud& truth = scene.tv_antennas;
        const Point3 true_a = scene.anchor(false);

        if (los_only || config.surfaces.empty()) {
            if (detections.empty() || trial.paths.empty() || !trial.paths[0].ok)
                throw Error(ErrorKind::Degenerate,
                            "LoS path failed: " + (trial.paths.empty() ? std::string("no path") : trial.paths[0].error));
            const VirtualDetection& los = detections[0];
            if (los.cloud.empty()) throw Error(ErrorKind::EmptySpectrum, "no antennas detected");
            trial.cloud = los.cloud;
            trial.sigma_err_s = clock_distance(los.sigma_hat, scene.clock_offset, grid.delta);
            trial.anchor_err_m = distance(los.x_a_virtual, true_a);
            trial.clock_clusters = 1;
            trial.paths[0].hausdorff_m = hausdorff(los.cloud, truth);
        } else {
            const double tolerance = config.pipeline.clock_tolerance_s.value_or(std::max(5.0 * clock_std, 1e-12));
            auto clusters = group_by_clock(detections, tolerance, grid.delta);
            trial.clock_clusters = static_cast<int>(clusters.size());
            if (clusters.empty()) throw Error(ErrorKind::Feasibility, "no path survived synchronisation");
            std::size_t best = 0;
            for (std::size_t i = 1; i < clusters.size(); ++i)
                if (clusters[i].size() > clusters[best].size()) best = i;
            const auto& cluster = clusters[best];

            const double merge = config.pipeline.merge_radius_m.value_or(0.5 * range_resolution(grid));
            ThetaSearchOptions search;
            search.grid_step = config.pipeline.theta_step_rad;
            CombineResult res;
            try {
                res = combine(cluster, merge, search);
            } catch (const std::exception& e) {
                throw staged("combining", e);
            }
            if (res.actual_cloud.empty()) throw Error(ErrorKind::EmptySpectrum, "no antennas detected on any path");
            trial.cloud = res.actual_cloud;
            trial.sigma_err_s = clock_distance(circular_mean_clock(cluster, grid.delta), scene.clock_offset, grid.delta);
            trial.anchor_err_m = distance(res.x_a_star, true_a);

            std::size_t surface_index = 0;
            for (std::size_t i = 0; i < cluster.size(); ++i) {
                const auto& det = cluster[i];
                auto path = std::find_if(trial.paths.begin(), trial.paths.end(),
                                         [&](const PathReport& p) { return p.path_id == det.path_id; });
                if (!det.cloud.empty() && path != trial.paths.end()) {
                    const PointCloud mapped =
                        det.is_los ? det.cloud
                                   : map_virtual_to_actual(det.cloud, res.thetas[i], res.x_a_star, det.x_a_virtual);
                    path->hausdorff_m = hausdorff(mapped, truth);
                }
                if (det.is_los) continue;
                const ReflectionSurface& est = res.surfaces[surface_index++];
                const ReflectionSurface& planted = scene.reflectors[static_cast<std::size_t>(det.path_id - 1)].surface;
                SurfaceReport sr;
                sr.path_id = det.path_id;
                if (!est.is_vertical() && !planted.is_vertical()) {
                    sr.slope_err = std::abs(est.slope() - planted.slope());
                    sr.intercept_err_m = std::abs(est.intercept() - planted.intercept());
                } else if (est.is_vertical() && planted.is_vertical()) {
                    sr.intercept_err_m = std::abs(est.x_const() - planted.x_const());
                } else {
                    sr.slope_err = std::numeric_limits<double>::infinity();
                    sr.intercept_err_m = std::numeric_limits<double>::infinity();
                }
                trial.surfaces.push_back(sr);
            }
        }
        trial.hausdorff_m = hausdorff(trial.cloud, truth);
        trial.rmse_m = rmse_nearest(trial.cloud, truth);
        trial.ok = true;
    } catch (const std::exception& e) {
        trial.ok = false;
        trial.error = e.what();
    }
    return trial;
}

RunReport run_los(const ScenarioConfig& config, const RunOptions& options) {
    RunReport report;
    report.mode = "los";
    report.config_hash = config_hash(config);
    report.seed = options.seed.value_or(config.noise.seed);
    report.trials.push_back(run_trial(config, report.seed, true, options));
    return report;
}

RunReport run_nlos(const ScenarioConfig& config, const RunOptions& options) {
    RunReport report;
    report.mode = "nlos";
    report.config_hash = config_hash(config);
    report.seed = options.seed.value_or(config.noise.seed);
    report.trials.push_back(run_trial(config, report.seed, false, options));
    return report;
}

RunReport run_sweep(const ScenarioConfig& config, const RunOptions& options) {
    RunReport report;
    report.mode = "sweep";
    report.config_hash = config_hash(config);
    report.seed = options.seed.value_or(config.noise.seed);
    if (config.sweep.trials < 1) throw Error(ErrorKind::InvalidConfig, "sweep.trials must be at least 1");

    const Point3 center{config.tv.center_m[0], config.tv.center_m[1], config.tv.center_m[2]};
    std::vector<double> distances = config.sweep.distances_m;
    if (distances.empty()) distances = {norm(center)};
    std::vector<int> counts = config.sweep.surface_counts;
    if (counts.empty()) counts = {static_cast<int>(config.surfaces.size())};
    std::vector<int> sv_counts = config.sweep.sv_antenna_counts;
    if (sv_counts.empty()) sv_counts = {config.sv.rows * config.sv.cols};

    struct Job {
        std::size_t point;
        int trial;
    };
    std::vector<ScenarioConfig> points;
    std::vector<SweepRow> rows;
    for (double d : distances)
        for (int l : counts)
            for (int n : sv_counts) {
                points.push_back(sweep_point(config, d, l, n));
                SweepRow row;
                row.distance_m = d;
                row.surface_count = l;
                row.sv_antenna_count = n;
                row.trials = config.sweep.trials;
                rows.push_back(row);
            }
    std::vector<Job> jobs;
    for (std::size_t p = 0; p < points.size(); ++p)
        for (int t = 0; t < config.sweep.trials; ++t) jobs.push_back({p, t});

    std::vector<TrialReport> results(jobs.size());
    RunOptions inner = options;
    inner.workers = 1;
    inner.spectrum_plane.reset();
    parallel_for(jobs.size(), options.workers.value_or(config.workers), [&](std::size_t i) {
        const Job& job = jobs[i];
        const std::uint64_t seed = stream_seed(report.seed, kStreamTrial, job.point, static_cast<std::uint64_t>(job.trial));
        const ScenarioConfig& c = points[job.point];
        results[i] = run_trial(c, seed, false, inner);
    });

    for (std::size_t p = 0; p < points.size(); ++p) {
        std::vector<double> h;
        int failures = 0;
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            if (jobs[i].point != p) continue;
            if (results[i].ok)
                h.push_back(results[i].hausdorff_m);
            else
                ++failures;
        }
        rows[p].hausdorff_med_m = median_of(h);
        rows[p].hausdorff_iqr_m = iqr_of(h);
        rows[p].fail_rate = static_cast<double>(failures) / config.sweep.trials;
    }
    report.trials = std::move(results);
    report.rows = std::move(rows);
    return report;
}

std::string RunReport::to_json() const {
    json j;
    j["provenance"] = {{"config_hash", config_hash}, {"seed", seed}, {"version", kVersion}};
    j["mode"] = mode;
    j["trials"] = json::array();
    const bool with_cloud = mode != "sweep";
    for (const auto& t : trials) j["trials"].push_back(trial_json(t, with_cloud));
    if (!rows.empty()) {
        j["sweep"] = json::array();
        for (const auto& r : rows)
            j["sweep"].push_back({{"distance_m", r.distance_m},
                                  {"surface_count", r.surface_count},
                                  {"sv_antenna_count", r.sv_antenna_count},
                                  {"trials", r.trials},
                                  {"hausdorff_med_m", std::isnan(r.hausdorff_med_m) ? json(nullptr) : json(r.hausdorff_med_m)},
                                  {"hausdorff_iqr_m", std::isnan(r.hausdorff_iqr_m) ? json(nullptr) : json(r.hausdorff_iqr_m)},
                                  {"fail_rate", r.fail_rate}});
    }
    return j.dump(2) + "\n";
}

std::string RunReport::metrics_json() const {
    json j = json::object();
    if (!trials.empty()) {
        const TrialReport& t = trials.front();
        j["ok"] = t.ok;
        if (t.ok) {
            j["hausdorff_m"] = t.hausdorff_m;
            j["sigma_err_s"] = t.sigma_err_s;
            j["anchor_err_m"] = t.anchor_err_m;
            j["rmse_m_diagnostic"] = t.rmse_m;
            for (const auto& s : t.surfaces) {
                const std::string prefix = "surface_" + std::to_string(s.path_id);
                j[prefix + "_slope_err"] = s.slope_err;
                j[prefix + "_intercept_err_m"] = s.intercept_err_m;
            }
        } else {
            j["error"] = t.error;
        }
    }
    return j.dump(2) + "\n";
}

std::string RunReport::sweep_csv() const {
    std::ostringstream os;
    os.precision(10);
    os << "distance_m,surface_count,sv_antenna_count,trials,hausdorff_med_m,hausdorff_iqr_m,fail_rate\n";
    for (const auto& r : rows)
        os << r.distance_m << ',' << r.surface_count << ',' << r.sv_antenna_count << ',' << r.trials << ','
           << r.hausdorff_med_m << ',' << r.hausdorff_iqr_m << ',' << r.fail_rate << '\n';
    return os.str();
}

}  // namespace compop
