#include "compop/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "compop/error.hpp"

namespace compop {

double FrequencyGrid::wavelength_center() const noexcept { return kSpeedOfLight / center(); }

void FrequencyGrid::check() const {
    if (!(f1 > 0.0) || !std::isfinite(f1))
        throw Error(ErrorKind::InvalidConfig, "f1 must be positive");
    if (K < 2) throw Error(ErrorKind::InvalidConfig, "K must be at least 2");
    if (!(delta > 0.0) || !std::isfinite(delta))
        throw Error(ErrorKind::InvalidConfig, "delta must be positive");
}

SignatureConfig SignatureConfig::below_band(const FrequencyGrid& grid) {
    return {grid.f1 - 2.0 * grid.delta, grid.f1 - 4.0 * grid.delta, grid.delta};
}

void SignatureConfig::check(const FrequencyGrid& grid) const {
    if (!(delta > 0.0)) throw Error(ErrorKind::InvalidConfig, "signature delta must be positive");
    if (std::abs(delta - grid.delta) > 1e-9 * grid.delta)
        throw Error(ErrorKind::InvalidConfig, "signature delta must match the SFCW tone gap");
    const double tones[4] = {f_a, f_a + delta, f_b, f_b + delta};
    const double tol = 1e-6 * delta;
    for (int i = 0; i < 4; ++i) {
        if (!(tones[i] > 0.0)) throw Error(ErrorKind::InvalidConfig, "signature tones must be positive");
        for (int j = i + 1; j < 4; ++j)
            if (std::abs(tones[i] - tones[j]) < tol)
                throw Error(ErrorKind::InvalidConfig, "signature tones must be distinct");
        if (tones[i] > grid.f1 - tol && tones[i] < grid.last() + tol)
            throw Error(ErrorKind::InvalidConfig, "signature tones must lie outside the SFCW band");
    }
}

double max_unambiguous_range(double delta) {
    if (!(delta > 0.0)) throw Error(ErrorKind::InvalidConfig, "delta must be positive");
    return kSpeedOfLight / delta;
}

double sync_spacing_bound(double delta) {
    if (!(delta > 0.0)) throw Error(ErrorKind::InvalidConfig, "delta must be positive");
    return kSpeedOfLight / (2.0 * delta);
}

double nyquist_spacing_bound(double f_c) {
    if (!(f_c > 0.0)) throw Error(ErrorKind::InvalidConfig, "centre frequency must be positive");
    return kSpeedOfLight / (4.0 * f_c);
}

bool ValidationReport::has_errors() const noexcept {
    return std::any_of(violations.begin(), violations.end(),
                       [](const Violation& v) { return v.severity == Severity::Error; });
}

bool ValidationReport::has(const std::string& rule) const noexcept {
    return std::any_of(violations.begin(), violations.end(),
                       [&](const Violation& v) { return v.rule == rule; });
}

double max_nearest_neighbour_spacing(const PointCloud& cloud) {
    if (cloud.size() < 2) return 0.0;
    double worst = 0.0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < cloud.size(); ++j)
            if (j != i) best = std::min(best, distance(cloud[i], cloud[j]));
        worst = std::max(worst, best);
    }
    return worst;
}

ValidationReport validate_scene(const Scene& scene, const FrequencyGrid& grid) {
    grid.check();
    ValidationReport report;
    const auto add = [&](const char* rule, Severity sev, const std::string& msg) {
        report.violations.push_back({rule, sev, msg});
    };
    const auto fmt = [](double v) {
        std::ostringstream os;
        os.precision(6);
        os << v;
        return os.str();
    };

    const double nyq = nyquist_spacing_bound(grid.center());
    const double spacing = max_nearest_neighbour_spacing(scene.sv_antennas);
    if (spacing > nyq)
        add("nyquist-spacing", Severity::Warning,
            "SV antenna spacing " + fmt(spacing) + " m exceeds c/(4 f_c) = " + fmt(nyq) + " m");

    const double rmax = max_unambiguous_range(grid.delta);
    double longest = 0.0;
    for (const auto& path : scene.paths())
        for (const auto& tx : scene.tv_antennas)
            for (const auto& rx : scene.sv_antennas)
                longest = std::max(longest, path_length(path.route, tx, rx));
    if (longest > rmax)
        add("max-range", Severity::Warning,
            "longest path " + fmt(longest) + " m exceeds c/delta = " + fmt(rmax) + " m");

    if (scene.sv_antennas.size() < 4)
        add("min-sv-antennas", Severity::Error,
            "at least four SV antennas are required for synchronisation, got " +
                std::to_string(scene.sv_antennas.size()));

    if (!scene.has_los && scene.reflectors.size() < 3)
        add("min-surfaces", Severity::Error,
            "without a LoS path at least three reflection surfaces are required, got " +
                std::to_string(scene.reflectors.size()));

    const double sync_bound = sync_spacing_bound(grid.delta);
    for (std::size_t m = 1; m < scene.sv_antennas.size(); ++m) {
        const double d = distance(scene.sv_antennas[m], scene.sv_antennas[m - 1]);
        if (d > sync_bound) {
            add("sync-spacing", Severity::Error,
                "SV antennas " + std::to_string(m - 1) + " and " + std::to_string(m) + " are " + fmt(d) +
                    " m apart, above c/(2 delta) = " + fmt(sync_bound) + " m");
            break;
        }
    }
    return report;
}

}  // namespace compop
