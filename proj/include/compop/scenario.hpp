#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "compop/channel.hpp"
#include "compop/scene.hpp"
#include "compop/waveform.hpp"

namespace compop {

struct TvConfig {
    std::array<double, 3> size_m{3.0, 1.0, 0.6};  // body length (X), height (Y), width (Z)
    int antenna_count = 64;
    std::array<double, 3> center_m{8.0, 0.0, 0.0};
    double yaw_rad = 0.0;  // rotation of the body about the vertical axis

    bool operator==(const TvConfig&) const = default;
};

struct SvConfig {
    std::array<double, 2> aperture_m{1.0, 1.0};
    int rows = 8;
    int cols = 8;
    double jitter_fraction = 0.0;  // uniform X/Y jitter as a fraction of the pitch

    bool operator==(const SvConfig&) const = default;
};

struct SurfaceConfig {
    std::optional<double> slope;        // z = slope * x + intercept
    double intercept_m = 0.0;
    std::optional<double> x_const_m;    // x = const when slope is absent
    double gamma_abs = 1.0;
    double gamma_arg_rad = 0.0;

    ReflectionSurface surface() const;
    bool operator==(const SurfaceConfig&) const = default;
};

struct WaveformConfig {
    double f1_hz = 57.0e9;
    int tone_count = 256;
    double delta_hz = 11.72e6;
    std::optional<double> f_a_hz;  // defaults below the SFCW band
    std::optional<double> f_b_hz;

    FrequencyGrid grid() const { return {f1_hz, tone_count, delta_hz}; }
    SignatureConfig signature() const;
    bool operator==(const WaveformConfig&) const = default;
};

struct NoiseConfig {
    std::optional<double> snr_db = 10.0;
    double phase_sigma_rad = 0.224;
    std::string snr_reference = "per_transmitter";  // or "received"
    std::uint64_t seed = 1;

    bool operator==(const NoiseConfig&) const = default;
};

struct PipelineConfig {
    double nu = 0.5;
    std::array<double, 3> box_extent_m{6.0, 4.0, 6.0};
    std::optional<std::array<double, 3>> voxel_pitch_m;  // default: half the resolutions
    double theta_step_rad = 1e-3;
    std::optional<double> clock_tolerance_s;
    std::optional<double> merge_radius_m;  // default: half the range resolution
    double aperture_spacing_m = 0.0;       // <= 0 keeps the native SV pitch

    bool operator==(const PipelineConfig&) const = default;
};

struct SweepConfig {
    std::vector<double> distances_m;
    std::vector<int> surface_counts;
    std::vector<int> sv_antenna_counts;
    int trials = 100;

    bool operator==(const SweepConfig&) const = default;
};

struct ScenarioConfig {
    TvConfig tv;
    SvConfig sv;
    std::vector<SurfaceConfig> surfaces;
    double sigma_s = 0.0;
    bool has_los = false;
    WaveformConfig waveform;
    NoiseConfig noise;
    PipelineConfig pipeline;
    SweepConfig sweep;
    int workers = 1;

    NoiseModel noise_model(std::uint64_t seed) const;
    bool operator==(const ScenarioConfig&) const = default;
};

/// Three-surface NLoS street scene with an 8x8 SV array.
ScenarioConfig reference_nlos_config();
/// TV straight ahead of the SV at 8 m with a LoS path only.
ScenarioConfig reference_los_config();

std::string to_json(const ScenarioConfig& config);
/// Throws Error(Parse) for malformed documents or unknown keys.
ScenarioConfig config_from_json(const std::string& text);
ScenarioConfig load_config(const std::string& path);

/// 64-bit FNV-1a of the canonical JSON form.
std::string config_hash(const ScenarioConfig& config);

/// Antennas of a cuboid body: the two anchors at the end-face centres, the
/// rest spread over the six faces in proportion to their area by a shifted
/// rank-1 lattice drawn from `seed`. Body frame, centred at the origin.
PointCloud place_body_antennas(const std::array<double, 3>& size, int count, std::uint64_t seed);

PointCloud sv_grid(const SvConfig& sv, std::uint64_t seed);

Scene build_scene(const ScenarioConfig& config, std::uint64_t seed);

}  // namespace compop
