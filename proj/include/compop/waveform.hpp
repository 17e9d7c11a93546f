#pragma once

#include <string>
#include <vector>

#include "compop/scene.hpp"

namespace compop {

/// SFCW tone plan: f_k = f1 + k * delta for k = 0 .. K-1.
struct FrequencyGrid {
    double f1 = 57.0e9;
    int K = 256;
    double delta = 11.72e6;

    double freq(int k) const noexcept { return f1 + k * delta; }
    double last() const noexcept { return freq(K - 1); }
    double center() const noexcept { return 0.5 * (f1 + last()); }
    double bandwidth() const noexcept { return last() - f1; }
    double wavelength_center() const noexcept;

    /// Throws Error(InvalidConfig) unless f1 > 0, K >= 2 and delta > 0.
    void check() const;
};

/// Anchor tones. Anchor a transmits f_a and f_a + delta, anchor b f_b and
/// f_b + delta.
struct SignatureConfig {
    double f_a = 0.0;
    double f_b = 0.0;
    double delta = 0.0;

    /// Tones just below the SFCW band: f_a = f1 - 2*delta, f_b = f1 - 4*delta.
    static SignatureConfig below_band(const FrequencyGrid& grid);

    /// Throws Error(InvalidConfig) when the tones overlap each other or the
    /// SFCW band, or when delta differs from the grid's.
    void check(const FrequencyGrid& grid) const;
};

double max_unambiguous_range(double delta);
double sync_spacing_bound(double delta);
double nyquist_spacing_bound(double f_c);

enum class Severity { Warning, Error };

struct Violation {
    std::string rule;
    Severity severity = Severity::Error;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool empty() const noexcept { return violations.empty(); }
    bool has_errors() const noexcept;
    bool has(const std::string& rule) const noexcept;
};

/// Checks a scene against the sampling, range and feasibility bounds.
/// Sampling-density and range violations are warnings; too few SV antennas,
/// too few reflectors without LoS and PDoA spacing are errors.
ValidationReport validate_scene(const Scene& scene, const FrequencyGrid& grid);

/// Largest nearest-neighbour distance in the cloud (0 for fewer than 2 points).
double max_nearest_neighbour_spacing(const PointCloud& cloud);

}  // namespace compop
