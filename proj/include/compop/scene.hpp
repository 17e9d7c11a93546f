#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "compop/geometry.hpp"

namespace compop {

struct Reflector {
    ReflectionSurface surface;
    std::complex<double> gamma{1.0, 0.0};
};

/// One propagation path of a scene. Path id 0 is reserved for LoS; reflector
/// i (zero-based) produces path id i + 1.
struct ScenePath {
    int id = 0;
    PropagationPath route;
    std::complex<double> gamma{1.0, 0.0};
};

/// Ground truth for a simulation run.
struct Scene {
    PointCloud tv_antennas;
    std::size_t anchor_a = 0;
    std::size_t anchor_b = 1;
    PointCloud sv_antennas;
    std::vector<Reflector> reflectors;
    double clock_offset = 0.0;  // seconds
    bool has_los = true;

    const Point3& anchor(bool b) const { return tv_antennas.at(b ? anchor_b : anchor_a); }

    /// Throws Error(InvalidConfig) on structural problems (fewer than two TV
    /// antennas, empty SV array, duplicates, bad anchor indices).
    void check() const;

    std::vector<ScenePath> paths() const;
};

/// True (mirrored) TV cloud seen along a path.
PointCloud virtual_cloud(const ScenePath& path, const PointCloud& cloud);

}  // namespace compop
