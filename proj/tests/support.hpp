#pragma once

#include <complex>
#include <random>
#include <vector>

#include "compop/channel.hpp"
#include "compop/geometry.hpp"
#include "compop/waveform.hpp"

namespace compop::fixtures {

inline PointCloud planar_grid(int rows, int cols, double width, double height, double z = 0.0) {
    PointCloud out;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            out.push_back({cols > 1 ? -0.5 * width + width * c / (cols - 1) : 0.0,
                           rows > 1 ? -0.5 * height + height * r / (rows - 1) : 0.0, z});
    return out;
}

// Antennas scattered over a cube around the origin; the grid rows keep
// consecutive indices close so PDoA unwrapping stays valid.
inline PointCloud surround_array(int n, double half, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-half, half);
    PointCloud out;
    for (int i = 0; i < n; ++i) out.push_back({u(rng), u(rng), u(rng)});
    return out;
}

// Noiseless signature pair for a source at x with clock sigma.
inline std::vector<TonePair> signature_pairs(const Point3& x, const PointCloud& sv, double f, double delta,
                                             double sigma) {
    std::vector<TonePair> out;
    for (const auto& p : sv) {
        const double t = sigma - distance(x, p) / kSpeedOfLight;
        out.push_back({std::polar(1.0, 2.0 * kPi * std::fmod(f * t, 1.0)),
                       std::polar(1.0, 2.0 * kPi * std::fmod((f + delta) * t, 1.0))});
    }
    return out;
}

inline double wrap_pm_pi(double a) { return std::remainder(a, 2.0 * kPi); }

}  // namespace compop::fixtures
