#pragma once

#include <complex>

#include "compop/geometry.hpp"
#include "compop/waveform.hpp"

namespace compop {

double azimuth_resolution(double r, double d_aperture, double f_c);
double range_resolution(const FrequencyGrid& grid);

/// Radar cross-section of a rough surface at incidence theta_i. Throws
/// Error(Domain) unless 0 <= theta_i < pi/2 and s2 > 0.
double rcs(double theta_i, double s2, std::complex<double> gamma_s0);

enum class LinkMode { RadarLos, CompopLos, RadarNlos, CompopNlos };

struct LinkBudgetParams {
    double pt = 1.0;          // W
    double gt = 1.0;
    double wavelength = 0.0;  // m
    double r = 0.0;           // LoS distance, m
    double r1 = 0.0;          // TV -> reflector, m
    double r2 = 0.0;          // reflector -> SV, m
    double theta_i = 0.0;     // incidence on the target (radar modes)
    double theta_i_l = 0.0;   // incidence on the reflector (NLoS modes)
    double s2 = 1.0;
    std::complex<double> gamma_s0{1.0, 0.0};
};

/// Received power in watts. Throws Error(Domain) for non-positive distances
/// or wavelength and for incidence angles outside [0, pi/2).
double rx_power(LinkMode mode, const LinkBudgetParams& p);

/// Symmetric Hausdorff distance. Throws Error(Domain) for an empty cloud.
double hausdorff(const PointCloud& a, const PointCloud& b);

/// Root mean square of nearest-neighbour distances from `estimate` to `truth`.
double rmse_nearest(const PointCloud& estimate, const PointCloud& truth);

}  // namespace compop
