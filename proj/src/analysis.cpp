#include "compop/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "compop/error.hpp"

namespace compop {

namespace {

double directed_hausdorff(const PointCloud& a, const PointCloud& b) {
    double worst = 0.0;
    for (const auto& p : a) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : b) {
            best = std::min(best, distance(p, q));
            if (best <= worst) break;
        }
        worst = std::max(worst, best);
    }
    return worst;
}

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorKind::Domain, std::string(what) + " must be positive");
}

}  // namespace

double azimuth_resolution(double r, double d_aperture, double f_c) {
    require_positive(d_aperture, "aperture");
    require_positive(f_c, "centre frequency");
    if (r < 0.0) throw Error(ErrorKind::Domain, "range must be non-negative");
    return kSpeedOfLight * std::sqrt(4.0 * r * r + d_aperture * d_aperture) / (2.0 * f_c * d_aperture);
}

double range_resolution(const FrequencyGrid& grid) {
    grid.check();
    return kSpeedOfLight / grid.bandwidth();
}

double rcs(double theta_i, double s2, std::complex<double> gamma_s0) {
    if (!(theta_i >= 0.0 && theta_i < kPi / 2.0))
        throw Error(ErrorKind::Domain, "incidence angle must lie in [0, pi/2)");
    require_positive(s2, "roughness s^2");
    const double c = std::cos(theta_i);
    const double t = std::tan(theta_i);
    return std::norm(gamma_s0) / (2.0 * s2) / std::pow(c, 4) * std::exp(-t * t / s2);
}

double rx_power(LinkMode mode, const LinkBudgetParams& p) {
    require_positive(p.wavelength, "wavelength");
    const double base = p.pt * p.gt * p.wavelength * p.wavelength;
    const double pi = kPi;
    switch (mode) {
        case LinkMode::RadarLos:
            require_positive(p.r, "distance");
            return base * rcs(p.theta_i, p.s2, p.gamma_s0) / (64.0 * std::pow(pi, 3) * std::pow(p.r, 4));
        case LinkMode::CompopLos:
            require_positive(p.r, "distance");
            return base / std::pow(4.0 * pi * p.r, 2);
        case LinkMode::RadarNlos: {
            require_positive(p.r1, "distance r1");
            require_positive(p.r2, "distance r2");
            const double s_l = rcs(p.theta_i_l, p.s2, p.gamma_s0);
            return base * rcs(p.theta_i, p.s2, p.gamma_s0) * s_l * s_l /
                   (std::pow(4.0, 5) * std::pow(pi, 5) * std::pow(p.r1, 4) * std::pow(p.r2, 4));
        }
        case LinkMode::CompopNlos:
            require_positive(p.r1, "distance r1");
            require_positive(p.r2, "distance r2");
            return base * rcs(p.theta_i_l, p.s2, p.gamma_s0) /
                   (64.0 * std::pow(pi, 3) * p.r1 * p.r1 * p.r2 * p.r2);
    }
    throw Error(ErrorKind::Domain, "unknown link mode");
}

double hausdorff(const PointCloud& a, const PointCloud& b) {
    if (a.empty() || b.empty()) throw Error(ErrorKind::Domain, "Hausdorff distance needs non-empty clouds");
    return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

double rmse_nearest(const PointCloud& estimate, const PointCloud& truth) {
    if (estimate.empty() || truth.empty()) throw Error(ErrorKind::Domain, "RMSE needs non-empty clouds");
    double sum = 0.0;
    for (const auto& p : estimate) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : truth) best = std::min(best, distance(p, q));
        sum += best * best;
    }
    return std::sqrt(sum / static_cast<double>(estimate.size()));
}

}  // namespace compop
