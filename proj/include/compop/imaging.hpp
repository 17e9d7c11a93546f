#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "compop/channel.hpp"
#include "compop/waveform.hpp"

namespace compop {

/// Uniform X-Y samples on the z = 0 plane, stored [k][iy][ix].
struct ApertureSamples {
    std::vector<double> grid_x;
    std::vector<double> grid_y;
    FrequencyGrid grid;
    std::vector<Symbol> samples;

    std::size_t nx() const noexcept { return grid_x.size(); }
    std::size_t ny() const noexcept { return grid_y.size(); }
    double dx() const noexcept { return grid_x.size() > 1 ? grid_x[1] - grid_x[0] : 0.0; }
    double dy() const noexcept { return grid_y.size() > 1 ? grid_y[1] - grid_y[0] : 0.0; }
    std::size_t index(std::size_t ix, std::size_t iy, int k) const noexcept {
        return (static_cast<std::size_t>(k) * ny() + iy) * nx() + ix;
    }
    Symbol& at(std::size_t ix, std::size_t iy, int k) { return samples[index(ix, iy, k)]; }
    const Symbol& at(std::size_t ix, std::size_t iy, int k) const { return samples[index(ix, iy, k)]; }
};

/// Per-tone 2D spectrum on ascending (fx, fy) axes in Hz, stored [k][iy][ix].
struct Spectrum2D {
    std::vector<double> fx;
    std::vector<double> fy;
    FrequencyGrid grid;
    std::vector<Symbol> values;

    std::size_t index(std::size_t ix, std::size_t iy, int k) const noexcept {
        return (static_cast<std::size_t>(k) * fy.size() + iy) * fx.size() + ix;
    }
    const Symbol& at(std::size_t ix, std::size_t iy, int k) const { return values[index(ix, iy, k)]; }
};

struct FzAxis {
    double start = 0.0;
    double step = 0.0;
    int count = 0;

    double at(int i) const noexcept { return start + i * step; }
};

/// Uniform (fx, fy, fz) spectrum, stored [ix][iy][iz].
struct Spectrum3D {
    std::vector<double> fx;
    std::vector<double> fy;
    FzAxis fz;
    FrequencyGrid grid;
    std::vector<Symbol> values;

    std::size_t index(std::size_t ix, std::size_t iy, int iz) const noexcept {
        return (ix * fy.size() + iy) * static_cast<std::size_t>(fz.count) + static_cast<std::size_t>(iz);
    }
    const Symbol& at(std::size_t ix, std::size_t iy, int iz) const { return values[index(ix, iy, iz)]; }
};

/// Reconstruction region. The realised voxel pitch never exceeds max_spacing
/// and the centre always falls on a voxel.
struct VoxelBox {
    Point3 center;
    Point3 extent{6.0, 4.0, 6.0};
    Point3 max_spacing{0.02, 0.02, 0.05};
};

/// Complex voxel grid, stored [ix][iy][iz].
struct PowerSpectrum {
    Point3 origin;
    Point3 spacing;
    int nx = 0;
    int ny = 0;
    int nz = 0;
    std::vector<Symbol> voxels;

    std::size_t index(int ix, int iy, int iz) const noexcept {
        return (static_cast<std::size_t>(ix) * static_cast<std::size_t>(ny) + static_cast<std::size_t>(iy)) *
                   static_cast<std::size_t>(nz) +
               static_cast<std::size_t>(iz);
    }
    Point3 position(int ix, int iy, int iz) const noexcept {
        return {origin.x + ix * spacing.x, origin.y + iy * spacing.y, origin.z + iz * spacing.z};
    }
    const Symbol& at(int ix, int iy, int iz) const { return voxels[index(ix, iy, iz)]; }
    double max_magnitude() const;
};

/// Projects each antenna's symbols onto z = 0 and resamples them onto a
/// uniform grid by linear interpolation along X within each antenna row, then
/// along Y between rows. Antennas are grouped into rows by their Y coordinate.
/// Throws Error(Degenerate) for fewer than two rows or a row with fewer than
/// two distinct X positions.
ApertureSamples sample_aperture(const Eigen::MatrixXcd& symbols, const PointCloud& sv_antennas,
                                const FrequencyGrid& grid, double target_spacing);
ApertureSamples sample_aperture(const PathObservation& obs, const PointCloud& sv_antennas,
                                const FrequencyGrid& grid, double target_spacing);

/// Zero-padded per-tone 2D DFT. The FFT length is chosen so the spatial
/// period N * spacing is at least `min_period` metres.
Spectrum2D forward_2d_spectrum(const ApertureSamples& samples, double min_period = 0.0);

/// Axis covering the measured band for every (fx, fy) of the spectrum with
/// a step of at most c / (2 * box_extent_z).
FzAxis default_fz_axis(const Spectrum2D& spectrum, double box_extent_z);

/// Stolt remap onto a uniform fz axis. With a nonzero z_ref the phase of a
/// target at depth z_ref is removed before interpolating between shells and
/// restored afterwards.
Spectrum3D remap_to_sphere(const Spectrum2D& spectrum, const FzAxis& fz, double z_ref = 0.0);

/// Evaluates sum_f S(f) exp(+j 2 pi f.x / c) on the voxel grid, scaled by
/// dfz / (delta * Nfx * Nfy). Throws Error(InvalidConfig) when the box is
/// wider than c / df on any axis.
PowerSpectrum inverse_3d_spectrum(const Spectrum3D& spectrum, const VoxelBox& box);

/// Voxel centres with |Phi| / max |Phi| >= nu that are maxima of their 26
/// neighbourhood, by descending magnitude. Throws Error(EmptySpectrum) when
/// every voxel is zero and Error(InvalidConfig) unless 0 < nu <= 1.
PointCloud detect_peaks(const PowerSpectrum& spectrum, double nu);

enum class SlicePlane { XY, XZ, YZ };

/// CSV x,y,z,|Phi| for the plane through voxel (ix, iy, iz).
void write_slice_csv(std::ostream& os, const PowerSpectrum& spectrum, SlicePlane plane, int ix, int iy, int iz);

/// Voxel index of the largest magnitude.
std::array<int, 3> argmax_voxel(const PowerSpectrum& spectrum);

struct ImagingOptions {
    double aperture_spacing = 0.0;  // <= 0: keep the native antenna pitch
    double z_ref = 0.0;             // 0: use the box centre depth
};

/// Full chain from SFCW symbols (already in the imaging frame) to Phi. The
/// remapped spectrum is weighted by c |f| z_ref / (fz^2 dx dy) so a single
/// emitter near z_ref peaks at about N_r * K, as back-projection does.
PowerSpectrum image_aperture(const Eigen::MatrixXcd& symbols, const PointCloud& sv_antennas,
                             const FrequencyGrid& grid, const VoxelBox& box, const ImagingOptions& options = {});

}  // namespace compop
