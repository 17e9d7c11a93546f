#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "compop/analysis.hpp"
#include "compop/error.hpp"
#include "compop/imaging.hpp"
#include "imaging_support.hpp"

using namespace compop;
using fixtures::back_projection;
using fixtures::desk_grid;
using fixtures::sfcw_symbols;

namespace {

Eigen::MatrixXcd random_symbols(int rows, int cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    Eigen::MatrixXcd y(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) y(r, c) = {n(rng), n(rng)};
    return y;
}

std::array<int, 3> index_of_nearest(const PowerSpectrum& s, const Point3& p) {
    return {static_cast<int>(std::lround((p.x - s.origin.x) / s.spacing.x)),
            static_cast<int>(std::lround((p.y - s.origin.y) / s.spacing.y)),
            static_cast<int>(std::lround((p.z - s.origin.z) / s.spacing.z))};
}

VoxelBox small_box(const Point3& c) {
    VoxelBox box;
    box.center = c;
    box.extent = {0.4, 0.4, 0.8};
    box.max_spacing = {0.02, 0.02, 0.05};
    return box;
}

}  // namespace

TEST(Aperture, UniformGridIsIdentity) {
    const FrequencyGrid g = desk_grid(4);
    const PointCloud sv = fixtures::planar_grid(3, 4, 0.3, 0.2);
    const auto y = random_symbols(12, 4, 1);
    const auto s = sample_aperture(y, sv, g, 0.0);
    ASSERT_EQ(s.nx(), 4u);
    ASSERT_EQ(s.ny(), 3u);
    for (int k = 0; k < 4; ++k)
        for (std::size_t iy = 0; iy < 3; ++iy)
            for (std::size_t ix = 0; ix < 4; ++ix)
                EXPECT_NEAR(std::abs(s.at(ix, iy, k) - y(static_cast<Eigen::Index>(iy * 4 + ix), k)), 0.0, 1e-12);
}

TEST(Aperture, MidpointIsMean) {
    const FrequencyGrid g = desk_grid(2);
    const PointCloud sv = fixtures::planar_grid(2, 2, 0.1, 0.1);
    const auto y = random_symbols(4, 2, 2);
    const auto s = sample_aperture(y, sv, g, 0.05);
    ASSERT_EQ(s.nx(), 3u);
    ASSERT_EQ(s.ny(), 3u);
    EXPECT_NEAR(std::abs(s.at(1, 0, 0) - 0.5 * (y(0, 0) + y(1, 0))), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(s.at(1, 1, 1) - 0.25 * (y(0, 1) + y(1, 1) + y(2, 1) + y(3, 1))), 0.0, 1e-12);
}

TEST(Aperture, ProjectsDepthOntoPlane) {
    const FrequencyGrid g = desk_grid(3);
    const double h = 0.0123;
    const PointCloud sv = fixtures::planar_grid(2, 2, 0.1, 0.1, h);
    const auto y = random_symbols(4, 3, 3);
    const auto s = sample_aperture(y, sv, g, 0.0);
    for (int k = 0; k < 3; ++k)
        EXPECT_NEAR(std::abs(s.at(1, 1, k) - y(3, k) * std::polar(1.0, -2 * kPi * g.freq(k) * h / kSpeedOfLight)), 0.0,
                    1e-9);
}

TEST(Aperture, SingleRowIsDegenerate) {
    const PointCloud sv = fixtures::planar_grid(1, 5, 0.4, 0.0);
    try {
        sample_aperture(random_symbols(5, 2, 4), sv, desk_grid(2), 0.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Degenerate);
    }
}

TEST(Aperture, OutsideHullIsZero) {
    PointCloud sv = {{0, 0, 0}, {0.1, 0, 0}, {0.2, 0, 0}, {0, 0.1, 0}, {0.1, 0.1, 0}};
    const auto s = sample_aperture(Eigen::MatrixXcd::Ones(5, 2), sv, desk_grid(2), 0.1);
    EXPECT_EQ(s.at(2, 1, 0), Symbol{});
    EXPECT_NEAR(std::abs(s.at(1, 1, 0) - Symbol(1, 0)), 0.0, 1e-12);
}

TEST(Forward, OnesGiveImpulseAtDc) {
    const FrequencyGrid g = desk_grid(2);
    const auto sv = fixtures::planar_grid(8, 8, 0.7, 0.7);
    const auto s2 = forward_2d_spectrum(sample_aperture(Eigen::MatrixXcd::Ones(64, 2), sv, g, 0.0));
    ASSERT_EQ(s2.fx.size(), 8u);
    for (std::size_t iy = 0; iy < 8; ++iy)
        for (std::size_t ix = 0; ix < 8; ++ix) {
            const double expected = (s2.fx[ix] == 0.0 && s2.fy[iy] == 0.0) ? 64.0 : 0.0;
            EXPECT_NEAR(std::abs(s2.at(ix, iy, 0)), expected, 1e-9);
        }
}

TEST(Forward, SingleSampleIsFlat) {
    const FrequencyGrid g = desk_grid(2);
    const auto sv = fixtures::planar_grid(5, 6, 0.5, 0.4);
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(30, 2);
    y(13, 0) = {0.3, -0.4};
    const auto s2 = forward_2d_spectrum(sample_aperture(y, sv, g, 0.0), 3.0);
    for (std::size_t i = 0; i < s2.fx.size() * s2.fy.size(); ++i) EXPECT_NEAR(std::abs(s2.values[i]), 0.5, 1e-12);
}

TEST(Forward, RoundTripThroughNaiveInverse) {
    const FrequencyGrid g = desk_grid(2);
    const auto sv = fixtures::planar_grid(5, 7, 0.3, 0.2);
    const auto s = sample_aperture(random_symbols(35, 2, 5), sv, g, 0.0);
    const auto s2 = forward_2d_spectrum(s);
    const double n = static_cast<double>(s2.fx.size() * s2.fy.size());
    double err = 0.0, ref = 0.0;
    for (std::size_t iy = 0; iy < s.ny(); ++iy)
        for (std::size_t ix = 0; ix < s.nx(); ++ix) {
            Symbol acc{};
            for (std::size_t q = 0; q < s2.fy.size(); ++q)
                for (std::size_t p = 0; p < s2.fx.size(); ++p)
                    acc += s2.at(p, q, 1) *
                           std::polar(1.0, 2 * kPi * (s2.fx[p] * s.grid_x[ix] + s2.fy[q] * s.grid_y[iy]) / kSpeedOfLight);
            err += std::norm(acc / n - s.at(ix, iy, 1));
            ref += std::norm(s.at(ix, iy, 1));
        }
    EXPECT_LT(std::sqrt(err / ref), 1e-10);
}

TEST(Forward, PeriodCoversRequestedExtent) {
    const auto sv = fixtures::planar_grid(4, 4, 0.3, 0.3);
    const auto s2 = forward_2d_spectrum(sample_aperture(Eigen::MatrixXcd::Ones(16, 2), sv, desk_grid(2), 0.0), 5.0);
    EXPECT_GE(s2.fx.size() * 0.1, 5.0 - 1e-9);
    EXPECT_NEAR(s2.fx[1] - s2.fx[0], kSpeedOfLight / (s2.fx.size() * 0.1), 1e-3);
}

namespace {

Spectrum2D dc_spectrum(const FrequencyGrid& g, const std::vector<Symbol>& shells) {
    Spectrum2D s;
    s.grid = g;
    s.fx = {-1e9, 0.0, 1e9};
    s.fy = {-1e9, 0.0, 1e9};
    s.values.assign(9 * static_cast<std::size_t>(g.K), Symbol{});
    for (int k = 0; k < g.K; ++k) s.values[s.index(1, 1, k)] = shells[static_cast<std::size_t>(k)];
    return s;
}

}  // namespace

TEST(Remap, ShellsAndMidpoints) {
    const FrequencyGrid g = desk_grid(5);
    const std::vector<Symbol> shells{{1, 0}, {0, 2}, {-3, 1}, {0.5, 0.5}, {2, -2}};
    const auto s2 = dc_spectrum(g, shells);
    FzAxis fz{g.f1, 0.5 * g.delta, 2 * g.K - 1};
    for (double zref : {0.0, 8.0}) {
        const auto s3 = remap_to_sphere(s2, fz, zref);
        for (int k = 0; k < g.K; ++k) EXPECT_NEAR(std::abs(s3.at(1, 1, 2 * k) - shells[static_cast<std::size_t>(k)]), 0.0, 1e-9);
        if (zref == 0.0)
            for (int k = 0; k + 1 < g.K; ++k)
                EXPECT_NEAR(std::abs(s3.at(1, 1, 2 * k + 1) -
                                     0.5 * (shells[static_cast<std::size_t>(k)] + shells[static_cast<std::size_t>(k + 1)])),
                            0.0, 1e-12);
    }
}

TEST(Remap, OutOfBandAndEvanescentAreZero) {
    const FrequencyGrid g = desk_grid(5);
    auto s2 = dc_spectrum(g, std::vector<Symbol>(5, Symbol{1, 0}));
    for (auto& v : s2.values) v = {1, 0};
    const FzAxis fz{g.f1 - 4 * g.delta, g.delta, g.K + 8};
    const auto s3 = remap_to_sphere(s2, fz);
    for (int iz = 0; iz < 4; ++iz) EXPECT_EQ(s3.at(1, 1, iz), Symbol{});
    for (int iz = fz.count - 4; iz < fz.count; ++iz) EXPECT_EQ(s3.at(1, 1, iz), Symbol{});
    // Off-axis the measured band starts at sqrt(f1^2 - rho^2) > fz start.
    const double rho2 = 2e18;
    const double fz_lo = std::sqrt(g.f1 * g.f1 - rho2);
    for (int iz = 0; iz < fz.count; ++iz)
        if (fz.at(iz) < fz_lo - 1.0) EXPECT_EQ(s3.at(0, 0, iz), Symbol{});
}

TEST(Inverse, ZeroSpectrumGivesZero) {
    Spectrum3D s;
    s.grid = desk_grid(4);
    s.fx = {-3e8, 0, 3e8};
    s.fy = {-3e8, 0, 3e8};
    s.fz = {57e9, 1e8, 8};
    s.values.assign(9 * 8, Symbol{});
    const auto phi = inverse_3d_spectrum(s, small_box({0, 0, 8}));
    EXPECT_EQ(phi.max_magnitude(), 0.0);
}

TEST(Inverse, BoxWiderThanPeriodThrows) {
    Spectrum3D s;
    s.grid = desk_grid(4);
    s.fx = {-1e9, 0, 1e9};
    s.fy = {-3e8, 0, 3e8};
    s.fz = {57e9, 1e8, 8};
    s.values.assign(9 * 8, Symbol{1, 0});
    EXPECT_THROW(inverse_3d_spectrum(s, small_box({0, 0, 8})), Error);
}

TEST(Inverse, MatchesDirectSum) {
    Spectrum3D s;
    s.grid = desk_grid(4);
    s.fx = {-1e9, -0.5e9, 0, 0.5e9};
    s.fy = {-1e9, 0, 1e9};
    s.fz = {57.1e9, 3.3e8, 6};
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n;
    s.values.resize(4 * 3 * 6);
    for (auto& v : s.values) v = {n(rng), n(rng)};
    VoxelBox box;
    box.center = {0.2, -0.1, 7.9};
    box.extent = {0.3, 0.2, 0.5};
    box.max_spacing = {0.03, 0.05, 0.07};
    const auto phi = inverse_3d_spectrum(s, box);
    EXPECT_LE(phi.spacing.x, 0.03);
    EXPECT_LE(phi.spacing.z, 0.07);
    const double scale = s.fz.step / (s.grid.delta * 4 * 3);
    double err = 0.0, ref = 0.0;
    for (int ix = 0; ix < phi.nx; ix += 2)
        for (int iy = 0; iy < phi.ny; ++iy)
            for (int iz = 0; iz < phi.nz; iz += 3) {
                const Point3 x = phi.position(ix, iy, iz);
                Symbol acc{};
                for (std::size_t a = 0; a < 4; ++a)
                    for (std::size_t b = 0; b < 3; ++b)
                        for (int c = 0; c < 6; ++c)
                            acc += s.at(a, b, c) *
                                   std::polar(1.0, 2 * kPi * (s.fx[a] * x.x + s.fy[b] * x.y + s.fz.at(c) * x.z) / kSpeedOfLight);
                err += std::norm(scale * acc - phi.at(ix, iy, iz));
                ref += std::norm(scale * acc);
            }
    EXPECT_LT(std::sqrt(err / ref), 1e-9);
    // The centre lands on a voxel.
    const auto mid = phi.position(phi.nx / 2, phi.ny / 2, phi.nz / 2);
    EXPECT_LT(distance(mid, box.center), 1e-12);
}

class SingleTarget : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        grid_ = desk_grid(64);
        sv_ = fixtures::planar_grid(33, 33, 1.0, 1.0);
    }
    static PowerSpectrum image(const PointCloud& emitters, const Point3& center, const PointCloud& sv = sv_) {
        return image_aperture(sfcw_symbols(emitters, sv, grid_), sv, grid_, small_box(center));
    }
    static FrequencyGrid grid_;
    static PointCloud sv_;
};
FrequencyGrid SingleTarget::grid_;
PointCloud SingleTarget::sv_;

TEST_F(SingleTarget, PeakAgreesWithBackProjection) {
    const Point3 target{0.03, -0.02, 8.0};
    const auto y = sfcw_symbols({target}, sv_, grid_);
    const auto phi = image_aperture(y, sv_, grid_, small_box({0, 0, 8}));
    const auto peak = argmax_voxel(phi);
    // Back-projection evaluated on the voxel neighbourhood of the image peak.
    double best = -1;
    std::array<int, 3> bp_peak{};
    const auto near = index_of_nearest(phi, target);
    for (int dx = -3; dx <= 3; ++dx)
        for (int dy = -3; dy <= 3; ++dy)
            for (int dz = -3; dz <= 3; ++dz) {
                const std::array<int, 3> i{near[0] + dx, near[1] + dy, near[2] + dz};
                const double v = std::abs(back_projection(y, sv_, grid_, phi.position(i[0], i[1], i[2])));
                if (v > best) { best = v; bp_peak = i; }
            }
    for (int a = 0; a < 3; ++a) EXPECT_LE(std::abs(peak[static_cast<std::size_t>(a)] - bp_peak[static_cast<std::size_t>(a)]), 1);
    // Coherent gain is preserved.
    EXPECT_GE(phi.max_magnitude(), 0.9 * std::abs(back_projection(y, sv_, grid_, target)));
}

TEST_F(SingleTarget, WithinResolutionCell) {
    const Point3 target{0, 0, 8};
    const auto peaks = detect_peaks(image({target}, target), 0.5);
    ASSERT_FALSE(peaks.empty());
    const double dy = azimuth_resolution(8.0, 1.0, grid_.center());
    const double dz = range_resolution(grid_);
    EXPECT_LE(std::abs(peaks[0].x - target.x), dy);
    EXPECT_LE(std::abs(peaks[0].y - target.y), dy);
    EXPECT_LE(std::abs(peaks[0].z - target.z), dz);
}

TEST_F(SingleTarget, Linearity) {
    const PointCloud a{{0.05, 0.0, 8.0}}, b{{-0.08, 0.04, 7.9}, {0.1, -0.1, 8.1}};
    PointCloud ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    const auto pa = image(a, {0, 0, 8}), pb = image(b, {0, 0, 8}), pab = image(ab, {0, 0, 8});
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < pab.voxels.size(); ++i) {
        err += std::norm(pab.voxels[i] - pa.voxels[i] - pb.voxels[i]);
        ref += std::norm(pab.voxels[i]);
    }
    EXPECT_LT(std::sqrt(err / ref), 1e-10);
}

TEST_F(SingleTarget, ShiftByOneVoxelInDepth) {
    const Point3 target{0, 0, 8};
    const auto p0 = image({target}, {0, 0, 8});
    const auto p1 = image({target + Point3{0, 0, p0.spacing.z}}, {0, 0, 8});
    const auto i0 = argmax_voxel(p0), i1 = argmax_voxel(p1);
    EXPECT_EQ(i1[0], i0[0]);
    EXPECT_EQ(i1[1], i0[1]);
    EXPECT_EQ(i1[2], i0[2] + 1);
}

TEST_F(SingleTarget, JitteredApertureMovesPeakLessThanAVoxel) {
    std::mt19937_64 rng(12);
    const double spacing = 1.0 / 32;
    std::uniform_real_distribution<double> u(-0.1 * spacing, 0.1 * spacing);
    PointCloud jittered = sv_;
    for (auto& p : jittered) p = p + Point3{u(rng), u(rng), 0.0};
    const Point3 target{0.02, 0.01, 8.0};
    const auto a = argmax_voxel(image({target}, {0, 0, 8}));
    const auto b = argmax_voxel(image({target}, {0, 0, 8}, jittered));
    for (int i = 0; i < 3; ++i) EXPECT_LE(std::abs(a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)]), 1);
}

TEST_F(SingleTarget, TwoTargetsResolveAtThreeCells) {
    const double dy = azimuth_resolution(8.0, 1.0, grid_.center());
    const auto wide = detect_peaks(image({{0, -1.5 * dy, 8}, {0, 1.5 * dy, 8}}, {0, 0, 8}), 0.5);
    ASSERT_GE(wide.size(), 2u);
    EXPECT_GT(std::abs(wide[0].y - wide[1].y), 2 * dy);
    const auto close = detect_peaks(image({{0, -0.15 * dy, 8}, {0, 0.15 * dy, 8}}, {0, 0, 8}), 0.5);
    EXPECT_EQ(close.size(), 1u);
}

namespace {

PowerSpectrum tiny(int nx, int ny, int nz) {
    PowerSpectrum s;
    s.nx = nx;
    s.ny = ny;
    s.nz = nz;
    s.spacing = {0.1, 0.1, 0.1};
    s.voxels.assign(static_cast<std::size_t>(nx * ny * nz), Symbol{});
    return s;
}

}  // namespace

TEST(Peaks, SingleVoxel) {
    auto s = tiny(5, 5, 5);
    s.voxels[s.index(1, 2, 3)] = {1, 0};
    const auto p = detect_peaks(s, 0.5);
    ASSERT_EQ(p.size(), 1u);
    EXPECT_LT(distance(p[0], {0.1, 0.2, 0.3}), 1e-12);
}

TEST(Peaks, NuOneKeepsAllArgmaxVoxels) {
    auto s = tiny(6, 3, 3);
    s.voxels[s.index(0, 1, 1)] = {0, 2};
    s.voxels[s.index(4, 1, 1)] = {2, 0};
    s.voxels[s.index(2, 1, 1)] = {1.9, 0};
    EXPECT_EQ(detect_peaks(s, 1.0).size(), 2u);
    EXPECT_EQ(detect_peaks(s, 0.9).size(), 3u);
}

TEST(Peaks, OrderedByMagnitude) {
    auto s = tiny(9, 3, 3);
    s.voxels[s.index(0, 1, 1)] = {0.6, 0};
    s.voxels[s.index(4, 1, 1)] = {1.0, 0};
    s.voxels[s.index(8, 1, 1)] = {0.8, 0};
    const auto p = detect_peaks(s, 0.5);
    ASSERT_EQ(p.size(), 3u);
    EXPECT_NEAR(p[0].x, 0.4, 1e-12);
    EXPECT_NEAR(p[1].x, 0.8, 1e-12);
    EXPECT_NEAR(p[2].x, 0.0, 1e-12);
}

TEST(Peaks, Errors) {
    auto s = tiny(3, 3, 3);
    try {
        detect_peaks(s, 0.5);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptySpectrum);
    }
    s.voxels[0] = {1, 0};
    EXPECT_THROW(detect_peaks(s, 0.0), Error);
    EXPECT_THROW(detect_peaks(s, 1.5), Error);
}

TEST(Slice, CsvLayout) {
    auto s = tiny(3, 4, 5);
    s.voxels[s.index(1, 2, 3)] = {3, 4};
    std::ostringstream os;
    write_slice_csv(os, s, SlicePlane::XZ, 1, 2, 3);
    const std::string text = os.str();
    EXPECT_EQ(text.rfind("x,y,z,abs_phi\n", 0), 0u);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 3 * 5);
    EXPECT_NE(text.find("0.1,0.2,0.3,5\n"), std::string::npos);
}
