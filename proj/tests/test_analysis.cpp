#include <gtest/gtest.h>

#include <random>

#include "compop/analysis.hpp"
#include "compop/error.hpp"

using namespace compop;

TEST(Resolution, Azimuth) {
    const double expected = kSpeedOfLight * std::sqrt(4.0 * 64.0 + 1.0) / (2.0 * 58.5e9);
    EXPECT_NEAR(azimuth_resolution(8.0, 1.0, 58.5e9), expected, 1e-15);
    EXPECT_NEAR(azimuth_resolution(8.0, 1.0, 58.5e9), 0.0411, 5e-5);
    EXPECT_NEAR(azimuth_resolution(0.0, 1.0, 58.5e9), kSpeedOfLight / (2.0 * 58.5e9), 1e-15);
    EXPECT_NEAR(azimuth_resolution(400.0, 1.0, 58.5e9) / azimuth_resolution(200.0, 1.0, 58.5e9), 2.0, 1e-5);
    EXPECT_THROW(azimuth_resolution(8.0, 0.0, 58.5e9), Error);
}

TEST(Resolution, Range) {
    const FrequencyGrid g{57e9, 256, 11.72e6};
    EXPECT_NEAR(range_resolution(g), kSpeedOfLight / (255 * 11.72e6), 1e-12);
    EXPECT_NEAR(range_resolution(g), 0.1003, 1e-4);
    const FrequencyGrid wide{57e9, 256, 2 * 11.72e6};
    EXPECT_NEAR(range_resolution(wide), 0.5 * range_resolution(g), 1e-12);
    EXPECT_NEAR(range_resolution({1e9, 2, kSpeedOfLight}), 1.0, 1e-12);
}

TEST(Rcs, NormalIncidence) {
    const std::complex<double> g0{0.3, -0.4};
    EXPECT_NEAR(rcs(0.0, 0.2, g0), 0.25 / 0.4, 1e-12);
}

TEST(Rcs, DecreasingInIncidence) {
    for (double s2 : {0.05, 0.3, 0.5}) {
        double prev = rcs(0.0, s2, 1.0);
        for (double t = 0.01; t <= 1.3; t += 0.01) {
            const double v = rcs(t, s2, 1.0);
            EXPECT_LT(v, prev) << "s2=" << s2 << " theta=" << t;
            prev = v;
        }
    }
}

TEST(Rcs, VanishesForLargeRoughness) {
    EXPECT_LT(rcs(0.4, 1e9, 1.0), 1e-9);
}

TEST(Rcs, DomainErrors) {
    for (double t : {-0.1, kPi / 2, 2.0}) {
        try {
            rcs(t, 0.2, 1.0);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::Domain);
        }
    }
    EXPECT_THROW(rcs(0.1, 0.0, 1.0), Error);
}

TEST(LinkBudget, CompopLos) {
    LinkBudgetParams p;
    p.wavelength = 5.125e-3;
    p.r = 8.0;
    const double expected = std::pow(p.wavelength / (4 * kPi * p.r), 2);
    EXPECT_NEAR(rx_power(LinkMode::CompopLos, p), expected, 1e-20);
    EXPECT_NEAR(rx_power(LinkMode::CompopLos, p), 2.6e-9, 0.05e-9);
    EXPECT_NEAR(10 * std::log10(rx_power(LinkMode::CompopLos, p)), -85.9, 0.1);
}

TEST(LinkBudget, RadarFourthPowerLaw) {
    LinkBudgetParams p;
    p.wavelength = 5.125e-3;
    p.r = 8.0;
    p.s2 = 0.3;
    const double far = rx_power(LinkMode::RadarLos, p);
    p.r = 4.0;
    EXPECT_NEAR(rx_power(LinkMode::RadarLos, p) / far, 16.0, 1e-9);
}

TEST(LinkBudget, CompopBeatsRadar) {
    LinkBudgetParams p;
    p.wavelength = 5.125e-3;
    for (double r : {1.0, 2.0, 8.0, 30.0})
        for (double s2 : {0.05, 0.2, 1.0})
            for (double t : {0.0, 0.3, 0.8}) {
                p.r = r;
                p.s2 = s2;
                p.theta_i = t;
                if (rcs(t, s2, p.gamma_s0) > 10.0) continue;
                EXPECT_GT(rx_power(LinkMode::CompopLos, p), rx_power(LinkMode::RadarLos, p));
            }
}

TEST(LinkBudget, NlosForms) {
    LinkBudgetParams p;
    p.wavelength = 5.125e-3;
    p.r1 = 5.0;
    p.r2 = 6.0;
    p.s2 = 0.3;
    p.theta_i = 0.2;
    p.theta_i_l = 0.4;
    const double sl = rcs(0.4, 0.3, 1.0), st = rcs(0.2, 0.3, 1.0);
    const double l2 = p.wavelength * p.wavelength;
    EXPECT_NEAR(rx_power(LinkMode::CompopNlos, p) / (l2 * sl / (64 * std::pow(kPi, 3) * 900.0)), 1.0, 1e-12);
    EXPECT_NEAR(rx_power(LinkMode::RadarNlos, p) /
                    (l2 * st * sl * sl / (1024 * std::pow(kPi, 5) * std::pow(5.0, 4) * std::pow(6.0, 4))),
                1.0, 1e-12);
    p.r1 = 0.0;
    EXPECT_THROW(rx_power(LinkMode::CompopNlos, p), Error);
}

TEST(Hausdorff, Examples) {
    const PointCloud a{{0, 0, 0}};
    EXPECT_EQ(hausdorff(a, a), 0.0);
    EXPECT_DOUBLE_EQ(hausdorff(a, {{3, 0, 0}}), 3.0);
    EXPECT_DOUBLE_EQ(hausdorff({{0, 0, 0}, {10, 0, 0}}, a), 10.0);
    EXPECT_DOUBLE_EQ(hausdorff(a, {{0, 0, 0}, {10, 0, 0}}), 10.0);
}

TEST(Hausdorff, EmptyCloud) {
    try {
        hausdorff({}, {{0, 0, 0}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Domain);
    }
}

TEST(Hausdorff, MetricAxioms) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-5, 5);
    std::uniform_int_distribution<int> n(1, 12);
    auto cloud = [&] {
        PointCloud c(static_cast<std::size_t>(n(rng)));
        for (auto& p : c) p = {u(rng), u(rng), u(rng)};
        return c;
    };
    for (int i = 0; i < 200; ++i) {
        const auto a = cloud(), b = cloud(), c = cloud();
        const double ab = hausdorff(a, b);
        EXPECT_EQ(hausdorff(a, a), 0.0);
        EXPECT_EQ(ab, hausdorff(b, a));
        EXPECT_GT(ab, 0.0);
        EXPECT_LE(ab, hausdorff(a, c) + hausdorff(c, b) + 1e-12);
        PointCloud dup = a;
        dup.insert(dup.end(), a.rbegin(), a.rend());
        EXPECT_EQ(hausdorff(a, dup), 0.0);
    }
}

TEST(Rmse, NearestNeighbour) {
    EXPECT_NEAR(rmse_nearest({{0, 0, 0}, {0, 0, 2}}, {{0, 0, 1}}), 1.0, 1e-12);
    EXPECT_NEAR(rmse_nearest({{3, 0, 0}}, {{0, 0, 0}, {4, 0, 0}}), 1.0, 1e-12);
}
