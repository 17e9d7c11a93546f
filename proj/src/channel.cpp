#include "compop/channel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <random>

#include "compop/error.hpp"

namespace compop {

namespace {

constexpr std::uint64_t kStreamSignatureA = 1;
constexpr std::uint64_t kStreamSignatureB = 2;
constexpr std::uint64_t kStreamSfcw = 3;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// exp(j 2 pi f t) with the integer cycle count removed before scaling.
Symbol phasor(double f, double t) {
    const double cycles = f * t;
    const double frac = cycles - std::floor(cycles);
    return std::polar(1.0, 2.0 * kPi * frac);
}

double arrival_azimuth(const ScenePath& path, const Scene& scene) {
    const Point3 d = centroid(virtual_cloud(path, scene.tv_antennas)) - centroid(scene.sv_antennas);
    return std::atan2(d.x, d.z);
}

PathObservation blank(const ScenePath& path, const Scene& scene) {
    PathObservation obs;
    obs.path_id = path.id;
    obs.gamma = path.gamma;
    obs.aoa_group = path.id;
    obs.aoa_azimuth = arrival_azimuth(path, scene);
    return obs;
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t kind, std::uint64_t path, std::uint64_t antenna) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ kind);
    h = splitmix64(h ^ path);
    return splitmix64(h ^ antenna);
}

void NoiseModel::check() const {
    if (!(phase_sigma >= 0.0) || !std::isfinite(phase_sigma))
        throw Error(ErrorKind::InvalidConfig, "phase_sigma must be finite and non-negative");
    if (snr_db && !std::isfinite(*snr_db)) throw Error(ErrorKind::InvalidConfig, "snr_db must be finite");
}

std::vector<PathObservation> simulate_signature(const Scene& scene, const SignatureConfig& sig,
                                                const NoiseModel& noise) {
    scene.check();
    noise.check();
    // Each tone carries half the variance so the phase difference has std phase_sigma.
    const double tone_sigma = noise.phase_sigma / std::sqrt(2.0);
    std::vector<PathObservation> out;
    for (const auto& path : scene.paths()) {
        PathObservation obs = blank(path, scene);
        const auto fill = [&](std::vector<TonePair>& dst, const Point3& anchor, double f, std::uint64_t kind) {
            dst.resize(scene.sv_antennas.size());
            for (std::size_t m = 0; m < scene.sv_antennas.size(); ++m) {
                const double tau = path_length(path.route, anchor, scene.sv_antennas[m]) / kSpeedOfLight;
                const double t = scene.clock_offset - tau;
                Symbol s1 = path.gamma * phasor(f, t);
                Symbol s2 = path.gamma * phasor(f + sig.delta, t);
                if (tone_sigma > 0.0) {
                    std::mt19937_64 rng(stream_seed(noise.seed, kind, path.id, m));
                    std::normal_distribution<double> n(0.0, tone_sigma);
                    s1 *= std::polar(1.0, n(rng));
                    s2 *= std::polar(1.0, n(rng));
                }
                dst[m] = {s1, s2};
            }
        };
        fill(obs.sig_a, scene.anchor(false), sig.f_a, kStreamSignatureA);
        fill(obs.sig_b, scene.anchor(true), sig.f_b, kStreamSignatureB);
        out.push_back(std::move(obs));
    }
    return out;
}

std::vector<PathObservation> simulate_sfcw(const Scene& scene, const FrequencyGrid& grid,
                                           const NoiseModel& noise, double sigma_estimate) {
    scene.check();
    grid.check();
    noise.check();
    const auto nr = static_cast<Eigen::Index>(scene.sv_antennas.size());
    const int K = grid.K;
    constexpr int kReanchor = 32;
    std::vector<PathObservation> out;
    for (const auto& path : scene.paths()) {
        PathObservation obs = blank(path, scene);
        obs.sfcw = Eigen::MatrixXcd::Zero(nr, K);
        for (Eigen::Index m = 0; m < nr; ++m) {
            const Point3& rx = scene.sv_antennas[static_cast<std::size_t>(m)];
            for (const auto& tx : scene.tv_antennas) {
                const double t = scene.clock_offset - sigma_estimate - path_length(path.route, tx, rx) / kSpeedOfLight;
                const Symbol step = phasor(grid.delta, t);
                Symbol w;
                for (int k = 0; k < K; ++k) {
                    w = (k % kReanchor == 0) ? phasor(grid.freq(k), t) : w * step;
                    obs.sfcw(m, k) += w;
                }
            }
        }
        obs.sfcw *= path.gamma;

        if (noise.snr_db) {
            double signal_power = std::norm(path.gamma);
            if (noise.reference == SnrReference::Received) signal_power = obs.sfcw.squaredNorm() / obs.sfcw.size();
            const double sigma = std::sqrt(signal_power * std::pow(10.0, -*noise.snr_db / 10.0) / 2.0);
            for (Eigen::Index m = 0; m < nr; ++m) {
                std::mt19937_64 rng(stream_seed(noise.seed, kStreamSfcw, path.id, m));
                std::normal_distribution<double> n(0.0, sigma);
                for (int k = 0; k < K; ++k) {
                    const double re = n(rng);
                    const double im = n(rng);
                    obs.sfcw(m, k) += Symbol(re, im);
                }
            }
        }
        out.push_back(std::move(obs));
    }
    return out;
}

void compensate_clock(PathObservation& obs, const FrequencyGrid& grid, double sigma_estimate) {
    for (int k = 0; k < obs.sfcw.cols(); ++k) obs.sfcw.col(k) *= phasor(grid.freq(k), -sigma_estimate);
}

std::vector<PathObservation> merge_observations(std::vector<PathObservation> signature,
                                                const std::vector<PathObservation>& sfcw) {
    for (auto& obs : signature) {
        const auto it = std::find_if(sfcw.begin(), sfcw.end(),
                                     [&](const PathObservation& o) { return o.path_id == obs.path_id; });
        if (it != sfcw.end()) obs.sfcw = it->sfcw;
    }
    return signature;
}

std::vector<PathObservation> resolve_paths(std::vector<PathObservation> observations) {
    std::map<int, PathObservation> groups;
    for (auto& obs : observations) {
        const int label = obs.aoa_group;
        if (!groups.emplace(label, std::move(obs)).second)
            throw Error(ErrorKind::DuplicateLabel, "AoA label " + std::to_string(label) + " appears twice");
    }
    std::vector<PathObservation> out;
    out.reserve(groups.size());
    for (auto& [label, obs] : groups) out.push_back(std::move(obs));
    return out;
}

void write_observations_csv(std::ostream& os, const std::vector<PathObservation>& observations) {
    os << "path_id,m,k,re,im\n";
    const auto old_precision = os.precision(17);
    for (const auto& obs : observations)
        for (Eigen::Index m = 0; m < obs.sfcw.rows(); ++m)
            for (Eigen::Index k = 0; k < obs.sfcw.cols(); ++k)
                os << obs.path_id << ',' << m << ',' << k << ',' << obs.sfcw(m, k).real() << ','
                   << obs.sfcw(m, k).imag() << '\n';
    os.precision(old_precision);
}

}  // namespace compop
