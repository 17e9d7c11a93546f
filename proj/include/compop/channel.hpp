#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "compop/scene.hpp"
#include "compop/waveform.hpp"

namespace compop {

using Symbol = std::complex<double>;

/// What the SFCW SNR is measured against: the power of one transmitter's
/// symbol (|Gamma|^2) or the mean power of the superposed received symbol.
enum class SnrReference { PerTransmitter, Received };

struct NoiseModel {
    double phase_sigma = 0.0;       // radians, std of the PDoA phase error
    std::optional<double> snr_db;   // SFCW AWGN level; nullopt means noiseless
    std::uint64_t seed = 0;
    SnrReference reference = SnrReference::PerTransmitter;

    void check() const;
};

struct TonePair {
    Symbol first;   // f
    Symbol second;  // f + delta
};

struct PathObservation {
    int path_id = 0;
    Symbol gamma{1.0, 0.0};
    int aoa_group = 0;
    /// Ground-truth arrival azimuth (from +Z towards +X) of the path at the SV.
    double aoa_azimuth = 0.0;
    std::vector<TonePair> sig_a;
    std::vector<TonePair> sig_b;
    Eigen::MatrixXcd sfcw;  // rows: SV antennas, columns: tones
};

std::vector<PathObservation> simulate_signature(const Scene& scene, const SignatureConfig& sig,
                                                const NoiseModel& noise);

/// SFCW symbols after the receiver removed `sigma_estimate` from its clock.
std::vector<PathObservation> simulate_sfcw(const Scene& scene, const FrequencyGrid& grid,
                                           const NoiseModel& noise, double sigma_estimate);

/// Applies a further receiver clock correction to already simulated SFCW
/// symbols: y_k <- y_k * exp(-j 2 pi f_k sigma_estimate).
void compensate_clock(PathObservation& obs, const FrequencyGrid& grid, double sigma_estimate);

/// Merges the signature and SFCW parts of observations with matching path ids.
std::vector<PathObservation> merge_observations(std::vector<PathObservation> signature,
                                                const std::vector<PathObservation>& sfcw);

/// One observation per AoA label, ordered by label. Throws
/// Error(DuplicateLabel) when two observations carry the same label.
std::vector<PathObservation> resolve_paths(std::vector<PathObservation> observations);

/// CSV dump of the SFCW symbols: path_id,m,k,re,im.
void write_observations_csv(std::ostream& os, const std::vector<PathObservation>& observations);

/// Counter-derived seed for one noise stream.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t kind, std::uint64_t path, std::uint64_t antenna);

}  // namespace compop
