#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "compop/channel.hpp"

namespace compop {

enum class Anchor { A, B };

struct PdoaMeasurement {
    Anchor anchor = Anchor::A;
    double delta = 0.0;
    std::vector<double> eta_tilde;  // unwrapped, one per SV antenna
    std::vector<double> f_tilde;    // range differences to antenna 0, for antennas 1 .. N_r-1
};

struct SyncResult {
    Point3 x_anchor;
    double sigma_hat = 0.0;
    Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
    int iterations = 0;
    bool converged = false;
    double objective = 0.0;  // half the squared residual norm
};

struct SearchRegion {
    Point3 center;
    double half_extent = 12.0;
    double step = 0.5;
    /// Restricts the search to the side of the array this normal points to.
    std::optional<Point3> half_space_normal;

    Point3 centroid() const;
    bool contains(const Point3& p) const;
    /// Nearest point of the region for axis-aligned normals; an approximation otherwise.
    Point3 project(const Point3& p) const;
};

struct InitialGuess {
    Point3 point;
    bool used_fallback = false;
    std::vector<int> equations;  // antenna indices of the three equations used
    Point3 grid_point;           // coarse grid point with the lowest full objective
};

struct SolverOptions {
    double tolerance = 1e-9;
    int max_iterations = 100;
    int max_halvings = 20;
    double phase_sigma = 0.0;  // only scales the reported covariance
    /// Steps are projected onto this region.
    std::optional<SearchRegion> bounds;
};

/// Throws Error(UnwrapAmbiguity) when consecutive SV antennas are further
/// apart than c/(2 delta).
PdoaMeasurement measure_pdoa(const PathObservation& obs, Anchor anchor, double delta,
                             const PointCloud& sv_antennas);

/// Cube of half-width c/delta around the array centroid. Planar arrays
/// only search the half-space their +Z-leaning normal points into.
SearchRegion default_search_region(const PointCloud& sv_antennas, double delta);

InitialGuess initial_guess(const PdoaMeasurement& m, const PointCloud& sv_antennas, const SearchRegion& region);
InitialGuess initial_guess(const PdoaMeasurement& m, const PointCloud& sv_antennas);

/// Residuals F_tilde_m - (D(x, p_m) - D(x, p_0)).
Eigen::VectorXd pdoa_residuals(const PdoaMeasurement& m, const PointCloud& sv_antennas, const Point3& x);
double pdoa_objective(const PdoaMeasurement& m, const PointCloud& sv_antennas, const Point3& x);

/// Damped Gauss-Newton. Throws Error(RankDeficient) when the Jacobian is
/// singular at the start point.
SyncResult locate_anchor(const PdoaMeasurement& m, const PointCloud& sv_antennas, const Point3& guess,
                         const SolverOptions& options = {});

/// Gauss-Newton from both starts of `initial_guess`, bounded to `region`
/// unless `options` already carries bounds. Keeps the lower objective.
SyncResult solve_anchor(const PdoaMeasurement& m, const PointCloud& sv_antennas, const SearchRegion& region,
                        const SolverOptions& options = {});

/// Mean of tau_m - eta_m / (2 pi delta), reduced to [-1/(2 delta), 1/(2 delta)).
/// The clock is only observable modulo 1/delta.
double estimate_clock(const Point3& x, const PdoaMeasurement& m, const PointCloud& sv_antennas, double delta);

/// Wraps a clock value into [-1/(2 delta), 1/(2 delta)).
double wrap_clock(double sigma, double delta);

/// |a - b| on the clock circle of circumference 1/delta.
double clock_distance(double a, double b, double delta);

struct PathSync {
    int path_id = 0;
    SyncResult a;
    SyncResult b;
    double sigma_hat = 0.0;          // from anchor a
    double sigma_discrepancy = 0.0;  // circular |sigma_a - sigma_b|
};

PathSync synchronise_path(const PathObservation& obs, const PointCloud& sv_antennas, double delta,
                          const SolverOptions& options = {});

}  // namespace compop
