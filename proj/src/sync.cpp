#include "compop/sync.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>

#include "compop/error.hpp"

namespace compop {

namespace {

Eigen::Vector3d vec(const Point3& p) { return {p.x, p.y, p.z}; }
Point3 pt(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

Eigen::Vector3d unit_from(const Point3& p, const Point3& x) {
    const double d = distance(x, p);
    if (d == 0.0) return Eigen::Vector3d::Zero();
    return vec(x - p) / d;
}

Eigen::MatrixXd jacobian(const PointCloud& sv, const Point3& x) {
    const Eigen::Vector3d u0 = unit_from(sv[0], x);
    Eigen::MatrixXd g(static_cast<Eigen::Index>(sv.size() - 1), 3);
    for (std::size_t m = 1; m < sv.size(); ++m)
        g.row(static_cast<Eigen::Index>(m - 1)) = (unit_from(sv[m], x) - u0).transpose();
    return g;
}

double subset_cost(const PdoaMeasurement& meas, const PointCloud& sv, const std::vector<int>& eq, const Point3& x) {
    const double d0 = distance(x, sv[0]);
    double cost = 0.0;
    for (int e : eq) {
        const double r = meas.f_tilde[static_cast<std::size_t>(e - 1)] - (distance(x, sv[static_cast<std::size_t>(e)]) - d0);
        cost += r * r;
    }
    return cost;
}

double full_cost(const PdoaMeasurement& meas, const PointCloud& sv, const Point3& x) {
    const double d0 = distance(x, sv[0]);
    double cost = 0.0;
    for (std::size_t e = 1; e < sv.size(); ++e) {
        const double r = meas.f_tilde[e - 1] - (distance(x, sv[e]) - d0);
        cost += r * r;
    }
    return cost;
}

void check_measurement(const PdoaMeasurement& m, const PointCloud& sv) {
    if (sv.size() < 4)
        throw Error(ErrorKind::InvalidConfig, "at least four SV antennas are required for synchronisation");
    if (m.f_tilde.size() + 1 != sv.size())
        throw Error(ErrorKind::InvalidConfig, "measurement length does not match the SV array");
}

double distance_to_line(const Point3& p, const Point3& a, const Point3& b) {
    const Eigen::Vector3d d = vec(b - a);
    const double len = d.norm();
    if (len == 0.0) return distance(p, a);
    return d.cross(vec(p - a)).norm() / len;
}

// Outward normals of the region faces that `x` lies on.
std::vector<Eigen::Vector3d> faces_at(const SearchRegion& region, const Point3& x) {
    std::vector<Eigen::Vector3d> out;
    const Eigen::Vector3d d = vec(x - region.center);
    const double tol = 1e-9 * std::max(region.half_extent, 1.0);
    for (int a = 0; a < 3; ++a) {
        if (d(a) >= region.half_extent - tol) out.push_back(Eigen::Vector3d::Unit(a));
        if (d(a) <= -region.half_extent + tol) out.push_back(-Eigen::Vector3d::Unit(a));
    }
    if (region.half_space_normal && std::abs(d.dot(vec(*region.half_space_normal))) <= tol)
        out.push_back(-vec(*region.half_space_normal));
    return out;
}

// Gauss-Newton step with the faces it pushes against held fixed.
Eigen::Vector3d active_set_step(const SearchRegion& region, const Point3& x, const Eigen::Matrix3d& gtg,
                                const Eigen::Vector3d& gtr, Eigen::Vector3d h) {
    const auto faces = faces_at(region, x);
    std::vector<Eigen::Vector3d> active;
    for (std::size_t round = 0; round < faces.size(); ++round) {
        bool added = false;
        for (const auto& n : faces)
            if (h.dot(n) > 0.0 && std::ranges::find(active, n) == active.end()) {
                active.push_back(n);
                added = true;
            }
        if (!added) break;
        Eigen::MatrixXd a(3, static_cast<Eigen::Index>(active.size()));
        for (std::size_t k = 0; k < active.size(); ++k) a.col(static_cast<Eigen::Index>(k)) = active[k];
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullU);
        const Eigen::Index rank = svd.rank();
        if (rank >= 3) return Eigen::Vector3d::Zero();
        const Eigen::MatrixXd z = svd.matrixU().rightCols(3 - rank);
        const Eigen::MatrixXd reduced = z.transpose() * gtg * z;
        h = z * reduced.ldlt().solve(z.transpose() * gtr);
    }
    return h;
}

}  // namespace

Point3 SearchRegion::centroid() const {
    if (!half_space_normal) return center;
    return center + *half_space_normal * (0.5 * half_extent);
}

Point3 SearchRegion::project(const Point3& p) const {
    Point3 d = p - center;
    if (half_space_normal && dot(d, *half_space_normal) < 0.0) d = d - *half_space_normal * dot(d, *half_space_normal);
    d = {std::clamp(d.x, -half_extent, half_extent), std::clamp(d.y, -half_extent, half_extent),
         std::clamp(d.z, -half_extent, half_extent)};
    return center + d;
}

bool SearchRegion::contains(const Point3& p) const {
    const Point3 d = p - center;
    if (std::max({std::abs(d.x), std::abs(d.y), std::abs(d.z)}) > half_extent) return false;
    return !half_space_normal || dot(d, *half_space_normal) >= 0.0;
}

PdoaMeasurement measure_pdoa(const PathObservation& obs, Anchor anchor, double delta, const PointCloud& sv_antennas) {
    if (!(delta > 0.0)) throw Error(ErrorKind::InvalidConfig, "delta must be positive");
    const auto& symbols = anchor == Anchor::A ? obs.sig_a : obs.sig_b;
    if (symbols.size() != sv_antennas.size() || symbols.empty())
        throw Error(ErrorKind::InvalidConfig, "signature symbols missing for some SV antennas");
    const double bound = kSpeedOfLight / (2.0 * delta);
    for (std::size_t m = 1; m < sv_antennas.size(); ++m)
        if (distance(sv_antennas[m], sv_antennas[m - 1]) > bound)
            throw Error(ErrorKind::UnwrapAmbiguity,
                        "SV antennas " + std::to_string(m - 1) + " and " + std::to_string(m) +
                            " are further apart than c/(2 delta); phase unwrapping is ambiguous");

    PdoaMeasurement out;
    out.anchor = anchor;
    out.delta = delta;
    out.eta_tilde.resize(symbols.size());
    for (std::size_t m = 0; m < symbols.size(); ++m) {
        const double raw = std::arg(symbols[m].first * std::conj(symbols[m].second));
        out.eta_tilde[m] = m == 0 ? raw : out.eta_tilde[m - 1] + wrap_angle(raw - out.eta_tilde[m - 1]);
    }
    const double scale = kSpeedOfLight / (2.0 * kPi * delta);
    out.f_tilde.resize(symbols.size() - 1);
    for (std::size_t m = 1; m < symbols.size(); ++m)
        out.f_tilde[m - 1] = scale * (out.eta_tilde[m] - out.eta_tilde[0]);
    return out;
}

SearchRegion default_search_region(const PointCloud& sv_antennas, double delta) {
    SearchRegion region;
    region.center = compop::centroid(sv_antennas);
    region.half_extent = max_unambiguous_range(delta);
    if (sv_antennas.size() >= 3) {
        Eigen::MatrixXd a(static_cast<Eigen::Index>(sv_antennas.size()), 3);
        for (std::size_t m = 0; m < sv_antennas.size(); ++m)
            a.row(static_cast<Eigen::Index>(m)) = vec(sv_antennas[m] - region.center).transpose();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinV);
        const auto& s = svd.singularValues();
        if (s(0) > 0.0 && s(2) <= 1e-9 * s(0)) {
            Eigen::Vector3d n = svd.matrixV().col(2);
            if (n.z() < -1e-12 || (std::abs(n.z()) <= 1e-12 && n.x() < 0.0)) n = -n;
            region.half_space_normal = pt(n.normalized());
        }
    }
    return region;
}

InitialGuess initial_guess(const PdoaMeasurement& m, const PointCloud& sv) {
    return initial_guess(m, sv, default_search_region(sv, m.delta));
}

InitialGuess initial_guess(const PdoaMeasurement& meas, const PointCloud& sv, const SearchRegion& region) {
    check_measurement(meas, sv);
    InitialGuess guess;
    guess.point = region.centroid();
    const int n = static_cast<int>(sv.size());
    const auto& p0 = sv[0];

    // Three well spread antennas: far from p0, far from that line, far from that plane.
    int i = 1;
    for (int e = 1; e < n; ++e)
        if (distance(sv[e], p0) > distance(sv[i], p0)) i = e;
    int j = -1;
    double best_line = 0.0;
    for (int e = 1; e < n; ++e) {
        const double d = distance_to_line(sv[e], p0, sv[i]);
        if (d > best_line) { best_line = d; j = e; }
    }
    const double scale = std::max(distance(sv[i], p0), 1e-12);
    if (j < 0 || best_line < 1e-6 * scale) {
        guess.used_fallback = true;
        return guess;
    }
    const Eigen::Vector3d normal = vec(sv[i] - p0).cross(vec(sv[j] - p0)).normalized();
    int k = -1;
    double best_plane = -1.0;
    for (int e = 1; e < n; ++e) {
        if (e == i || e == j) continue;
        double d = std::abs(normal.dot(vec(sv[e] - p0)));
        // Coplanar arrays: take the antenna furthest from the three already chosen.
        if (d < 1e-9 * scale)
            d = 1e-12 * std::min({distance(sv[e], p0), distance(sv[e], sv[i]), distance(sv[e], sv[j])});
        if (d > best_plane) { best_plane = d; k = e; }
    }
    guess.equations = {i, j, k};

    const double step = region.step;
    const int half = static_cast<int>(std::ceil(region.half_extent / step));
    const auto admissible = [&](int ix, int iy, int iz) {
        const Point3 offset{ix * step, iy * step, iz * step};
        return !region.half_space_normal || dot(offset, *region.half_space_normal) >= 0.5 * step;
    };
    const auto at = [&](int ix, int iy, int iz) { return region.center + Point3{ix * step, iy * step, iz * step}; };
    double best = std::numeric_limits<double>::infinity();
    double best_full = best;
    Point3 best_point = guess.point;
    std::array<int, 3> full_index{};
    guess.grid_point = guess.point;
    for (int ix = -half; ix <= half; ++ix)
        for (int iy = -half; iy <= half; ++iy)
            for (int iz = -half; iz <= half; ++iz) {
                if (!admissible(ix, iy, iz)) continue;
                const Point3 x = at(ix, iy, iz);
                const double cost = subset_cost(meas, sv, guess.equations, x);
                if (cost < best) { best = cost; best_point = x; }
                // The full objective scales with the array, so it sees every
                // other point here and the neighbourhood of its winner below.
                if ((ix | iy | iz) % 2 != 0) continue;
                const double full = full_cost(meas, sv, x);
                if (full < best_full) { best_full = full; full_index = {ix, iy, iz}; }
            }
    if (std::isfinite(best_full)) {
        const auto [cx, cy, cz] = full_index;
        guess.grid_point = at(cx, cy, cz);
        for (int ix = std::max(cx - 2, -half); ix <= std::min(cx + 2, half); ++ix)
            for (int iy = std::max(cy - 2, -half); iy <= std::min(cy + 2, half); ++iy)
                for (int iz = std::max(cz - 2, -half); iz <= std::min(cz + 2, half); ++iz) {
                    if (!admissible(ix, iy, iz)) continue;
                    const double full = full_cost(meas, sv, at(ix, iy, iz));
                    if (full < best_full) { best_full = full; guess.grid_point = at(ix, iy, iz); }
                }
    }
    if (!std::isfinite(best)) {
        guess.used_fallback = true;
        return guess;
    }

    // Newton on the three chosen equations.
    Point3 x = best_point;
    double cost = best;
    for (int it = 0; it < 50 && cost > 0.0; ++it) {
        Eigen::Matrix3d jac;
        Eigen::Vector3d r;
        const Eigen::Vector3d u0 = unit_from(p0, x);
        const double d0 = distance(x, p0);
        for (int row = 0; row < 3; ++row) {
            const int e = guess.equations[static_cast<std::size_t>(row)];
            jac.row(row) = (unit_from(sv[e], x) - u0).transpose();
            r(row) = meas.f_tilde[static_cast<std::size_t>(e - 1)] - (distance(x, sv[e]) - d0);
        }
        const Eigen::FullPivLU<Eigen::Matrix3d> lu(jac);
        if (!lu.isInvertible()) break;
        Eigen::Vector3d h = lu.solve(r);
        bool improved = false;
        for (int halving = 0; halving < 20; ++halving, h *= 0.5) {
            const Point3 cand = x + pt(h);
            const double c = subset_cost(meas, sv, guess.equations, cand);
            if (std::isfinite(c) && c < cost && region.contains(cand)) {
                x = cand;
                cost = c;
                improved = true;
                break;
            }
        }
        if (!improved || h.norm() < 1e-12) break;
    }
    guess.point = x;
    return guess;
}

Eigen::VectorXd pdoa_residuals(const PdoaMeasurement& m, const PointCloud& sv, const Point3& x) {
    check_measurement(m, sv);
    const double d0 = distance(x, sv[0]);
    Eigen::VectorXd r(static_cast<Eigen::Index>(sv.size() - 1));
    for (std::size_t e = 1; e < sv.size(); ++e)
        r(static_cast<Eigen::Index>(e - 1)) = m.f_tilde[e - 1] - (distance(x, sv[e]) - d0);
    return r;
}

double pdoa_objective(const PdoaMeasurement& m, const PointCloud& sv, const Point3& x) {
    return 0.5 * pdoa_residuals(m, sv, x).squaredNorm();
}

SyncResult locate_anchor(const PdoaMeasurement& m, const PointCloud& sv, const Point3& guess,
                         const SolverOptions& options) {
    check_measurement(m, sv);
    SyncResult result;
    Point3 x = guess;
    Eigen::VectorXd r = pdoa_residuals(m, sv, x);
    double f = 0.5 * r.squaredNorm();
    Eigen::MatrixXd g = jacobian(sv, x);
    {
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(g);
        const auto& s = svd.singularValues();
        if (!(s(0) > 0.0) || s(2) <= 1e-12 * s(0))
            throw Error(ErrorKind::RankDeficient, "PDoA Jacobian is rank deficient; SV array geometry is degenerate");
    }
    for (int it = 0; it < options.max_iterations; ++it) {
        const Eigen::Matrix3d gtg = g.transpose() * g;
        Eigen::Vector3d h = gtg.ldlt().solve(g.transpose() * r);
        if (options.bounds) h = active_set_step(*options.bounds, x, gtg, g.transpose() * r, h);
        if (!h.allFinite()) break;
        const auto place = [&](const Eigen::Vector3d& step) {
            return options.bounds ? options.bounds->project(x + pt(step)) : x + pt(step);
        };
        // Projected length of the full step. On a face of the region only its
        // tangential part survives.
        const double full_move = distance(place(h), x);
        bool accepted = false;
        Point3 cand;
        double f_new = f;
        for (int halving = 0; halving <= options.max_halvings; ++halving) {
            cand = place(h);
            f_new = pdoa_objective(m, sv, cand);
            if (f_new <= f) {
                accepted = true;
                break;
            }
            h *= 0.5;
        }
        if (!accepted) {
            // Rounding floor: the step is too small to lower the objective further.
            result.converged = full_move < 2e-6;
            break;
        }
        const double moved = distance(cand, x);
        x = cand;
        f = f_new;
        result.iterations = it + 1;
        r = pdoa_residuals(m, sv, x);
        g = jacobian(sv, x);
        if (moved < options.tolerance) {
            result.converged = true;
            break;
        }
    }
    result.x_anchor = x;
    result.objective = f;
    const double var_f = 2.0 * std::pow(kSpeedOfLight * options.phase_sigma / (2.0 * kPi * m.delta), 2);
    const Eigen::Matrix3d gtg = g.transpose() * g;
    Eigen::Matrix3d cov = var_f * gtg.inverse();
    result.covariance = 0.5 * (cov + cov.transpose());
    return result;
}

SyncResult solve_anchor(const PdoaMeasurement& m, const PointCloud& sv, const SearchRegion& region,
                        const SolverOptions& options) {
    const InitialGuess guess = initial_guess(m, sv, region);
    SolverOptions bounded = options;
    if (!bounded.bounds) bounded.bounds = region;
    // The three-equation start can sit in a noise-induced side basin, so the
    // best coarse grid point is tried as well. A start on the array plane is
    // degenerate and skipped as long as the other one works.
    std::optional<SyncResult> best;
    std::optional<Error> failure;
    for (const Point3& start : {guess.point, guess.grid_point}) {
        try {
            SyncResult res = locate_anchor(m, sv, start, bounded);
            if (!best || res.objective < best->objective) best = res;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::RankDeficient) throw;
            failure = e;
        }
    }
    if (!best) throw *failure;
    return *best;
}

double wrap_clock(double sigma, double delta) {
    const double period = 1.0 / delta;
    return sigma - period * std::floor(sigma / period + 0.5);
}

double clock_distance(double a, double b, double delta) { return std::abs(wrap_clock(a - b, delta)); }

double estimate_clock(const Point3& x, const PdoaMeasurement& m, const PointCloud& sv, double delta) {
    if (m.eta_tilde.size() != sv.size() || sv.empty())
        throw Error(ErrorKind::InvalidConfig, "measurement length does not match the SV array");
    double sum = 0.0;
    for (std::size_t e = 0; e < sv.size(); ++e)
        sum += distance(x, sv[e]) / kSpeedOfLight - m.eta_tilde[e] / (2.0 * kPi * delta);
    return wrap_clock(sum / static_cast<double>(sv.size()), delta);
}

PathSync synchronise_path(const PathObservation& obs, const PointCloud& sv, double delta,
                          const SolverOptions& options) {
    PathSync out;
    out.path_id = obs.path_id;
    const auto solve = [&](Anchor anchor, SyncResult& res) {
        const PdoaMeasurement meas = measure_pdoa(obs, anchor, delta, sv);
        res = solve_anchor(meas, sv, default_search_region(sv, delta), options);
        res.sigma_hat = estimate_clock(res.x_anchor, meas, sv, delta);
    };
    solve(Anchor::A, out.a);
    solve(Anchor::B, out.b);
    out.sigma_hat = out.a.sigma_hat;
    out.sigma_discrepancy = clock_distance(out.a.sigma_hat, out.b.sigma_hat, delta);
    return out;
}

}  // namespace compop
