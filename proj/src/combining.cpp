#include "compop/combining.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "compop/error.hpp"

namespace compop {

namespace {

constexpr double kParallel = 1e-9;

const VirtualDetection* find_los(const std::vector<VirtualDetection>& cluster) {
    for (const auto& d : cluster)
        if (d.is_los) return &d;
    return nullptr;
}

// Candidates from detection 0 with every detection whose line is not parallel.
struct Candidates {
    std::vector<Point3> a;
    std::vector<Point3> b;
};

Candidates candidates_at(const std::vector<VirtualDetection>& cluster, double theta1) {
    Candidates c;
    const double phi1 = cluster[0].phi;
    for (std::size_t l = 1; l < cluster.size(); ++l) {
        const double theta_l = surface_angle(theta1, cluster[l].phi, phi1);
        if (std::abs(std::sin(theta_l - theta1)) < kParallel) continue;
        const auto [a, b] = candidate_anchor(cluster[0], cluster[l], theta1, phi1);
        c.a.push_back(a);
        c.b.push_back(b);
    }
    return c;
}

double scatter(const Candidates& c) {
    double sum = 0.0;
    for (std::size_t i = 0; i < c.a.size(); ++i)
        for (std::size_t j = i + 1; j < c.a.size(); ++j)
            sum += distance(c.a[i], c.a[j]) + distance(c.b[i], c.b[j]);
    return sum;
}

}  // namespace

VirtualDetection make_detection(int path_id, const Point3& x_a, const Point3& x_b, PointCloud cloud,
                                double sigma_hat, bool is_los) {
    VirtualDetection d;
    d.path_id = path_id;
    d.is_los = is_los;
    d.x_a_virtual = x_a;
    d.x_b_virtual = x_b;
    d.cloud = std::move(cloud);
    d.sigma_hat = sigma_hat;
    d.phi = directed_angle_xz(x_a, x_b);
    return d;
}

std::vector<std::vector<VirtualDetection>> group_by_clock(const std::vector<VirtualDetection>& detections,
                                                          double tolerance, double delta) {
    const std::size_t n = detections.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    const auto root = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double d = detections[i].sigma_hat - detections[j].sigma_hat;
            if (delta > 0.0) {
                const double period = 1.0 / delta;
                d -= period * std::round(d / period);
            }
            if (std::abs(d) <= tolerance) parent[root(j)] = root(i);
        }
    std::vector<std::vector<VirtualDetection>> clusters;
    std::vector<std::size_t> roots;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return detections[a].path_id < detections[b].path_id; });
    for (std::size_t i : order) {
        const std::size_t r = root(i);
        const auto it = std::find(roots.begin(), roots.end(), r);
        if (it == roots.end()) {
            roots.push_back(r);
            clusters.push_back({detections[i]});
        } else {
            clusters[static_cast<std::size_t>(it - roots.begin())].push_back(detections[i]);
        }
    }
    return clusters;
}

double surface_angle(double theta1, double phi_l, double phi_1) { return theta1 + 0.5 * (phi_l - phi_1); }

Point3 intersect_rays(const Point3& p_i, double theta_i, const Point3& p_j, double theta_j) {
    const double ci = std::cos(theta_i), si = std::sin(theta_i);
    const double cj = std::cos(theta_j), sj = std::sin(theta_j);
    // p_i + t (ci, si) = p_j + s (cj, sj)
    const double det = cj * si - ci * sj;  // sin(theta_i - theta_j)
    if (std::abs(det) < kParallel) throw Error(ErrorKind::Degenerate, "back-projection rays are parallel");
    const double dx = p_j.x - p_i.x, dz = p_j.z - p_i.z;
    const double t = (cj * dz - sj * dx) / det;
    return {p_i.x + t * ci, 0.5 * (p_i.y + p_j.y), p_i.z + t * si};
}

std::pair<Point3, Point3> candidate_anchor(const VirtualDetection& det_i, const VirtualDetection& det_j,
                                           double theta1, double phi1) {
    const double ti = surface_angle(theta1, det_i.phi, phi1);
    const double tj = surface_angle(theta1, det_j.phi, phi1);
    return {intersect_rays(det_i.x_a_virtual, ti, det_j.x_a_virtual, tj),
            intersect_rays(det_i.x_b_virtual, ti, det_j.x_b_virtual, tj)};
}

double combining_objective(const std::vector<VirtualDetection>& cluster, double theta1) {
    if (cluster.size() < 2) return 0.0;
    return scatter(candidates_at(cluster, theta1));
}

CombineResult search_theta1(const std::vector<VirtualDetection>& cluster, const ThetaSearchOptions& options) {
    CombineResult result;
    if (cluster.empty()) throw Error(ErrorKind::Feasibility, "no detections to combine");

    if (const VirtualDetection* los = find_los(cluster)) {
        result.x_a_star = los->x_a_virtual;
        result.x_b_star = los->x_b_virtual;
        for (const auto& d : cluster) {
            result.path_ids.push_back(d.path_id);
            if (d.is_los) {
                result.thetas.push_back(0.0);
                continue;
            }
            // phi_l - 2 theta_l = pi - phi with phi taken from the LoS detection.
            const double theta = wrap_angle(0.5 * (d.phi + los->phi - kPi));
            result.thetas.push_back(theta);
            result.surfaces.push_back(estimate_surface(result.x_a_star, d.x_a_virtual, theta));
        }
        result.theta1_star = result.thetas.front();
        return result;
    }

    if (cluster.size() < 3)
        throw Error(ErrorKind::Feasibility, "at least three reflection surfaces are required without a LoS path, got " +
                                                std::to_string(cluster.size()));
    if (candidates_at(cluster, 0.0).a.size() < 2)
        throw Error(ErrorKind::Degenerate, "fewer than two reflected paths intersect the first one");

    const double lo = -kPi / 2.0;
    const int steps = static_cast<int>(std::ceil(kPi / options.grid_step));
    const double step = kPi / steps;
    double best_theta = kPi / 2.0;
    double best = std::numeric_limits<double>::infinity();
    // Grid over (-pi/2, pi/2]; strict comparison keeps the smallest theta on ties.
    for (int i = 1; i <= steps; ++i) {
        const double theta = lo + i * step;
        const double j = combining_objective(cluster, theta);
        if (j < best) {
            best = j;
            best_theta = theta;
        }
    }

    // Golden-section refinement inside the neighbouring grid cells.
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = best_theta - step, b = best_theta + step;
    double c = b - invphi * (b - a), d = a + invphi * (b - a);
    double fc = combining_objective(cluster, c), fd = combining_objective(cluster, d);
    while (b - a > options.tolerance) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = combining_objective(cluster, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = combining_objective(cluster, d);
        }
    }
    const double refined = 0.5 * (a + b);
    const double f_refined = combining_objective(cluster, refined);
    if (f_refined <= best) {
        best_theta = refined;
        best = f_refined;
    }
    // Keep the line angle in (-pi/2, pi/2].
    if (best_theta <= -kPi / 2.0) best_theta += kPi;
    if (best_theta > kPi / 2.0) best_theta -= kPi;

    result.theta1_star = best_theta;
    result.objective = best;
    const Candidates cand = candidates_at(cluster, best_theta);
    for (std::size_t i = 0; i < cand.a.size(); ++i) {
        result.x_a_star += cand.a[i];
        result.x_b_star += cand.b[i];
    }
    const double inv = 1.0 / static_cast<double>(cand.a.size());
    result.x_a_star *= inv;
    result.x_b_star *= inv;

    for (const auto& det : cluster) {
        const double theta = surface_angle(best_theta, det.phi, cluster[0].phi);
        result.path_ids.push_back(det.path_id);
        result.thetas.push_back(theta);
        result.surfaces.push_back(estimate_surface(result.x_a_star, det.x_a_virtual, theta));
    }
    return result;
}

ReflectionSurface estimate_surface(const Point3& x_a_star, const Point3& x_a_virtual, double theta) {
    const Point3 mid = (x_a_star + x_a_virtual) * 0.5;
    return ReflectionSurface::through(mid.x, mid.z, theta);
}

PointCloud map_virtual_to_actual(const PointCloud& cloud, double theta, const Point3& x_a_star,
                                 const Point3& x_a_virtual) {
    const double c = std::cos(theta), s = std::sin(theta);
    const double sx = x_a_virtual.x + x_a_star.x;
    const double sz = x_a_virtual.z + x_a_star.z;
    PointCloud out;
    out.reserve(cloud.size());
    for (const auto& p : cloud) {
        const double gx = sx - 2.0 * p.x;
        const double gz = sz - 2.0 * p.z;
        out.push_back({p.x + c * c * gx + s * c * gz, p.y, p.z + s * c * gx + s * s * gz});
    }
    return out;
}

PointCloud fuse_clouds(const std::vector<PointCloud>& clouds, double merge_radius) {
    struct Cluster {
        Point3 sum;
        double count = 0.0;
        Point3 center() const { return sum * (1.0 / count); }
    };
    std::vector<Cluster> clusters;
    for (const auto& cloud : clouds)
        for (const auto& p : cloud) clusters.push_back({p, 1.0});
    for (;;) {
        double best = merge_radius;
        std::size_t bi = 0, bj = 0;
        bool found = false;
        std::vector<Point3> centers(clusters.size());
        for (std::size_t i = 0; i < clusters.size(); ++i) centers[i] = clusters[i].center();
        for (std::size_t i = 0; i < clusters.size(); ++i)
            for (std::size_t j = i + 1; j < clusters.size(); ++j) {
                const double d = distance(centers[i], centers[j]);
                if (d < best) {
                    best = d;
                    bi = i;
                    bj = j;
                    found = true;
                }
            }
        if (!found) break;
        clusters[bi].sum += clusters[bj].sum;
        clusters[bi].count += clusters[bj].count;
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
    }
    PointCloud out;
    out.reserve(clusters.size());
    for (const auto& c : clusters) out.push_back(c.center());
    return out;
}

CombineResult combine(const std::vector<VirtualDetection>& cluster, double merge_radius,
                      const ThetaSearchOptions& options) {
    CombineResult result = search_theta1(cluster, options);
    std::vector<PointCloud> mapped;
    for (std::size_t i = 0; i < cluster.size(); ++i) {
        const auto& det = cluster[i];
        if (det.cloud.empty()) continue;
        if (det.is_los)
            mapped.push_back(det.cloud);
        else
            mapped.push_back(map_virtual_to_actual(det.cloud, result.thetas[i], result.x_a_star, det.x_a_virtual));
    }
    result.actual_cloud = fuse_clouds(mapped, merge_radius);
    return result;
}

}  // namespace compop
