#include "compop/geometry.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "compop/error.hpp"
#include "compop/scene.hpp"

namespace compop {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidConfig: return "invalid-config";
        case ErrorKind::UndefinedAngle: return "undefined-angle";
        case ErrorKind::Degenerate: return "degenerate-geometry";
        case ErrorKind::RankDeficient: return "rank-deficient";
        case ErrorKind::UnwrapAmbiguity: return "unwrap-ambiguity";
        case ErrorKind::Domain: return "domain";
        case ErrorKind::Feasibility: return "feasibility";
        case ErrorKind::EmptySpectrum: return "empty-spectrum";
        case ErrorKind::DuplicateLabel: return "duplicate-label";
        case ErrorKind::Parse: return "parse";
    }
    return "unknown";
}

Point3 centroid(const PointCloud& cloud) {
    Point3 sum;
    for (const auto& p : cloud) sum += p;
    if (!cloud.empty()) sum *= 1.0 / static_cast<double>(cloud.size());
    return sum;
}

Point3 rotate_about_y(const Point3& p, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {c * p.x + s * p.z, p.y, -s * p.x + c * p.z};
}

ReflectionSurface ReflectionSurface::from_slope(double slope, double intercept) {
    if (!std::isfinite(slope) || !std::isfinite(intercept))
        throw Error(ErrorKind::InvalidConfig, "reflection surface slope/intercept must be finite");
    ReflectionSurface s;
    s.slope_ = slope;
    s.intercept_ = intercept;
    // z - slope*x = intercept
    const double scale = std::hypot(slope, 1.0);
    s.nx_ = -slope / scale;
    s.nz_ = 1.0 / scale;
    s.d_ = intercept / scale;
    return s;
}

ReflectionSurface ReflectionSurface::vertical(double x_const) {
    if (!std::isfinite(x_const))
        throw Error(ErrorKind::InvalidConfig, "reflection surface position must be finite");
    ReflectionSurface s;
    s.vertical_ = true;
    s.x_const_ = x_const;
    s.nx_ = 1.0;
    s.nz_ = 0.0;
    s.d_ = x_const;
    return s;
}

ReflectionSurface ReflectionSurface::through(double x, double z, double normal_angle) {
    const double c = std::cos(normal_angle);
    const double s = std::sin(normal_angle);
    // Normal along the X axis means the line itself is x = const.
    if (std::abs(s) < 1e-12) return vertical(x);
    const double slope = -c / s;
    return from_slope(slope, z - slope * x);
}

Point3 mirror_point(const ReflectionSurface& surface, const Point3& p) {
    const double dist = surface.signed_distance(p);
    return {p.x - 2.0 * dist * surface.normal_x(), p.y, p.z - 2.0 * dist * surface.normal_z()};
}

double path_length(const Point3& tx, const Point3& rx) { return distance(tx, rx); }

double path_length(const ReflectionSurface& surface, const Point3& tx, const Point3& rx) {
    return distance(mirror_point(surface, tx), rx);
}

double path_length(const PropagationPath& path, const Point3& tx, const Point3& rx) {
    return path ? path_length(*path, tx, rx) : path_length(tx, rx);
}

std::optional<Point3> specular_point(const ReflectionSurface& surface, const Point3& tx, const Point3& rx) {
    const Point3 image = mirror_point(surface, tx);
    const double d0 = surface.signed_distance(image);
    const double d1 = surface.signed_distance(rx);
    if (d0 * d1 > 0.0) return std::nullopt;
    if (d0 == d1) return image;
    const double t = d0 / (d0 - d1);
    return image + (rx - image) * t;
}

double wrap_angle(double angle) {
    double a = std::remainder(angle, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    return a;
}

double directed_angle_xz(const Point3& from, const Point3& to) {
    const double dx = to.x - from.x;
    const double dz = to.z - from.z;
    if (dx == 0.0 && dz == 0.0)
        throw Error(ErrorKind::UndefinedAngle, "directed angle undefined: points coincide in the X-Z plane");
    return wrap_angle(std::atan2(dz, dx));
}

void Scene::check() const {
    if (tv_antennas.size() < 2)
        throw Error(ErrorKind::InvalidConfig, "scene needs at least two TV antennas");
    if (sv_antennas.empty())
        throw Error(ErrorKind::InvalidConfig, "scene needs at least one SV antenna");
    if (anchor_a >= tv_antennas.size() || anchor_b >= tv_antennas.size() || anchor_a == anchor_b)
        throw Error(ErrorKind::InvalidConfig, "anchor indices must name two distinct TV antennas");
    const auto has_duplicates = [](const PointCloud& cloud) {
        std::set<std::tuple<double, double, double>> seen;
        for (const auto& p : cloud) {
            if (!is_finite(p)) return true;
            if (!seen.emplace(p.x, p.y, p.z).second) return true;
        }
        return false;
    };
    if (has_duplicates(tv_antennas))
        throw Error(ErrorKind::InvalidConfig, "TV antennas must be finite and distinct");
    if (has_duplicates(sv_antennas))
        throw Error(ErrorKind::InvalidConfig, "SV antennas must be finite and distinct");
    if (!std::isfinite(clock_offset))
        throw Error(ErrorKind::InvalidConfig, "clock offset must be finite");
}

std::vector<ScenePath> Scene::paths() const {
    std::vector<ScenePath> out;
    if (has_los) out.push_back({0, std::nullopt, {1.0, 0.0}});
    for (std::size_t i = 0; i < reflectors.size(); ++i)
        out.push_back({static_cast<int>(i + 1), reflectors[i].surface, reflectors[i].gamma});
    return out;
}

PointCloud virtual_cloud(const ScenePath& path, const PointCloud& cloud) {
    if (!path.route) return cloud;
    PointCloud out;
    out.reserve(cloud.size());
    for (const auto& p : cloud) out.push_back(mirror_point(*path.route, p));
    return out;
}

}  // namespace compop
