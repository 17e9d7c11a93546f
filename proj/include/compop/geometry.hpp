#pragma once

#include <cmath>
#include <optional>
#include <vector>

namespace compop {

inline constexpr double kSpeedOfLight = 299'792'458.0;
inline constexpr double kPi = 3.14159265358979323846;

/// Right-handed frame centred on the sensing vehicle: Z along the arrival
/// direction, X parallel to the ground, Y vertical. Units are metres.
struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Point3& operator+=(const Point3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Point3& operator-=(const Point3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Point3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    friend Point3 operator+(Point3 a, const Point3& b) { return a += b; }
    friend Point3 operator-(Point3 a, const Point3& b) { return a -= b; }
    friend Point3 operator*(Point3 a, double s) { return a *= s; }
    friend Point3 operator*(double s, Point3 a) { return a *= s; }
    friend bool operator==(const Point3&, const Point3&) = default;
};

using PointCloud = std::vector<Point3>;

inline double dot(const Point3& a, const Point3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(const Point3& p) { return std::sqrt(dot(p, p)); }
inline double distance(const Point3& a, const Point3& b) { return norm(a - b); }
inline bool is_finite(const Point3& p) {
    return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
}

Point3 centroid(const PointCloud& cloud);

/// Rotation about the vertical axis that takes the +Z axis onto the direction
/// with azimuth `angle` (measured from +Z towards +X).
Point3 rotate_about_y(const Point3& p, double angle);

/// Vertical reflector, stored as the line it traces in the X-Z plane.
/// Either z = slope * x + intercept, or the x = const form for reflectors
/// that run parallel to the Z axis.
class ReflectionSurface {
public:
    static ReflectionSurface from_slope(double slope, double intercept);
    static ReflectionSurface vertical(double x_const);
    /// Line through (x, z) with unit normal direction `normal_angle`
    /// (directed angle from the X axis in the X-Z plane).
    static ReflectionSurface through(double x, double z, double normal_angle);

    bool is_vertical() const noexcept { return vertical_; }
    double slope() const noexcept { return slope_; }
    double intercept() const noexcept { return intercept_; }
    double x_const() const noexcept { return x_const_; }

    /// Unit normal (nx, nz) and offset d with nx*x + nz*z = d on the surface.
    double normal_x() const noexcept { return nx_; }
    double normal_z() const noexcept { return nz_; }
    double offset() const noexcept { return d_; }

    /// Signed distance of the X-Z projection of p from the line.
    double signed_distance(const Point3& p) const noexcept { return nx_ * p.x + nz_ * p.z - d_; }

private:
    ReflectionSurface() = default;

    bool vertical_ = false;
    double slope_ = 0.0;
    double intercept_ = 0.0;
    double x_const_ = 0.0;
    double nx_ = 0.0;
    double nz_ = 1.0;
    double d_ = 0.0;
};

/// LoS when empty.
using PropagationPath = std::optional<ReflectionSurface>;

Point3 mirror_point(const ReflectionSurface& surface, const Point3& p);

double path_length(const Point3& tx, const Point3& rx);
double path_length(const ReflectionSurface& surface, const Point3& tx, const Point3& rx);
double path_length(const PropagationPath& path, const Point3& tx, const Point3& rx);

/// Point where the specular ray tx -> surface -> rx touches the surface, or
/// nullopt when tx and rx lie on opposite sides.
std::optional<Point3> specular_point(const ReflectionSurface& surface, const Point3& tx, const Point3& rx);

/// atan2(dz, dx) of the X-Z projection, canonicalised to (-pi, pi].
/// Throws Error(UndefinedAngle) when the projections coincide.
double directed_angle_xz(const Point3& from, const Point3& to);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

}  // namespace compop
