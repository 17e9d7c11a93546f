#pragma once

#include <utility>
#include <vector>

#include "compop/geometry.hpp"

namespace compop {

struct VirtualDetection {
    int path_id = 0;
    bool is_los = false;
    Point3 x_a_virtual;
    Point3 x_b_virtual;
    PointCloud cloud;  // may be empty when imaging failed for this path
    double sigma_hat = 0.0;
    double phi = 0.0;  // directed angle of a -> b in the X-Z plane
};

/// Fills `phi` from the two anchors. Throws Error(UndefinedAngle) when they
/// coincide in the X-Z plane.
VirtualDetection make_detection(int path_id, const Point3& x_a, const Point3& x_b, PointCloud cloud,
                                double sigma_hat, bool is_los = false);

struct CombineResult {
    double theta1_star = 0.0;
    Point3 x_a_star;
    Point3 x_b_star;
    std::vector<int> path_ids;            // one per surface (or LoS) below
    std::vector<double> thetas;           // surface normal angle per path
    std::vector<ReflectionSurface> surfaces;  // reflecting paths only, in path_ids order
    PointCloud actual_cloud;
    double objective = 0.0;
};

/// Single-linkage clusters of detections whose clocks differ by at most
/// `tolerance`. With delta > 0 the distance wraps modulo 1/delta.
std::vector<std::vector<VirtualDetection>> group_by_clock(const std::vector<VirtualDetection>& detections,
                                                          double tolerance, double delta = 0.0);

/// Normal angle of surface l given theta_1: theta_1 + (phi_l - phi_1) / 2.
double surface_angle(double theta1, double phi_l, double phi_1);

/// Intersection in X-Z of the lines through p_i and p_j with directions
/// (cos, sin) of theta_i and theta_j; y is the mean of the two. Throws
/// Error(Degenerate) when the lines are parallel.
Point3 intersect_rays(const Point3& p_i, double theta_i, const Point3& p_j, double theta_j);

/// Candidate actual anchors (a, b) from detections i and j for a trial theta_1.
std::pair<Point3, Point3> candidate_anchor(const VirtualDetection& det_i, const VirtualDetection& det_j,
                                           double theta1, double phi1);

/// Sum over candidate pairs of |v_a - v_a'| + |v_b - v_b'|, where the
/// candidates intersect detection 0 with every other detection.
double combining_objective(const std::vector<VirtualDetection>& cluster, double theta1);

struct ThetaSearchOptions {
    double grid_step = 1e-3;
    double tolerance = 1e-6;
};

/// Finds theta_1 and the actual anchors. A LoS detection in the cluster pins
/// the anchors directly. Throws Error(Feasibility) for fewer than three
/// reflecting paths without LoS and Error(Degenerate) when too few path pairs
/// intersect.
CombineResult search_theta1(const std::vector<VirtualDetection>& cluster, const ThetaSearchOptions& options = {});

/// Line through the midpoint of x_a_star and x_a_virtual with normal angle theta.
ReflectionSurface estimate_surface(const Point3& x_a_star, const Point3& x_a_virtual, double theta);

/// Reflects the cloud across the estimated surface; y is preserved.
PointCloud map_virtual_to_actual(const PointCloud& cloud, double theta, const Point3& x_a_star,
                                 const Point3& x_a_virtual);

/// Union of the clouds with centroid-linkage merging of clusters closer than
/// merge_radius.
PointCloud fuse_clouds(const std::vector<PointCloud>& clouds, double merge_radius);

/// search_theta1 followed by mapping every non-empty cloud and fusing them.
CombineResult combine(const std::vector<VirtualDetection>& cluster, double merge_radius,
                      const ThetaSearchOptions& options = {});

}  // namespace compop
