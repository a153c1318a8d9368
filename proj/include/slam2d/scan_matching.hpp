#pragma once

#include <Eigen/Core>
#include <array>
#include <stdexcept>
#include <vector>

#include "slam2d/geometry.hpp"
#include "slam2d/scan.hpp"

namespace slam2d {

/// Thrown when the paired geometry cannot pin down all three pose
/// parameters (e.g. every normal parallel to one direction).
struct DegenerateGeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when no quartic root yields an admissible on-constraint solution.
struct StepFailureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Point-to-line pairing: current point i against the oriented line through
/// reference points j1 (closest) and j2 (second closest), with unit normal n.
struct Correspondence {
    int i = 0;
    int j1 = 0;
    int j2 = 0;
    Point2 n;
};

/// Quadratic form of the point-to-line objective in the parametrization
/// x = [t_x t_y cos(theta) sin(theta)]: J(x) = x^T M x + g^T x + constant,
/// subject to x^T W x = 1. A, B are blocks of 2M and S is the Schur
/// complement of A; they feed the closed-form quartic.
struct NormalSystem {
    Eigen::Matrix4d M = Eigen::Matrix4d::Zero();
    Eigen::Vector4d g = Eigen::Vector4d::Zero();
    Eigen::Matrix4d W = Eigen::Matrix4d::Zero();
    Eigen::Matrix2d A = Eigen::Matrix2d::Zero();
    Eigen::Matrix2d B = Eigen::Matrix2d::Zero();
    Eigen::Matrix2d S = Eigen::Matrix2d::Zero();
    double constant = 0.0;
};

struct MatchConfig {
    double max_dist = 1.0;        // correspondence gate, meters
    int min_valid_rays = 50;
    int max_iterations = 50;
    double eps_t = 1e-4;          // translation convergence, meters
    double eps_theta = 1e-4;      // rotation convergence, radians
    int min_correspondences = 10;
    double sigma_range = 0.03;    // sensor range 1-sigma, for the covariance
    bool compute_covariance = true;
};

struct MatchResult {
    Pose2 q;
    Eigen::Matrix3d covariance = Eigen::Matrix3d::Identity();
    int iterations = 0;
    int num_valid = 0;         // correspondences in the final iteration
    double residual_sum = 0.0; // sum of squared point-to-line distances
    bool converged = false;
};

/// For every current point (already in the reference frame), the two nearest
/// reference points within max_dist. Pairs whose reference points coincide
/// are dropped. The normal is oriented toward the query point; ties break on
/// the lower reference index.
std::vector<Correspondence> find_correspondences(
    const std::vector<Point2>& current_world,
    const std::vector<ScanPoint>& reference, double max_dist);

/// Assembles the normal system from correspondences, with current points in
/// the sensor frame. Throws DegenerateGeometryError when the normals do not
/// span the plane.
NormalSystem build_normal_system(const std::vector<Correspondence>& corrs,
                                 const std::vector<ScanPoint>& current,
                                 const std::vector<ScanPoint>& reference);

/// {a, b, c, d, e} of the constraint quartic in the Lagrange multiplier.
std::array<double, 5> quartic_coefficients(const NormalSystem& sys);

/// All real roots, each with |p(r)| / (|a| max(1, r^4)) < 1e-9.
std::vector<double> solve_quartic(double a, double b, double c, double d, double e);

/// Closed-form minimizer of the point-to-line objective for these
/// correspondences: x(lambda) = -(2M + 2 lambda W)^{-1} g over all real
/// roots, keeping the on-constraint candidate of least cost.
Pose2 plicp_step(const NormalSystem& sys);

/// J(q) under the system's quadratic form.
double normal_system_objective(const NormalSystem& sys, const Pose2& q);

/// Iterated PLICP alignment of point sets (re-associate, solve, repeat).
MatchResult align(const std::vector<ScanPoint>& current,
                  const std::vector<ScanPoint>& reference, const Pose2& guess,
                  const MatchConfig& cfg = {});

/// Scan-level entry point: converts to points and aligns. Throws
/// std::invalid_argument when either scan has fewer than min_valid_rays
/// valid returns.
MatchResult match(const LaserScan& current, const LaserScan& reference,
                  const Pose2& initial_guess, const MatchConfig& cfg = {});

}  // namespace slam2d
