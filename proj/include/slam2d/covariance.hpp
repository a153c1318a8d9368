#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <vector>

#include "slam2d/geometry.hpp"
#include "slam2d/scan.hpp"
#include "slam2d/scan_matching.hpp"

namespace slam2d {

struct DegenerateCovarianceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CovarianceResult {
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    Eigen::Matrix3d hessian_xx = Eigen::Matrix3d::Zero();
    bool condition_ok = true;
};

/// Measurement stacking order: (rho_i, rho_j1, rho_j2) per correspondence.
Eigen::VectorXd measurement_vector(const std::vector<Correspondence>& corrs,
                                   const std::vector<ScanPoint>& current,
                                   const std::vector<ScanPoint>& reference);

/// Second derivative of the match objective in the pose (t_x, t_y, theta),
/// summed over correspondences; evaluated at the converged solution x.
Eigen::Matrix3d hessian_xx(const std::vector<Correspondence>& corrs,
                           const std::vector<ScanPoint>& current,
                           const std::vector<ScanPoint>& reference,
                           const Pose2& x);

/// Mixed second derivative w.r.t. pose and ranges, 3 x (3N). The normal's
/// sensitivity to a reference range is taken by a relative finite
/// difference with step 1e-3 * |rho|.
Eigen::MatrixXd hessian_xz(const std::vector<Correspondence>& corrs,
                           const std::vector<ScanPoint>& current,
                           const std::vector<ScanPoint>& reference,
                           const Pose2& x);

Eigen::Matrix3d default_prior_covariance();

/// cov = hxx^{-1} hxz (sigma^2 I) hxz^T hxx^{-T}, symmetrized. An
/// ill-conditioned hxx gets one diagonal floor; if that is not enough the
/// result falls back to `prior` with condition_ok = false.
CovarianceResult match_covariance(
    const Eigen::Matrix3d& hxx, const Eigen::MatrixXd& hxz, double sigma_range,
    const Eigen::Matrix3d& prior = default_prior_covariance(),
    double cond_max = 1e8);

}  // namespace slam2d
