#pragma once

#include <vector>

#include "slam2d/geometry.hpp"

namespace slam2d {

/// One planar LiDAR sweep: ranges along known bearings.
/// Invalid returns are encoded as non-finite or non-positive ranges.
struct LaserScan {
    double timestamp = 0.0;        // seconds
    double angle_min = 0.0;        // bearing of ray 0, radians
    double angle_increment = 0.0;  // radians, > 0
    double range_max = 0.0;        // meters
    std::vector<double> ranges;    // meters

    double ray_angle(std::size_t i) const {
        return angle_min + static_cast<double>(i) * angle_increment;
    }

    bool range_valid(double r) const {
        return std::isfinite(r) && r > 0.0 && r <= range_max;
    }

    std::size_t count_valid() const;

    /// Throws if the scan shape is unusable (fewer than 2 rays, bad increment).
    void validate() const;
};

/// Cartesian scan point with its polar origin retained.
struct ScanPoint {
    Point2 p;          // rho * (cos bearing, sin bearing), sensor frame
    double rho = 0.0;  // measured range
    double bearing = 0.0;
    int ray = 0;       // original ray index
};

/// Converts valid rays to Cartesian points; invalid rays are dropped.
std::vector<ScanPoint> scan_to_points(const LaserScan& scan);

}  // namespace slam2d
