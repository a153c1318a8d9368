#include "slam2d/scan.hpp"

#include <cmath>
#include <stdexcept>

namespace slam2d {

std::size_t LaserScan::count_valid() const {
    std::size_t n = 0;
    for (double r : ranges) {
        if (range_valid(r)) {
            ++n;
        }
    }
    return n;
}

void LaserScan::validate() const {
    if (ranges.size() < 2) {
        throw std::invalid_argument("LaserScan: need at least 2 rays");
    }
    if (!(angle_increment > 0.0) || !std::isfinite(angle_increment)) {
        throw std::invalid_argument("LaserScan: angle_increment must be > 0");
    }
    if (!(range_max > 0.0) || !std::isfinite(range_max)) {
        throw std::invalid_argument("LaserScan: range_max must be > 0");
    }
    if (!std::isfinite(angle_min) || !std::isfinite(timestamp)) {
        throw std::invalid_argument("LaserScan: non-finite header field");
    }
}

std::vector<ScanPoint> scan_to_points(const LaserScan& scan) {
    scan.validate();
    std::vector<ScanPoint> pts;
    pts.reserve(scan.ranges.size());
    for (std::size_t i = 0; i < scan.ranges.size(); ++i) {
        const double r = scan.ranges[i];
        if (!scan.range_valid(r)) {
            continue;
        }
        const double a = scan.ray_angle(i);
        ScanPoint sp;
        sp.p = Point2(r * std::cos(a), r * std::sin(a));
        sp.rho = r;
        sp.bearing = a;
        sp.ray = static_cast<int>(i);
        pts.push_back(sp);
    }
    return pts;
}

}  // namespace slam2d
