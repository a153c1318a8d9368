#pragma once

#include <string>
#include <vector>

#include "slam2d/geometry.hpp"
#include "slam2d/occupancy_map.hpp"
#include "slam2d/scan.hpp"

namespace slam2d::io {

struct TrajectorySample {
    double timestamp = 0.0;
    Pose2 pose;
};

/// Timestamped pose sequence; timestamps strictly increasing.
struct Trajectory {
    std::vector<TrajectorySample> samples;
};

/// Scan log: one scan per line,
/// "t angle_min angle_increment range_max n r1 ... rn", invalid rays "nan".
std::vector<LaserScan> read_scan_log(const std::string& path);
void write_scan_log(const std::string& path, const std::vector<LaserScan>& scans);

/// Trajectory file: "t x y z qx qy qz qw" per line, planar poses with
/// z = 0 and yaw-only quaternion.
Trajectory read_trajectory(const std::string& path);
void write_trajectory(const std::string& path, const Trajectory& traj);

struct AteResult {
    double rmse = 0.0;
    std::vector<double> errors;  // per associated sample
    Pose2 alignment;             // rigid transform applied to the estimate
};

struct RpeResult {
    double rmse = 0.0;
    std::vector<double> errors;  // per pair
};

/// Absolute trajectory error: least-squares SE(2) alignment of associated
/// positions, then RMSE of the residual translations.
AteResult ate(const Trajectory& estimated, const Trajectory& ground_truth,
              double max_dt = 0.020);

/// Relative pose error over (k, k+delta) frame pairs; delta in frames.
RpeResult rpe(const Trajectory& estimated, const Trajectory& ground_truth,
              int delta_frames = 1, double max_dt = 0.020);

struct MapMeta {
    double resolution = 0.0;
    double origin_x = 0.0;
    double origin_y = 0.0;
    int width = 0;
    int height = 0;
    double l_min = 0.0;
    double l_max = 0.0;
    double l0 = 0.0;
};

/// Binary PGM (P5, maxval 255, gray = round(255*(1-p))): free white,
/// occupied black, unknown mid-gray. Row 0 is the top of the map (max y).
void export_map(const OccupancyGrid& grid, const std::string& pgm_path,
                const std::string& meta_path);
MapMeta read_map_meta(const std::string& path);

}  // namespace slam2d::io
