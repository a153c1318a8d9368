#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "slam2d/geometry.hpp"
#include "slam2d/scan.hpp"

namespace slam2d::sim {

struct Segment {
    Point2 a;
    Point2 b;
};

/// Polygon-wall world: a bag of line segments acting as LiDAR reflectors.
struct World {
    std::vector<Segment> segments;
    std::string name;

    void validate() const;
};

struct LidarSpec {
    double coverage = 270.0 * M_PI / 180.0;  // radians
    double increment = 0.25 * M_PI / 180.0;  // radians
    double range_max = 60.0;                 // meters
    double rate = 40.0;                      // Hz
    double range_noise_sigma = 0.0;          // meters, 1-sigma on hits

    /// Number of rays, endpoints included. coverage must be an integer
    /// multiple of increment.
    int ray_count() const;
    double angle_min() const { return -0.5 * coverage; }
    void validate() const;
};

/// Deterministic Gaussian source: std::mt19937_64 bits + an explicit
/// Box-Muller transform. std::normal_distribution is implementation-defined,
/// so it is avoided; this combination replays bit-identically everywhere.
class GaussianRng {
  public:
    explicit GaussianRng(std::uint64_t seed) : engine_(seed) {}

    /// Standard normal sample.
    double next();
    /// Uniform in (0, 1].
    double next_uniform();

  private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Smallest positive ray/segment hit distance, or a negative value on miss.
double ray_hit_distance(const World& world, const Point2& origin, const Point2& dir);

/// One simulated sweep from `pose`. Rays that hit nothing within range_max
/// are recorded as NaN. Noise is drawn from `rng` per hit, in ray order.
LaserScan raycast(const World& world, const Pose2& pose, const LidarSpec& spec,
                  GaussianRng& rng, double timestamp = 0.0);

/// Noise-free variant.
LaserScan raycast(const World& world, const Pose2& pose, const LidarSpec& spec,
                  double timestamp = 0.0);

using TimedPose = std::pair<double, Pose2>;

/// One scan per trajectory sample; pure function of (world, traj, spec, seed).
std::vector<LaserScan> simulate_scans(const World& world,
                                      const std::vector<TimedPose>& trajectory,
                                      const LidarSpec& spec, std::uint64_t seed);

/// Renders the scan log and ground-truth trajectory to files.
void generate_log(const World& world, const std::vector<TimedPose>& trajectory,
                  const LidarSpec& spec, std::uint64_t seed,
                  const std::string& scan_path, const std::string& gt_path);

/// Plain-text world file: one "x1 y1 x2 y2" per line, '#' comments.
World load_world(const std::string& path);
void save_world(const std::string& path, const World& world);

/// Bundled fixtures (also shipped under data/worlds/).
World box_world(double width = 10.0, double height = 10.0);
World valley_world();

/// Closed loop around the valley ring at `speed` m/s sampled at spec.rate,
/// heading tangent to the path. Runs `laps` times around plus a small
/// overlap so the start area is revisited.
std::vector<TimedPose> valley_loop_trajectory(double speed, double rate,
                                              double laps = 1.0,
                                              double overlap = 0.06);

/// Straight run along +x through a given world, starting at `start`.
std::vector<TimedPose> straight_trajectory(const Pose2& start, double distance,
                                           double speed, double rate);

}  // namespace slam2d::sim
