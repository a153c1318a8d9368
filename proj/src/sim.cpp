#include "slam2d/sim.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "slam2d/io_eval.hpp"

namespace slam2d::sim {

void World::validate() const {
    if (segments.empty()) {
        throw std::invalid_argument("World: needs at least one segment");
    }
    for (const auto& s : segments) {
        if (!std::isfinite(s.a.x) || !std::isfinite(s.a.y) ||
            !std::isfinite(s.b.x) || !std::isfinite(s.b.y)) {
            throw std::invalid_argument("World: non-finite segment endpoint");
        }
    }
}

int LidarSpec::ray_count() const {
    const double n = coverage / increment;
    const double rounded = std::round(n);
    if (std::abs(n - rounded) > 1e-6) {
        throw std::invalid_argument(
            "LidarSpec: coverage must be an integer multiple of increment");
    }
    return static_cast<int>(rounded) + 1;
}

void LidarSpec::validate() const {
    if (!(coverage > 0.0) || !(increment > 0.0) || !(range_max > 0.0) ||
        !(rate > 0.0) || range_noise_sigma < 0.0) {
        throw std::invalid_argument("LidarSpec: all fields must be positive");
    }
    ray_count();
}

double GaussianRng::next_uniform() {
    // 53 random mantissa bits mapped to (0, 1].
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
}

double GaussianRng::next() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double m = std::sqrt(-2.0 * std::log(u1));
    spare_ = m * std::sin(2.0 * M_PI * u2);
    has_spare_ = true;
    return m * std::cos(2.0 * M_PI * u2);
}

double ray_hit_distance(const World& world, const Point2& origin, const Point2& dir) {
    double best = -1.0;
    for (const auto& seg : world.segments) {
        const Point2 e = seg.b - seg.a;
        const double denom = dir.cross(e);
        if (std::abs(denom) < 1e-15) {
            continue;  // parallel (collinear rays treated as misses)
        }
        const Point2 w = seg.a - origin;
        const double t = w.cross(e) / denom;
        const double s = w.cross(dir) / denom;
        if (t > 1e-9 && s >= 0.0 && s <= 1.0) {
            if (best < 0.0 || t < best) {
                best = t;
            }
        }
    }
    return best;
}

LaserScan raycast(const World& world, const Pose2& pose, const LidarSpec& spec,
                  GaussianRng& rng, double timestamp) {
    world.validate();
    spec.validate();

    LaserScan scan;
    scan.timestamp = timestamp;
    scan.angle_min = spec.angle_min();
    scan.angle_increment = spec.increment;
    scan.range_max = spec.range_max;

    const int n = spec.ray_count();
    scan.ranges.resize(n, std::numeric_limits<double>::quiet_NaN());
    const Point2 origin = pose.translation();
    for (int i = 0; i < n; ++i) {
        const double a = pose.theta + scan.ray_angle(i);
        const Point2 dir(std::cos(a), std::sin(a));
        double d = ray_hit_distance(world, origin, dir);
        if (d < 0.0 || d > spec.range_max) {
            continue;
        }
        if (spec.range_noise_sigma > 0.0) {
            d += spec.range_noise_sigma * rng.next();
            d = std::min(std::max(d, 1e-9), spec.range_max);
        }
        scan.ranges[i] = d;
    }
    return scan;
}

LaserScan raycast(const World& world, const Pose2& pose, const LidarSpec& spec,
                  double timestamp) {
    GaussianRng rng(0);
    LidarSpec noise_free = spec;
    noise_free.range_noise_sigma = 0.0;
    return raycast(world, pose, noise_free, rng, timestamp);
}

std::vector<LaserScan> simulate_scans(const World& world,
                                      const std::vector<TimedPose>& trajectory,
                                      const LidarSpec& spec, std::uint64_t seed) {
    for (std::size_t k = 1; k < trajectory.size(); ++k) {
        if (!(trajectory[k].first > trajectory[k - 1].first)) {
            throw std::invalid_argument(
                "simulate_scans: trajectory timestamps must strictly increase");
        }
    }
    GaussianRng rng(seed);
    std::vector<LaserScan> scans;
    scans.reserve(trajectory.size());
    for (const auto& [t, pose] : trajectory) {
        scans.push_back(raycast(world, pose, spec, rng, t));
    }
    return scans;
}

void generate_log(const World& world, const std::vector<TimedPose>& trajectory,
                  const LidarSpec& spec, std::uint64_t seed,
                  const std::string& scan_path, const std::string& gt_path) {
    const auto scans = simulate_scans(world, trajectory, spec, seed);
    io::write_scan_log(scan_path, scans);
    io::Trajectory gt;
    for (const auto& [t, pose] : trajectory) {
        gt.samples.push_back({t, pose});
    }
    io::write_trajectory(gt_path, gt);
}

World load_world(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("load_world: cannot open " + path);
    }
    World w;
    w.name = path;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        std::istringstream ss(line);
        double x1, y1, x2, y2;
        if (ss >> x1 >> y1 >> x2 >> y2) {
            w.segments.push_back({{x1, y1}, {x2, y2}});
        } else if (!line.empty() && line.find_first_not_of(" \t\r") != std::string::npos) {
            throw std::runtime_error("load_world: bad segment at line " +
                                     std::to_string(lineno));
        }
    }
    w.validate();
    return w;
}

void save_world(const std::string& path, const World& world) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("save_world: cannot open " + path);
    }
    char buf[160];
    for (const auto& s : world.segments) {
        std::snprintf(buf, sizeof(buf), "%.12g %.12g %.12g %.12g\n",
                      s.a.x, s.a.y, s.b.x, s.b.y);
        out << buf;
    }
}

namespace {

World polygon_ring(const std::vector<Point2>& outer, const std::vector<Point2>& inner,
                   std::string name) {
    World w;
    w.name = std::move(name);
    for (std::size_t k = 0; k < outer.size(); ++k) {
        w.segments.push_back({outer[k], outer[(k + 1) % outer.size()]});
    }
    for (std::size_t k = 0; k < inner.size(); ++k) {
        w.segments.push_back({inner[k], inner[(k + 1) % inner.size()]});
    }
    return w;
}

std::vector<Point2> radial_polygon(const Point2& center, const std::vector<double>& radii) {
    std::vector<Point2> pts;
    pts.reserve(radii.size());
    for (std::size_t k = 0; k < radii.size(); ++k) {
        const double phi = 2.0 * M_PI * static_cast<double>(k) /
                           static_cast<double>(radii.size());
        pts.emplace_back(center.x + radii[k] * std::cos(phi),
                         center.y + radii[k] * std::sin(phi));
    }
    return pts;
}

}  // namespace

World box_world(double width, double height) {
    World w;
    w.name = "box";
    w.segments = {
        {{0.0, 0.0}, {width, 0.0}},
        {{width, 0.0}, {width, height}},
        {{width, height}, {0.0, height}},
        {{0.0, height}, {0.0, 0.0}},
    };
    return w;
}

World valley_world() {
    // Irregular 50x50 m ring: a jagged outer shore around (25, 25) with an
    // island in the middle, leaving a closed navigable channel between them.
    const std::vector<double> outer_radii = {
        21.5, 23.2, 22.0, 20.1, 19.7, 21.9, 23.8, 22.6, 20.4, 19.6,
        20.9, 23.0, 23.9, 21.3, 19.8, 20.6, 22.4, 23.5, 21.0, 19.9,
    };
    const std::vector<double> inner_radii = {
        8.2, 9.6, 10.4, 9.1, 7.4, 6.8, 7.9, 9.3, 10.2, 9.8, 8.5, 7.1, 6.6, 7.7,
    };
    return polygon_ring(radial_polygon({25.0, 25.0}, outer_radii),
                        radial_polygon({25.6, 24.4}, inner_radii), "valley");
}

std::vector<TimedPose> valley_loop_trajectory(double speed, double rate,
                                              double laps, double overlap) {
    const Point2 center(25.0, 25.0);
    const double radius = 14.0;
    const double total_angle = 2.0 * M_PI * (laps + overlap);
    const double arc = radius * total_angle;
    const double omega = speed / radius;
    const int samples = static_cast<int>(std::floor(arc / speed * rate)) + 1;

    std::vector<TimedPose> traj;
    traj.reserve(samples);
    for (int i = 0; i < samples; ++i) {
        const double t = static_cast<double>(i) / rate;
        const double phi = -0.5 * M_PI + omega * t;
        const Pose2 pose(center.x + radius * std::cos(phi),
                         center.y + radius * std::sin(phi),
                         normalize_angle(phi + 0.5 * M_PI));
        traj.emplace_back(t, pose);
    }
    return traj;
}

std::vector<TimedPose> straight_trajectory(const Pose2& start, double distance,
                                           double speed, double rate) {
    const int samples = static_cast<int>(std::floor(distance / speed * rate)) + 1;
    std::vector<TimedPose> traj;
    traj.reserve(samples);
    for (int i = 0; i < samples; ++i) {
        const double t = static_cast<double>(i) / rate;
        const double d = speed * t;
        traj.emplace_back(t, compose(start, Pose2(d, 0.0, 0.0)));
    }
    return traj;
}

}  // namespace slam2d::sim
