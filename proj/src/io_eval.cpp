#include "slam2d/io_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace slam2d::io {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

[[noreturn]] void parse_fail(const std::string& what, const std::string& path,
                             int lineno) {
    throw std::runtime_error(what + " at " + path + ":" + std::to_string(lineno));
}

}  // namespace

std::vector<LaserScan> read_scan_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("read_scan_log: cannot open " + path);
    }
    std::vector<LaserScan> scans;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        std::istringstream ss(line);
        LaserScan scan;
        std::size_t n = 0;
        if (!(ss >> scan.timestamp >> scan.angle_min >> scan.angle_increment >>
              scan.range_max >> n)) {
            parse_fail("read_scan_log: malformed scan header", path, lineno);
        }
        scan.ranges.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            std::string tok;
            if (!(ss >> tok)) {
                parse_fail("read_scan_log: truncated ranges", path, lineno);
            }
            if (tok == "nan" || tok == "-nan") {
                scan.ranges[k] = std::numeric_limits<double>::quiet_NaN();
                continue;
            }
            try {
                std::size_t used = 0;
                scan.ranges[k] = std::stod(tok, &used);
                if (used != tok.size()) {
                    parse_fail("read_scan_log: bad range token", path, lineno);
                }
            } catch (const std::logic_error&) {
                parse_fail("read_scan_log: bad range token", path, lineno);
            }
        }
        std::string extra;
        if (ss >> extra) {
            parse_fail("read_scan_log: trailing tokens", path, lineno);
        }
        scans.push_back(std::move(scan));
    }
    return scans;
}

void write_scan_log(const std::string& path, const std::vector<LaserScan>& scans) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("write_scan_log: cannot open " + path);
    }
    for (const auto& scan : scans) {
        out << fmt(scan.timestamp) << ' ' << fmt(scan.angle_min) << ' '
            << fmt(scan.angle_increment) << ' ' << fmt(scan.range_max) << ' '
            << scan.ranges.size();
        for (double r : scan.ranges) {
            out << ' ';
            if (std::isfinite(r)) {
                out << fmt(r);
            } else {
                out << "nan";
            }
        }
        out << '\n';
    }
}

Trajectory read_trajectory(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("read_trajectory: cannot open " + path);
    }
    Trajectory traj;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::istringstream ss(line);
        double t, x, y, z, qx, qy, qz, qw;
        if (!(ss >> t >> x >> y >> z >> qx >> qy >> qz >> qw)) {
            parse_fail("read_trajectory: malformed sample", path, lineno);
        }
        if (!std::isfinite(t) || !std::isfinite(x) || !std::isfinite(y) ||
            !std::isfinite(qz) || !std::isfinite(qw)) {
            parse_fail("read_trajectory: non-finite pose", path, lineno);
        }
        const double theta = normalize_angle(2.0 * std::atan2(qz, qw));
        if (!traj.samples.empty() && t <= traj.samples.back().timestamp) {
            parse_fail("read_trajectory: timestamps must strictly increase", path,
                       lineno);
        }
        traj.samples.push_back({t, Pose2(x, y, theta)});
    }
    return traj;
}

void write_trajectory(const std::string& path, const Trajectory& traj) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("write_trajectory: cannot open " + path);
    }
    for (const auto& s : traj.samples) {
        const double qz = std::sin(0.5 * s.pose.theta);
        const double qw = std::cos(0.5 * s.pose.theta);
        out << fmt(s.timestamp) << ' ' << fmt(s.pose.x) << ' ' << fmt(s.pose.y)
            << " 0 0 0 " << fmt(qz) << ' ' << fmt(qw) << '\n';
    }
}

namespace {

struct Association {
    std::vector<std::pair<Pose2, Pose2>> pairs;  // (estimate, ground truth)
};

Association associate(const Trajectory& est, const Trajectory& gt, double max_dt) {
    Association out;
    const auto& g = gt.samples;
    for (const auto& s : est.samples) {
        auto it = std::lower_bound(
            g.begin(), g.end(), s.timestamp,
            [](const TrajectorySample& a, double t) { return a.timestamp < t; });
        const TrajectorySample* best = nullptr;
        if (it != g.end()) {
            best = &*it;
        }
        if (it != g.begin()) {
            const TrajectorySample* prev = &*(it - 1);
            if (!best || std::abs(prev->timestamp - s.timestamp) <
                             std::abs(best->timestamp - s.timestamp)) {
                best = prev;
            }
        }
        if (best && std::abs(best->timestamp - s.timestamp) <= max_dt) {
            out.pairs.emplace_back(s.pose, best->pose);
        }
    }
    return out;
}

}  // namespace

AteResult ate(const Trajectory& estimated, const Trajectory& ground_truth,
              double max_dt) {
    const Association assoc = associate(estimated, ground_truth, max_dt);
    const std::size_t n = assoc.pairs.size();
    if (n < 2) {
        throw std::runtime_error("ate: fewer than 2 associated samples");
    }

    Point2 mean_e{0, 0}, mean_g{0, 0};
    for (const auto& [e, g] : assoc.pairs) {
        mean_e = mean_e + e.translation();
        mean_g = mean_g + g.translation();
    }
    mean_e = mean_e * (1.0 / static_cast<double>(n));
    mean_g = mean_g * (1.0 / static_cast<double>(n));

    // Closed-form planar least-squares rotation, then translation.
    double sc = 0.0, ss = 0.0;
    for (const auto& [e, g] : assoc.pairs) {
        const Point2 a = e.translation() - mean_e;
        const Point2 b = g.translation() - mean_g;
        sc += a.dot(b);
        ss += a.cross(b);
    }
    const double phi = std::atan2(ss, sc);
    const double c = std::cos(phi), s = std::sin(phi);
    const Point2 t(mean_g.x - (c * mean_e.x - s * mean_e.y),
                   mean_g.y - (s * mean_e.x + c * mean_e.y));

    AteResult result;
    result.alignment = Pose2(t.x, t.y, phi);
    result.errors.reserve(n);
    double sum_sq = 0.0;
    for (const auto& [e, g] : assoc.pairs) {
        const Point2 aligned = transform_point(result.alignment, e.translation());
        const double err = (aligned - g.translation()).norm();
        result.errors.push_back(err);
        sum_sq += err * err;
    }
    result.rmse = std::sqrt(sum_sq / static_cast<double>(n));
    return result;
}

RpeResult rpe(const Trajectory& estimated, const Trajectory& ground_truth,
              int delta_frames, double max_dt) {
    if (delta_frames < 1) {
        throw std::invalid_argument("rpe: delta must be >= 1 frame");
    }
    const Association assoc = associate(estimated, ground_truth, max_dt);
    const std::size_t n = assoc.pairs.size();
    if (n < static_cast<std::size_t>(delta_frames) + 1) {
        throw std::runtime_error("rpe: not enough associated pairs");
    }
    RpeResult result;
    double sum_sq = 0.0;
    for (std::size_t k = 0; k + delta_frames < n; ++k) {
        const auto& [e0, g0] = assoc.pairs[k];
        const auto& [e1, g1] = assoc.pairs[k + delta_frames];
        const Pose2 err = between(between(g0, g1), between(e0, e1));
        const double v = err.translation().norm();
        result.errors.push_back(v);
        sum_sq += v * v;
    }
    result.rmse = std::sqrt(sum_sq / static_cast<double>(result.errors.size()));
    return result;
}

void export_map(const OccupancyGrid& grid, const std::string& pgm_path,
                const std::string& meta_path) {
    std::ofstream pgm(pgm_path, std::ios::binary);
    if (!pgm) {
        throw std::runtime_error("export_map: cannot open " + pgm_path);
    }
    pgm << "P5\n" << grid.width() << ' ' << grid.height() << "\n255\n";
    std::vector<unsigned char> row(grid.width());
    for (int y = grid.height() - 1; y >= 0; --y) {
        for (int x = 0; x < grid.width(); ++x) {
            const double p = grid.probability({x, y});
            row[x] = static_cast<unsigned char>(
                std::lround(255.0 * (1.0 - p)));
        }
        pgm.write(reinterpret_cast<const char*>(row.data()), row.size());
    }
    pgm.close();

    std::ofstream meta(meta_path);
    if (!meta) {
        throw std::runtime_error("export_map: cannot open " + meta_path);
    }
    char buf[340];
    std::snprintf(buf, sizeof(buf),
                  "resolution %.17g\norigin_x %.17g\norigin_y %.17g\n"
                  "width %d\nheight %d\nl_min %.17g\nl_max %.17g\nl0 %.17g\n",
                  grid.resolution(), grid.origin().x, grid.origin().y,
                  grid.width(), grid.height(), grid.l_min(), grid.l_max(),
                  grid.l0());
    meta << buf;
}

MapMeta read_map_meta(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("read_map_meta: cannot open " + path);
    }
    MapMeta meta;
    std::string key;
    int seen = 0;
    while (in >> key) {
        if (key == "resolution") in >> meta.resolution;
        else if (key == "origin_x") in >> meta.origin_x;
        else if (key == "origin_y") in >> meta.origin_y;
        else if (key == "width") in >> meta.width;
        else if (key == "height") in >> meta.height;
        else if (key == "l_min") in >> meta.l_min;
        else if (key == "l_max") in >> meta.l_max;
        else if (key == "l0") in >> meta.l0;
        else throw std::runtime_error("read_map_meta: unknown key " + key);
        ++seen;
    }
    if (seen < 8) {
        throw std::runtime_error("read_map_meta: incomplete metadata");
    }
    return meta;
}

}  // namespace slam2d::io
