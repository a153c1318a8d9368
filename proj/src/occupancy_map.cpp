#include "slam2d/occupancy_map.hpp"

#include <cmath>
#include <stdexcept>

namespace slam2d {

namespace {
constexpr double kEndpointMargin = 0.01;  // meters below range_max still count as hits
}

void InverseModel::validate() const {
    if (!(0.0 < prop_free && prop_free < 0.5 && 0.5 < prop_occupied &&
          prop_occupied < 1.0)) {
        throw std::invalid_argument(
            "InverseModel: need 0 < prop_free < 0.5 < prop_occupied < 1");
    }
}

double logit(double p) { return std::log(p / (1.0 - p)); }

double cell_probability(double log_odds) {
    return 1.0 - 1.0 / (1.0 + std::exp(log_odds));
}

std::vector<Cell> bresenham(Cell a, Cell b) {
    std::vector<Cell> cells;
    const int dx = std::abs(b.x - a.x);
    const int dy = -std::abs(b.y - a.y);
    const int sx = a.x < b.x ? 1 : -1;
    const int sy = a.y < b.y ? 1 : -1;
    cells.reserve(static_cast<std::size_t>(std::max(dx, -dy)) + 1);
    int err = dx + dy;
    Cell c = a;
    while (true) {
        cells.push_back(c);
        if (c == b) {
            break;
        }
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            c.x += sx;
        }
        if (e2 <= dx) {
            err += dx;
            c.y += sy;
        }
    }
    return cells;
}

OccupancyGrid::OccupancyGrid(double resolution, Point2 origin, int width,
                             int height, double l_min, double l_max, double l0)
    : resolution_(resolution),
      origin_(origin),
      width_(width),
      height_(height),
      l_min_(l_min),
      l_max_(l_max),
      l0_(l0) {
    if (!(resolution > 0.0)) {
        throw std::invalid_argument("OccupancyGrid: resolution must be > 0");
    }
    if (width < 1 || height < 1) {
        throw std::invalid_argument("OccupancyGrid: need at least one cell");
    }
    if (!(l_min < l0 && l0 < l_max)) {
        throw std::invalid_argument("OccupancyGrid: need l_min < l0 < l_max");
    }
    logodds_.assign(static_cast<std::size_t>(width) * height, l0);
}

bool OccupancyGrid::world_to_cell(const Point2& p, Cell& out) const {
    out.x = static_cast<int>(std::floor((p.x - origin_.x) / resolution_));
    out.y = static_cast<int>(std::floor((p.y - origin_.y) / resolution_));
    return contains(out);
}

Point2 OccupancyGrid::cell_center(Cell c) const {
    return {origin_.x + (c.x + 0.5) * resolution_,
            origin_.y + (c.y + 0.5) * resolution_};
}

void OccupancyGrid::grow(int pad_left, int pad_right, int pad_down, int pad_up) {
    const int new_w = width_ + pad_left + pad_right;
    const int new_h = height_ + pad_down + pad_up;
    std::vector<double> fresh(static_cast<std::size_t>(new_w) * new_h, l0_);
    for (int y = 0; y < height_; ++y) {
        for (int x = 0; x < width_; ++x) {
            fresh[static_cast<std::size_t>(y + pad_down) * new_w + (x + pad_left)] =
                logodds_[static_cast<std::size_t>(y) * width_ + x];
        }
    }
    logodds_ = std::move(fresh);
    origin_.x -= pad_left * resolution_;
    origin_.y -= pad_down * resolution_;
    width_ = new_w;
    height_ = new_h;
}

void OccupancyGrid::ensure_contains(const Point2& p) {
    Cell c;
    while (!world_to_cell(p, c)) {
        int pad_left = 0, pad_right = 0, pad_down = 0, pad_up = 0;
        if (c.x < 0) {
            pad_left = width_;
        } else if (c.x >= width_) {
            pad_right = width_;
        }
        if (c.y < 0) {
            pad_down = height_;
        } else if (c.y >= height_) {
            pad_up = height_;
        }
        grow(pad_left, pad_right, pad_down, pad_up);
    }
}

void OccupancyGrid::add(Cell c, double delta) {
    double& l = logodds_[index(c)];
    l = std::min(std::max(l + delta, l_min_), l_max_);
}

void OccupancyGrid::integrate_scan(const Pose2& pose, const LaserScan& scan,
                                   const InverseModel& model, int sign) {
    if (sign != 1 && sign != -1) {
        throw std::invalid_argument("integrate_scan: sign must be +1 or -1");
    }
    model.validate();
    scan.validate();

    struct Ray {
        Point2 end;
        bool hit;
    };
    std::vector<Ray> rays;
    rays.reserve(scan.ranges.size());
    const Point2 sensor = pose.translation();
    ensure_contains(sensor);
    for (std::size_t i = 0; i < scan.ranges.size(); ++i) {
        const double r = scan.ranges[i];
        if (!scan.range_valid(r)) {
            continue;
        }
        const double a = scan.ray_angle(i);
        const Point2 end =
            transform_point(pose, Point2(r * std::cos(a), r * std::sin(a)));
        ensure_contains(end);
        rays.push_back({end, r < scan.range_max - kEndpointMargin});
    }

    const double delta_free = sign * (logit(model.prop_free) - l0_);
    const double delta_occ = sign * (logit(model.prop_occupied) - l0_);

    Cell start;
    world_to_cell(sensor, start);
    for (const Ray& ray : rays) {
        Cell end;
        world_to_cell(ray.end, end);
        const auto cells = bresenham(start, end);
        for (std::size_t k = 0; k + 1 < cells.size(); ++k) {
            add(cells[k], delta_free);
        }
        add(cells.back(), ray.hit ? delta_occ : delta_free);
    }
}

int reintegrate_deviated(OccupancyGrid& grid, PoseGraph& graph,
                         const InverseModel& model, double trans_tol,
                         double rot_tol) {
    int rewritten = 0;
    for (auto& node : graph.nodes()) {
        if (!node.in_map || !node.scan) {
            continue;
        }
        const double dt = (node.pose.translation() - node.last_map_pose.translation()).norm();
        const double dr = std::abs(normalize_angle(node.pose.theta - node.last_map_pose.theta));
        if (dt <= trans_tol && dr <= rot_tol) {
            continue;
        }
        grid.integrate_scan(node.last_map_pose, *node.scan, model, -1);
        grid.integrate_scan(node.pose, *node.scan, model, +1);
        node.last_map_pose = node.pose;
        ++rewritten;
    }
    return rewritten;
}

}  // namespace slam2d
