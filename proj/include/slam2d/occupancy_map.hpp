#pragma once

#include <vector>

#include "slam2d/geometry.hpp"
#include "slam2d/pose_graph.hpp"
#include "slam2d/scan.hpp"

namespace slam2d {

struct Cell {
    int x = 0;
    int y = 0;
    bool operator==(const Cell&) const = default;
};

/// Per-ray occupancy probabilities of the inverse sensor model.
struct InverseModel {
    double prop_occupied = 0.7;
    double prop_free = 0.4;

    void validate() const;
};

double logit(double p);
/// p = 1 - 1 / (1 + exp(l)).
double cell_probability(double log_odds);

/// 8-connected integer line from a to b inclusive; length max(|dx|,|dy|)+1.
std::vector<Cell> bresenham(Cell a, Cell b);

/// Fixed-resolution log-odds raster with clamping. Cells start at the prior
/// l0; updates add logit(p) - l0 per observation, so removing a scan with
/// sign = -1 undoes its insertion exactly unless clamping interfered.
class OccupancyGrid {
  public:
    OccupancyGrid(double resolution, Point2 origin, int width, int height,
                  double l_min = -4.0, double l_max = 4.0, double l0 = 0.0);

    double resolution() const { return resolution_; }
    Point2 origin() const { return origin_; }
    int width() const { return width_; }
    int height() const { return height_; }
    double l_min() const { return l_min_; }
    double l_max() const { return l_max_; }
    double l0() const { return l0_; }

    bool contains(Cell c) const {
        return c.x >= 0 && c.x < width_ && c.y >= 0 && c.y < height_;
    }
    /// floor((p - origin) / resolution); false when outside the stored raster.
    bool world_to_cell(const Point2& p, Cell& out) const;
    Point2 cell_center(Cell c) const;

    double log_odds(Cell c) const { return logodds_[index(c)]; }
    double probability(Cell c) const { return cell_probability(logodds_[index(c)]); }

    /// Grows by doubling toward the needed side until p is inside; the cell
    /// lattice keeps its world anchoring.
    void ensure_contains(const Point2& p);

    /// Draws one scan taken from `pose` into the raster. sign = +1 inserts,
    /// -1 removes. Rays within 1 cm of range_max mark traversed cells free
    /// but claim no endpoint hit.
    void integrate_scan(const Pose2& pose, const LaserScan& scan,
                        const InverseModel& model, int sign);

    const std::vector<double>& raw() const { return logodds_; }
    bool operator==(const OccupancyGrid& o) const = default;

  private:
    std::size_t index(Cell c) const {
        return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(c.x);
    }
    void add(Cell c, double delta);
    void grow(int pad_left, int pad_right, int pad_down, int pad_up);

    double resolution_;
    Point2 origin_;
    int width_;
    int height_;
    double l_min_;
    double l_max_;
    double l0_;
    std::vector<double> logodds_;
};

/// Re-integrates every in-map node whose pose drifted beyond the tolerances
/// since its last integration: removal at the stale pose, insertion at the
/// current one. Returns the number of rewritten nodes.
int reintegrate_deviated(OccupancyGrid& grid, PoseGraph& graph,
                         const InverseModel& model, double trans_tol,
                         double rot_tol);

}  // namespace slam2d
