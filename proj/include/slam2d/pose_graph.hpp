#pragma once

#include <Eigen/Core>
#include <memory>
#include <string>
#include <vector>

#include "slam2d/geometry.hpp"
#include "slam2d/robust_kernel.hpp"
#include "slam2d/scan.hpp"

namespace slam2d {

enum class ConstraintKind { odometry, proximity, loop };

const char* to_string(ConstraintKind kind);
ConstraintKind constraint_kind_from_string(const std::string& s);

struct GraphNode {
    int id = 0;
    Pose2 pose;
    std::shared_ptr<const LaserScan> scan;
    // Pose at which this node's scan was last drawn into the occupancy map.
    Pose2 last_map_pose;
    bool in_map = false;
};

/// Relative-pose measurement x_j ~ x_i (+) z with information matrix omega.
struct Constraint {
    int i = 0;
    int j = 0;
    Pose2 z;
    Eigen::Matrix3d omega = Eigen::Matrix3d::Identity();
    ConstraintKind kind = ConstraintKind::odometry;
    bool robustified = false;
};

class PoseGraph {
  public:
    int add_node(const Pose2& pose, std::shared_ptr<const LaserScan> scan);
    /// Validates endpoints, symmetry/PSD of omega and the odometry-chain
    /// rule (odometry edges connect consecutive ids). Returns the edge index.
    int add_constraint(const Constraint& c);

    std::size_t num_nodes() const { return nodes_.size(); }
    std::size_t num_constraints() const { return constraints_.size(); }
    bool empty() const { return nodes_.empty(); }

    const GraphNode& node(int id) const { return nodes_.at(id); }
    GraphNode& node(int id) { return nodes_.at(id); }
    const std::vector<GraphNode>& nodes() const { return nodes_; }
    std::vector<GraphNode>& nodes() { return nodes_; }
    const std::vector<Constraint>& constraints() const { return constraints_; }

    /// Indices of constraints incident to node id.
    const std::vector<int>& constraints_of(int id) const { return adjacency_.at(id); }
    bool has_edge(int i, int j) const;

    int window_size = 10;

  private:
    std::vector<GraphNode> nodes_;
    std::vector<Constraint> constraints_;
    std::vector<std::vector<int>> adjacency_;
};

/// e = between(x_i, x_j) (-) z, the angle component wrapped.
Eigen::Vector3d error_vector(const Pose2& xi, const Pose2& xj, const Pose2& z);

/// Whitened residual magnitude sqrt(e^T omega e).
double residual(const Eigen::Vector3d& e, const Eigen::Matrix3d& omega);

/// Sum of rho(r) over robustified constraints plus 1/2 r^2 over plain ones.
double total_cost(const PoseGraph& graph, const std::vector<Pose2>& poses,
                  const BarronKernel& kernel);
double total_cost(const PoseGraph& graph, const BarronKernel& kernel);

struct LmConfig {
    int max_irls_rounds = 10;
    int max_lm_iterations = 10;   // per IRLS round
    int max_total_steps = 100;    // hard bound across all rounds
    double cost_rel_tol = 1e-9;
    double mu_init_scale = 1e-4;  // times max diagonal of the normal matrix
    double mu_factor = 10.0;
    double mu_max = 1e14;
};

struct OptimizeReport {
    bool success = false;
    bool converged = false;
    double initial_cost = 0.0;
    double final_cost = 0.0;
    int irls_rounds = 0;
    int lm_steps = 0;
    int free_nodes = 0;
    int active_constraints = 0;
    std::string message;
};

/// Optimizes the poses listed in active_ids; everything else is a fixed
/// anchor. Constraints with both endpoints fixed are ignored. The caller
/// must leave at least one anchor reachable from the active set.
OptimizeReport optimize(PoseGraph& graph, const std::vector<int>& active_ids,
                        const BarronKernel& kernel, const LmConfig& cfg = {});

/// Optimizes the youngest window_size nodes; the oldest node of the window
/// stays fixed as the gauge anchor.
OptimizeReport optimize_window(PoseGraph& graph, const BarronKernel& kernel,
                               const LmConfig& cfg = {});

/// Optimizes every node except node 0.
OptimizeReport optimize_full(PoseGraph& graph, const BarronKernel& kernel,
                             const LmConfig& cfg = {});

/// Plain-text dump: "VERTEX2 id x y theta" and
/// "EDGE2 i j dx dy dtheta o11 o12 o13 o22 o23 o33 kind" lines.
void save_graph(const std::string& path, const PoseGraph& graph);
PoseGraph load_graph(const std::string& path);

}  // namespace slam2d
