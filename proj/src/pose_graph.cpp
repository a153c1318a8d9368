#include "slam2d/pose_graph.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace slam2d {

const char* to_string(ConstraintKind kind) {
    switch (kind) {
        case ConstraintKind::odometry: return "odometry";
        case ConstraintKind::proximity: return "proximity";
        case ConstraintKind::loop: return "loop";
    }
    return "odometry";
}

ConstraintKind constraint_kind_from_string(const std::string& s) {
    if (s == "odometry") return ConstraintKind::odometry;
    if (s == "proximity") return ConstraintKind::proximity;
    if (s == "loop") return ConstraintKind::loop;
    throw std::invalid_argument("unknown constraint kind: " + s);
}

int PoseGraph::add_node(const Pose2& pose, std::shared_ptr<const LaserScan> scan) {
    GraphNode n;
    n.id = static_cast<int>(nodes_.size());
    n.pose = pose;
    n.scan = std::move(scan);
    n.last_map_pose = pose;
    nodes_.push_back(std::move(n));
    adjacency_.emplace_back();
    return nodes_.back().id;
}

int PoseGraph::add_constraint(const Constraint& c) {
    const int n = static_cast<int>(nodes_.size());
    if (c.i < 0 || c.i >= n || c.j < 0 || c.j >= n) {
        throw std::invalid_argument("Constraint references nonexistent node");
    }
    if (c.i == c.j) {
        throw std::invalid_argument("Constraint endpoints must differ");
    }
    if (c.kind == ConstraintKind::odometry && c.j != c.i + 1) {
        throw std::invalid_argument("Odometry constraints must chain consecutive nodes");
    }
    if (!c.omega.allFinite() ||
        (c.omega - c.omega.transpose()).cwiseAbs().maxCoeff() >
            1e-9 * (1.0 + c.omega.cwiseAbs().maxCoeff())) {
        throw std::invalid_argument("Constraint information matrix must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(c.omega);
    if (es.eigenvalues().minCoeff() < -1e-9 * (1.0 + es.eigenvalues().maxCoeff())) {
        throw std::invalid_argument("Constraint information matrix must be PSD");
    }
    const int idx = static_cast<int>(constraints_.size());
    constraints_.push_back(c);
    adjacency_[c.i].push_back(idx);
    adjacency_[c.j].push_back(idx);
    return idx;
}

bool PoseGraph::has_edge(int i, int j) const {
    if (i < 0 || i >= static_cast<int>(nodes_.size())) {
        return false;
    }
    for (int idx : adjacency_[i]) {
        const Constraint& c = constraints_[idx];
        if ((c.i == i && c.j == j) || (c.i == j && c.j == i)) {
            return true;
        }
    }
    return false;
}

Eigen::Vector3d error_vector(const Pose2& xi, const Pose2& xj, const Pose2& z) {
    const Pose2 zhat = between(xi, xj);
    return {zhat.x - z.x, zhat.y - z.y, normalize_angle(zhat.theta - z.theta)};
}

double residual(const Eigen::Vector3d& e, const Eigen::Matrix3d& omega) {
    const double q = e.dot(omega * e);
    return std::sqrt(std::max(q, 0.0));
}

namespace {

double constraint_cost(const Constraint& c, const Pose2& xi, const Pose2& xj,
                       const BarronKernel& kernel) {
    const double r = residual(error_vector(xi, xj, c.z), c.omega);
    return c.robustified ? kernel.rho(r) : 0.5 * r * r;
}

// Jacobians of error_vector w.r.t. x_i and x_j.
void error_jacobians(const Pose2& xi, const Pose2& xj, Eigen::Matrix3d& Ji,
                     Eigen::Matrix3d& Jj) {
    const double c = std::cos(xi.theta);
    const double s = std::sin(xi.theta);
    const double dx = xj.x - xi.x;
    const double dy = xj.y - xi.y;
    // d(R^T dt)/dtheta_i = J_perp^T R^T dt with J_perp = [0 -1; 1 0].
    const double rx = c * dx + s * dy;
    const double ry = -s * dx + c * dy;
    Ji << -c, -s, ry,
          s, -c, -rx,
          0, 0, -1;
    Jj << c, s, 0,
          -s, c, 0,
          0, 0, 1;
}

}  // namespace

double total_cost(const PoseGraph& graph, const std::vector<Pose2>& poses,
                  const BarronKernel& kernel) {
    double cost = 0.0;
    for (const Constraint& c : graph.constraints()) {
        cost += constraint_cost(c, poses.at(c.i), poses.at(c.j), kernel);
    }
    return cost;
}

double total_cost(const PoseGraph& graph, const BarronKernel& kernel) {
    std::vector<Pose2> poses;
    poses.reserve(graph.num_nodes());
    for (const auto& n : graph.nodes()) {
        poses.push_back(n.pose);
    }
    return total_cost(graph, poses, kernel);
}

OptimizeReport optimize(PoseGraph& graph, const std::vector<int>& active_ids,
                        const BarronKernel& kernel, const LmConfig& cfg) {
    OptimizeReport report;
    if (active_ids.empty()) {
        report.message = "empty active set";
        return report;
    }
    for (int id : active_ids) {
        if (id < 0 || id >= static_cast<int>(graph.num_nodes())) {
            report.message = "active id out of range";
            return report;
        }
    }

    // Free-variable numbering, deterministic in id order.
    std::vector<int> free_ids(active_ids);
    std::sort(free_ids.begin(), free_ids.end());
    free_ids.erase(std::unique(free_ids.begin(), free_ids.end()), free_ids.end());
    std::unordered_map<int, int> free_index;
    for (std::size_t k = 0; k < free_ids.size(); ++k) {
        free_index.emplace(free_ids[k], static_cast<int>(k));
    }

    // Constraints with at least one free endpoint, in stable order.
    std::set<int> touched;
    for (int id : free_ids) {
        for (int cidx : graph.constraints_of(id)) {
            touched.insert(cidx);
        }
    }
    std::vector<int> active_constraints(touched.begin(), touched.end());
    if (active_constraints.empty()) {
        report.message = "no constraints touching active set";
        return report;
    }

    const int nf = static_cast<int>(free_ids.size());
    const int dim = 3 * nf;
    report.free_nodes = nf;
    report.active_constraints = static_cast<int>(active_constraints.size());

    auto gather = [&]() {
        std::vector<Pose2> p(nf);
        for (int k = 0; k < nf; ++k) {
            p[k] = graph.node(free_ids[k]).pose;
        }
        return p;
    };
    auto scatter = [&](const std::vector<Pose2>& p) {
        for (int k = 0; k < nf; ++k) {
            graph.node(free_ids[k]).pose = p[k];
        }
    };
    auto pose_of = [&](const std::vector<Pose2>& p, int id) -> const Pose2& {
        auto it = free_index.find(id);
        return it == free_index.end() ? graph.node(id).pose : p[it->second];
    };

    auto active_true_cost = [&](const std::vector<Pose2>& p) {
        double cost = 0.0;
        for (int cidx : active_constraints) {
            const Constraint& c = graph.constraints()[cidx];
            cost += constraint_cost(c, pose_of(p, c.i), pose_of(p, c.j), kernel);
        }
        return cost;
    };
    // Surrogate with frozen IRLS weights.
    auto surrogate_cost = [&](const std::vector<Pose2>& p,
                              const std::vector<double>& w) {
        double cost = 0.0;
        for (std::size_t k = 0; k < active_constraints.size(); ++k) {
            const Constraint& c = graph.constraints()[active_constraints[k]];
            const Eigen::Vector3d e =
                error_vector(pose_of(p, c.i), pose_of(p, c.j), c.z);
            cost += 0.5 * w[k] * e.dot(c.omega * e);
        }
        return cost;
    };

    std::vector<Pose2> poses = gather();
    report.initial_cost = active_true_cost(poses);

    std::vector<Pose2> best_poses = poses;
    double best_cost = report.initial_cost;

    Eigen::MatrixXd H(dim, dim);
    Eigen::VectorXd b(dim);
    std::vector<double> weights(active_constraints.size(), 1.0);
    int total_steps = 0;
    bool failed = false;
    bool accepted_ever = false;
    bool stationary = false;

    for (int round = 0; round < cfg.max_irls_rounds; ++round) {
        report.irls_rounds = round + 1;
        // Reweight from current residuals.
        for (std::size_t k = 0; k < active_constraints.size(); ++k) {
            const Constraint& c = graph.constraints()[active_constraints[k]];
            if (!c.robustified) {
                weights[k] = 1.0;
                continue;
            }
            const double r = residual(
                error_vector(pose_of(poses, c.i), pose_of(poses, c.j), c.z), c.omega);
            weights[k] = kernel.weight(r);
        }

        double current = surrogate_cost(poses, weights);
        double mu = -1.0;  // initialized from the first normal matrix
        bool any_accepted = false;

        for (int iter = 0; iter < cfg.max_lm_iterations; ++iter) {
            if (total_steps >= cfg.max_total_steps) {
                break;
            }
            ++total_steps;
            report.lm_steps = total_steps;

            H.setZero();
            b.setZero();
            Eigen::Matrix3d Ji, Jj;
            for (std::size_t k = 0; k < active_constraints.size(); ++k) {
                const Constraint& c = graph.constraints()[active_constraints[k]];
                const Pose2& pi = pose_of(poses, c.i);
                const Pose2& pj = pose_of(poses, c.j);
                const Eigen::Vector3d e = error_vector(pi, pj, c.z);
                error_jacobians(pi, pj, Ji, Jj);
                const double w = weights[k];
                const auto it_i = free_index.find(c.i);
                const auto it_j = free_index.find(c.j);
                const Eigen::Matrix3d wOm = w * c.omega;
                if (it_i != free_index.end()) {
                    const int a = 3 * it_i->second;
                    H.block<3, 3>(a, a) += Ji.transpose() * wOm * Ji;
                    b.segment<3>(a) += Ji.transpose() * (wOm * e);
                }
                if (it_j != free_index.end()) {
                    const int a = 3 * it_j->second;
                    H.block<3, 3>(a, a) += Jj.transpose() * wOm * Jj;
                    b.segment<3>(a) += Jj.transpose() * (wOm * e);
                }
                if (it_i != free_index.end() && it_j != free_index.end()) {
                    const int a = 3 * it_i->second;
                    const int d = 3 * it_j->second;
                    const Eigen::Matrix3d off = Ji.transpose() * wOm * Jj;
                    H.block<3, 3>(a, d) += off;
                    H.block<3, 3>(d, a) += off.transpose();
                }
            }

            if (b.lpNorm<Eigen::Infinity>() < 1e-12 * (1.0 + current)) {
                stationary = true;
                break;
            }
            if (mu < 0.0) {
                mu = cfg.mu_init_scale * H.diagonal().maxCoeff();
                if (!(mu > 0.0)) {
                    mu = cfg.mu_init_scale;
                }
            }

            bool accepted = false;
            while (mu <= cfg.mu_max) {
                Eigen::MatrixXd Hd = H;
                Hd.diagonal().array() += mu;
                Eigen::LDLT<Eigen::MatrixXd> ldlt(Hd);
                if (ldlt.info() == Eigen::Success) {
                    const Eigen::VectorXd delta = ldlt.solve(-b);
                    if (delta.allFinite()) {
                        std::vector<Pose2> trial(poses);
                        for (int k = 0; k < nf; ++k) {
                            trial[k] = Pose2(poses[k].x + delta[3 * k],
                                             poses[k].y + delta[3 * k + 1],
                                             poses[k].theta + delta[3 * k + 2]);
                        }
                        const double trial_cost = surrogate_cost(trial, weights);
                        if (trial_cost <= current) {
                            poses = std::move(trial);
                            const double drop = current - trial_cost;
                            current = trial_cost;
                            mu = std::max(mu / cfg.mu_factor, 1e-16);
                            accepted = true;
                            any_accepted = true;
                            if (drop < cfg.cost_rel_tol * (1.0 + current)) {
                                iter = cfg.max_lm_iterations;  // round converged
                            }
                            break;
                        }
                    }
                }
                mu *= cfg.mu_factor;
            }
            if (!accepted) {
                break;
            }
        }

        accepted_ever = accepted_ever || any_accepted;
        const double round_cost = active_true_cost(poses);
        if (round_cost < best_cost) {
            best_cost = round_cost;
            best_poses = poses;
        }
        if (total_steps >= cfg.max_total_steps) {
            break;
        }
        if (!any_accepted || best_cost < 1e-15 || stationary) {
            break;  // no further progress possible under current weights
        }
    }

    // A graph that was never stationary but where damping blew up without a
    // single accepted step has singular normal equations.
    if (!accepted_ever && !stationary && total_steps > 0) {
        failed = true;
    }

    if (failed) {
        report.success = false;
        report.converged = false;
        report.final_cost = report.initial_cost;
        report.message = "normal equations singular at max damping";
        return report;  // poses untouched
    }

    scatter(best_poses);
    report.success = true;
    report.converged = true;
    report.final_cost = best_cost;
    return report;
}

OptimizeReport optimize_window(PoseGraph& graph, const BarronKernel& kernel,
                               const LmConfig& cfg) {
    OptimizeReport report;
    if (graph.empty()) {
        report.message = "empty graph";
        return report;
    }
    const int n = static_cast<int>(graph.num_nodes());
    const int w = std::min(graph.window_size, n);
    const int first = n - w;  // oldest node of the window: gauge anchor
    std::vector<int> active;
    for (int id = first + 1; id < n; ++id) {
        active.push_back(id);
    }
    if (active.empty()) {
        report.success = true;
        report.converged = true;
        report.message = "window holds a single node";
        return report;
    }
    return optimize(graph, active, kernel, cfg);
}

OptimizeReport optimize_full(PoseGraph& graph, const BarronKernel& kernel,
                             const LmConfig& cfg) {
    if (graph.num_nodes() < 2) {
        OptimizeReport report;
        report.message = "full optimization needs at least 2 nodes";
        return report;
    }
    std::vector<int> active;
    for (int id = 1; id < static_cast<int>(graph.num_nodes()); ++id) {
        active.push_back(id);
    }
    return optimize(graph, active, kernel, cfg);
}

void save_graph(const std::string& path, const PoseGraph& graph) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("save_graph: cannot open " + path);
    }
    char buf[512];
    for (const auto& n : graph.nodes()) {
        std::snprintf(buf, sizeof(buf), "VERTEX2 %d %.12g %.12g %.12g\n", n.id,
                      n.pose.x, n.pose.y, n.pose.theta);
        out << buf;
    }
    for (const auto& c : graph.constraints()) {
        std::snprintf(buf, sizeof(buf),
                      "EDGE2 %d %d %.12g %.12g %.12g %.12g %.12g %.12g %.12g "
                      "%.12g %.12g %s\n",
                      c.i, c.j, c.z.x, c.z.y, c.z.theta, c.omega(0, 0),
                      c.omega(0, 1), c.omega(0, 2), c.omega(1, 1), c.omega(1, 2),
                      c.omega(2, 2), to_string(c.kind));
        out << buf;
    }
}

PoseGraph load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("load_graph: cannot open " + path);
    }
    PoseGraph graph;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "VERTEX2") {
            int id;
            double x, y, th;
            if (!(ss >> id >> x >> y >> th)) {
                throw std::runtime_error("load_graph: bad VERTEX2 at line " +
                                         std::to_string(lineno));
            }
            const int got = graph.add_node(Pose2(x, y, th), nullptr);
            if (got != id) {
                throw std::runtime_error("load_graph: node ids must be dense from 0");
            }
        } else if (tag == "EDGE2") {
            Constraint c;
            double o11, o12, o13, o22, o23, o33;
            double zx, zy, zth;
            std::string kind;
            if (!(ss >> c.i >> c.j >> zx >> zy >> zth >> o11 >> o12 >> o13 >>
                  o22 >> o23 >> o33 >> kind)) {
                throw std::runtime_error("load_graph: bad EDGE2 at line " +
                                         std::to_string(lineno));
            }
            c.z = Pose2(zx, zy, zth);
            c.omega << o11, o12, o13, o12, o22, o23, o13, o23, o33;
            c.kind = constraint_kind_from_string(kind);
            c.robustified = c.kind == ConstraintKind::odometry;
            graph.add_constraint(c);
        } else {
            throw std::runtime_error("load_graph: unknown record at line " +
                                     std::to_string(lineno));
        }
    }
    return graph;
}

}  // namespace slam2d
