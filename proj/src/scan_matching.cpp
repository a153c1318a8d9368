#include "slam2d/scan_matching.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "slam2d/covariance.hpp"

namespace slam2d {

namespace {

constexpr double kSegmentMin = 1e-9;       // reject shorter j1-j2 baselines
constexpr double kConstraintTol = 1e-6;    // |cos^2 + sin^2 - 1| admissibility
constexpr double kRootResidualTol = 1e-9;

// 2D cell hash over the reference cloud, cell size = gate distance, so the
// 3x3 neighborhood of a query covers every point within the gate.
struct CellHash {
    double cell;
    std::unordered_map<long long, std::vector<int>> bins;

    static long long key(int ix, int iy) {
        return (static_cast<long long>(ix) << 32) ^
               (static_cast<long long>(iy) & 0xffffffffLL);
    }

    CellHash(const std::vector<ScanPoint>& pts, double cell_size) : cell(cell_size) {
        bins.reserve(pts.size() * 2);
        for (std::size_t k = 0; k < pts.size(); ++k) {
            const int ix = static_cast<int>(std::floor(pts[k].p.x / cell));
            const int iy = static_cast<int>(std::floor(pts[k].p.y / cell));
            bins[key(ix, iy)].push_back(static_cast<int>(k));
        }
    }
};

}  // namespace

std::vector<Correspondence> find_correspondences(
    const std::vector<Point2>& current_world,
    const std::vector<ScanPoint>& reference, double max_dist) {
    if (reference.size() < 2) {
        throw std::invalid_argument("find_correspondences: need >= 2 reference points");
    }
    if (!(max_dist > 0.0)) {
        throw std::invalid_argument("find_correspondences: max_dist must be > 0");
    }

    const CellHash hash(reference, max_dist);
    const double gate_sq = max_dist * max_dist;

    std::vector<Correspondence> corrs;
    corrs.reserve(current_world.size());
    for (std::size_t i = 0; i < current_world.size(); ++i) {
        const Point2& q = current_world[i];
        const int cx = static_cast<int>(std::floor(q.x / max_dist));
        const int cy = static_cast<int>(std::floor(q.y / max_dist));

        // Best two by (squared distance, index).
        int b1 = -1, b2 = -1;
        double d1 = gate_sq, d2 = gate_sq;
        for (int ix = cx - 1; ix <= cx + 1; ++ix) {
            for (int iy = cy - 1; iy <= cy + 1; ++iy) {
                const auto it = hash.bins.find(CellHash::key(ix, iy));
                if (it == hash.bins.end()) {
                    continue;
                }
                for (int idx : it->second) {
                    const double d = (reference[idx].p - q).squared_norm();
                    if (d > gate_sq) {
                        continue;
                    }
                    if (d < d1 || (d == d1 && (b1 < 0 || idx < b1))) {
                        d2 = d1;
                        b2 = b1;
                        d1 = d;
                        b1 = idx;
                    } else if (d < d2 || (d == d2 && (b2 < 0 || idx < b2))) {
                        d2 = d;
                        b2 = idx;
                    }
                }
            }
        }
        if (b1 < 0 || b2 < 0) {
            continue;  // gate: no usable pair
        }
        const Point2 seg = reference[b1].p - reference[b2].p;
        const double len = seg.norm();
        if (len < kSegmentMin) {
            continue;  // coincident reference points carry no direction
        }
        Point2 n = seg.perp() * (1.0 / len);
        const double side = n.dot(q - reference[b1].p);
        if (side < 0.0 || (side == 0.0 && (n.y < 0.0 || (n.y == 0.0 && n.x < 0.0)))) {
            n = -n;
        }
        Correspondence c;
        c.i = static_cast<int>(i);
        c.j1 = b1;
        c.j2 = b2;
        c.n = n;
        corrs.push_back(c);
    }
    return corrs;
}

NormalSystem build_normal_system(const std::vector<Correspondence>& corrs,
                                 const std::vector<ScanPoint>& current,
                                 const std::vector<ScanPoint>& reference) {
    if (corrs.size() < 3) {
        throw std::invalid_argument("build_normal_system: need >= 3 correspondences");
    }
    NormalSystem sys;
    sys.W(2, 2) = 1.0;
    sys.W(3, 3) = 1.0;

    for (const Correspondence& c : corrs) {
        const Point2& p = current.at(c.i).p;
        const Point2& pi1 = reference.at(c.j1).p;
        // Row space of the pose action: [R(theta) p + t] = Mi x.
        Eigen::Matrix<double, 2, 4> Mi;
        Mi << 1, 0, p.x, -p.y,
              0, 1, p.y, p.x;
        Eigen::Matrix2d Ci;
        Ci << c.n.x * c.n.x, c.n.x * c.n.y,
              c.n.x * c.n.y, c.n.y * c.n.y;
        const Eigen::Vector2d pi(pi1.x, pi1.y);
        sys.M += Mi.transpose() * Ci * Mi;
        sys.g += -2.0 * Mi.transpose() * (Ci * pi);
        sys.constant += pi.dot(Ci * pi);
    }

    sys.A = 2.0 * sys.M.topLeftCorner<2, 2>();
    sys.B = 2.0 * sys.M.topRightCorner<2, 2>();
    const Eigen::Matrix2d D = 2.0 * sys.M.bottomRightCorner<2, 2>();

    // A = 2 * sum(n n^T): singular iff all normals are parallel.
    const double tr = sys.A.trace();
    const double det = sys.A.determinant();
    const double disc = std::sqrt(std::max(tr * tr / 4.0 - det, 0.0));
    const double lam_min = tr / 2.0 - disc;
    const double lam_max = tr / 2.0 + disc;
    if (!(lam_min > 1e-9 * std::max(lam_max, 1e-12))) {
        throw DegenerateGeometryError(
            "build_normal_system: normals do not span the plane");
    }
    sys.S = D - sys.B.transpose() * sys.A.inverse() * sys.B;
    return sys;
}

namespace {

Eigen::Matrix2d adjugate2(const Eigen::Matrix2d& m) {
    Eigen::Matrix2d adj;
    adj << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
    return adj;
}

double eval_quartic(const std::array<double, 5>& k, double x) {
    return (((k[0] * x + k[1]) * x + k[2]) * x + k[3]) * x + k[4];
}

double eval_quartic_deriv(const std::array<double, 5>& k, double x) {
    return ((4.0 * k[0] * x + 3.0 * k[1]) * x + 2.0 * k[2]) * x + k[3];
}

}  // namespace

std::array<double, 5> quartic_coefficients(const NormalSystem& sys) {
    const double detA = sys.A.determinant();
    if (std::abs(detA) < 1e-300) {
        throw DegenerateGeometryError("quartic_coefficients: singular A block");
    }
    const Eigen::Vector2d g1 = sys.g.head<2>();
    const Eigen::Vector2d g2 = sys.g.tail<2>();
    // The constraint condition reduces to w^T adj(S + 2 lambda I)^2 w =
    // det(S + 2 lambda I)^2 with w = B^T A^{-1} g1 - g2; expanding both sides
    // in lambda gives the coefficients below.
    const Eigen::Vector2d w = sys.B.transpose() * sys.A.inverse() * g1 - g2;
    const double trS = sys.S.trace();
    const double detS = sys.S.determinant();
    const Eigen::Matrix2d adjS = adjugate2(sys.S);

    std::array<double, 5> k;
    k[0] = 16.0;
    k[1] = 16.0 * trS;
    k[2] = 4.0 * trS * trS + 8.0 * detS - 4.0 * w.dot(w);
    k[3] = 4.0 * trS * detS - 4.0 * w.dot(adjS * w);
    k[4] = detS * detS - w.dot(adjS * (adjS * w));
    return k;
}

std::vector<double> solve_quartic(double a, double b, double c, double d, double e) {
    if (a == 0.0 || !std::isfinite(a)) {
        throw std::invalid_argument("solve_quartic: leading coefficient must be nonzero");
    }
    const std::array<double, 5> monic = {1.0, b / a, c / a, d / a, e / a};

    // Scale lambda so the companion matrix stays well conditioned.
    double s = 0.0;
    s = std::max(s, std::abs(monic[1]));
    s = std::max(s, std::sqrt(std::abs(monic[2])));
    s = std::max(s, std::cbrt(std::abs(monic[3])));
    s = std::max(s, std::pow(std::abs(monic[4]), 0.25));
    if (s == 0.0) {
        return {0.0};
    }

    Eigen::Matrix4d companion = Eigen::Matrix4d::Zero();
    companion(1, 0) = 1.0;
    companion(2, 1) = 1.0;
    companion(3, 2) = 1.0;
    companion(0, 3) = -monic[4] / (s * s * s * s);
    companion(1, 3) = -monic[3] / (s * s * s);
    companion(2, 3) = -monic[2] / (s * s);
    companion(3, 3) = -monic[1] / s;

    Eigen::EigenSolver<Eigen::Matrix4d> es(companion, /*computeEigenvectors=*/false);
    std::vector<double> roots;
    for (int k = 0; k < 4; ++k) {
        const std::complex<double> ev = es.eigenvalues()[k];
        if (std::abs(ev.imag()) > 1e-8 * std::max(1.0, std::abs(ev.real()))) {
            continue;
        }
        double x = ev.real() * s;
        // Newton polish on the monic quartic.
        for (int it = 0; it < 8; ++it) {
            const double f = eval_quartic(monic, x);
            const double fp = eval_quartic_deriv(monic, x);
            if (fp == 0.0) {
                break;
            }
            const double step = f / fp;
            x -= step;
            if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(x))) {
                break;
            }
        }
        const double residual =
            std::abs(eval_quartic(monic, x)) / std::max(1.0, x * x * x * x);
        if (residual < kRootResidualTol) {
            roots.push_back(x);
        }
    }
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end(),
                            [](double u, double v) {
                                return std::abs(u - v) <=
                                       1e-9 * std::max(1.0, std::abs(u));
                            }),
                roots.end());
    return roots;
}

double normal_system_objective(const NormalSystem& sys, const Pose2& q) {
    Eigen::Vector4d x(q.x, q.y, std::cos(q.theta), std::sin(q.theta));
    return x.dot(sys.M * x) + sys.g.dot(x) + sys.constant;
}

Pose2 plicp_step(const NormalSystem& sys) {
    const auto k = quartic_coefficients(sys);
    const auto roots = solve_quartic(k[0], k[1], k[2], k[3], k[4]);
    if (roots.empty()) {
        throw StepFailureError("plicp_step: quartic has no real roots");
    }

    bool found = false;
    double best_cost = 0.0;
    Eigen::Vector4d best_x = Eigen::Vector4d::Zero();
    for (double lambda : roots) {
        Eigen::Matrix4d K = 2.0 * sys.M + 2.0 * lambda * sys.W;
        Eigen::FullPivLU<Eigen::Matrix4d> lu(K);
        if (!lu.isInvertible()) {
            continue;
        }
        const Eigen::Vector4d x = lu.solve(-sys.g);
        const double unit = x[2] * x[2] + x[3] * x[3];
        if (std::abs(unit - 1.0) > kConstraintTol) {
            continue;
        }
        const double cost = x.dot(sys.M * x) + sys.g.dot(x) + sys.constant;
        if (!found || cost < best_cost) {
            found = true;
            best_cost = cost;
            best_x = x;
        }
    }
    if (!found) {
        throw StepFailureError("plicp_step: no admissible on-constraint root");
    }
    return Pose2(best_x[0], best_x[1], std::atan2(best_x[3], best_x[2]));
}

MatchResult align(const std::vector<ScanPoint>& current,
                  const std::vector<ScanPoint>& reference, const Pose2& guess,
                  const MatchConfig& cfg) {
    if (reference.size() < 2) {
        throw std::invalid_argument("align: need >= 2 reference points");
    }

    MatchResult result;
    result.q = guess;

    std::vector<Point2> world(current.size());
    std::vector<Correspondence> corrs;
    auto associate = [&](const Pose2& q) {
        for (std::size_t k = 0; k < current.size(); ++k) {
            world[k] = transform_point(q, current[k].p);
        }
        return find_correspondences(world, reference, cfg.max_dist);
    };

    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
        result.iterations = iter + 1;
        corrs = associate(result.q);
        if (static_cast<int>(corrs.size()) < cfg.min_correspondences) {
            result.converged = false;
            break;
        }
        const NormalSystem sys = build_normal_system(corrs, current, reference);
        const Pose2 next = plicp_step(sys);
        const Pose2 delta = between(result.q, next);
        const double dt = delta.translation().norm();
        const double dth = std::abs(delta.theta);
        result.q = next;
        if (dt < cfg.eps_t && dth < cfg.eps_theta) {
            result.converged = true;
            break;
        }
    }

    // Final association at the solution for reporting and the covariance.
    corrs = associate(result.q);
    result.num_valid = static_cast<int>(corrs.size());
    double sum = 0.0;
    for (const Correspondence& c : corrs) {
        const double r = c.n.dot(world[c.i] - reference[c.j1].p);
        sum += r * r;
    }
    result.residual_sum = sum;
    if (static_cast<int>(corrs.size()) < cfg.min_correspondences) {
        result.converged = false;
    }

    if (cfg.compute_covariance && corrs.size() >= 3) {
        const Eigen::Matrix3d hxx = hessian_xx(corrs, current, reference, result.q);
        const Eigen::MatrixXd hxz = hessian_xz(corrs, current, reference, result.q);
        const CovarianceResult cov = match_covariance(hxx, hxz, cfg.sigma_range);
        result.covariance = cov.cov;
    } else {
        result.covariance = default_prior_covariance();
    }
    return result;
}

MatchResult match(const LaserScan& current, const LaserScan& reference,
                  const Pose2& initial_guess, const MatchConfig& cfg) {
    current.validate();
    reference.validate();
    if (current.count_valid() < static_cast<std::size_t>(cfg.min_valid_rays) ||
        reference.count_valid() < static_cast<std::size_t>(cfg.min_valid_rays)) {
        throw std::invalid_argument("match: scan has too few valid rays");
    }
    return align(scan_to_points(current), scan_to_points(reference),
                 initial_guess, cfg);
}

}  // namespace slam2d
