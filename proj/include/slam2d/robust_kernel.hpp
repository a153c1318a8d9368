#pragma once

#include <limits>

namespace slam2d {

/// Barron's generalized robust loss, parametrized by shape alpha and scale c.
///
/// alpha = 2 gives plain least squares, 1 a smoothed L1, 0 Cauchy,
/// -2 Geman-McClure and -inf Welsch. alpha > 2 is rejected; the removable
/// singularities at 2, 0 and -inf are implemented as their exact limits.
class BarronKernel {
  public:
    BarronKernel(double alpha, double c);

    double alpha() const { return alpha_; }
    double c() const { return c_; }

    /// Loss rho(r); monotone non-decreasing, rho(0) = 0.
    double rho(double r) const;

    /// IRLS weight rho'(r) / r, with the r -> 0 limit 1 / c^2.
    double weight(double r) const;

    /// First derivative rho'(r).
    double rho_prime(double r) const { return weight(r) * r; }

    static constexpr double neg_infinity() {
        return -std::numeric_limits<double>::infinity();
    }

  private:
    double alpha_;
    double c_;
};

}  // namespace slam2d
