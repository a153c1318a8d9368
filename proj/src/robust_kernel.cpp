#include "slam2d/robust_kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace slam2d {

namespace {
constexpr double kTinyResidual = 1e-12;
}

BarronKernel::BarronKernel(double alpha, double c) : alpha_(alpha), c_(c) {
    if (!(c > 0.0) || !std::isfinite(c)) {
        throw std::invalid_argument("BarronKernel: scale c must be positive");
    }
    if (std::isnan(alpha) || alpha > 2.0) {
        throw std::invalid_argument("BarronKernel: alpha must be in [-inf, 2]");
    }
}

double BarronKernel::rho(double r) const {
    const double u = r / c_;
    const double u2 = u * u;
    if (alpha_ == 2.0) {
        return 0.5 * u2;
    }
    if (alpha_ == 0.0) {
        return std::log1p(0.5 * u2);
    }
    if (std::isinf(alpha_)) {
        return -std::expm1(-0.5 * u2);
    }
    const double am2 = std::abs(alpha_ - 2.0);
    // (am2/alpha) * ((u2/am2 + 1)^(alpha/2) - 1), kept stable near alpha = 0.
    return (am2 / alpha_) * std::expm1(0.5 * alpha_ * std::log1p(u2 / am2));
}

double BarronKernel::weight(double r) const {
    const double inv_c2 = 1.0 / (c_ * c_);
    if (r < kTinyResidual) {
        return inv_c2;
    }
    if (alpha_ == 2.0) {
        return inv_c2;
    }
    const double u = r / c_;
    const double u2 = u * u;
    if (alpha_ == 0.0) {
        return inv_c2 / (0.5 * u2 + 1.0);
    }
    if (std::isinf(alpha_)) {
        return inv_c2 * std::exp(-0.5 * u2);
    }
    const double am2 = std::abs(alpha_ - 2.0);
    return inv_c2 * std::pow(u2 / am2 + 1.0, 0.5 * alpha_ - 1.0);
}

}  // namespace slam2d
