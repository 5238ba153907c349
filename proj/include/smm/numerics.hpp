#pragma once

// Finite-difference helpers shared by the QFI and error-propagation code.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "smm/errors.hpp"

namespace smm {

// Snap a step to a power of two that is an exact multiple of ulp(x), so
// x+h, x-h, x+h/2, x-h/2 are all exactly representable and symmetric.
inline double snap_step(double x, double h) {
    const double u =
        std::nextafter(std::fabs(x), std::numeric_limits<double>::infinity()) -
        std::fabs(x);
    const double floor_h = 4.0 * u;
    if (!(h > floor_h)) return floor_h;
    return std::max(std::exp2(std::floor(std::log2(h))), floor_h);
}

// Richardson-refined central derivative on the stencil {x-h, x-h/2, x+h/2, x+h}.
// Also returns a matched-order one-sided estimate for step diagnostics.
struct DerivativeEstimate {
    double central = 0.0;   // O(h^4) Richardson of central differences
    double one_sided = 0.0; // O(h^2) Richardson of forward differences
};

template <class F>
DerivativeEstimate derivative_with_check(const F& f, double x, double h) {
    h = snap_step(x, h);
    const double fp = f(x + h), fm = f(x - h);
    const double fp2 = f(x + h / 2), fm2 = f(x - h / 2);
    const double d1 = (fp - fm) / (2.0 * h);
    const double d2 = (fp2 - fm2) / h;
    DerivativeEstimate e;
    e.central = (4.0 * d2 - d1) / 3.0;
    const double f0 = f(x);
    const double o1 = (fp - f0) / h;
    const double o2 = (fp2 - f0) / (h / 2);
    e.one_sided = 2.0 * o2 - o1;
    return e;
}

template <class F>
double central_derivative(const F& f, double x, double h) {
    return derivative_with_check(f, x, h).central;
}

// Least-squares slope of y against x (used for the scaling-exponent checks).
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace smm
