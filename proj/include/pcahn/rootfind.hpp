#pragma once

#include <cmath>
#include <functional>
#include <limits>

#include "pcahn/errors.hpp"

namespace pcahn::roots {

/// Plain bisection on a sign-changing bracket [lo,hi], down to width `width`.
template <typename F>
double bisect(F&& f, double lo, double hi, double width = 1e-14, int max_iter = 200) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    require(flo * fhi < 0.0, "bisect: endpoints do not bracket a root");
    for (int it = 0; it < max_iter && (hi - lo) > width; ++it) {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if (fm == 0.0) return mid;
        if (flo * fm < 0.0) {
            hi = mid;
            fhi = fm;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    return 0.5 * (lo + hi);
}

/// Bisection to a coarse bracket, then Newton polish; Newton steps that leave
/// the bracket fall back to bisection. Works for roots where f' is available.
template <typename F, typename DF>
double bisect_newton(F&& f, DF&& df, double lo, double hi, double coarse_width = 1e-6,
                     double tol = 1e-13, int max_iter = 100) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    require(flo * fhi < 0.0, "bisect_newton: endpoints do not bracket a root");
    while (hi - lo > coarse_width) {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if (fm == 0.0) return mid;
        if (flo * fm < 0.0) {
            hi = mid;
            fhi = fm;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < max_iter; ++it) {
        double fx = f(x);
        if (fx == 0.0) return x;
        if (fx * flo < 0.0)
            hi = x;
        else
            lo = x;
        double d = df(x);
        double xn = (d != 0.0) ? x - fx / d : 0.5 * (lo + hi);
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
        if (std::abs(xn - x) <= tol) return xn;
        x = xn;
    }
    return x;
}

/// Golden-section minimizer of a unimodal function on [lo,hi].
template <typename F>
double golden_min(F&& f, double lo, double hi, double tol = 1e-12, int max_iter = 300) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - invphi * (hi - lo);
    double x2 = lo + invphi * (hi - lo);
    double f1 = f(x1);
    double f2 = f(x2);
    for (int it = 0; it < max_iter && (hi - lo) > tol; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - invphi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + invphi * (hi - lo);
            f2 = f(x2);
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace pcahn::roots
