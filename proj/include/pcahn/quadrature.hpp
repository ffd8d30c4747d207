#pragma once

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>
#include <utility>

#include "pcahn/errors.hpp"

namespace pcahn::quad {

/// Adaptive Gauss-Kronrod on [a,b]. Target is an absolute tolerance; the
/// interval is bisected until the embedded error estimate drops below it.
template <typename F>
double integrate(F&& f, double a, double b, double abs_tol = 1e-12) {
    if (a == b) return 0.0;
    double err = 0.0;
    double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        std::forward<F>(f), a, b, 15, abs_tol, &err);
    return v;
}

/// Non-adaptive 15-point Gauss-Legendre, for short smooth subintervals.
template <typename F>
double integrate_fixed(F&& f, double a, double b) {
    if (a == b) return 0.0;
    return boost::math::quadrature::gauss<double, 15>::integrate(std::forward<F>(f), a, b);
}

/// Integrate f over [a,b] where f behaves like |s-e|^{-mu} near the endpoint e
/// (mu < 1, algebraic and integrable). The substitution s = e +- t^q with
/// q = 1/(1-mu) makes the transformed integrand bounded at t=0.
template <typename F>
double integrate_endpoint_singular(F&& f, double a, double b, double mu, bool singular_at_a,
                                   double abs_tol = 1e-12) {
    if (a == b) return 0.0;
    require(mu < 1.0, "integrate_endpoint_singular: non-integrable exponent");
    if (mu <= 0.0) return integrate(std::forward<F>(f), a, b, abs_tol);
    const double q = 1.0 / (1.0 - mu);
    const double len = b - a;
    const double tmax = std::pow(len, 1.0 / q);
    if (singular_at_a) {
        auto g = [&](double t) { return q * std::pow(t, q - 1.0) * f(a + std::pow(t, q)); };
        return integrate(g, 0.0, tmax, abs_tol);
    }
    auto g = [&](double t) { return q * std::pow(t, q - 1.0) * f(b - std::pow(t, q)); };
    return integrate(g, 0.0, tmax, abs_tol);
}

} // namespace pcahn::quad
