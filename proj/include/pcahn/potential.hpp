#pragma once

#include <cmath>
#include <string>

#include "pcahn/errors.hpp"
#include "pcahn/quadrature.hpp"
#include "pcahn/rootfind.hpp"

namespace pcahn {

enum class Regime { subcritical, critical, supercritical };

inline const char* regime_name(Regime r) {
    switch (r) {
        case Regime::subcritical: return "subcritical";
        case Regime::critical: return "critical";
        default: return "supercritical";
    }
}

/// Exponent pair (theta, p) of the double-well/p-Laplacian model plus the
/// interface length scale epsilon.
struct PotentialParams {
    double theta;
    double p;
    double epsilon;

    PotentialParams(double theta_, double p_, double epsilon_)
        : theta(theta_), p(p_), epsilon(epsilon_) {
        if (!(theta > 1.0) || !(p > 1.0) || !(epsilon > 0.0))
            throw std::invalid_argument("PotentialParams: need theta>1, p>1, epsilon>0");
    }

    Regime regime() const {
        if (std::abs(theta - p) <= 1e-12 * std::max(std::abs(theta), std::abs(p)))
            return Regime::critical;
        return theta < p ? Regime::subcritical : Regime::supercritical;
    }
};

// F(u) = |1-u^2|^theta / (2 theta). The factored form (1-u)(1+u) keeps full
// relative accuracy near the wells.
inline double eval_F(double u, const PotentialParams& P) {
    const double A = (1.0 - u) * (1.0 + u);
    const double t = P.theta;
    double powA;
    if (t == 2.0)
        powA = A * A;
    else if (t == 3.0)
        powA = std::abs(A * A * A);
    else if (t == 4.0) {
        const double A2 = A * A;
        powA = A2 * A2;
    } else
        powA = std::pow(std::abs(A), t);
    return powA / (2.0 * t);
}

// F'(u) = -u (1-u^2) |1-u^2|^{theta-2}, written as -u sgn(A) |A|^{theta-1}
// so the continuous extension at u = +-1 is exact for every theta > 1.
inline double eval_dF(double u, const PotentialParams& P) {
    const double A = (1.0 - u) * (1.0 + u);
    const double t = P.theta;
    if (t == 2.0) return -u * A;
    if (t == 3.0) return -u * A * std::abs(A);
    if (t == 4.0) return -u * A * A * A;
    if (A == 0.0) return 0.0;
    const double s = A > 0.0 ? 1.0 : -1.0;
    return -u * s * std::pow(std::abs(A), t - 1.0);
}

// F''(u) = [(2 theta - 1) u^2 - 1] |1-u^2|^{theta-2}; the a.e. extension is
// used for theta < 2 where F is only C^1 at the wells. |A| is floored so the
// negative power stays finite there.
inline double eval_ddF(double u, const PotentialParams& P) {
    const double A = (1.0 - u) * (1.0 + u);
    const double t = P.theta;
    const double lead = (2.0 * t - 1.0) * u * u - 1.0;
    if (t == 2.0) return lead;
    if (t == 3.0) return lead * std::abs(A);
    if (t == 4.0) return lead * A * A;
    double absA = std::abs(A);
    if (t < 2.0 && absA < 1e-12) absA = 1e-12;
    return lead * std::pow(absA, t - 2.0);
}

/// Unbalanced potential G_beta(u) = F(u) - beta u.
struct TiltedPotential {
    PotentialParams params;
    double beta;

    TiltedPotential(PotentialParams params_, double beta_) : params(params_), beta(beta_) {}
};

inline double eval_G(double u, const TiltedPotential& T) {
    return eval_F(u, T.params) - T.beta * u;
}

inline double eval_dG(double u, const TiltedPotential& T) {
    return eval_dF(u, T.params) - T.beta;
}

inline double eval_ddG(double u, const TiltedPotential& T) { return eval_ddF(u, T.params); }

/// Inflection-related abscissa u_- = -(2 theta - 1)^{-1/2} (and its mirror).
inline double u_minus_of(double theta) { return -1.0 / std::sqrt(2.0 * theta - 1.0); }

namespace detail {

// max of F' over [-1,0], i.e. F'(u_-) = (2t-1)^{1/2-t} (2t-2)^{t-1} for t>=2.
inline double beta_max_closed_form(double theta) {
    return std::pow(2.0 * theta - 1.0, 0.5 - theta) * std::pow(2.0 * theta - 2.0, theta - 1.0);
}

// For theta < 2 the closed form above is not stated by the model; locate the
// maximum of F' on (-1,0) numerically instead.
inline double beta_max_numeric(const PotentialParams& P) {
    auto neg_dF = [&](double u) { return -eval_dF(u, P); };
    double u_star = roots::golden_min(neg_dF, -1.0, 0.0, 1e-14);
    return eval_dF(u_star, P);
}

inline double beta_max_any(const PotentialParams& P) {
    return P.theta >= 2.0 ? beta_max_closed_form(P.theta) : beta_max_numeric(P);
}

} // namespace detail

/// Open interval (F'(u_+), F'(u_-)) of tilts for which G_beta keeps exactly
/// three critical points. Valid for theta >= 2 where the curvature formula
/// holds; smaller theta is rejected.
inline std::pair<double, double> admissible_beta_range(const PotentialParams& P) {
    if (P.theta < 2.0) throw error("admissible_beta_range: range formula unsupported for theta<2");
    const double m = detail::beta_max_closed_form(P.theta);
    return {-m, m};
}

/// Numeric variant of the admissible tilt range, valid for every theta > 1.
inline std::pair<double, double> admissible_beta_range_numeric(const PotentialParams& P) {
    const double m = detail::beta_max_any(P);
    return {-m, m};
}

/// The three critical points of G_beta for a strictly admissible tilt,
/// ordered, plus the inflection abscissas u_±.
struct CriticalPointSet {
    double z_minus;
    double z_max;
    double z_plus_crit;
    double u_minus;
    double u_plus;
};

inline CriticalPointSet critical_points(const TiltedPotential& T) {
    const PotentialParams& P = T.params;
    const double beta = T.beta;
    const double bmax = detail::beta_max_any(P);
    if (!(std::abs(beta) < bmax))
        throw error("critical_points: degenerate critical structure (beta on/outside admissible range)");

    const double um = P.theta >= 2.0
                          ? u_minus_of(P.theta)
                          : roots::golden_min([&](double u) { return -eval_dF(u, P); }, -1.0, 0.0, 1e-14);

    auto g = [&](double u) { return eval_dG(u, T); };
    auto dg = [&](double u) { return eval_ddG(u, T); };

    CriticalPointSet cp{};
    cp.u_minus = u_minus_of(P.theta);
    cp.u_plus = -cp.u_minus;

    if (beta == 0.0) {
        cp.z_minus = -1.0;
        cp.z_max = 0.0;
        cp.z_plus_crit = 1.0;
        return cp;
    }
    // Mirror the beta<0 case through u -> -u.
    if (beta < 0.0) {
        CriticalPointSet m = critical_points(TiltedPotential(P, -beta));
        cp.z_minus = -m.z_plus_crit;
        cp.z_max = -m.z_max;
        cp.z_plus_crit = -m.z_minus;
        return cp;
    }

    // beta > 0: roots sit in (-1, um), (um, 0) and (1, inf).
    cp.z_minus = roots::bisect_newton(g, dg, -1.0, um);
    cp.z_max = roots::bisect_newton(g, dg, um, 0.0);
    double hi = 1.0 + 0.5;
    while (g(hi) < 0.0) hi += 0.5;
    cp.z_plus_crit = roots::bisect_newton(g, dg, 1.0, hi);
    return cp;
}

/// For beta in (0, F'(u_-)): the pair (z_beta^-, z_beta^+) with
/// G(z^+) = G(z^-), G'(z^+) < 0 — the rest value and peak of the pulse.
/// The mirror tilt beta < 0 returns the negated, swapped pair.
inline std::pair<double, double> conjugate_level(const TiltedPotential& T) {
    const PotentialParams& P = T.params;
    if (T.beta == 0.0) throw error("conjugate_level: no admissible beta (beta must be nonzero)");
    if (T.beta < 0.0) {
        auto [zm, zp] = conjugate_level(TiltedPotential(P, -T.beta));
        return {-zp, -zm};
    }
    CriticalPointSet cp = critical_points(T);
    const double level = eval_G(cp.z_minus, T);
    auto f = [&](double u) { return eval_G(u, T) - level; };
    auto df = [&](double u) { return eval_dG(u, T); };
    if (!(f(cp.z_max) > 0.0 && f(cp.z_plus_crit) < 0.0))
        throw error("conjugate_level: conjugate level not found");
    double z_plus = roots::bisect_newton(f, df, cp.z_max, cp.z_plus_crit, 1e-6, 1e-16);
    const double resid = std::abs(eval_G(z_plus, T) - level);
    require(resid <= 1e-12 * (1.0 + std::abs(level)), "conjugate_level: conjugate level not found");
    return {cp.z_minus, z_plus};
}

/// c_p = (p/(p-1))^{(p-1)/p} \int_{-1}^{1} F(s)^{(p-1)/p} ds, the minimal
/// energy of one transition.
inline double c_p(const PotentialParams& P) {
    const double ex = (P.p - 1.0) / P.p;
    auto f = [&](double s) { return std::pow(eval_F(s, P), ex); };
    // Split at the wells and at 0; the integrand is C^0 but not smooth at +-1.
    double I = quad::integrate(f, -1.0, 0.0, 1e-12) + quad::integrate(f, 0.0, 1.0, 1e-12);
    return std::pow(P.p / (P.p - 1.0), ex) * I;
}

/// lambda_p = 2^{1-1/p} (p-1)^{-1/p}.
inline double lambda_p(double p) {
    require(p > 1.0, "lambda_p: requires p>1");
    return std::pow(2.0, 1.0 - 1.0 / p) * std::pow(p - 1.0, -1.0 / p);
}

} // namespace pcahn
