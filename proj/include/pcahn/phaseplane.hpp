#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "pcahn/errors.hpp"
#include "pcahn/field.hpp"
#include "pcahn/potential.hpp"
#include "pcahn/quadrature.hpp"
#include "pcahn/rootfind.hpp"

namespace pcahn {

/// Level set of the first integral: eps^p (p-1)/p |u_x|^p = G_beta(u) - kappa.
struct OrbitSpec {
    TiltedPotential tilted;
    double kappa;
};

namespace detail {

// Orbit weight W(s) = G_beta(s) - kappa. Near an endpoint e with W(e)=0 the
// difference is recovered as an integral of G' from e (15-pt Gauss), which
// keeps full relative accuracy where direct subtraction would cancel.
struct OrbitWeight {
    TiltedPotential tilted;
    double kappa;
    bool pure_F; // beta == 0 && kappa == 0: W(s) = F(s) exactly

    explicit OrbitWeight(const OrbitSpec& o)
        : tilted(o.tilted), kappa(o.kappa), pure_F(o.tilted.beta == 0.0 && o.kappa == 0.0) {}

    double direct(double s) const {
        if (pure_F) return eval_F(s, tilted.params);
        return eval_G(s, tilted) - kappa;
    }

    // W at s = e + sgn*r for an endpoint with W(e) = 0, r the exact offset.
    // Below r_model the offset would be lost in forming e + rho, so the local
    // expansion c r^m (quadratically corrected at turning points) takes over.
    double near_zero_endpoint(double e, double sgn, double r, double m, double c) const {
        if (pure_F) {
            const double A = r * (2.0 - r); // |1 - s^2| at distance r inside a well
            const double th = tilted.params.theta;
            return std::pow(A, th) / (2.0 * th);
        }
        const double r_model = 1e-9 * (1.0 + std::abs(e));
        if (r < r_model) {
            if (std::abs(m - 1.0) < 0.25) return c * r + 0.5 * eval_ddG(e, tilted) * r * r;
            return c * std::pow(r, m);
        }
        auto g = [&](double rho) { return eval_dG(e + sgn * rho, tilted); };
        return sgn * quad::integrate_fixed(g, 0.0, r);
    }

    // Leading coefficient c in W ~ c r^m at a zero endpoint of order m.
    double zero_coeff(double e, double m) const {
        if (std::abs(m - 1.0) < 0.25) return std::abs(eval_dG(e, tilted));
        if (std::abs(m - 2.0) < 0.25 && !pure_F) return 0.5 * eval_ddG(e, tilted);
        if (pure_F) {
            const double th = tilted.params.theta;
            return std::pow(2.0, th) / (2.0 * th); // from F ~ (2r)^theta/(2 theta)
        }
        return 0.5 * eval_ddG(e, tilted);
    }
};

// Local order m of W at endpoint e with W(e) = 0: 1 at a turning point, 2 at
// a non-degenerate critical point, theta at the wells of the pure potential.
inline double endpoint_zero_order(const OrbitWeight& W, double e) {
    if (W.pure_F && std::abs(std::abs(e) - 1.0) < 1e-9) return W.tilted.params.theta;
    if (std::abs(eval_dG(e, W.tilted)) > 1e-11) return 1.0;
    return 2.0;
}

/// Monotone half-branch of an orbit between an anchor (W > 0) and an endpoint
/// where W may vanish. The arc length x (measured from the anchor) is stored
/// as a cumulative table over a graded parameter with analytic slopes;
/// evaluation and inversion use monotone cubic Hermite pieces.
///
/// Endpoint zeros of order m < p use the substitution |u-e| = t^q with
/// q = p/(p-m), which makes dx/dt finite at t=0. Orders m >= p make the
/// transition length diverge; those ends are truncated at |u-e| = tail_cut
/// under a logarithmic parameterization so the table resolves every scale of
/// the tail.
class HalfBranch {
  public:
    HalfBranch(const OrbitSpec& orbit, double u_anchor, double u_end,
               std::optional<double> order_hint = std::nullopt, double tail_cut = 1e-12,
               int n_intervals = 2048)
        : W_(orbit), e_(u_end), anchor_(u_anchor) {
        const PotentialParams& P = orbit.tilted.params;
        p_ = P.p;
        pref_ = P.epsilon * std::pow((P.p - 1.0) / P.p, 1.0 / P.p);
        sgn_ = (u_anchor < u_end) ? 1.0 : -1.0; // u = e - sgn*r... see u_of_t
        R_ = std::abs(u_anchor - u_end);
        require(R_ > 0.0, "HalfBranch: empty span");
        // offsets are measured from the end: u = e - dir_*r with dir_ = sgn_
        dir_ = sgn_;

        if (order_hint) {
            m_ = *order_hint;
            zero_end_ = m_ > 0.0;
        } else {
            const double w_end = W_.direct(u_end);
            const double w_anchor = W_.direct(u_anchor);
            zero_end_ = std::abs(w_end) <= 1e-10 * (1.0 + std::abs(w_anchor));
            m_ = zero_end_ ? endpoint_zero_order(W_, u_end) : 0.0;
        }
        c_ = zero_end_ ? W_.zero_coeff(u_end, m_) : 0.0;
        divergent_ = zero_end_ && m_ >= p_ - 1e-12;
        if (divergent_) {
            log_param_ = true;
            tau_ = tail_cut;
            require(tau_ < R_, "HalfBranch: tail cut larger than span");
        } else {
            q_ = zero_end_ ? p_ / (p_ - m_) : 1.0;
            if (q_ < 1.0) q_ = 1.0;
            require(q_ <= 64.0, "HalfBranch: endpoint order too close to p");
        }
        build_table(n_intervals);
    }

    double total() const { return x_.front(); }
    bool divergent_end() const { return divergent_; }
    double u_anchor() const { return anchor_; }
    double u_end() const { return e_; }
    double u_end_effective() const { return u_.front(); }

    // x-distance from the anchor to u (u between anchor and effective end).
    double x_of_u(double u) const {
        double t = t_of_u(u);
        const int N = (int)t_.size() - 1;
        if (t >= t_[N]) return 0.0;
        if (t <= t_[0]) return x_[0];
        int j = locate_t(t);
        return hermite_x(j, t);
    }

    // Inverse map: u at distance x from the anchor, x in [0, total()].
    double u_of_x(double x) const {
        if (x <= 0.0) return anchor_;
        if (x >= total()) return u_.front();
        int lo = 0, hi = (int)x_.size() - 1; // x_ decreases with index
        while (hi - lo > 1) {
            int mid = (lo + hi) / 2;
            if (x_[mid] >= x)
                lo = mid;
            else
                hi = mid;
        }
        double ta = t_[lo], tb = t_[lo + 1];
        double t = 0.5 * (ta + tb);
        for (int it = 0; it < 80; ++it) {
            double f = hermite_x(lo, t) - x;
            if (f >= 0.0)
                ta = t; // x decreases in t
            else
                tb = t;
            double d = hermite_dx(lo, t);
            double tn = (d != 0.0) ? t - f / d : 0.5 * (ta + tb);
            if (!(tn > ta && tn < tb)) tn = 0.5 * (ta + tb);
            if (std::abs(tn - t) <= 4e-16 * (std::abs(t) + t_[1])) {
                t = tn;
                break;
            }
            t = tn;
        }
        return u_of_t(t);
    }

  private:
    OrbitWeight W_;
    double e_, anchor_, sgn_, dir_, R_;
    double p_, pref_;
    double m_ = 0.0, q_ = 1.0, tau_ = 0.0, c_ = 0.0;
    bool log_param_ = false, divergent_ = false, zero_end_ = false;
    std::vector<double> t_, x_, dxdt_, u_;

    static constexpr double kGrade = 2.0;

    double rad_of_t(double t) const {
        if (log_param_) return tau_ * std::pow(R_ / tau_, t);
        return std::pow(t, q_);
    }
    double drad_dt(double t) const {
        if (log_param_) return rad_of_t(t) * std::log(R_ / tau_);
        return q_ * std::pow(t, q_ - 1.0);
    }
    double t_of_rad(double r) const {
        if (log_param_) return std::log(std::max(r, tau_) / tau_) / std::log(R_ / tau_);
        return std::pow(r, 1.0 / q_);
    }
    double t_max() const { return log_param_ ? 1.0 : std::pow(R_, 1.0 / q_); }
    double u_of_t(double t) const { return e_ - dir_ * rad_of_t(t); }
    double t_of_u(double u) const {
        double r = std::clamp(dir_ * (e_ - u), 0.0, R_);
        return t_of_rad(r);
    }

    double weight(double r) const {
        double w;
        if (zero_end_ && r < 0.25 * R_)
            w = W_.near_zero_endpoint(e_, -dir_, r, m_, c_);
        else
            w = W_.direct(e_ - dir_ * r);
        return std::max(w, 1e-300);
    }

    // dx/dt = pref * W^{-1/p} * dr/dt
    double integrand(double t) const {
        double r = rad_of_t(t);
        return pref_ * std::pow(weight(r), -1.0 / p_) * drad_dt(t);
    }

    void build_table(int n_intervals) {
        const int N = n_intervals;
        const double T = t_max();
        t_.resize(N + 1);
        x_.resize(N + 1);
        dxdt_.resize(N + 1);
        u_.resize(N + 1);
        for (int j = 0; j <= N; ++j) {
            double s = (double)j / N;
            t_[j] = T * std::pow(s, kGrade); // graded toward the singular end
            u_[j] = u_of_t(t_[j]);
        }
        for (int j = 1; j <= N; ++j) dxdt_[j] = integrand(t_[j]);
        if (!zero_end_)
            dxdt_[0] = integrand(0.0); // W > 0 at a regular end, q = 1
        else if (log_param_)
            dxdt_[0] = pref_ * std::pow(weight(tau_), -1.0 / p_) * tau_ * std::log(R_ / tau_);
        else {
            // analytic limit: with q = p/(p-m), dx/dt -> pref * q * c^{-1/p}
            dxdt_[0] = (c_ > 0.0) ? pref_ * q_ * std::pow(c_, -1.0 / p_) : integrand(0.5 * t_[1]);
        }
        x_[N] = 0.0;
        auto f = [&](double t) { return integrand(t); };
        for (int j = N - 1; j >= 0; --j) {
            // the graded grid is already fine: fixed 15-pt Gauss per interval
            double seg = quad::integrate_fixed(f, t_[j], t_[j + 1]);
            x_[j] = x_[j + 1] + seg;
        }
    }

    int locate_t(double t) const {
        int lo = 0, hi = (int)t_.size() - 1;
        while (hi - lo > 1) {
            int mid = (lo + hi) / 2;
            if (t_[mid] <= t)
                lo = mid;
            else
                hi = mid;
        }
        return lo;
    }

    // cubic Hermite for x(t) on [t_j, t_{j+1}]; dx/dt = -integrand
    double hermite_x(int j, double t) const {
        double hseg = t_[j + 1] - t_[j];
        double s = (t - t_[j]) / hseg;
        double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
        double h10 = s * (1 - s) * (1 - s);
        double h01 = s * s * (3 - 2 * s);
        double h11 = s * s * (s - 1);
        return h00 * x_[j] - h10 * hseg * dxdt_[j] + h01 * x_[j + 1] - h11 * hseg * dxdt_[j + 1];
    }
    double hermite_dx(int j, double t) const {
        double hseg = t_[j + 1] - t_[j];
        double s = (t - t_[j]) / hseg;
        double d00 = 6 * s * (s - 1) / hseg;
        double d10 = (1 - s) * (1 - 3 * s);
        double d11 = s * (3 * s - 2);
        return d00 * (x_[j] - x_[j + 1]) - d10 * dxdt_[j] - d11 * dxdt_[j + 1];
    }
};

} // namespace detail

/// Monotone branch x(u) of the first integral on [from,to], with x(from)=0
/// and inversion u(x). Divergent endpoints (non-integrable zeros of the
/// weight) are truncated and flagged rather than treated as errors.
class ProfileInverse {
  public:
    ProfileInverse(const OrbitSpec& orbit, double from, double to, double tail_cut = 1e-12,
                   int n_intervals = 2048) {
        require(from <= to, "profile_inverse: need from <= to");
        from_ = from;
        to_ = to;
        if (from == to) return;
        detail::OrbitWeight W(orbit);
        for (int k = 1; k < 64; ++k) {
            double s = from + (to - from) * k / 64.0;
            if (!(W.direct(s) > 0.0)) throw error("profile_inverse: invalid orbit window");
        }
        const double wf = W.direct(from), wt = W.direct(to);
        const double scale = 1e-10 * (1.0 + std::max(std::abs(wf), std::abs(wt)));
        const bool from_zero = std::abs(wf) <= scale;
        const bool to_zero = std::abs(wt) <= scale;

        if (!from_zero) {
            up_ = std::make_shared<detail::HalfBranch>(orbit, from, to, std::nullopt, tail_cut,
                                                       n_intervals);
        } else if (!to_zero) {
            lo_ = std::make_shared<detail::HalfBranch>(orbit, to, from, std::nullopt, tail_cut,
                                                       n_intervals);
        } else {
            double split = roots::golden_min([&](double s) { return -W.direct(s); }, from, to, 1e-13);
            lo_ = std::make_shared<detail::HalfBranch>(orbit, split, from, std::nullopt, tail_cut,
                                                       n_intervals);
            up_ = std::make_shared<detail::HalfBranch>(orbit, split, to, std::nullopt, tail_cut,
                                                       n_intervals);
        }
        if (lo_) {
            finite_at_from_ = !lo_->divergent_end();
            lo_total_ = lo_->total();
        }
        if (up_) finite_at_to_ = !up_->divergent_end();
    }

    /// x(u), measured from `from` (a truncated branch measures from its cut).
    double operator()(double u) const {
        if (from_ == to_) return 0.0;
        u = std::clamp(u, from_, to_);
        if (lo_ && u <= lo_->u_anchor()) return lo_total_ - lo_->x_of_u(u);
        if (up_) return lo_total_ + up_->x_of_u(u);
        return lo_total_;
    }

    /// u at branch coordinate x in [0, length()].
    double u_at(double x) const {
        if (from_ == to_) return from_;
        if (lo_ && x <= lo_total_) return lo_->u_of_x(lo_total_ - x);
        if (up_) return up_->u_of_x(x - lo_total_);
        return to_;
    }

    double length() const { return lo_total_ + (up_ ? up_->total() : 0.0); }
    bool finite_at_from() const { return finite_at_from_; }
    bool finite_at_to() const { return finite_at_to_; }

  private:
    double from_ = 0.0, to_ = 0.0, lo_total_ = 0.0;
    bool finite_at_from_ = true, finite_at_to_ = true;
    std::shared_ptr<detail::HalfBranch> lo_, up_;
};

inline ProfileInverse profile_inverse(const OrbitSpec& orbit, double from, double to) {
    return ProfileInverse(orbit, from, to);
}

// --- steady profiles ----------------------------------------------------

enum class SteadyKind { heteroclinic, subcritical_layers, pulse_chain, periodic_truncation, constant };

inline const char* steady_kind_name(SteadyKind k) {
    switch (k) {
        case SteadyKind::heteroclinic: return "heteroclinic";
        case SteadyKind::subcritical_layers: return "subcritical_layers";
        case SteadyKind::pulse_chain: return "pulse_chain";
        case SteadyKind::periodic_truncation: return "periodic_truncation";
        default: return "constant";
    }
}

/// A stationary solution of the BVP: discrete samples plus a continuous
/// evaluator over [a,b].
struct SteadyProfile {
    PotentialParams params;
    double beta = 0.0;
    double kappa = 0.0;
    SteadyKind kind = SteadyKind::constant;
    double a = 0.0, b = 0.0;
    std::vector<std::pair<double, double>> samples;
    std::vector<double> layer_locations;
    std::function<double(double)> eval;
    double attained_half_width = std::numeric_limits<double>::quiet_NaN();
};

/// Compactly supported pulse (homoclinic), p > 2.
struct PulseProfile {
    TiltedPotential tilted;
    double omega;
    double z_minus;
    double z_plus;
    std::vector<std::pair<double, double>> samples; // on [-omega, omega]
    std::function<double(double)> eval;
};

namespace detail {

/// Monotone increasing transition U(x), U(0)=0, connecting -1 to +1:
/// attained at finite x for theta<p, asymptotic otherwise (truncated at
/// |U -+ 1| = tail_cut). Shared by heteroclinic profiles and layered data.
struct Heteroclinic {
    std::shared_ptr<ProfileInverse> upper; // branch u in [0, 1), x from 0
    double half_width;
    bool compact;

    explicit Heteroclinic(const PotentialParams& P, double tail_cut = 1e-12,
                          int n_intervals = 8192) {
        OrbitSpec orbit{TiltedPotential(P, 0.0), 0.0};
        upper = std::make_shared<ProfileInverse>(orbit, 0.0, 1.0, tail_cut, n_intervals);
        half_width = upper->length();
        compact = upper->finite_at_to();
    }

    double operator()(double x) const {
        double ax = std::abs(x);
        double u = (ax >= half_width) ? (compact ? 1.0 : upper->u_at(half_width)) : upper->u_at(ax);
        return x < 0.0 ? -u : u;
    }

    // hard clamp to the wells once the tail is below `cut`
    double clamped(double x, double cut) const {
        double v = (*this)(x);
        if (1.0 - std::abs(v) < cut) return v < 0.0 ? -1.0 : 1.0;
        return v;
    }

    double x_of_u(double u) const { return u >= 0.0 ? (*upper)(u) : -(*upper)(-u); }
};

// Merge a u-resolved and an x-resolved sample set of a profile evaluator.
inline std::vector<std::pair<double, double>> merged_samples(
    const std::function<double(double)>& f, const std::function<double(double)>& x_of_u,
    double u_lo, double u_hi, double x_lo, double x_hi, int n) {
    std::vector<double> xs;
    int half = std::max(n / 2, 8);
    for (int i = 0; i <= half; ++i) xs.push_back(x_of_u(u_lo + (u_hi - u_lo) * i / half));
    for (int i = 0; i <= half; ++i) xs.push_back(x_lo + (x_hi - x_lo) * i / half);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end(),
                         [](double p, double q) { return std::abs(p - q) < 1e-14; }),
             xs.end());
    std::vector<std::pair<double, double>> out;
    out.reserve(xs.size());
    for (double x : xs) out.emplace_back(x, f(x));
    return out;
}

} // namespace detail

/// The monotone steady transition at (beta,kappa)=(0,0): compact for theta<p,
/// asymptotic to +-1 (truncated at |u -+ 1| < 1e-12) for theta>=p.
inline SteadyProfile heteroclinic_profile(const PotentialParams& P, int n_samples = 2049) {
    auto het = std::make_shared<detail::Heteroclinic>(P, 1e-12);
    SteadyProfile prof{P};
    prof.kind = SteadyKind::heteroclinic;
    double X = het->half_width;
    prof.a = -X;
    prof.b = X;
    prof.layer_locations = {0.0};
    if (het->compact) prof.attained_half_width = X;
    prof.eval = [het](double x) { return (*het)(x); };
    double x99 = het->x_of_u(0.99);
    double xspan = std::min(X, 1.5 * x99);
    prof.samples = detail::merged_samples(
        prof.eval, [het](double u) { return het->x_of_u(u); }, -(1.0 - 1e-12), 1.0 - 1e-12, -xspan,
        xspan, n_samples);
    return prof;
}

/// Homoclinic pulse for p>2 and admissible tilt; beta<0 mirrors the
/// positive-tilt pulse through u -> -u.
inline PulseProfile pulse_profile(const TiltedPotential& T, int n_samples = 2049,
                                  int table_n = 8192) {
    const PotentialParams& P = T.params;
    if (!(P.p > 2.0)) throw error("pulse_profile: no compact pulse: integral diverges for p<=2");
    if (T.beta == 0.0) throw error("pulse_profile: beta outside admissible range");
    if (T.beta < 0.0) {
        PulseProfile m = pulse_profile(TiltedPotential(P, -T.beta), n_samples, table_n);
        PulseProfile out{T, m.omega, -m.z_plus, -m.z_minus, {}, nullptr};
        out.samples.reserve(m.samples.size());
        for (auto& [x, u] : m.samples) out.samples.emplace_back(x, -u);
        auto base = m.eval;
        out.eval = [base](double x) { return -base(x); };
        return out;
    }
    auto [zm, zp] = conjugate_level(T); // rejects inadmissible beta
    CriticalPointSet cp = critical_points(T);
    OrbitSpec orbit{T, eval_G(zm, T)};

    auto up = std::make_shared<detail::HalfBranch>(orbit, cp.z_max, zp, 1.0, 1e-12, table_n);
    auto dn = std::make_shared<detail::HalfBranch>(orbit, cp.z_max, zm, 2.0, 1e-12, table_n);
    require(!up->divergent_end() && !dn->divergent_end(),
            "pulse_profile: no compact pulse: integral diverges");
    const double xi_up = up->total();
    const double omega = xi_up + dn->total();

    auto right_half = [up, dn, xi_up, omega, zm, zp](double x) {
        if (x <= 0.0) return zp;
        if (x >= omega) return zm;
        if (x <= xi_up) return up->u_of_x(xi_up - x);
        return dn->u_of_x(x - xi_up);
    };
    auto eval = [right_half](double x) { return right_half(std::abs(x)); };
    auto x_of_u = [up, dn, xi_up](double u) {
        if (u >= up->u_anchor()) return xi_up - up->x_of_u(u);
        return xi_up + dn->x_of_u(u);
    };

    PulseProfile pulse{T, omega, zm, zp, {}, eval};
    auto half = detail::merged_samples(eval, x_of_u, zm, zp, 0.0, omega, n_samples);
    std::vector<std::pair<double, double>> full;
    full.reserve(2 * half.size());
    for (auto it = half.rbegin(); it != half.rend(); ++it)
        if (it->first > 0.0) full.emplace_back(-it->first, it->second);
    for (auto& s : half) full.push_back(s);
    pulse.samples = std::move(full);
    return pulse;
}

/// d^eps(beta): distance between the two zero crossings of the pulse,
/// 2 eps ((p-1)/p)^{1/p} \int_0^{z+} [G(s)-G(z-)]^{-1/p} ds.
inline double transition_distance(const TiltedPotential& T) {
    const PotentialParams& P = T.params;
    if (!(P.p > 2.0))
        throw error("transition_distance: no compact pulse: integral diverges for p<=2");
    if (T.beta < 0.0) return transition_distance(TiltedPotential(P, -T.beta));
    auto [zm, zp] = conjugate_level(T);
    const double kappa = eval_G(zm, T);
    OrbitSpec orbit{T, kappa};
    detail::OrbitWeight W(orbit);
    if (!(zp > 0.0) || !(W.direct(0.0) > 0.0))
        throw error("transition_distance: invalid orbit window (pulse does not cross zero)");
    for (int k = 1; k < 32; ++k)
        if (!(W.direct(zp * k / 32.0) > 0.0))
            throw error("transition_distance: invalid orbit window (pulse does not cross zero)");
    detail::HalfBranch half(orbit, 0.0, zp, 1.0, 1e-12, 1024);
    return 2.0 * half.total();
}

namespace detail {

// Largest tilt for which the pulse still crosses zero: beyond it the rest
// level G(z^-) exceeds F(0) and d^eps is undefined.
inline double beta_zero_crossing_limit(const PotentialParams& P) {
    const double bmax = detail::beta_max_any(P);
    auto level_gap = [&](double b) {
        TiltedPotential T(P, b);
        CriticalPointSet cp = critical_points(T);
        return eval_G(cp.z_minus, T) - eval_F(0.0, P);
    };
    double hi = bmax * (1.0 - 1e-9);
    if (level_gap(hi) <= 0.0) return hi;
    return roots::bisect(level_gap, bmax * 1e-12, hi, 1e-15 * bmax);
}

} // namespace detail

/// Unique tilt with d^eps(beta) = target, by bisection on the monotone map.
inline double solve_beta_for_distance(const PotentialParams& P, double target) {
    require(P.p > 2.0, "solve_beta_for_distance: requires p>2");
    require(target > 0.0, "solve_beta_for_distance: target must be positive");
    double hi = detail::beta_zero_crossing_limit(P) * (1.0 - 1e-6);
    double lo = 0.5 * hi;
    auto d_of = [&](double b) { return transition_distance(TiltedPotential(P, b)); };
    int guard = 0;
    while (d_of(lo) < target) {
        lo *= 0.25;
        if (++guard > 600 || lo < 1e-300)
            throw error("solve_beta_for_distance: distance out of range");
    }
    if (d_of(hi) > target) throw error("solve_beta_for_distance: distance out of range");
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double d = d_of(mid);
        if (std::abs(d - target) <= 1e-10 * target) return mid;
        if (d > target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

/// Chain of pulses with zero crossings at the given (paired) layer locations;
/// plateaus sit at z_beta^-. Requires p>2, an even layer count and equal
/// even-indexed gaps h_{2i} - h_{2i-1}.
inline SteadyProfile build_pulse_chain(const PotentialParams& P, double a, double b,
                                       const std::vector<double>& layers) {
    require(P.p > 2.0, "build_pulse_chain: no compact pulse: integral diverges for p<=2");
    const int N = (int)layers.size();
    if (N < 2 || N % 2 != 0)
        throw error("build_pulse_chain: layer spacing incompatible with pulse chain (layers must "
                    "come in pairs)");
    for (int i = 1; i < N; ++i)
        require(layers[i] > layers[i - 1], "build_pulse_chain: layers must be strictly increasing");
    const double gap = layers[1] - layers[0];
    for (int i = 2; i + 1 < N; i += 2)
        if (std::abs(layers[i + 1] - layers[i] - gap) > 1e-8)
            throw error("build_pulse_chain: layer spacing incompatible with pulse chain");

    const double beta = solve_beta_for_distance(P, gap);
    // residual-grade table: interpolation noise is amplified by eps^p/h^2
    PulseProfile pulse = pulse_profile(TiltedPotential(P, beta), 2049, 32768);
    const double omega = pulse.omega;

    std::vector<double> centers;
    for (int i = 0; i + 1 < N; i += 2) centers.push_back(0.5 * (layers[i] + layers[i + 1]));
    if (centers.front() - omega < a || centers.back() + omega > b)
        throw error("build_pulse_chain: layers too close to boundary");
    for (size_t k = 0; k + 1 < centers.size(); ++k)
        if (centers[k] + omega > centers[k + 1] - omega)
            throw error("build_pulse_chain: layer spacing incompatible with pulse chain (pulses "
                        "overlap)");

    const double plateau = pulse.z_minus;
    auto pulse_eval = pulse.eval;
    auto eval = [centers, omega, plateau, pulse_eval](double x) {
        for (double c : centers)
            if (std::abs(x - c) <= omega) return pulse_eval(x - c);
        return plateau;
    };

    SteadyProfile prof{P};
    prof.kind = SteadyKind::pulse_chain;
    prof.beta = beta;
    prof.kappa = eval_G(pulse.z_minus, TiltedPotential(P, beta));
    prof.a = a;
    prof.b = b;
    prof.layer_locations = layers;
    prof.eval = eval;
    const int ns = 4097;
    prof.samples.reserve(ns);
    for (int i = 0; i < ns; ++i) {
        double x = a + (b - a) * i / (ns - 1);
        prof.samples.emplace_back(x, eval(x));
    }
    return prof;
}

/// Steady state with N compact transitions at arbitrary locations; exists
/// only in the subcritical regime theta<p. First plateau sits at -1.
inline SteadyProfile subcritical_steady(const PotentialParams& P, double a, double b,
                                        const std::vector<double>& layers) {
    if (!(P.regime() == Regime::subcritical))
        throw error("subcritical_steady: arbitrary layer placement impossible in this regime");
    const int N = (int)layers.size();
    require(N >= 1, "subcritical_steady: need at least one layer");
    for (int i = 1; i < N; ++i)
        require(layers[i] > layers[i - 1], "subcritical_steady: layers must be strictly increasing");

    auto het = std::make_shared<detail::Heteroclinic>(P);
    require(het->compact, "subcritical_steady: transition is not compact");
    const double w = het->half_width;
    if (layers.front() - w < a || layers.back() + w > b)
        throw error("subcritical_steady: transitions overlap");
    for (int i = 0; i + 1 < N; ++i)
        if (layers[i] + w > layers[i + 1] - w) throw error("subcritical_steady: transitions overlap");

    std::vector<double> hs = layers;
    auto eval = [het, hs](double x) {
        double u = -1.0;
        for (size_t i = 0; i < hs.size(); ++i) {
            double s = (i % 2 == 0) ? 1.0 : -1.0; // transition at h_1 rises
            double xi = x - hs[i];
            if (std::abs(xi) < het->half_width) return s * (*het)(xi);
            if (xi >= het->half_width) u = s;
        }
        return u;
    };

    SteadyProfile prof{P};
    prof.kind = SteadyKind::subcritical_layers;
    prof.a = a;
    prof.b = b;
    prof.layer_locations = layers;
    prof.attained_half_width = w;
    prof.eval = eval;
    const int ns = 4097;
    prof.samples.reserve(ns);
    for (int i = 0; i < ns; ++i) {
        double x = a + (b - a) * i / (ns - 1);
        prof.samples.emplace_back(x, eval(x));
    }
    return prof;
}

/// Period of the closed orbit at level kappa strictly between G(z_minus) and
/// G(z_max).
inline double closed_orbit_period(const OrbitSpec& orbit) {
    const TiltedPotential& T = orbit.tilted;
    CriticalPointSet cp = critical_points(T);
    const double g_lo = eval_G(cp.z_minus, T);
    const double g_hi = eval_G(cp.z_max, T);
    if (!(orbit.kappa > g_lo && orbit.kappa < g_hi))
        throw error("closed_orbit_period: no closed orbit");
    auto f = [&](double u) { return eval_G(u, T) - orbit.kappa; };
    auto df = [&](double u) { return eval_dG(u, T); };
    double u_lo = roots::bisect_newton(f, df, cp.z_minus, cp.z_max, 1e-6, 1e-16);
    double u_hi = roots::bisect_newton(f, df, cp.z_max, cp.z_plus_crit, 1e-6, 1e-16);
    // the half-branch tables handle the turning-point singularities
    detail::HalfBranch lo(orbit, cp.z_max, u_lo, 1.0, 1e-12, 1024);
    detail::HalfBranch hi(orbit, cp.z_max, u_hi, 1.0, 1e-12, 1024);
    return 2.0 * (lo.total() + hi.total());
}

/// Max interior residual of the BVP under the centered discrete p-Laplacian,
/// sampling the profile on a uniform n-cell grid.
inline double residual_check(const SteadyProfile& prof, int n = 4096,
                             std::vector<double>* node_residuals = nullptr) {
    Grid g(prof.a, prof.b, n);
    const PotentialParams& P = prof.params;
    std::vector<double> u(n);
    for (int i = 0; i < n; ++i) u[i] = prof.eval(g.node(i));
    auto flux = [&](double s) {
        if (P.p == 2.0) return s;
        return s == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(s), P.p - 1.0), s);
    };
    const double epsp = std::pow(P.epsilon, P.p);
    double worst = 0.0;
    if (node_residuals) node_residuals->assign(n, 0.0);
    for (int i = 1; i + 1 < n; ++i) {
        double qp = flux((u[i + 1] - u[i]) / g.h);
        double qm = flux((u[i] - u[i - 1]) / g.h);
        double r = -epsp * (qp - qm) / g.h + eval_dF(u[i], P) - prof.beta;
        if (node_residuals) (*node_residuals)[i] = r;
        worst = std::max(worst, std::abs(r));
    }
    return worst;
}

} // namespace pcahn
