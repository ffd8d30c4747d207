#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pcahn/dynamics.hpp"
#include "pcahn/errors.hpp"
#include "pcahn/field.hpp"
#include "pcahn/phaseplane.hpp"
#include "pcahn/potential.hpp"

namespace pcahn {

/// Piecewise-constant target v with N jumps and separation radius r.
struct TransitionPattern {
    double a, b;
    std::vector<double> jumps; // h_1 < ... < h_N
    int first_sign = -1;       // value of v left of h_1
    double r = 0.0;

    TransitionPattern(double a_, double b_, std::vector<double> jumps_, int first_sign_, double r_)
        : a(a_), b(b_), jumps(std::move(jumps_)), first_sign(first_sign_), r(r_) {
        if (jumps.empty()) throw std::invalid_argument("TransitionPattern: need at least one jump");
        if (first_sign != 1 && first_sign != -1)
            throw std::invalid_argument("TransitionPattern: first_sign must be +-1");
        for (size_t i = 0; i + 1 < jumps.size(); ++i) {
            if (!(jumps[i] < jumps[i + 1]))
                throw std::invalid_argument("TransitionPattern: jumps must be increasing");
            if (!(r < 0.5 * (jumps[i + 1] - jumps[i])))
                throw std::invalid_argument("TransitionPattern: r violates r < (h_{i+1}-h_i)/2");
        }
        if (!(a <= jumps.front() - r) || !(jumps.back() + r <= b))
            throw std::invalid_argument("TransitionPattern: r violates boundary margins");
        if (!(r > 0.0)) throw std::invalid_argument("TransitionPattern: need r > 0");
    }

    int n_layers() const { return (int)jumps.size(); }

    /// v(x) in {-1,+1}
    double v_at(double x) const {
        int s = first_sign;
        for (double h : jumps) {
            if (x < h) break;
            s = -s;
        }
        return (double)s;
    }

    Field sharp_field(const Grid& g) const {
        std::vector<double> vals(g.n);
        for (int i = 0; i < g.n; ++i) vals[i] = v_at(g.node(i));
        return Field(g, std::move(vals));
    }
};

/// Glued translated heteroclinics matching the pattern; plateaus are hard
/// clamped to +-1 where the tail is below 1e-14. Throws "transition overlap"
/// when the profiles cannot come within the clamp of the plateau values at
/// the matching midpoints for this epsilon.
inline Field layered_initial(const TransitionPattern& pat, const PotentialParams& P, const Grid& g) {
    require(g.a == pat.a && g.b == pat.b, "layered_initial: grid does not span the pattern domain");
    detail::Heteroclinic het(P, 1e-14);

    const int N = pat.n_layers();
    // midpoints of consecutive layers bound each transition's region
    std::vector<double> mids(N + 1);
    mids[0] = pat.a;
    for (int i = 1; i < N; ++i) mids[i] = 0.5 * (pat.jumps[i - 1] + pat.jumps[i]);
    mids[N] = pat.b;

    // layers must stay distinguishable: each translate has to reach at least
    // halfway to its plateau before the matching midpoint
    for (int i = 0; i < N; ++i) {
        double margin = std::min(pat.jumps[i] - mids[i], mids[i + 1] - pat.jumps[i]);
        if (std::abs(het(margin)) < 0.5)
            throw error("layered_initial: transition overlap (epsilon too large)");
    }

    std::vector<double> vals(g.n);
    for (int i = 0; i < g.n; ++i) {
        double x = g.node(i);
        int seg = (int)(std::upper_bound(mids.begin(), mids.end(), x) - mids.begin()) - 1;
        seg = std::clamp(seg, 0, N - 1);
        // sign of the rising/falling translate at h_{seg+1}
        double s = (pat.first_sign == -1) ? 1.0 : -1.0;
        if (seg % 2 == 1) s = -s;
        vals[i] = s * het.clamped(x - pat.jumps[seg], 1e-14);
    }
    return Field(g, std::move(vals));
}

// --- interfaces ----------------------------------------------------------

struct Interval {
    double lo, hi;
};

/// Finite union of disjoint closed intervals (possibly degenerate points),
/// remembering the detection set K that produced it.
struct InterfaceSet {
    std::vector<Interval> intervals;
    std::vector<Interval> K;

    bool empty() const { return intervals.empty(); }
};

/// I_K[u] = u^{-1}(K) for K a finite union of closed intervals avoiding +-1;
/// u is treated as piecewise linear between cell centers (constant in the
/// boundary half-cells), with crossings located by linear interpolation.
inline InterfaceSet interfaces_of(const Field& u, const std::vector<Interval>& K) {
    for (const auto& k : K) {
        require(k.lo <= k.hi, "interfaces_of: malformed K interval");
        if ((k.lo <= -1.0 && -1.0 <= k.hi) || (k.lo <= 1.0 && 1.0 <= k.hi))
            throw error("interfaces_of: K touching +-1 rejected");
    }
    const Grid& g = u.grid;
    std::vector<Interval> out;
    auto emit = [&](double lo, double hi) {
        if (lo > hi) return;
        out.push_back({lo, hi});
    };
    for (const auto& k : K) {
        auto inside = [&](double v) { return v >= k.lo && v <= k.hi; };
        // boundary half-cells: constant values
        if (inside(u.values[0])) emit(g.a, g.node(0));
        for (int i = 0; i + 1 < g.n; ++i) {
            double x0 = g.node(i), x1 = g.node(i + 1);
            double v0 = u.values[i], v1 = u.values[i + 1];
            if (v0 == v1) {
                if (inside(v0)) emit(x0, x1);
                continue;
            }
            // segment [x0,x1] maps linearly onto [v0,v1]
            double tlo = ((v0 < v1 ? k.lo : k.hi) - v0) / (v1 - v0);
            double thi = ((v0 < v1 ? k.hi : k.lo) - v0) / (v1 - v0);
            tlo = std::max(tlo, 0.0);
            thi = std::min(thi, 1.0);
            if (tlo <= thi) emit(x0 + tlo * (x1 - x0), x0 + thi * (x1 - x0));
        }
        if (inside(u.values[g.n - 1])) emit(g.node(g.n - 1), g.b);
    }
    std::sort(out.begin(), out.end(), [](const Interval& p, const Interval& q) {
        return p.lo < q.lo || (p.lo == q.lo && p.hi < q.hi);
    });
    // merge touching/overlapping pieces into maximal intervals
    InterfaceSet set;
    set.K = K;
    for (const auto& iv : out) {
        if (!set.intervals.empty() && iv.lo <= set.intervals.back().hi + 1e-15 * g.length())
            set.intervals.back().hi = std::max(set.intervals.back().hi, iv.hi);
        else
            set.intervals.push_back(iv);
    }
    return set;
}

namespace detail {

inline double dist_point_to_set(double x, const InterfaceSet& B) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& iv : B.intervals) {
        if (x < iv.lo)
            best = std::min(best, iv.lo - x);
        else if (x > iv.hi)
            best = std::min(best, x - iv.hi);
        else
            return 0.0;
    }
    return best;
}

inline bool set_contains(const InterfaceSet& A, double x) {
    for (const auto& iv : A.intervals)
        if (x >= iv.lo && x <= iv.hi) return true;
    return false;
}

// sup over A of d(., B): attained at A's endpoints or at midpoints of B's
// gaps that lie inside A.
inline double directed_hausdorff(const InterfaceSet& A, const InterfaceSet& B) {
    double worst = 0.0;
    for (const auto& iv : A.intervals) {
        worst = std::max(worst, dist_point_to_set(iv.lo, B));
        worst = std::max(worst, dist_point_to_set(iv.hi, B));
    }
    for (size_t k = 0; k + 1 < B.intervals.size(); ++k) {
        double m = 0.5 * (B.intervals[k].hi + B.intervals[k + 1].lo);
        if (set_contains(A, m)) worst = std::max(worst, dist_point_to_set(m, B));
    }
    return worst;
}

} // namespace detail

struct SetDistance {
    double value;
    bool empty_flag; // either side empty: value is the +inf sentinel
};

/// Hausdorff distance between interval unions, exact from endpoints.
inline SetDistance set_distance(const InterfaceSet& A, const InterfaceSet& B) {
    if (A.empty() || B.empty())
        return {std::numeric_limits<double>::infinity(), true};
    return {std::max(detail::directed_hausdorff(A, B), detail::directed_hausdorff(B, A)), false};
}

// --- exit times -----------------------------------------------------------

struct ExitTime {
    double t = std::numeric_limits<double>::infinity();
    bool censored = true;
    double t_max = 0.0;
};

/// First time the recorded interface distance exceeds delta, linearly
/// interpolated between recorded rows; censored at t_max when never exceeded.
inline ExitTime exit_time(const RunRecord& run, double delta) {
    bool any = false;
    ExitTime ex;
    ex.t_max = run.t_final;
    const SeriesRow* prev = nullptr;
    for (const auto& row : run.rows) {
        if (!std::isfinite(row.interface_distance)) continue;
        if (any && prev && row.interface_distance > delta) {
            double d0 = prev->interface_distance, d1 = row.interface_distance;
            double w = (d1 > d0) ? (delta - d0) / (d1 - d0) : 1.0;
            w = std::clamp(w, 0.0, 1.0);
            ex.t = prev->t + w * (row.t - prev->t);
            ex.censored = false;
            return ex;
        }
        any = true;
        prev = &row;
    }
    if (!any) throw error("exit_time: run has no interface data");
    return ex;
}

// --- exponent arithmetic ---------------------------------------------------

/// alpha = (p-1)/p + 1/theta, the recurrence k_{m+1} = alpha(k_m + 1) and its
/// limit gamma = theta p/(theta - p) - 1 (finite only for theta > p).
struct ExponentTable {
    double alpha;
    std::vector<double> k;
    double gamma;
};

inline ExponentTable exponent_table(const PotentialParams& P, int M) {
    if (!(P.regime() == Regime::supercritical))
        throw error("exponent_table: supercritical exponents undefined for theta<=p");
    require(M >= 1, "exponent_table: need M>=1");
    ExponentTable tab;
    tab.alpha = (P.p - 1.0) / P.p + 1.0 / P.theta;
    tab.gamma = P.theta * P.p / (P.theta - P.p) - 1.0;
    tab.k.resize(M);
    tab.k[0] = 0.0;
    for (int m = 1; m < M; ++m) {
        tab.k[m] = tab.alpha * (tab.k[m - 1] + 1.0);
        if (!(tab.k[m] > tab.k[m - 1] && tab.k[m] < tab.gamma))
            throw std::logic_error("exponent_table: sequence failed to increase toward gamma");
    }
    return tab;
}

// --- energy gap -------------------------------------------------------------

struct GapReport {
    double gap;            // E_eps[u] - N c_p
    double energy;
    double n_cp;
    double l1_tilde;       // ||u~ - v~||_L1
    bool hypothesis_ok;    // l1_tilde <= delta_hat
};

/// Signed energy gap E_eps[u] - N c_p, with the antiderivative-closeness
/// hypothesis flagged against delta_hat.
inline GapReport lower_bound_gap(const Field& u, const TransitionPattern& pat,
                                 const PotentialParams& P, double delta_hat = 0.05) {
    GapReport rep{};
    rep.energy = discrete_energy(u, P);
    rep.n_cp = pat.n_layers() * c_p(P);
    rep.gap = rep.energy - rep.n_cp;
    AntiField tu = antiderivative(u);
    AntiField tv = antiderivative(pat.sharp_field(u.grid));
    rep.l1_tilde = l1_dist(tu, tv);
    rep.hypothesis_ok = rep.l1_tilde <= delta_hat;
    return rep;
}

// --- scaling fits -----------------------------------------------------------

enum class ScalingModel { exponential, algebraic };

/// Least-squares fit of exit times against epsilon on the model's transformed
/// axes: log T vs 1/eps (exponential) or log T vs log(1/eps) (algebraic).
struct ScalingFit {
    ScalingModel model;
    double slope = 0.0;     // raw slope on the transformed axes
    double a_fit = 0.0;     // exponential: A with T ~ exp(A p / 2 eps)
    double k_fit = 0.0;     // algebraic: T ~ eps^{-k}
    double intercept = 0.0;
    double r_squared = 0.0;
    int n_used = 0;
    int n_censored = 0;
};

struct ExitRow {
    double epsilon;
    double t_exit;
    bool censored;
};

inline ScalingFit fit_scaling(const std::vector<ExitRow>& rows, ScalingModel model, double p) {
    std::vector<double> X, Y;
    int censored = 0;
    for (const auto& r : rows) {
        if (r.censored) {
            ++censored;
            continue;
        }
        require(r.t_exit > 0.0 && r.epsilon > 0.0, "fit_scaling: bad row");
        X.push_back(model == ScalingModel::exponential ? 1.0 / r.epsilon : std::log(1.0 / r.epsilon));
        Y.push_back(std::log(r.t_exit));
    }
    if ((int)X.size() < 3) throw error("fit_scaling: insufficient data (<3 uncensored rows)");
    const int n = (int)X.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        sx += X[i];
        sy += Y[i];
        sxx += X[i] * X[i];
        sxy += X[i] * Y[i];
    }
    double denom = n * sxx - sx * sx;
    require(denom != 0.0, "fit_scaling: degenerate abscissae");
    ScalingFit fit;
    fit.model = model;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss_res = 0, ss_tot = 0, ym = sy / n;
    for (int i = 0; i < n; ++i) {
        double e = Y[i] - (fit.intercept + fit.slope * X[i]);
        ss_res += e * e;
        ss_tot += (Y[i] - ym) * (Y[i] - ym);
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    fit.n_used = n;
    fit.n_censored = censored;
    if (model == ScalingModel::exponential)
        fit.a_fit = 2.0 * fit.slope / p;
    else
        fit.k_fit = fit.slope;
    return fit;
}

} // namespace pcahn
