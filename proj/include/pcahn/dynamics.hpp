#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pcahn/banded.hpp"
#include "pcahn/errors.hpp"
#include "pcahn/field.hpp"
#include "pcahn/potential.hpp"

namespace pcahn {

/// Concentration-dependent mobility D(u) > 0.
struct MobilityModel {
    enum class Kind { constant, wagner_exponential, mullins };
    Kind kind = Kind::constant;
    double param = 1.0; // value / exponent c / D0

    static MobilityModel constant(double value) { return {Kind::constant, value}; }
    static MobilityModel wagner(double c) { return {Kind::wagner_exponential, c}; }
    static MobilityModel mullins(double D0) { return {Kind::mullins, D0}; }

    double operator()(double u) const {
        switch (kind) {
            case Kind::constant: return param;
            case Kind::wagner_exponential: return std::exp(param * u);
            default: return param / (1.0 + u * u);
        }
    }
    double deriv(double u) const {
        switch (kind) {
            case Kind::constant: return 0.0;
            case Kind::wagner_exponential: return param * std::exp(param * u);
            default: {
                double d = 1.0 + u * u;
                return -param * 2.0 * u / (d * d);
            }
        }
    }
    /// Lower bound of D on |u| <= u_cap (all kinds are even or monotone).
    double min_on_range(double u_cap) const {
        switch (kind) {
            case Kind::constant: return param;
            case Kind::wagner_exponential: return std::exp(-std::abs(param) * u_cap);
            default: return param / (1.0 + u_cap * u_cap);
        }
    }
    std::string name() const {
        switch (kind) {
            case Kind::constant: return "constant";
            case Kind::wagner_exponential: return "wagner";
            default: return "mullins";
        }
    }
};

/// Interface-tracking hooks wired in by the harness; empty functions disable
/// tracking. `distance` measures the drift of the current interface set from
/// the initial one.
struct InterfaceTracker {
    std::function<double(const Field&)> distance;
    std::function<std::vector<double>(const Field&)> positions;
    double delta = std::numeric_limits<double>::infinity();
    bool stop_on_exit = true;

    bool enabled() const { return (bool)distance; }
};

struct SolverConfig {
    double dt_init = 1e-8;
    double dt_min = 1e-15;
    double dt_max = 1e5;
    double newton_tol = 1e-10;
    int newton_max_iter = 30;
    double delta_reg = -1.0; // <0: auto 1e-8/epsilon (0 allowed for p>=2)
    double t_max = 1.0;
    long max_steps = std::numeric_limits<long>::max();
    double du_cap = 0.25;           // max per-step sup change of u
    double energy_increase_tol = 1e-8;
    double u_cap = 2.0;             // beyond this the run counts as blow-up
    double grow_factor = 1.2;
    double shrink_factor = 0.5;
    int easy_newton_iters = 4;
    int linear_row_phase = 512;     // store every row for this many steps
    double row_time_ratio = 1.3;    // then geometric in t
    double snapshot_time_ratio = 1.3;
    InterfaceTracker tracker;

    double effective_delta_reg(double epsilon) const {
        return delta_reg >= 0.0 ? delta_reg : 1e-8 / epsilon;
    }
};

struct SimState {
    Field u;
    double t = 0.0;
    double cumulative_dissipation = 0.0; // running \int ||u~_t||^2 ds
    long step_count = 0;
    double last_dt = 0.0;
    int last_newton_iters = 0;
};

struct EnergyReport {
    double energy = 0.0;
    double rate = 0.0;             // (E_after - E_before) / dt
    double dissipation_rhs = 0.0;  // -(1/eps) \int u~_t^2 / D(u)
};

/// E_eps[u] = sum_faces h eps^{p-1} |Du|^p / p + sum_cells h F(u)/eps, with
/// zero-gradient closure at the boundary faces.
inline double discrete_energy(const Field& u, const PotentialParams& P) {
    const Grid& g = u.grid;
    const double ep = std::pow(P.epsilon, P.p - 1.0) / P.p;
    double grad = 0.0;
    for (int j = 1; j < g.n; ++j) {
        double s = std::abs(u.values[j] - u.values[j - 1]) / g.h;
        double sp;
        if (P.p == 2.0)
            sp = s * s;
        else if (P.p == 3.0)
            sp = s * s * s;
        else
            sp = std::pow(s, P.p);
        grad += sp;
    }
    double well = 0.0;
    for (int i = 0; i < g.n; ++i) well += eval_F(u.values[i], P);
    return g.h * (ep * grad + well / P.epsilon);
}

namespace detail {

// regularized p-flux at a face: Phi(s) = (s^2 + d^2)^{(p-2)/2} s
inline double pflux(double s, double p, double d2) {
    if (p == 2.0) return s;
    return std::pow(s * s + d2, 0.5 * (p - 2.0)) * s;
}
inline double pflux_deriv(double s, double p, double d2) {
    if (p == 2.0) return 1.0;
    double w = s * s + d2;
    if (w == 0.0) return 0.0; // p>2 only; for p<2 callers must regularize
    return std::pow(w, 0.5 * p - 2.0) * ((p - 1.0) * s * s + d2);
}

/// Shared spatial operator pieces of the flux-form scheme.
struct Scheme {
    PotentialParams P;
    MobilityModel D;
    Grid g;
    double d2; // delta_reg^2

    Scheme(const PotentialParams& P_, const MobilityModel& D_, Grid g_, double delta_reg)
        : P(P_), D(D_), g(g_), d2(delta_reg * delta_reg) {}

    // mu_i = -eps^p (q_{i+1/2} - q_{i-1/2})/h + F'(u_i), boundary q = 0
    void chemical_potential(const std::vector<double>& u, std::vector<double>& mu) const {
        const int n = g.n;
        const double epsp = std::pow(P.epsilon, P.p);
        static thread_local std::vector<double> q;
        q.assign(n + 1, 0.0);
        for (int j = 1; j < n; ++j) q[j] = pflux((u[j] - u[j - 1]) / g.h, P.p, d2);
        mu.resize(n);
        for (int i = 0; i < n; ++i) mu[i] = -epsp * (q[i + 1] - q[i]) / g.h + eval_dF(u[i], P);
    }

    // Gf_j = D(u at face) (mu_j - mu_{j-1})/h on interior faces, 0 at a,b
    void face_fluxes(const std::vector<double>& u, const std::vector<double>& mu,
                     std::vector<double>& Gf) const {
        const int n = g.n;
        Gf.assign(n + 1, 0.0);
        for (int j = 1; j < n; ++j)
            Gf[j] = D(0.5 * (u[j - 1] + u[j])) * (mu[j] - mu[j - 1]) / g.h;
    }

    // R_i = u_i - uold_i - (dt/h)(Gf_{i+1} - Gf_i)
    void residual(const std::vector<double>& u, const std::vector<double>& uold, double dt,
                  std::vector<double>& R, std::vector<double>& mu, std::vector<double>& Gf) const {
        chemical_potential(u, mu);
        face_fluxes(u, mu, Gf);
        const int n = g.n;
        R.resize(n);
        for (int i = 0; i < n; ++i) R[i] = u[i] - uold[i] - (dt / g.h) * (Gf[i + 1] - Gf[i]);
    }

    void jacobian(const std::vector<double>& u, const std::vector<double>& mu, double dt,
                  BandedMatrix& J) const {
        const int n = g.n;
        const double epsp = std::pow(P.epsilon, P.p);
        const double h = g.h;
        J.zero();
        for (int i = 0; i < n; ++i) J.at(i, i) = 1.0;

        static thread_local std::vector<double> phi;
        phi.assign(n + 1, 0.0); // dPhi/ds at interior faces
        for (int j = 1; j < n; ++j) phi[j] = pflux_deriv((u[j] - u[j - 1]) / h, P.p, d2);

        // dmu_i/du_{i-1}, du_i, du_{i+1}
        static thread_local std::vector<double> mlo, mdi, mhi;
        mlo.assign(n, 0.0);
        mdi.assign(n, 0.0);
        mhi.assign(n, 0.0);
        const double c = epsp / (h * h);
        for (int i = 0; i < n; ++i) {
            mlo[i] = -c * phi[i];
            mdi[i] = c * (phi[i] + phi[i + 1]) + eval_ddF(u[i], P);
            mhi[i] = -c * phi[i + 1];
        }

        const double r = dt / h;
        for (int j = 1; j < n; ++j) {
            const double um = 0.5 * (u[j - 1] + u[j]);
            const double Dm = D(um);
            const double dD = 0.5 * D.deriv(um);
            const double slope = (mu[j] - mu[j - 1]) / h;
            // dGf_j/du_k for k = j-2 .. j+1
            double dG[4];
            dG[0] = Dm * (-mlo[j - 1]) / h;
            dG[1] = Dm * (mlo[j] - mdi[j - 1]) / h + dD * slope;
            dG[2] = Dm * (mdi[j] - mhi[j - 1]) / h + dD * slope;
            dG[3] = Dm * (mhi[j]) / h;
            for (int o = 0; o < 4; ++o) {
                int k = j - 2 + o;
                if (k < 0 || k >= n) continue;
                // R_{j-1} carries -(dt/h) Gf_j; R_j carries +(dt/h) Gf_j
                if (j - 1 >= 0 && J.in_band(j - 1, k)) J.at(j - 1, k) -= r * dG[o];
                if (j < n && J.in_band(j, k)) J.at(j, k) += r * dG[o];
            }
        }
    }
};

inline double inf_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

} // namespace detail

/// Chemical potential field mu = -eps^p (|u_x|^{p-2} u_x)_x + F'(u) with the
/// zero-flux boundary closure; delta_reg regularizes the p-flux (0 = exact).
inline Field chemical_potential(const Field& u, const PotentialParams& P, double delta_reg = 0.0) {
    detail::Scheme S(P, MobilityModel::constant(1.0), u.grid, delta_reg);
    std::vector<double> mu;
    S.chemical_potential(u.values, mu);
    return Field(u.grid, std::move(mu));
}

namespace detail {

struct StepStats {
    int newton_iters = 0;
    double dt_used = 0.0;
    double energy_before = 0.0;
    double energy_after = 0.0;
    double dissipation_rhs = 0.0;
    double max_face_mobility = 0.0;
};

// One implicit-Euler step at fixed dt. Returns false if Newton fails.
inline bool try_step(const Scheme& S, const std::vector<double>& uold, double dt,
                     double newton_tol, int max_iter, std::vector<double>& u_out, int& iters) {
    const int n = S.g.n;
    std::vector<double> u = uold;
    std::vector<double> R, mu, Gf, du;
    BandedMatrix J(n, 2, 2);
    S.residual(u, uold, dt, R, mu, Gf);
    double norm = inf_norm(R);
    if (!std::isfinite(norm)) return false;
    for (iters = 0; iters < max_iter; ++iters) {
        if (norm <= newton_tol) {
            u_out = u;
            return true;
        }
        S.jacobian(u, mu, dt, J);
        du = R;
        for (double& x : du) x = -x;
        try {
            J.factor();
            J.solve(du);
        } catch (const error&) {
            return false;
        }
        // damped update: halve until the residual norm decreases
        double lambda = 1.0;
        std::vector<double> u_trial(n), R_trial;
        bool accepted = false;
        for (int ls = 0; ls < 12; ++ls) {
            for (int i = 0; i < n; ++i) u_trial[i] = u[i] + lambda * du[i];
            std::vector<double> mu_t, Gf_t;
            S.residual(u_trial, uold, dt, R_trial, mu_t, Gf_t);
            double norm_t = inf_norm(R_trial);
            if (std::isfinite(norm_t) && norm_t < (1.0 - 1e-4 * lambda) * norm) {
                u = u_trial;
                R = R_trial;
                mu = mu_t;
                norm = norm_t;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!accepted) {
            // stalled at the linear-solve noise floor: the residual cannot be
            // pushed below eps*cond(J) at large dt; a negligible update with
            // a small residual in u units still counts as converged
            if (iters >= 1 && inf_norm(du) <= 1e3 * newton_tol && norm <= 1e4 * newton_tol) {
                u_out = u;
                return true;
            }
            return false;
        }
    }
    if (norm <= newton_tol) {
        u_out = u;
        return true;
    }
    return false;
}

// Full accepted step with dt halving, conservation reconstruction and the
// energy/displacement acceptance checks.
inline StepStats advance(const Scheme& S, SimState& state, const SolverConfig& cfg, double& dt) {
    const int n = S.g.n;
    const double h = S.g.h;
    StepStats st;
    st.energy_before = discrete_energy(state.u, S.P);
    std::vector<double> u_new;
    while (true) {
        int iters = 0;
        bool ok = try_step(S, state.u.values, dt, cfg.newton_tol, cfg.newton_max_iter, u_new, iters);
        if (ok) {
            // flux-form reconstruction: uf = uold + (dt/h)(Gf_{i+1}-Gf_i), so
            // mass telescopes to roundoff independently of the Newton residual
            std::vector<double> mu, Gf;
            S.chemical_potential(u_new, mu);
            S.face_fluxes(u_new, mu, Gf);
            Field uf(state.u.grid, std::vector<double>(n));
            bool finite = true;
            double du_max = 0.0;
            for (int i = 0; i < n; ++i) {
                uf.values[i] = state.u.values[i] + (dt / h) * (Gf[i + 1] - Gf[i]);
                if (!std::isfinite(uf.values[i])) finite = false;
                du_max = std::max(du_max, std::abs(uf.values[i] - state.u.values[i]));
            }
            if (!finite) throw error("step: solver blow-up (non-finite state)");
            double amax = 0.0;
            for (double v : uf.values) amax = std::max(amax, std::abs(v));
            if (amax > cfg.u_cap) throw error("step: solver blow-up (|u| exceeded cap)");

            double e_new = discrete_energy(uf, S.P);
            bool accept = du_max <= cfg.du_cap && e_new <= st.energy_before + cfg.energy_increase_tol;
            if (accept) {
                double diss = 0.0, rhs = 0.0, dmax = 0.0;
                for (int j = 1; j < n; ++j) {
                    double Dm = S.D(0.5 * (uf.values[j - 1] + uf.values[j]));
                    diss += Gf[j] * Gf[j];
                    rhs += Gf[j] * Gf[j] / Dm;
                    dmax = std::max(dmax, Dm);
                }
                state.u = std::move(uf);
                state.t += dt;
                state.cumulative_dissipation += dt * h * diss;
                state.step_count += 1;
                state.last_dt = dt;
                state.last_newton_iters = iters;
                st.newton_iters = iters;
                st.dt_used = dt;
                st.energy_after = e_new;
                st.dissipation_rhs = -h * rhs / S.P.epsilon;
                st.max_face_mobility = dmax;
                return st;
            }
        }
        dt *= cfg.shrink_factor;
        if (dt < cfg.dt_min) throw error("step failure: stiffness (dt underflow at dt_min)");
    }
}

} // namespace detail

/// One accepted implicit-Euler step (dt taken from state.last_dt or
/// config.dt_init, halving internally on Newton failure).
inline SimState step(const SimState& state, const PotentialParams& P, const MobilityModel& D,
                     const SolverConfig& cfg) {
    SimState s = state;
    double dt = s.last_dt > 0.0 ? s.last_dt : cfg.dt_init;
    dt = std::clamp(dt, cfg.dt_min, cfg.dt_max);
    detail::Scheme S(P, D, s.u.grid, cfg.effective_delta_reg(P.epsilon));
    detail::advance(S, s, cfg, dt);
    return s;
}

/// Energy rate vs dissipation functional across two consecutive states.
inline EnergyReport dissipation_report(const SimState& before, const SimState& after,
                                       const PotentialParams& P, const MobilityModel& D) {
    const double dt = after.t - before.t;
    require(dt > 0.0, "dissipation_report: states must be consecutive in time");
    EnergyReport rep;
    double e0 = discrete_energy(before.u, P);
    double e1 = discrete_energy(after.u, P);
    rep.energy = e1;
    rep.rate = (e1 - e0) / dt;
    AntiField t0 = antiderivative(before.u);
    AntiField t1 = antiderivative(after.u);
    const Grid& g = before.u.grid;
    double rhs = 0.0;
    for (int j = 1; j < g.n; ++j) {
        double ut = (t1.values[j] - t0.values[j]) / dt;
        double um = 0.5 * (after.u.values[j - 1] + after.u.values[j]);
        rhs += ut * ut / D(um);
    }
    rep.dissipation_rhs = -g.h * rhs / P.epsilon;
    return rep;
}

struct SeriesRow {
    double t = 0.0, dt = 0.0, mass = 0.0, energy = 0.0;
    double dissipation_rhs = 0.0, cumulative_dissipation = 0.0;
    double interface_distance = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> layer_positions;
};

struct Snapshot {
    double t = 0.0;
    double dt_next = 0.0;
    double cumulative_dissipation = 0.0;
    Field u;
};

/// Time series, snapshots and exit bookkeeping of one run.
struct RunRecord {
    std::vector<SeriesRow> rows;
    std::vector<Snapshot> snapshots;
    double t_final = 0.0;
    double t_max = 0.0;
    long total_steps = 0;
    bool exited = false;
    double exit_delta = std::numeric_limits<double>::quiet_NaN();
    double max_mobility = 0.0;
    double initial_energy = 0.0, final_energy = 0.0, initial_mass = 0.0;
    std::string stop_reason;
};

/// Adaptive-dt evolution until t_max, a stop predicate, an interface exit
/// event or max_steps.
inline RunRecord evolve(SimState state, const PotentialParams& P, const MobilityModel& D,
                        const SolverConfig& cfg,
                        const std::function<bool(const SimState&)>& stop = nullptr) {
    detail::Scheme S(P, D, state.u.grid, cfg.effective_delta_reg(P.epsilon));
    RunRecord rec;
    rec.t_max = cfg.t_max;
    rec.initial_energy = discrete_energy(state.u, P);
    rec.initial_mass = mass(state.u);

    const InterfaceTracker& trk = cfg.tracker;
    auto make_row = [&](const SimState& s, double rhs) {
        SeriesRow row;
        row.t = s.t;
        row.dt = s.last_dt;
        row.mass = mass(s.u);
        row.energy = discrete_energy(s.u, P);
        row.dissipation_rhs = rhs;
        row.cumulative_dissipation = s.cumulative_dissipation;
        if (trk.enabled()) {
            row.interface_distance = trk.distance(s.u);
            if (trk.positions) row.layer_positions = trk.positions(s.u);
        }
        return row;
    };

    rec.rows.push_back(make_row(state, 0.0));
    rec.snapshots.push_back({state.t, cfg.dt_init, state.cumulative_dissipation, state.u});

    if (stop && stop(state)) {
        rec.t_final = state.t;
        rec.final_energy = rec.initial_energy;
        rec.stop_reason = "stop_predicate";
        return rec;
    }

    double dt = state.last_dt > 0.0 ? state.last_dt : cfg.dt_init;
    dt = std::clamp(dt, cfg.dt_min, cfg.dt_max);
    double next_row_t = 0.0;
    double next_snap_t = 0.0;
    SeriesRow pending_prev; // most recent unstored row, for exit bracketing
    bool have_pending = false;

    while (state.t < cfg.t_max && state.step_count < cfg.max_steps) {
        detail::StepStats st = detail::advance(S, state, cfg, dt);
        rec.max_mobility = std::max(rec.max_mobility, st.max_face_mobility);
        rec.total_steps = state.step_count;

        SeriesRow row = make_row(state, st.dissipation_rhs);
        bool exit_now = trk.enabled() && std::isfinite(trk.delta) && row.interface_distance > trk.delta;

        bool store = state.step_count <= cfg.linear_row_phase || state.t >= next_row_t || exit_now ||
                     state.t >= cfg.t_max;
        if (store) {
            if (exit_now && have_pending) rec.rows.push_back(pending_prev);
            rec.rows.push_back(row);
            have_pending = false;
            next_row_t = std::max(state.t * cfg.row_time_ratio, state.t + dt);
        } else {
            pending_prev = row;
            have_pending = true;
        }
        if (state.t >= next_snap_t || exit_now || state.t >= cfg.t_max) {
            rec.snapshots.push_back({state.t, dt, state.cumulative_dissipation, state.u});
            next_snap_t = std::max(state.t * cfg.snapshot_time_ratio, state.t + dt);
        }

        if (exit_now) {
            rec.exited = true;
            rec.exit_delta = trk.delta;
            if (trk.stop_on_exit) {
                rec.stop_reason = "exit";
                break;
            }
        }
        if (stop && stop(state)) {
            if (!store) rec.rows.push_back(row);
            rec.stop_reason = "stop_predicate";
            break;
        }
        // grow dt after easy Newton convergence
        if (st.newton_iters <= cfg.easy_newton_iters) dt = std::min(dt * cfg.grow_factor, cfg.dt_max);
        dt = std::min(dt, cfg.dt_max);
        if (state.t < cfg.t_max) dt = std::min(dt, cfg.t_max - state.t + 1e-12 * cfg.t_max);
    }

    if (have_pending) rec.rows.push_back(pending_prev);
    if (rec.stop_reason.empty())
        rec.stop_reason = state.step_count >= cfg.max_steps ? "max_steps" : "t_max";
    if (rec.snapshots.back().t < state.t)
        rec.snapshots.push_back({state.t, dt, state.cumulative_dissipation, state.u});
    rec.t_final = state.t;
    rec.final_energy = discrete_energy(state.u, P);
    rec.total_steps = state.step_count;
    return rec;
}

} // namespace pcahn
