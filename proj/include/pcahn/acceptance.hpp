#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pcahn/harness.hpp"

namespace pcahn::acceptance {

struct CriterionResult {
    std::string id;
    std::string name;
    bool pass = false;
    bool skipped = false;
    std::string detail;
    double seconds = 0.0;
};

namespace detail {

struct Check {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        if (!detail.str().empty()) detail << "; ";
        detail << what << (ok ? " ok" : " FAILED");
    }
};

inline Field tanh_layer(const Grid& g, double eps, double center) {
    std::vector<double> v(g.n);
    for (int i = 0; i < g.n; ++i)
        v[i] = std::tanh((g.node(i) - center) / (std::sqrt(2.0) * eps));
    return Field(g, std::move(v));
}

template <typename F>
CriterionResult timed(const std::string& id, const std::string& name, F&& body) {
    CriterionResult res;
    res.id = id;
    res.name = name;
    auto t0 = std::chrono::steady_clock::now();
    try {
        Check chk;
        body(chk);
        res.pass = chk.pass;
        res.detail = chk.detail.str();
    } catch (const std::exception& e) {
        res.pass = false;
        res.detail = std::string("exception: ") + e.what();
    }
    res.seconds =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0)
            .count() /
        1000.0;
    return res;
}

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

} // namespace detail

// 1. constant fidelity of c_p against the closed forms
inline CriterionResult c01() {
    return detail::timed("C01", "c_p closed-form constants", [](detail::Check& chk) {
        double v22 = c_p(PotentialParams(2.0, 2.0, 0.1));
        double e22 = 2.0 * std::sqrt(2.0) / 3.0;
        chk.require(std::abs(v22 - e22) <= 1e-8,
                    "|c_p(2,2)-2sqrt2/3|=" + detail::fmt(std::abs(v22 - e22)) + " <= 1e-8");
        double v33 = c_p(PotentialParams(3.0, 3.0, 0.1));
        double e33 = 16.0 / (15.0 * std::pow(4.0, 2.0 / 3.0));
        chk.require(std::abs(v33 - e33) <= 1e-5,
                    "|c_p(3,3)-16/(15*4^(2/3))|=" + detail::fmt(std::abs(v33 - e33)) + " <= 1e-5");
    });
}

// 2. heteroclinic against tanh at 10^4 sample points
inline CriterionResult c02() {
    return detail::timed("C02", "heteroclinic matches tanh", [](detail::Check& chk) {
        PotentialParams P(2.0, 2.0, 0.05);
        SteadyProfile prof = heteroclinic_profile(P, 10000);
        double worst = 0.0;
        for (auto& [x, u] : prof.samples)
            worst = std::max(worst, std::abs(u - std::tanh(x / (std::sqrt(2.0) * P.epsilon))));
        chk.require(prof.samples.size() >= 10000, std::to_string(prof.samples.size()) + " samples");
        chk.require(worst <= 1e-7, "sup|u-tanh|=" + detail::fmt(worst) + " <= 1e-7");
    });
}

// 3. pulse regime law
inline CriterionResult c03() {
    return detail::timed("C03", "pulse exists iff p>2", [](detail::Check& chk) {
        PotentialParams P(3.0, 3.0, 0.1);
        TiltedPotential T(P, 0.1);
        PulseProfile pulse = pulse_profile(T);
        const double pref = std::pow(P.epsilon, P.p) * (P.p - 1.0) / P.p;
        const double kappa = eval_G(pulse.z_minus, T);
        double worst = 0.0;
        const int n = 1 << 18;
        const double dx = 2.0 * pulse.omega / n;
        double prev = pulse.eval(-pulse.omega);
        for (int i = 1; i <= n; ++i) {
            double cur = pulse.eval(-pulse.omega + i * dx);
            double du = (cur - prev) / dx;
            double um = 0.5 * (prev + cur);
            double resid = pref * std::pow(std::abs(du), P.p) - (eval_G(um, T) - kappa);
            worst = std::max(worst, std::abs(resid));
            prev = cur;
        }
        chk.require(worst <= 1e-8, "first-integral residual=" + detail::fmt(worst) + " <= 1e-8");
        bool threw = false;
        std::string msg;
        try {
            pulse_profile(TiltedPotential(PotentialParams(2.0, 2.0, 0.1), 0.1));
        } catch (const error& e) {
            threw = true;
            msg = e.what();
        }
        chk.require(threw && msg.find("no compact pulse") != std::string::npos,
                    "p=2 raises the divergence error");
    });
}

// 4. d^eps scaling, monotonicity and round-trip inversion
inline CriterionResult c04() {
    return detail::timed("C04", "transition distance laws", [](detail::Check& chk) {
        PotentialParams P1(3.0, 3.0, 0.05), P2(3.0, 3.0, 0.10);
        double prev = 1e300;
        for (double beta : {0.05, 0.1, 0.2}) {
            double d1 = transition_distance(TiltedPotential(P1, beta));
            double d2 = transition_distance(TiltedPotential(P2, beta));
            chk.require(std::abs(d2 / d1 - 2.0) <= 1e-9,
                        "d(2eps)/d(eps)-2=" + detail::fmt(d2 / d1 - 2.0) + " at beta=" +
                            detail::fmt(beta));
            chk.require(d1 < prev, "d strictly decreasing at beta=" + detail::fmt(beta));
            prev = d1;
            double rec = solve_beta_for_distance(P1, d1);
            chk.require(std::abs(rec - beta) <= 1e-8,
                        "round-trip |beta-beta0|=" + detail::fmt(std::abs(rec - beta)));
        }
    });
}

// 5. steady-state residuals
inline CriterionResult c05() {
    return detail::timed("C05", "steady-state residuals", [](detail::Check& chk) {
        {
            PotentialParams P(1.5, 2.0, 0.01);
            SteadyProfile prof = subcritical_steady(P, 0.0, 1.0, {0.2, 0.5, 0.9});
            Grid g(0.0, 1.0, 4096);
            std::vector<double> v(g.n);
            for (int i = 0; i < g.n; ++i) v[i] = prof.eval(g.node(i));
            double E = discrete_energy(Field(g, v), P);
            double target = 3.0 * c_p(P);
            chk.require(std::abs(E - target) <= 1e-3,
                        "|E-3c_p|=" + detail::fmt(std::abs(E - target)) + " <= 1e-3");
        }
        {
            PotentialParams P(3.0, 3.0, 0.08);
            SteadyProfile chain = build_pulse_chain(P, 0.0, 1.0, {0.4, 0.6});
            TiltedPotential T(P, chain.beta);
            PulseProfile pulse = pulse_profile(T, 65);
            // halo of the peak cusp: x-extent of the linear zone of the weight
            double dG = std::abs(eval_dG(pulse.z_plus, T));
            double ddG = std::abs(eval_ddG(pulse.z_plus, T));
            double ustar = std::max(pulse.z_plus - dG / ddG, 0.0);
            OrbitSpec orbit{T, eval_G(pulse.z_minus, T)};
            pcahn::detail::HalfBranch up(orbit, 0.0, pulse.z_plus, 1.0, 1e-12, 2048);
            double x_lin = up.total() - up.x_of_u(ustar);
            std::vector<double> res;
            residual_check(chain, 4096, &res);
            Grid g(0.0, 1.0, 4096);
            double worst = 0.0;
            const double c = 0.5;
            for (int i = 1; i + 1 < g.n; ++i) {
                double x = g.node(i);
                if (std::abs(std::abs(x - c) - pulse.omega) < 3.5 * g.h) continue; // junctions
                if (std::abs(x - c) < std::max(3.5 * g.h, x_lin)) continue;        // peak cusp
                worst = std::max(worst, std::abs(res[i]));
            }
            chk.require(worst <= 1e-6, "chain residual=" + detail::fmt(worst) +
                                           " <= 1e-6 (peak halo x_lin=" + detail::fmt(x_lin) + ")");
        }
    });
}

struct ConservationRun {
    RunRecord rec;
    SimState checkpoint;
    PotentialParams P{2.0, 2.0, 0.06};
    MobilityModel D = MobilityModel::mullins(1.0);
    double mass0 = 0.0;
};

inline ConservationRun conservation_run() {
    ConservationRun out;
    Grid g(0.0, 1.0, 512);
    TransitionPattern pat(0.0, 1.0, {0.35, 0.65}, -1, 0.03);
    Field u0 = layered_initial(pat, out.P, g);
    out.mass0 = mass(u0);
    SolverConfig cfg;
    cfg.dt_init = 1e-8;
    cfg.t_max = 1e18;
    cfg.max_steps = 10000;
    cfg.linear_row_phase = 1 << 30; // record every accepted step
    SimState s{u0};
    // checkpoint for the dt-refinement study: a state still actively
    // dissipating (the late-run metastable state has rate ~ rhs ~ 0)
    SolverConfig warm = cfg;
    warm.t_max = 0.02;
    warm.max_steps = std::numeric_limits<long>::max();
    RunRecord first = evolve(s, out.P, out.D, warm);
    out.checkpoint = SimState{first.snapshots.back().u, 0.0, 0.0, 0,
                              first.snapshots.back().dt_next};
    SimState s2{u0};
    out.rec = evolve(s2, out.P, out.D, cfg);
    return out;
}

// 6. conservation, energy monotonicity and the dissipation identity
inline CriterionResult c06(const ConservationRun& run) {
    return detail::timed("C06", "conservation and dissipation", [&](detail::Check& chk) {
        chk.require(run.rec.total_steps == 10000,
                    "steps=" + std::to_string(run.rec.total_steps));
        double worst_mass = 0.0, worst_einc = 0.0;
        for (size_t i = 1; i < run.rec.rows.size(); ++i) {
            worst_mass = std::max(worst_mass, std::abs(run.rec.rows[i].mass - run.mass0));
            worst_einc =
                std::max(worst_einc, run.rec.rows[i].energy - run.rec.rows[i - 1].energy);
        }
        chk.require(worst_mass <= 1e-12, "mass drift=" + detail::fmt(worst_mass) + " <= 1e-12");
        chk.require(worst_einc <= 1e-8,
                    "max energy increase=" + detail::fmt(worst_einc) + " <= 1e-8");
        bool ok = false;
        double best = 1e300;
        for (double dt : {1e-6, 5e-7, 2.5e-7, 1.25e-7, 6.25e-8}) {
            SolverConfig c;
            c.dt_init = dt;
            c.dt_max = dt;
            SimState before = run.checkpoint;
            before.last_dt = 0.0;
            SimState after = step(before, run.P, run.D, c);
            EnergyReport rep = dissipation_report(before, after, run.P, run.D);
            double err = std::abs(rep.rate - rep.dissipation_rhs);
            best = std::min(best, err / (std::abs(rep.dissipation_rhs) + 1e-300));
            if (err <= 0.05 * std::abs(rep.dissipation_rhs) + 1e-12) ok = true;
        }
        chk.require(ok, "dissipation identity under dt refinement (best rel err=" +
                            detail::fmt(best) + " <= 0.05)");
    });
}

// 7. energy inequality along the same run
inline CriterionResult c07(const ConservationRun& run) {
    return detail::timed("C07", "energy inequality", [&](detail::Check& chk) {
        double lhs = run.rec.rows.back().cumulative_dissipation;
        double rhs = run.P.epsilon * (run.rec.initial_energy - run.rec.final_energy) *
                     run.rec.max_mobility * 1.05;
        chk.require(lhs <= rhs, "cumulative dissipation " + detail::fmt(lhs) +
                                    " <= eps (E0-Et) maxD * 1.05 = " + detail::fmt(rhs));
    });
}

// 8. spatial order of the chemical potential
inline CriterionResult c08() {
    return detail::timed("C08", "spatial order >= 1.8", [](detail::Check& chk) {
        PotentialParams P(2.0, 2.0, 0.1);
        auto interior_error = [&](int n) {
            Grid gn(0.0, 1.0, n);
            std::vector<double> v(n);
            for (int i = 0; i < n; ++i) v[i] = 0.5 * std::sin(2.0 * M_PI * gn.node(i));
            Field mu = chemical_potential(Field(gn, v), P);
            double worst = 0.0;
            for (int i = 1; i + 1 < n; ++i) {
                double x = gn.node(i);
                double uu = 0.5 * std::sin(2.0 * M_PI * x);
                double uxx = -0.5 * 4.0 * M_PI * M_PI * std::sin(2.0 * M_PI * x);
                worst = std::max(worst,
                                 std::abs(mu.values[i] - (-P.epsilon * P.epsilon * uxx +
                                                          eval_dF(uu, P))));
            }
            return worst;
        };
        double order = std::log2(interior_error(512) / interior_error(1024));
        chk.require(order >= 1.8, "observed order=" + detail::fmt(order) + " >= 1.8");
    });
}

inline ExperimentConfig sweep_config(double theta, double k_window) {
    ExperimentConfig cfg;
    cfg.theta = theta;
    cfg.p = 2.0;
    cfg.mobility = MobilityModel::constant(1.0);
    cfg.a = 0.0;
    cfg.b = 1.0;
    cfg.n = 512;
    cfg.jumps = {0.35, 0.65};
    cfg.first_sign = -1;
    cfg.r = 0.03;
    cfg.sweep_epsilon = {0.10, 0.08, 0.07, 0.06};
    cfg.t_max = TMaxRule{TMaxRule::Kind::constant, 1e7, 0.0};
    cfg.dt_init = 1e-8;
    cfg.dt_max = 1e4;
    cfg.burn_in = 1.0;
    cfg.delta = 0.015; // = r/2
    cfg.K = {{-k_window, k_window}};
    return cfg;
}

// 9. exponentially slow exits in the critical regime (long)
inline CriterionResult c09(std::vector<SingleRun>& runs_out) {
    return detail::timed("C09", "critical sweep: exponential exits", [&](detail::Check& chk) {
        ExperimentConfig cfg = sweep_config(2.0, 0.3);
        runs_out = run_sweep(cfg);
        std::ostringstream ts;
        double prev = 0.0;
        bool monotone = true, all_valid = true, none_censored = true;
        for (const auto& run : runs_out) {
            all_valid = all_valid && run.valid;
            none_censored = none_censored && !run.exit.censored;
            if (run.valid && !run.exit.censored) {
                if (run.exit.t <= prev) monotone = false;
                prev = run.exit.t;
                ts << " T(" << run.epsilon << ")=" << detail::fmt(run.exit.t);
            }
        }
        chk.require(all_valid && none_censored, "all runs valid and uncensored;" + ts.str());
        chk.require(monotone, "exit times strictly increase as eps decreases");
        ScalingFit fe = fit_scaling(fit_rows(runs_out), ScalingModel::exponential, cfg.p);
        ScalingFit fa = fit_scaling(fit_rows(runs_out), ScalingModel::algebraic, cfg.p);
        chk.require(fe.r_squared >= 0.95,
                    "exponential r^2=" + detail::fmt(fe.r_squared) + " >= 0.95");
        chk.require(fe.a_fit > 0.0, "A_fit=" + detail::fmt(fe.a_fit) + " > 0");
        chk.require(fe.r_squared > fa.r_squared, "exponential beats algebraic (r^2 " +
                                                     detail::fmt(fe.r_squared) + " vs " +
                                                     detail::fmt(fa.r_squared) + ")");
    });
}

// 10. algebraically slow exits in the supercritical regime (long)
inline CriterionResult c10() {
    return detail::timed("C10", "supercritical sweep: algebraic exits", [](detail::Check& chk) {
        ExperimentConfig cfg = sweep_config(4.0, 0.05);
        std::vector<SingleRun> runs = run_sweep(cfg);
        std::ostringstream ts;
        int invalid = 0;
        double prev = 0.0;
        bool monotone = true;
        for (const auto& run : runs) {
            if (!run.valid) {
                ++invalid;
                ts << " eps=" << run.epsilon << " invalid(" << run.error_text << ")";
                continue;
            }
            if (!run.exit.censored) {
                if (run.exit.t <= prev) monotone = false;
                prev = run.exit.t;
                ts << " T(" << run.epsilon << ")=" << detail::fmt(run.exit.t);
            }
        }
        chk.require(monotone, "valid uncensored exits increase as eps decreases;" + ts.str());
        ScalingFit fa = fit_scaling(fit_rows(runs), ScalingModel::algebraic, cfg.p);
        ScalingFit fe = fit_scaling(fit_rows(runs), ScalingModel::exponential, cfg.p);
        chk.require(fa.r_squared >= 0.95,
                    "algebraic r^2=" + detail::fmt(fa.r_squared) + " >= 0.95 (" +
                        std::to_string(fa.n_used) + " valid rows, " + std::to_string(invalid) +
                        " invalid)");
        chk.require(fa.k_fit > 0.0, "k_fit=" + detail::fmt(fa.k_fit) + " > 0");
        chk.require(fa.r_squared > fe.r_squared, "algebraic beats exponential (r^2 " +
                                                     detail::fmt(fa.r_squared) + " vs " +
                                                     detail::fmt(fe.r_squared) + ")");
    });
}

// 11. lower-bound gap tracking along the eps=0.08 critical run
inline CriterionResult c11(const std::vector<SingleRun>& critical_runs) {
    return detail::timed("C11", "lower-bound gap tracking", [&](detail::Check& chk) {
        const SingleRun* run = nullptr;
        for (const auto& r : critical_runs)
            if (std::abs(r.epsilon - 0.08) < 1e-12) run = &r;
        chk.require(run != nullptr && run->valid, "eps=0.08 run present");
        if (!run || !run->valid) return;
        double bound = -2.0 * std::abs(run->gap_at_anchor);
        double worst = 0.0;
        for (const auto& row : run->record.rows) {
            if (!run->exit.censored && row.t > run->exit.t) break;
            worst = std::min(worst, row.energy - run->n_cp);
        }
        chk.require(worst >= bound, "min gap=" + detail::fmt(worst) +
                                        " >= -2|gap0|=" + detail::fmt(bound));
    });
}

// 12. interface machinery against brute-force oracles
inline CriterionResult c12() {
    return detail::timed("C12", "interface machinery", [](detail::Check& chk) {
        std::mt19937 rng(20260809);
        std::uniform_int_distribution<int> nd(1, 4);
        std::uniform_real_distribution<double> xd(0.0, 1.0);
        std::uniform_real_distribution<double> wd(0.0, 0.15);
        auto random_set = [&]() {
            int n = nd(rng);
            std::vector<Interval> ivs;
            for (int k = 0; k < n; ++k) {
                double lo = xd(rng);
                ivs.push_back({lo, lo + wd(rng)});
            }
            std::sort(ivs.begin(), ivs.end(), [](auto& a, auto& b) { return a.lo < b.lo; });
            InterfaceSet s;
            for (auto& iv : ivs) {
                if (!s.intervals.empty() && iv.lo <= s.intervals.back().hi)
                    s.intervals.back().hi = std::max(s.intervals.back().hi, iv.hi);
                else
                    s.intervals.push_back(iv);
            }
            return s;
        };
        auto oracle = [](const InterfaceSet& A, const InterfaceSet& B) {
            auto sample = [](const InterfaceSet& S) {
                std::vector<double> xs;
                for (const auto& iv : S.intervals) {
                    int m = std::max(2, (int)(1000 * (iv.hi - iv.lo)) + 2);
                    for (int k = 0; k < m; ++k)
                        xs.push_back(iv.lo + (iv.hi - iv.lo) * k / (m - 1));
                }
                return xs;
            };
            auto xa = sample(A), xb = sample(B);
            double worst = 0.0;
            for (double x : xa) {
                double best = 1e300;
                for (double y : xb) best = std::min(best, std::abs(x - y));
                worst = std::max(worst, best);
            }
            for (double y : xb) {
                double best = 1e300;
                for (double x : xa) best = std::min(best, std::abs(x - y));
                worst = std::max(worst, best);
            }
            return worst;
        };
        double worst_dev = 0.0;
        for (int rep = 0; rep < 100; ++rep) {
            InterfaceSet a = random_set(), b = random_set();
            worst_dev = std::max(worst_dev,
                                 std::abs(set_distance(a, b).value - oracle(a, b)));
        }
        chk.require(worst_dev <= 2e-3,
                    "set_distance vs sampled oracle dev=" + detail::fmt(worst_dev) + " <= 2e-3");

        RunRecord rec;
        for (auto& [t, d] : std::vector<std::pair<double, double>>{
                 {0, 0}, {10, 0.001}, {20, 0.001}, {40, 0.002}, {44, 0.1}, {50, 0.2}}) {
            SeriesRow row;
            row.t = t;
            row.interface_distance = d;
            rec.rows.push_back(row);
        }
        rec.t_final = 50;
        ExitTime ex = exit_time(rec, 0.05);
        chk.require(!ex.censored && ex.t >= 40.0 && ex.t <= 44.0,
                    "scripted exit recovered at t=" + detail::fmt(ex.t) +
                        " within one snapshot interval of the jump");
    });
}

// 13. exponent arithmetic
inline CriterionResult c13() {
    return detail::timed("C13", "exponent arithmetic", [](detail::Check& chk) {
        ExponentTable tab = exponent_table(PotentialParams(4.0, 2.0, 0.1), 40);
        chk.require(tab.alpha == 0.75, "alpha == 0.75 exactly");
        chk.require(tab.gamma == 3.0, "gamma == 3 exactly");
        chk.require(tab.k[2] == 1.3125, "k_3 == 1.3125 exactly");
        chk.require(std::abs(tab.k[39] - tab.gamma) < std::pow(tab.alpha, 39) * tab.gamma,
                    "|k_40 - gamma| < alpha^39 gamma");
    });
}

/// Fast criteria (1-8, 12, 13). Skips the spatial-order check with a notice
/// when the configured grid is too coarse.
inline std::vector<CriterionResult> run_fast(int grid_n = 512) {
    std::vector<CriterionResult> out;
    out.push_back(c01());
    out.push_back(c02());
    out.push_back(c03());
    out.push_back(c04());
    out.push_back(c05());
    ConservationRun run = conservation_run();
    out.push_back(c06(run));
    out.push_back(c07(run));
    if (grid_n >= 512) {
        out.push_back(c08());
    } else {
        CriterionResult r;
        r.id = "C08";
        r.name = "spatial order >= 1.8";
        r.pass = true;
        r.skipped = true;
        r.detail = "skipped: grid too coarse (n=" + std::to_string(grid_n) + " < 512)";
        out.push_back(r);
    }
    out.push_back(c12());
    out.push_back(c13());
    return out;
}

/// Long criteria (9-11): the metastable sweeps.
inline std::vector<CriterionResult> run_long() {
    std::vector<CriterionResult> out;
    std::vector<SingleRun> critical_runs;
    out.push_back(c09(critical_runs));
    out.push_back(c10());
    out.push_back(c11(critical_runs));
    return out;
}

inline int report(const std::vector<CriterionResult>& results, std::FILE* os = stdout) {
    int failures = 0;
    for (const auto& r : results) {
        const char* tag = r.skipped ? "SKIP" : (r.pass ? "PASS" : "FAIL");
        if (!r.pass && !r.skipped) ++failures;
        std::fprintf(os, "%s %s  %-38s [%.2fs] %s\n", r.id.c_str(), tag, r.name.c_str(),
                     r.seconds, r.detail.c_str());
    }
    return failures;
}

} // namespace pcahn::acceptance
