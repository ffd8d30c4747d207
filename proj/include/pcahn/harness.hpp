#pragma once

#include <atomic>
#include <cmath>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "pcahn/config.hpp"
#include "pcahn/dynamics.hpp"
#include "pcahn/errors.hpp"
#include "pcahn/io.hpp"
#include "pcahn/metastability.hpp"
#include "pcahn/phaseplane.hpp"

namespace pcahn {

/// Outcome of one metastability run at a single epsilon.
struct SingleRun {
    double epsilon = 0.0;
    Field reference;       // burned-in anchor state
    InterfaceSet ref_interfaces;
    bool valid = true;     // anchor state carries the pattern's N components
    double gap_at_anchor = 0.0;
    double n_cp = 0.0;
    RunRecord record;
    ExitTime exit;
    std::string error_text;

    ExitTableRow table_row(const ExperimentConfig& cfg) const {
        ExitTableRow row{};
        row.theta = cfg.theta;
        row.p = cfg.p;
        row.epsilon = epsilon;
        row.n_layers = (int)cfg.jumps.size();
        row.delta = cfg.exit_delta();
        row.k_lo = cfg.K.front().lo;
        row.k_hi = cfg.K.front().hi;
        if (!valid) {
            row.t_exit = std::numeric_limits<double>::quiet_NaN();
            row.censored_flag = 2;
        } else if (exit.censored) {
            row.t_exit = std::numeric_limits<double>::quiet_NaN();
            row.censored_flag = 1;
        } else {
            row.t_exit = exit.t;
            row.censored_flag = 0;
        }
        row.t_max = cfg.t_max.eval(epsilon);
        return row;
    }
};

/// Layered datum -> burn-in -> anchor interfaces and gap -> tracked evolution.
/// The run is invalid (not an N-layer measurement) if the anchor state does
/// not show the pattern's N interface components.
inline SingleRun run_metastability(const ExperimentConfig& cfg, double eps) {
    PotentialParams P = cfg.params(eps);
    Grid g = cfg.grid();
    TransitionPattern pat = cfg.pattern();
    Field u0 = layered_initial(pat, P, g);

    SingleRun out;
    out.epsilon = eps;

    SimState state{u0};
    if (cfg.burn_in > 0.0) {
        SolverConfig burn = cfg.solver(eps);
        burn.t_max = cfg.burn_in;
        RunRecord brec = evolve(state, P, cfg.mobility, burn);
        state = SimState{brec.snapshots.back().u, 0.0, 0.0, 0, brec.snapshots.back().dt_next};
    }
    out.reference = state.u;
    out.ref_interfaces = interfaces_of(state.u, cfg.K);
    out.n_cp = pat.n_layers() * c_p(P);
    out.gap_at_anchor = discrete_energy(state.u, P) - out.n_cp;
    if ((int)out.ref_interfaces.intervals.size() != pat.n_layers()) {
        out.valid = false;
        out.error_text = "anchor state lost the N-layer structure";
        return out;
    }

    SolverConfig cfg_run = cfg.solver(eps);
    InterfaceSet ref = out.ref_interfaces;
    std::vector<Interval> K = cfg.K;
    cfg_run.tracker.delta = cfg.exit_delta();
    cfg_run.tracker.distance = [ref, K](const Field& u) {
        return set_distance(interfaces_of(u, K), ref).value;
    };
    cfg_run.tracker.positions = [K](const Field& u) {
        InterfaceSet s = interfaces_of(u, K);
        std::vector<double> pos;
        pos.reserve(s.intervals.size());
        for (const auto& iv : s.intervals) pos.push_back(0.5 * (iv.lo + iv.hi));
        return pos;
    };
    out.record = evolve(state, P, cfg.mobility, cfg_run);
    out.exit = exit_time(out.record, cfg_run.tracker.delta);
    return out;
}

/// Independent runs over the sweep epsilon list, optionally on worker
/// threads; failures are recorded per row and do not stop the sweep.
inline std::vector<SingleRun> run_sweep(const ExperimentConfig& cfg,
                                        const std::function<void(const SingleRun&)>& on_done =
                                            nullptr) {
    const auto& eps_list = cfg.sweep_epsilon.empty() ? std::vector<double>{cfg.epsilon}
                                                     : cfg.sweep_epsilon;
    std::vector<SingleRun> results(eps_list.size());
    std::atomic<size_t> next{0};
    auto work = [&]() {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= eps_list.size()) break;
            try {
                results[i] = run_metastability(cfg, eps_list[i]);
            } catch (const std::exception& e) {
                results[i].epsilon = eps_list[i];
                results[i].valid = false;
                results[i].error_text = e.what();
            }
            if (on_done) on_done(results[i]);
        }
    };
    int workers = std::max(1, std::min<int>(cfg.workers, (int)eps_list.size()));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    return results;
}

inline std::vector<ExitRow> fit_rows(const std::vector<SingleRun>& runs) {
    std::vector<ExitRow> rows;
    for (const auto& r : runs) {
        if (!r.valid) continue; // invalid rows are reported but never fitted
        rows.push_back({r.epsilon, r.exit.censored ? 0.0 : r.exit.t, r.exit.censored});
    }
    return rows;
}

} // namespace pcahn
