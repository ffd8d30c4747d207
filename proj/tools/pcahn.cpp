// pcahn: steady states, simulations, epsilon sweeps and scaling fits for the
// generalized Cahn-Hilliard model with p-Laplacian and degenerate double well.
//
// Exit codes: 0 ok, 1 usage, 2 numerical failure, 3 acceptance failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "pcahn/acceptance.hpp"
#include "pcahn/config.hpp"
#include "pcahn/harness.hpp"
#include "pcahn/io.hpp"

namespace fs = std::filesystem;
using namespace pcahn;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    int workers = 0;
    bool svg = false;
};

ExperimentConfig load_config(const CommonArgs& args) {
    ExperimentConfig cfg;
    if (!args.config_path.empty())
        cfg = ExperimentConfig::from(KeyValueConfig::parse_file(args.config_path));
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (args.workers > 0) cfg.workers = args.workers;
    if (args.svg) cfg.svg = true;
    if (const char* root = std::getenv("PCAHN_OUT_ROOT"))
        cfg.out_dir = std::string(root) + "/" + cfg.out_dir;
    return cfg;
}

void ensure_out(const ExperimentConfig& cfg) { fs::create_directories(cfg.out_dir); }

int cmd_potential(const ExperimentConfig& cfg) {
    PotentialParams P = cfg.params(cfg.epsilon);
    std::cout.precision(12);
    std::cout << "theta=" << P.theta << " p=" << P.p << " epsilon=" << P.epsilon
              << " regime=" << regime_name(P.regime()) << "\n";
    std::cout << "c_p=" << c_p(P) << "\n";
    std::cout << "lambda_p=" << lambda_p(P.p) << "\n";
    auto range = admissible_beta_range_numeric(P);
    std::cout << "admissible_beta=(" << range.first << ", " << range.second << ")";
    if (P.theta >= 2.0) {
        auto cf = admissible_beta_range(P);
        std::cout << "  closed_form=(" << cf.first << ", " << cf.second << ")";
    } else {
        std::cout << "  (numeric: closed form unsupported for theta<2)";
    }
    std::cout << "\n";

    double beta = cfg.beta;
    if (!(std::abs(beta) < range.second))
        throw error("beta outside admissible range (" + std::to_string(beta) + " not in (" +
                    std::to_string(range.first) + ", " + std::to_string(range.second) + "))");
    TiltedPotential T(P, beta);
    CriticalPointSet cp = critical_points(T);
    std::cout << "critical_points beta=" << beta << ": z_minus=" << cp.z_minus
              << " z_max=" << cp.z_max << " z_plus_crit=" << cp.z_plus_crit << " u_pm=("
              << cp.u_minus << ", " << cp.u_plus << ")\n";
    if (beta != 0.0) {
        auto [zm, zp] = conjugate_level(T);
        std::cout << "conjugate_level: z_beta_minus=" << zm << " z_beta_plus=" << zp << "\n";
    }
    if (P.regime() == Regime::supercritical) {
        ExponentTable tab = exponent_table(P, 8);
        std::cout << "exponents: alpha=" << tab.alpha << " gamma=" << tab.gamma << " k=";
        for (double k : tab.k) std::cout << k << " ";
        std::cout << "\n";
    }

    ensure_out(cfg);
    std::ofstream os(cfg.out_dir + "/potential.csv");
    os.precision(17);
    os << "u,F,dF,G_beta\n";
    for (int i = 0; i <= 600; ++i) {
        double u = -1.5 + 3.0 * i / 600.0;
        os << u << "," << eval_F(u, P) << "," << eval_dF(u, P) << "," << eval_G(u, T) << "\n";
    }
    std::cout << "wrote " << cfg.out_dir << "/potential.csv\n";
    return 0;
}

ProfileCsv to_profile_csv(const SteadyProfile& prof) {
    ProfileCsv out;
    out.theta = prof.params.theta;
    out.p = prof.params.p;
    out.epsilon = prof.params.epsilon;
    out.beta = prof.beta;
    out.kappa = prof.kappa;
    out.kind = steady_kind_name(prof.kind);
    out.samples = prof.samples;
    return out;
}

int cmd_steady(const ExperimentConfig& cfg) {
    PotentialParams P = cfg.params(cfg.epsilon);
    SteadyProfile prof{P};
    if (cfg.steady_kind == "heteroclinic")
        prof = heteroclinic_profile(P, cfg.n_samples);
    else if (cfg.steady_kind == "subcritical")
        prof = subcritical_steady(P, cfg.a, cfg.b, cfg.layers);
    else if (cfg.steady_kind == "pulse_chain")
        prof = build_pulse_chain(P, cfg.a, cfg.b, cfg.layers);
    else
        throw error("unknown steady kind: " + cfg.steady_kind +
                    " (heteroclinic|subcritical|pulse_chain)");

    ensure_out(cfg);
    std::string path = cfg.out_dir + "/steady_" + cfg.steady_kind + ".csv";
    {
        std::ofstream os(path);
        require(os.good(), "cannot write " + path);
        write_profile_csv(to_profile_csv(prof), os);
    }
    double resid = residual_check(prof, std::max(cfg.n, 1024));
    std::cout.precision(8);
    std::cout << "kind=" << steady_kind_name(prof.kind) << " beta=" << prof.beta << " domain=["
              << prof.a << ", " << prof.b << "]\n";
    std::cout << "residual_check(n=" << std::max(cfg.n, 1024) << ") = " << resid << "\n";
    std::cout << "wrote " << path << "\n";
    if (cfg.svg) {
        SvgSeries s;
        for (auto& [x, u] : prof.samples) {
            s.x.push_back(x);
            s.y.push_back(u);
        }
        std::ofstream os(cfg.out_dir + "/steady_" + cfg.steady_kind + ".svg");
        write_svg_plot({s}, "steady profile", "x", "u", os);
    }
    return 0;
}

int cmd_pulse(const ExperimentConfig& cfg) {
    PotentialParams P = cfg.params(cfg.epsilon);
    PulseProfile pulse = pulse_profile(TiltedPotential(P, cfg.beta), cfg.n_samples);
    std::cout.precision(12);
    std::cout << "omega=" << pulse.omega << " z_minus=" << pulse.z_minus
              << " z_plus=" << pulse.z_plus << "\n";
    std::cout << "d_eps=" << transition_distance(TiltedPotential(P, cfg.beta)) << "\n";
    ensure_out(cfg);
    ProfileCsv out;
    out.theta = P.theta;
    out.p = P.p;
    out.epsilon = P.epsilon;
    out.beta = cfg.beta;
    out.kappa = eval_G(pulse.z_minus, TiltedPotential(P, cfg.beta));
    out.kind = "pulse";
    out.samples = pulse.samples;
    std::string path = cfg.out_dir + "/pulse.csv";
    std::ofstream os(path);
    require(os.good(), "cannot write " + path);
    write_profile_csv(out, os);
    std::cout << "wrote " << path << "\n";
    return 0;
}

void write_exit_svg(const std::vector<SingleRun>& runs, const std::string& path) {
    SvgSeries exp_axes, alg_axes;
    exp_axes.color = "#1f77b4";
    alg_axes.color = "#d62728";
    for (const auto& r : runs) {
        if (!r.valid || r.exit.censored) continue;
        exp_axes.x.push_back(1.0 / r.epsilon);
        exp_axes.y.push_back(std::log(r.exit.t));
        alg_axes.x.push_back(std::log(1.0 / r.epsilon));
        alg_axes.y.push_back(std::log(r.exit.t));
    }
    std::ofstream os(path);
    write_svg_plot({exp_axes}, "log exit time vs 1/eps", "1/eps", "log T", os);
    std::ofstream os2(path.substr(0, path.size() - 4) + "_loglog.svg");
    write_svg_plot({alg_axes}, "log exit time vs log(1/eps)", "log(1/eps)", "log T", os2);
}

int cmd_simulate(const ExperimentConfig& cfg) {
    SingleRun run = run_metastability(cfg, cfg.epsilon);
    ensure_out(cfg);
    write_run_record(run.record, cfg, cfg.epsilon, cfg.grid(), cfg.out_dir);
    {
        std::ofstream os(cfg.out_dir + "/exit.csv");
        write_exit_table({run.table_row(cfg)}, os);
    }
    std::cout.precision(8);
    std::cout << "epsilon=" << run.epsilon << " valid=" << run.valid
              << " gap_at_anchor=" << run.gap_at_anchor << "\n";
    if (!run.valid)
        std::cout << "run invalid: " << run.error_text << "\n";
    else if (run.exit.censored)
        std::cout << "exit censored at t_max=" << run.exit.t_max << "\n";
    else
        std::cout << "exit t=" << run.exit.t << "\n";
    std::cout << "steps=" << run.record.total_steps << " stop=" << run.record.stop_reason
              << " E0=" << run.record.initial_energy << " Ef=" << run.record.final_energy << "\n";
    std::cout << "wrote " << cfg.out_dir << "/{manifest.json,series.csv,snap_*.csv,exit.csv}\n";
    if (cfg.svg) {
        SvgSeries s;
        for (const auto& row : run.record.rows) {
            if (row.t <= 0.0) continue;
            s.x.push_back(std::log10(row.t));
            s.y.push_back(row.energy);
        }
        std::ofstream os(cfg.out_dir + "/energy.svg");
        write_svg_plot({s}, "energy vs log10 t", "log10 t", "E_eps", os);
    }
    return 0;
}

int cmd_sweep(const ExperimentConfig& cfg) {
    ensure_out(cfg);
    std::vector<SingleRun> runs = run_sweep(cfg, [&](const SingleRun& r) {
        std::cout << "eps=" << r.epsilon << ": "
                  << (!r.valid ? ("invalid (" + r.error_text + ")")
                      : r.exit.censored
                          ? ("censored at t_max=" + std::to_string(r.exit.t_max))
                          : ("exit t=" + std::to_string(r.exit.t)))
                  << "\n";
    });
    std::vector<ExitTableRow> rows;
    for (size_t i = 0; i < runs.size(); ++i) {
        rows.push_back(runs[i].table_row(cfg));
        if (runs[i].valid) {
            std::ostringstream dir;
            dir << cfg.out_dir << "/eps_" << runs[i].epsilon;
            write_run_record(runs[i].record, cfg, runs[i].epsilon, cfg.grid(), dir.str());
        }
    }
    std::string table_path = cfg.out_dir + "/exit_table.csv";
    {
        std::ofstream os(table_path);
        require(os.good(), "cannot write " + table_path);
        write_exit_table(rows, os);
    }
    std::cout << "wrote " << table_path << "\n";
    if (cfg.svg) write_exit_svg(runs, cfg.out_dir + "/exit_times.svg");
    return 0;
}

int cmd_fit(const std::string& table_path, const std::string& model) {
    std::ifstream is(table_path);
    require(is.good(), "cannot open: " + table_path);
    std::vector<ExitTableRow> table = read_exit_table(is, table_path);
    std::vector<ExitRow> rows;
    int invalid = 0;
    double p = 2.0;
    for (const auto& r : table) {
        p = r.p;
        if (r.censored_flag == 2) {
            ++invalid;
            std::cout << "# invalid row (no N-layer reference): eps=" << r.epsilon << "\n";
            continue;
        }
        if (r.censored_flag == 1)
            std::cout << "# censored row: eps=" << r.epsilon << " t_max=" << r.t_max << "\n";
        rows.push_back({r.epsilon, r.t_exit, r.censored_flag == 1});
    }
    ScalingModel m;
    if (model == "exponential")
        m = ScalingModel::exponential;
    else if (model == "algebraic")
        m = ScalingModel::algebraic;
    else
        throw error("unknown fit model: " + model + " (exponential|algebraic)");
    ScalingFit fit = fit_scaling(rows, m, p);
    json out;
    out["model"] = model;
    out["slope"] = fit.slope;
    out["intercept"] = fit.intercept;
    out["r_squared"] = fit.r_squared;
    out["n_used"] = fit.n_used;
    out["n_censored"] = fit.n_censored;
    out["n_invalid"] = invalid;
    if (m == ScalingModel::exponential)
        out["A_fit"] = fit.a_fit;
    else
        out["k_fit"] = fit.k_fit;
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_check(const ExperimentConfig& cfg, bool with_long, bool long_only) {
    std::vector<acceptance::CriterionResult> results;
    if (!long_only)
        for (auto& r : acceptance::run_fast(cfg.n)) results.push_back(r);
    if (with_long)
        for (auto& r : acceptance::run_long()) results.push_back(r);
    int failures = acceptance::report(results);
    std::printf("%zu criteria, %d failed\n", results.size(), failures);
    return failures == 0 ? 0 : 3;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for the generalized Cahn-Hilliard model "
                 "(p-Laplacian, degenerate double well)"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string fit_table, fit_model = "exponential";
    bool check_long = false, check_all = false;

    auto add_common = [&](CLI::App* sub, bool with_workers = false) {
        sub->add_option("--config", args.config_path, "config file (key = value with [sections])");
        sub->add_option("--out", args.out_dir, "output directory override");
        if (with_workers) sub->add_option("--workers", args.workers, "worker threads");
        sub->add_flag("--svg", args.svg, "emit SVG plots");
    };

    auto* sub_potential = app.add_subcommand("potential", "potential constants and critical points");
    add_common(sub_potential);
    auto* sub_steady = app.add_subcommand("steady", "construct steady profiles");
    add_common(sub_steady);
    auto* sub_pulse = app.add_subcommand("pulse", "construct a homoclinic pulse (p>2)");
    add_common(sub_pulse);
    auto* sub_simulate = app.add_subcommand("simulate", "one tracked metastability run");
    add_common(sub_simulate);
    auto* sub_sweep = app.add_subcommand("sweep", "independent runs over the epsilon list");
    add_common(sub_sweep, true);
    auto* sub_fit = app.add_subcommand("fit", "least-squares scaling fit of an exit-time table");
    sub_fit->add_option("--table", fit_table, "exit-time table csv")->required();
    sub_fit->add_option("--model", fit_model, "exponential|algebraic");
    auto* sub_check = app.add_subcommand("check", "run the acceptance criteria");
    add_common(sub_check);
    sub_check->add_flag("--long", check_long, "only the long (sweep) criteria");
    sub_check->add_flag("--all", check_all, "fast and long criteria");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (sub_potential->parsed()) return cmd_potential(load_config(args));
        if (sub_steady->parsed()) return cmd_steady(load_config(args));
        if (sub_pulse->parsed()) return cmd_pulse(load_config(args));
        if (sub_simulate->parsed()) return cmd_simulate(load_config(args));
        if (sub_sweep->parsed()) return cmd_sweep(load_config(args));
        if (sub_fit->parsed()) return cmd_fit(fit_table, fit_model);
        if (sub_check->parsed())
            return cmd_check(load_config(args), check_long || check_all, check_long && !check_all);
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
