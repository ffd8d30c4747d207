#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pcahn/config.hpp"
#include "pcahn/dynamics.hpp"
#include "pcahn/errors.hpp"
#include "pcahn/field.hpp"
#include "pcahn/metastability.hpp"

namespace pcahn {

using json = nlohmann::json;

// FNV-1a, for the provenance hash of manifests
inline std::string fnv1a_hex(const std::string& s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

inline json manifest_json(const ExperimentConfig& cfg, double eps, const Grid& g,
                          const RunRecord& rec) {
    json m;
    m["model"] = {{"theta", cfg.theta}, {"p", cfg.p}, {"epsilon", eps}};
    m["mobility"] = {{"kind", cfg.mobility.name()}, {"param", cfg.mobility.param}};
    m["grid"] = {{"a", g.a}, {"b", g.b}, {"n", g.n}};
    m["pattern"] = {{"jumps", cfg.jumps}, {"first_sign", cfg.first_sign}, {"r", cfg.r}};
    m["solver"] = {{"dt_init", cfg.dt_init},       {"dt_min", cfg.dt_min},
                   {"dt_max", cfg.dt_max},         {"newton_tol", cfg.newton_tol},
                   {"newton_max_iter", cfg.newton_max_iter}, {"delta_reg", cfg.delta_reg},
                   {"burn_in", cfg.burn_in},       {"t_max_rule", cfg.t_max.describe()}};
    json ks = json::array();
    for (const auto& k : cfg.K) ks.push_back({k.lo, k.hi});
    m["tracking"] = {{"K", ks}, {"delta", cfg.exit_delta()}};
    m["result"] = {{"t_final", rec.t_final},
                   {"total_steps", rec.total_steps},
                   {"stop_reason", rec.stop_reason},
                   {"exited", rec.exited},
                   {"initial_energy", rec.initial_energy},
                   {"final_energy", rec.final_energy},
                   {"initial_mass", rec.initial_mass},
                   {"max_mobility", rec.max_mobility}};
    m["provenance_hash"] = fnv1a_hex(m.dump());
    return m;
}

/// series CSV: t, dt, mass, energy, dissipation_rhs, cumulative_dissipation,
/// then layer positions as trailing columns.
inline void write_series_csv(const RunRecord& rec, std::ostream& os) {
    os.precision(17);
    size_t max_layers = 0;
    for (const auto& r : rec.rows) max_layers = std::max(max_layers, r.layer_positions.size());
    os << "t,dt,mass,energy,dissipation_rhs,cumulative_dissipation";
    for (size_t k = 0; k < max_layers; ++k) os << ",h" << (k + 1);
    os << "\n";
    for (const auto& r : rec.rows) {
        os << r.t << "," << r.dt << "," << r.mass << "," << r.energy << "," << r.dissipation_rhs
           << "," << r.cumulative_dissipation;
        for (size_t k = 0; k < max_layers; ++k) {
            os << ",";
            if (k < r.layer_positions.size()) os << r.layer_positions[k];
        }
        os << "\n";
    }
}

/// One row of the exit-time table.
struct ExitTableRow {
    double theta, p, epsilon;
    int n_layers;
    double delta, k_lo, k_hi;
    double t_exit; // NaN when not available
    int censored_flag; // 0 = exit, 1 = censored at t_max, 2 = invalid (no N-layer reference)
    double t_max;
};

inline void write_exit_table(const std::vector<ExitTableRow>& rows, std::ostream& os) {
    os.precision(17);
    os << "theta,p,epsilon,N,delta,K_lo,K_hi,t_exit,censored_flag,t_max\n";
    for (const auto& r : rows)
        os << r.theta << "," << r.p << "," << r.epsilon << "," << r.n_layers << "," << r.delta
           << "," << r.k_lo << "," << r.k_hi << "," << r.t_exit << "," << r.censored_flag << ","
           << r.t_max << "\n";
}

inline std::vector<ExitTableRow> read_exit_table(std::istream& is,
                                                 const std::string& name = "<table>") {
    std::vector<ExitTableRow> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#' || line.rfind("theta,", 0) == 0) continue;
        ExitTableRow r{};
        int flag = 0;
        int got = std::sscanf(line.c_str(), "%lf,%lf,%lf,%d,%lf,%lf,%lf,%lf,%d,%lf", &r.theta,
                              &r.p, &r.epsilon, &r.n_layers, &r.delta, &r.k_lo, &r.k_hi, &r.t_exit,
                              &flag, &r.t_max);
        if (got != 10)
            throw error(name + ":" + std::to_string(lineno) + ": bad exit-table row");
        r.censored_flag = flag;
        rows.push_back(r);
    }
    return rows;
}

/// Steady/pulse profile samples with the generating parameters.
struct ProfileCsv {
    double theta = 0, p = 0, epsilon = 0, beta = 0, kappa = 0;
    std::string kind;
    std::vector<std::pair<double, double>> samples;
};

inline void write_profile_csv(const ProfileCsv& prof, std::ostream& os) {
    os.precision(17);
    os << "# theta=" << prof.theta << " p=" << prof.p << " epsilon=" << prof.epsilon
       << " beta=" << prof.beta << " kappa=" << prof.kappa << " kind=" << prof.kind << "\n";
    os << "x,u\n";
    for (auto& [x, u] : prof.samples) os << x << "," << u << "\n";
}

inline ProfileCsv read_profile_csv(std::istream& is, const std::string& name = "<profile>") {
    ProfileCsv prof;
    std::string line;
    int lineno = 0;
    bool have_header = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            char kind[64] = {0};
            if (std::sscanf(line.c_str(), "# theta=%lf p=%lf epsilon=%lf beta=%lf kappa=%lf kind=%63s",
                            &prof.theta, &prof.p, &prof.epsilon, &prof.beta, &prof.kappa,
                            kind) == 6) {
                prof.kind = kind;
                have_header = true;
            }
            continue;
        }
        if (line.rfind("x,", 0) == 0) continue;
        double x, u;
        if (std::sscanf(line.c_str(), "%lf,%lf", &x, &u) != 2)
            throw error(name + ":" + std::to_string(lineno) + ": bad profile row");
        prof.samples.emplace_back(x, u);
    }
    require(have_header, name + ": missing profile header");
    return prof;
}

/// Minimal SVG polyline plot (one or more series on shared axes).
struct SvgSeries {
    std::vector<double> x, y;
    std::string color = "#1f77b4";
};

inline void write_svg_plot(const std::vector<SvgSeries>& series, const std::string& title,
                           const std::string& xlabel, const std::string& ylabel,
                           std::ostream& os) {
    const int W = 720, H = 480, ML = 70, MR = 20, MT = 40, MB = 50;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (!(xmax > xmin)) xmax = xmin + 1.0;
    if (!(ymax > ymin)) ymax = ymin + 1.0;
    auto X = [&](double x) { return ML + (x - xmin) / (xmax - xmin) * (W - ML - MR); };
    auto Y = [&](double y) { return H - MB - (y - ymin) / (ymax - ymin) * (H - MT - MB); };
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
    os << "<rect width='100%' height='100%' fill='white'/>\n";
    os << "<text x='" << W / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title
       << "</text>\n";
    os << "<line x1='" << ML << "' y1='" << H - MB << "' x2='" << W - MR << "' y2='" << H - MB
       << "' stroke='black'/>\n";
    os << "<line x1='" << ML << "' y1='" << MT << "' x2='" << ML << "' y2='" << H - MB
       << "' stroke='black'/>\n";
    os << "<text x='" << W / 2 << "' y='" << H - 12 << "' text-anchor='middle' font-size='12'>"
       << xlabel << "</text>\n";
    os << "<text x='16' y='" << H / 2 << "' font-size='12' transform='rotate(-90 16 " << H / 2
       << ")' text-anchor='middle'>" << ylabel << "</text>\n";
    os.precision(8);
    for (const auto& s : series) {
        os << "<polyline fill='none' stroke='" << s.color << "' stroke-width='1.5' points='";
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            os << X(s.x[i]) << "," << Y(s.y[i]) << " ";
        }
        os << "'/>\n";
    }
    // axis range labels
    os.precision(6);
    os << "<text x='" << ML << "' y='" << H - MB + 16 << "' font-size='11'>" << xmin
       << "</text>\n";
    os << "<text x='" << W - MR << "' y='" << H - MB + 16
       << "' text-anchor='end' font-size='11'>" << xmax << "</text>\n";
    os << "<text x='" << ML - 6 << "' y='" << H - MB << "' text-anchor='end' font-size='11'>"
       << ymin << "</text>\n";
    os << "<text x='" << ML - 6 << "' y='" << MT + 4 << "' text-anchor='end' font-size='11'>"
       << ymax << "</text>\n";
    os << "</svg>\n";
}

/// Write a full run record (manifest + series + snapshots) under dir.
inline void write_run_record(const RunRecord& rec, const ExperimentConfig& cfg, double eps,
                             const Grid& g, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    {
        std::ofstream os(dir + "/manifest.json");
        require(os.good(), "cannot write " + dir + "/manifest.json");
        os << manifest_json(cfg, eps, g, rec).dump(2) << "\n";
    }
    {
        std::ofstream os(dir + "/series.csv");
        require(os.good(), "cannot write " + dir + "/series.csv");
        write_series_csv(rec, os);
    }
    std::ostringstream hdr;
    hdr.precision(17);
    hdr << "theta=" << cfg.theta << " p=" << cfg.p << " epsilon=" << eps;
    for (size_t i = 0; i < rec.snapshots.size(); ++i) {
        std::ostringstream nm;
        nm << dir << "/snap_" << std::setw(4) << std::setfill('0') << i << ".csv";
        std::ostringstream h2;
        h2 << hdr.str() << " t=" << std::setprecision(17) << rec.snapshots[i].t
           << " dt_next=" << rec.snapshots[i].dt_next
           << " cumulative_dissipation=" << rec.snapshots[i].cumulative_dissipation;
        write_field_csv(rec.snapshots[i].u, nm.str(), h2.str());
    }
}

} // namespace pcahn
