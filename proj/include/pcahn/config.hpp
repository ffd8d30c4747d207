#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pcahn/dynamics.hpp"
#include "pcahn/errors.hpp"
#include "pcahn/metastability.hpp"

namespace pcahn {

/// Flat key-value config with [section] headers and '#' comments.
/// Values are whitespace-separated tokens; keys are unique per section.
class KeyValueConfig {
  public:
    static KeyValueConfig parse(std::istream& is, const std::string& name = "<config>") {
        KeyValueConfig cfg;
        std::string line, section;
        int lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos) continue;
            auto last = line.find_last_not_of(" \t\r");
            std::string body = line.substr(first, last - first + 1);
            if (body.front() == '[') {
                if (body.back() != ']')
                    throw error(name + ":" + std::to_string(lineno) + ": malformed section header");
                section = body.substr(1, body.size() - 2);
                continue;
            }
            auto eq = body.find('=');
            if (eq == std::string::npos)
                throw error(name + ":" + std::to_string(lineno) + ": expected key = value");
            std::string key = body.substr(0, eq);
            std::string val = body.substr(eq + 1);
            auto trim = [](std::string& s) {
                auto a = s.find_first_not_of(" \t");
                auto b = s.find_last_not_of(" \t");
                s = (a == std::string::npos) ? "" : s.substr(a, b - a + 1);
            };
            trim(key);
            trim(val);
            if (key.empty()) throw error(name + ":" + std::to_string(lineno) + ": empty key");
            cfg.values_[section + "." + key] = val;
        }
        return cfg;
    }

    static KeyValueConfig parse_file(const std::string& path) {
        std::ifstream is(path);
        require(is.good(), "cannot open config: " + path);
        return parse(is, path);
    }

    bool has(const std::string& dotted) const { return values_.count(dotted) > 0; }

    std::string get(const std::string& dotted) const {
        auto it = values_.find(dotted);
        require(it != values_.end(), "config: missing key '" + dotted + "'");
        return it->second;
    }
    std::string get_or(const std::string& dotted, const std::string& fallback) const {
        auto it = values_.find(dotted);
        return it == values_.end() ? fallback : it->second;
    }
    double get_double(const std::string& dotted) const { return to_double(dotted, get(dotted)); }
    double get_double_or(const std::string& dotted, double fallback) const {
        return has(dotted) ? get_double(dotted) : fallback;
    }
    long get_long_or(const std::string& dotted, long fallback) const {
        return has(dotted) ? (long)std::llround(get_double(dotted)) : fallback;
    }
    std::vector<double> get_doubles(const std::string& dotted) const {
        std::istringstream ss(get(dotted));
        std::vector<double> out;
        std::string tok;
        while (ss >> tok) out.push_back(to_double(dotted, tok));
        require(!out.empty(), "config: empty list for '" + dotted + "'");
        return out;
    }
    std::vector<std::string> get_tokens(const std::string& dotted) const {
        std::istringstream ss(get(dotted));
        std::vector<std::string> out;
        std::string tok;
        while (ss >> tok) out.push_back(tok);
        return out;
    }

    const std::map<std::string, std::string>& raw() const { return values_; }

    std::string emit() const {
        std::ostringstream os;
        std::string cur = "\x01";
        for (const auto& [k, v] : values_) {
            auto dot = k.find('.');
            std::string sec = k.substr(0, dot);
            if (sec != cur) {
                if (cur != "\x01") os << "\n";
                os << "[" << sec << "]\n";
                cur = sec;
            }
            os << k.substr(dot + 1) << " = " << v << "\n";
        }
        return os.str();
    }

  private:
    std::map<std::string, std::string> values_;

    static double to_double(const std::string& key, const std::string& tok) {
        try {
            size_t pos = 0;
            double v = std::stod(tok, &pos);
            require(pos == tok.size(), "config: trailing characters in '" + key + "'");
            return v;
        } catch (const std::invalid_argument&) {
            throw error("config: '" + key + "' is not a number: " + tok);
        }
    }
};

/// Time-budget rule: a constant, m*exp(Ap_hat/(2 eps)) or l*eps^{-k_hat}.
struct TMaxRule {
    enum class Kind { constant, exponential, algebraic };
    Kind kind = Kind::constant;
    double value = 1.0; // constant, or the multiplier m / l
    double exponent = 0.0; // Ap_hat or k_hat

    double eval(double eps) const {
        switch (kind) {
            case Kind::constant: return value;
            case Kind::exponential: return value * std::exp(exponent / (2.0 * eps));
            default: return value * std::pow(eps, -exponent);
        }
    }

    static TMaxRule parse(const std::vector<std::string>& toks) {
        require(!toks.empty(), "config: empty t_max");
        TMaxRule r;
        if (toks[0] == "exp") {
            require(toks.size() == 3, "config: t_max = exp <m> <Ap_hat>");
            r.kind = Kind::exponential;
            r.value = std::stod(toks[1]);
            r.exponent = std::stod(toks[2]);
        } else if (toks[0] == "alg") {
            require(toks.size() == 3, "config: t_max = alg <l> <k_hat>");
            r.kind = Kind::algebraic;
            r.value = std::stod(toks[1]);
            r.exponent = std::stod(toks[2]);
        } else {
            require(toks.size() == 1, "config: t_max = <constant> | exp m Ap_hat | alg l k_hat");
            r.kind = Kind::constant;
            r.value = std::stod(toks[0]);
        }
        return r;
    }

    std::string describe() const {
        std::ostringstream os;
        os.precision(17);
        switch (kind) {
            case Kind::constant: os << value; break;
            case Kind::exponential: os << "exp " << value << " " << exponent; break;
            default: os << "alg " << value << " " << exponent; break;
        }
        return os.str();
    }
};

/// Everything a harness run needs, validated against module preconditions.
struct ExperimentConfig {
    double theta = 2.0;
    double p = 2.0;
    MobilityModel mobility = MobilityModel::constant(1.0);

    double a = 0.0, b = 1.0;
    int n = 512;

    std::vector<double> jumps{0.35, 0.65};
    int first_sign = -1;
    double r = 0.03;

    double epsilon = 0.08;        // single-run epsilon
    std::vector<double> sweep_epsilon{};
    TMaxRule t_max{};
    double dt_init = 1e-8;
    double dt_min = 1e-15;
    double dt_max = 1e4;
    double newton_tol = 1e-10;
    int newton_max_iter = 30;
    double delta_reg = -1.0;
    double burn_in = 1.0;
    double delta = -1.0;          // exit threshold; <0 means r/2
    std::vector<Interval> K{{-0.9, 0.9}};
    int workers = 1;
    long seed = 12345;

    // steady-state requests
    std::string steady_kind = "heteroclinic";
    double beta = 0.1;
    double kappa = 0.0;
    std::vector<double> layers{0.4, 0.6};
    int n_samples = 2049;

    std::string out_dir = "out";
    bool svg = false;

    double exit_delta() const { return delta > 0.0 ? delta : 0.5 * r; }

    SolverConfig solver(double eps) const {
        SolverConfig s;
        s.dt_init = dt_init;
        s.dt_min = dt_min;
        s.dt_max = dt_max;
        s.newton_tol = newton_tol;
        s.newton_max_iter = newton_max_iter;
        s.delta_reg = delta_reg;
        s.t_max = t_max.eval(eps);
        return s;
    }

    TransitionPattern pattern() const { return TransitionPattern(a, b, jumps, first_sign, r); }
    PotentialParams params(double eps) const { return PotentialParams(theta, p, eps); }
    Grid grid() const { return Grid(a, b, n); }

    static ExperimentConfig from(const KeyValueConfig& kv) {
        ExperimentConfig c;
        c.theta = kv.get_double_or("model.theta", c.theta);
        c.p = kv.get_double_or("model.p", c.p);
        if (kv.has("model.mobility")) {
            auto toks = kv.get_tokens("model.mobility");
            require(toks.size() == 2, "config: mobility = constant|wagner|mullins <param>");
            double prm = std::stod(toks[1]);
            if (toks[0] == "constant")
                c.mobility = MobilityModel::constant(prm);
            else if (toks[0] == "wagner")
                c.mobility = MobilityModel::wagner(prm);
            else if (toks[0] == "mullins")
                c.mobility = MobilityModel::mullins(prm);
            else
                throw error("config: unknown mobility kind: " + toks[0]);
        }
        c.a = kv.get_double_or("domain.a", c.a);
        c.b = kv.get_double_or("domain.b", c.b);
        c.n = (int)kv.get_long_or("domain.n", c.n);
        if (kv.has("pattern.jumps")) c.jumps = kv.get_doubles("pattern.jumps");
        c.first_sign = (int)kv.get_long_or("pattern.first_sign", c.first_sign);
        c.r = kv.get_double_or("pattern.r", c.r);
        c.epsilon = kv.get_double_or("run.epsilon", c.epsilon);
        if (kv.has("sweep.epsilon")) c.sweep_epsilon = kv.get_doubles("sweep.epsilon");
        if (kv.has("run.t_max")) c.t_max = TMaxRule::parse(kv.get_tokens("run.t_max"));
        c.dt_init = kv.get_double_or("run.dt_init", c.dt_init);
        c.dt_min = kv.get_double_or("run.dt_min", c.dt_min);
        c.dt_max = kv.get_double_or("run.dt_max", c.dt_max);
        c.newton_tol = kv.get_double_or("run.newton_tol", c.newton_tol);
        c.newton_max_iter = (int)kv.get_long_or("run.newton_max_iter", c.newton_max_iter);
        c.delta_reg = kv.get_double_or("run.delta_reg", c.delta_reg);
        c.burn_in = kv.get_double_or("run.burn_in", c.burn_in);
        if (kv.has("run.delta") && kv.get("run.delta") != "auto")
            c.delta = kv.get_double("run.delta");
        if (kv.has("run.K")) {
            auto ks = kv.get_doubles("run.K");
            require(ks.size() % 2 == 0 && !ks.empty(), "config: K = lo hi [lo hi ...]");
            c.K.clear();
            for (size_t i = 0; i + 1 < ks.size(); i += 2) c.K.push_back({ks[i], ks[i + 1]});
        }
        c.workers = (int)kv.get_long_or("sweep.workers", c.workers);
        c.seed = kv.get_long_or("run.seed", c.seed);
        c.steady_kind = kv.get_or("steady.kind", c.steady_kind);
        c.beta = kv.get_double_or("steady.beta", kv.get_double_or("potential.beta", c.beta));
        c.kappa = kv.get_double_or("steady.kappa", c.kappa);
        if (kv.has("steady.layers")) c.layers = kv.get_doubles("steady.layers");
        c.n_samples = (int)kv.get_long_or("steady.n_samples", c.n_samples);
        c.out_dir = kv.get_or("output.dir", c.out_dir);
        std::string svg = kv.get_or("output.svg", "false");
        c.svg = (svg == "true" || svg == "1" || svg == "on");
        return c;
    }
};

} // namespace pcahn
