#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "pcahn/dynamics.hpp"
#include "pcahn/phaseplane.hpp"

using namespace pcahn;

namespace {

Field tanh_layer(const Grid& g, double eps, double center = 0.0) {
    std::vector<double> v(g.n);
    for (int i = 0; i < g.n; ++i)
        v[i] = std::tanh((g.node(i) - center) / (std::sqrt(2.0) * eps));
    return Field(g, std::move(v));
}

Field two_layers(const Grid& g, double eps, double h1, double h2) {
    std::vector<double> v(g.n);
    for (int i = 0; i < g.n; ++i) {
        double x = g.node(i);
        double mid = 0.5 * (h1 + h2);
        v[i] = (x < mid) ? std::tanh((x - h1) / (std::sqrt(2.0) * eps))
                         : -std::tanh((x - h2) / (std::sqrt(2.0) * eps));
    }
    return Field(g, std::move(v));
}

} // namespace

TEST_CASE("mobility models") {
    CHECK(MobilityModel::constant(2.0)(0.7) == 2.0);
    CHECK(MobilityModel::wagner(0.5)(1.0) == Catch::Approx(std::exp(0.5)));
    CHECK(MobilityModel::mullins(1.0)(1.0) == Catch::Approx(0.5));
    CHECK(MobilityModel::mullins(1.0).min_on_range(2.0) == Catch::Approx(0.2));
    for (auto D : {MobilityModel::constant(1.5), MobilityModel::wagner(0.8),
                   MobilityModel::mullins(2.0)}) {
        for (double u : {-1.2, -0.3, 0.0, 0.9}) {
            double fd = (D(u + 1e-6) - D(u - 1e-6)) / 2e-6;
            CHECK(D.deriv(u) == Catch::Approx(fd).margin(1e-8));
        }
    }
}

TEST_CASE("discrete energy basics") {
    Grid g(-1.0, 1.0, 4096);
    PotentialParams P(2.0, 2.0, 0.05);
    CHECK(discrete_energy(Field::constant(g, 1.0), P) == 0.0);
    // single tanh layer carries one unit of c_p
    double e = discrete_energy(tanh_layer(g, 0.05), P);
    CHECK(e == Catch::Approx(2.0 * std::sqrt(2.0) / 3.0).margin(1e-3));
}

TEST_CASE("chemical potential of constants and manufactured solutions") {
    Grid g(0.0, 1.0, 512);
    PotentialParams P(2.0, 2.0, 0.1);
    SECTION("constant field gives F'(c)") {
        Field mu = chemical_potential(Field::constant(g, 0.3), P);
        for (int i = 0; i < g.n; ++i)
            CHECK(mu.values[i] == Catch::Approx(eval_dF(0.3, P)).margin(1e-14));
    }
    SECTION("interior truncation error is O(h^2): order >= 1.8 between n=512 and n=1024") {
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
                double exact = -P.epsilon * P.epsilon * uxx + eval_dF(uu, P);
                worst = std::max(worst, std::abs(mu.values[i] - exact));
            }
            return worst;
        };
        double order = std::log2(interior_error(512) / interior_error(1024));
        CHECK(order >= 1.8);
    }
}

TEST_CASE("chemical potential of a steady pulse chain is the constant beta") {
    PotentialParams P(3.0, 3.0, 0.02);
    SteadyProfile chain = build_pulse_chain(P, 0.0, 1.0, {0.4, 0.6});
    Grid g(0.0, 1.0, 4096);
    std::vector<double> v(g.n);
    for (int i = 0; i < g.n; ++i) v[i] = chain.eval(g.node(i));
    Field mu = chemical_potential(Field(g, v), P);
    double worst = 0.0;
    for (int i = 1; i + 1 < g.n; ++i) worst = std::max(worst, std::abs(mu.values[i] - chain.beta));
    CHECK(worst < 1e-3); // includes the C^0 junction nodes
}

TEST_CASE("analytic Jacobian matches finite differences") {
    Grid g(0.0, 1.0, 48);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> dist(-0.9, 0.9);
    for (auto setup : {std::pair{2.0, 2.0}, {3.0, 3.0}, {1.5, 2.0}, {4.0, 2.0}}) {
        PotentialParams P(setup.first, setup.second, 0.1);
        for (auto D : {MobilityModel::constant(1.0), MobilityModel::mullins(1.0),
                       MobilityModel::wagner(0.7)}) {
            detail::Scheme S(P, D, g, 1e-8 / P.epsilon);
            std::vector<double> u(g.n), uold(g.n);
            for (int i = 0; i < g.n; ++i) uold[i] = u[i] = dist(rng);
            const double dt = 1e-5;
            std::vector<double> R0, mu0, Gf0;
            S.residual(u, uold, dt, R0, mu0, Gf0);
            BandedMatrix J(g.n, 2, 2);
            S.jacobian(u, mu0, dt, J);
            const double step_fd = 1e-7;
            for (int k = 0; k < g.n; k += 5) {
                std::vector<double> up = u, um = u;
                up[k] += step_fd;
                um[k] -= step_fd;
                std::vector<double> Rp, Rm, m1, m2, f1, f2;
                S.residual(up, uold, dt, Rp, m1, f1);
                S.residual(um, uold, dt, Rm, m2, f2);
                for (int i = 0; i < g.n; ++i) {
                    double fd = (Rp[i] - Rm[i]) / (2.0 * step_fd);
                    double an = J.in_band(i, k) ? J.at(i, k) : 0.0;
                    CHECK(an == Catch::Approx(fd).margin(5e-6));
                }
            }
        }
    }
}

TEST_CASE("constant states are equilibria") {
    Grid g(0.0, 1.0, 64);
    PotentialParams P(2.0, 2.0, 0.1);
    SolverConfig cfg;
    cfg.dt_init = 0.5;
    SimState s{Field::constant(g, 0.3)};
    for (auto D : {MobilityModel::constant(1.0), MobilityModel::mullins(1.0)}) {
        SimState s1 = step(s, P, D, cfg);
        for (int i = 0; i < g.n; ++i) CHECK(s1.u.values[i] == Catch::Approx(0.3).margin(1e-13));
        CHECK(discrete_energy(s1.u, P) == Catch::Approx(discrete_energy(s.u, P)).margin(1e-14));
    }
}

TEST_CASE("mass conservation, energy monotonicity, energy inequality") {
    Grid g(0.0, 1.0, 128);
    PotentialParams P(2.0, 2.0, 0.06);
    MobilityModel D = MobilityModel::mullins(1.0);
    SolverConfig cfg;
    cfg.dt_init = 1e-7;
    cfg.t_max = 1e9;
    cfg.max_steps = 500;
    SimState s{two_layers(g, 0.06, 0.35, 0.65)};
    const double m0 = mass(s.u);
    RunRecord rec = evolve(s, P, D, cfg);
    CHECK(rec.total_steps == 500);
    for (size_t i = 1; i < rec.rows.size(); ++i) {
        CHECK(std::abs(rec.rows[i].mass - m0) <= 1e-12 * g.length());
        CHECK(rec.rows[i].energy <= rec.rows[i - 1].energy + 1e-8);
        CHECK(rec.rows[i].dissipation_rhs <= 0.0);
    }
    double lhs = rec.rows.back().cumulative_dissipation;
    double rhs = P.epsilon * (rec.initial_energy - rec.final_energy) * rec.max_mobility * 1.05;
    CHECK(lhs <= rhs);
}

TEST_CASE("dissipation identity under dt refinement") {
    Grid g(0.0, 1.0, 256);
    PotentialParams P(2.0, 2.0, 0.06);
    MobilityModel D = MobilityModel::mullins(1.0);
    SolverConfig warm;
    warm.dt_init = 1e-7;
    SimState base{two_layers(g, 0.06, 0.35, 0.65)};
    for (int k = 0; k < 100; ++k) base = step(base, P, D, warm);
    bool ok = false;
    double err_prev = -1.0;
    for (double dt : {1e-6, 5e-7, 2.5e-7, 1.25e-7, 6.25e-8}) {
        SolverConfig c;
        c.dt_init = dt;
        c.dt_max = dt;
        SimState before = base;
        before.last_dt = 0.0;
        SimState after = step(before, P, D, c);
        EnergyReport rep = dissipation_report(before, after, P, D);
        double err = std::abs(rep.rate - rep.dissipation_rhs);
        if (err <= 0.05 * std::abs(rep.dissipation_rhs) + 1e-12) ok = true;
        if (err_prev >= 0.0) CHECK(err <= err_prev * 1.1); // shrinks with dt
        err_prev = err;
    }
    CHECK(ok);
}

TEST_CASE("dissipation report trivial case") {
    Grid g(0.0, 1.0, 64);
    PotentialParams P(2.0, 2.0, 0.1);
    SolverConfig cfg;
    cfg.dt_init = 0.1;
    SimState s{Field::constant(g, 0.4)};
    SimState s1 = step(s, P, MobilityModel::constant(1.0), cfg);
    EnergyReport rep = dissipation_report(s, s1, P, MobilityModel::constant(1.0));
    CHECK(rep.rate == Catch::Approx(0.0).margin(1e-12));
    CHECK(rep.dissipation_rhs == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("single tanh layer barely moves by t=1") {
    Grid g(-1.0, 1.0, 512);
    PotentialParams P(2.0, 2.0, 0.05);
    SolverConfig cfg;
    cfg.dt_init = 1e-6;
    cfg.t_max = 1.0;
    SimState s{tanh_layer(g, 0.05)};
    Field u0 = s.u;
    RunRecord rec = evolve(s, P, MobilityModel::constant(1.0), cfg);
    CHECK(rec.stop_reason == "t_max");
    CHECK(l1_dist(rec.snapshots.back().u, u0) < 1e-3);
}

TEST_CASE("evolve stop predicate returns immediately") {
    Grid g(0.0, 1.0, 64);
    PotentialParams P(2.0, 2.0, 0.1);
    SolverConfig cfg;
    SimState s{Field::constant(g, 0.5)};
    RunRecord rec =
        evolve(s, P, MobilityModel::constant(1.0), cfg, [](const SimState&) { return true; });
    CHECK(rec.rows.size() == 1);
    CHECK(rec.stop_reason == "stop_predicate");
}

TEST_CASE("restart reproduces the trajectory") {
    Grid g(0.0, 1.0, 128);
    PotentialParams P(2.0, 2.0, 0.06);
    MobilityModel D = MobilityModel::mullins(1.0);
    SolverConfig cfg;
    cfg.dt_init = 1e-7;
    SimState a{two_layers(g, 0.06, 0.35, 0.65)};
    SimState mid{Field::constant(g, 0.0)};
    for (int k = 0; k < 30; ++k) {
        a = step(a, P, D, cfg);
        if (k == 14) mid = a;
    }
    SimState b = mid;
    for (int k = 15; k < 30; ++k) b = step(b, P, D, cfg);
    for (int i = 0; i < g.n; ++i)
        CHECK(b.u.values[i] == Catch::Approx(a.u.values[i]).margin(1e-10));
    CHECK(b.t == Catch::Approx(a.t).margin(1e-12));
}

TEST_CASE("failure modes") {
    Grid g(0.0, 1.0, 64);
    PotentialParams P(2.0, 2.0, 0.05);
    SECTION("blow-up on |u| beyond the cap") {
        SolverConfig cfg;
        SimState s{Field::constant(g, 0.5)};
        s.u.values[10] = 5.0;
        CHECK_THROWS_WITH(step(s, P, MobilityModel::constant(1.0), cfg),
                          Catch::Matchers::ContainsSubstring("blow-up"));
    }
    SECTION("stiffness when dt cannot shrink") {
        SolverConfig cfg;
        cfg.dt_init = 1e8;
        cfg.dt_min = 1e8;
        cfg.newton_max_iter = 3;
        std::mt19937 rng(11);
        std::uniform_real_distribution<double> dist(-0.9, 0.9);
        std::vector<double> v(g.n);
        for (auto& x : v) x = dist(rng);
        SimState s{Field(g, v)};
        CHECK_THROWS_WITH(step(s, P, MobilityModel::wagner(2.0), cfg),
                          Catch::Matchers::ContainsSubstring("stiffness"));
    }
}
