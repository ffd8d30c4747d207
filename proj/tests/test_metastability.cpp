#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "pcahn/metastability.hpp"

using namespace pcahn;

TEST_CASE("transition pattern validation") {
    CHECK_THROWS_AS(TransitionPattern(0, 1, {0.6, 0.4}, -1, 0.05), std::invalid_argument);
    CHECK_THROWS_AS(TransitionPattern(0, 1, {0.4, 0.6}, -1, 0.15), std::invalid_argument);
    CHECK_THROWS_AS(TransitionPattern(0, 1, {0.05, 0.6}, -1, 0.1), std::invalid_argument);
    TransitionPattern pat(0, 1, {0.35, 0.65}, -1, 0.1);
    CHECK(pat.v_at(0.1) == -1.0);
    CHECK(pat.v_at(0.5) == 1.0);
    CHECK(pat.v_at(0.9) == -1.0);
}

TEST_CASE("layered initial datum") {
    SECTION("single layer energy gap is small (tanh tail bound)") {
        PotentialParams P(2.0, 2.0, 0.04);
        Grid g(0.0, 1.0, 32768);
        TransitionPattern pat(0.0, 1.0, {0.5}, -1, 0.2);
        Field u = layered_initial(pat, P, g);
        double gap = discrete_energy(u, P) - c_p(P);
        CHECK(std::abs(gap) < 1e-6);
    }
    SECTION("gap window at eps=0.05 for one layer") {
        PotentialParams P(2.0, 2.0, 0.05);
        Grid g(0.0, 1.0, 16384);
        TransitionPattern pat(0.0, 1.0, {0.5}, -1, 0.2);
        GapReport rep = lower_bound_gap(layered_initial(pat, P, g), pat, P);
        CHECK(rep.gap >= -1e-6);
        CHECK(rep.gap <= 1e-3);
        CHECK(rep.hypothesis_ok);
    }
    SECTION("sign flip negates the field exactly") {
        PotentialParams P(2.0, 2.0, 0.05);
        Grid g(0.0, 1.0, 512);
        TransitionPattern pa(0.0, 1.0, {0.35, 0.65}, -1, 0.1);
        TransitionPattern pb(0.0, 1.0, {0.35, 0.65}, +1, 0.1);
        Field ua = layered_initial(pa, P, g);
        Field ub = layered_initial(pb, P, g);
        for (int i = 0; i < g.n; ++i) CHECK(ub.values[i] == -ua.values[i]);
    }
    SECTION("L1 distance to the sharp pattern decreases with eps") {
        Grid g(0.0, 1.0, 4096);
        TransitionPattern pat(0.0, 1.0, {0.2, 0.5, 0.8}, -1, 0.1);
        Field v = pat.sharp_field(g);
        double prev = 1e9;
        for (double eps : {0.1, 0.05, 0.025}) {
            PotentialParams P(2.0, 2.0, eps);
            double d = l1_dist(layered_initial(pat, P, g), v);
            CHECK(d < prev);
            // each layer contributes ~ 2 sqrt2 ln2 eps
            CHECK(d < 3.0 * 2.0 * std::sqrt(2.0) * std::log(2.0) * eps * 1.25);
            prev = d;
        }
    }
    SECTION("transition overlap rejected") {
        PotentialParams P(2.0, 2.0, 0.2);
        Grid g(0.0, 1.0, 512);
        TransitionPattern pat(0.0, 1.0, {0.45, 0.55}, -1, 0.04);
        CHECK_THROWS_WITH(layered_initial(pat, P, g),
                          Catch::Matchers::ContainsSubstring("transition overlap"));
    }
    SECTION("zero crossings sit within the transition cores") {
        PotentialParams P(2.0, 2.0, 0.03);
        Grid g(0.0, 1.0, 4096);
        TransitionPattern pat(0.0, 1.0, {0.35, 0.65}, -1, 0.1);
        Field u = layered_initial(pat, P, g);
        InterfaceSet crossings = interfaces_of(u, {{0.0, 0.0}});
        REQUIRE(crossings.intervals.size() == 2);
        detail::Heteroclinic het(P, 1e-14);
        double s99 = het.x_of_u(0.99) / P.epsilon;
        for (size_t k = 0; k < 2; ++k) {
            double x = 0.5 * (crossings.intervals[k].lo + crossings.intervals[k].hi);
            CHECK(std::abs(x - pat.jumps[k]) <= 2.0 * P.epsilon * s99);
        }
    }
    SECTION("critical-regime gap decays consistently with exp(-Ap/2eps)") {
        Grid g(0.0, 1.0, 8192);
        TransitionPattern pat(0.0, 1.0, {0.35, 0.65}, -1, 0.12);
        std::vector<double> inv_eps, log_gap;
        double prev = 1e9;
        for (double eps : {0.1, 0.08, 0.06, 0.05}) {
            PotentialParams P(2.0, 2.0, eps);
            GapReport rep = lower_bound_gap(layered_initial(pat, P, g), pat, P);
            double a = std::abs(rep.gap);
            CHECK(a < prev);
            prev = a;
            inv_eps.push_back(1.0 / eps);
            log_gap.push_back(std::log(a));
        }
        // log|gap| vs 1/eps concave-down or linear
        for (size_t i = 2; i < inv_eps.size(); ++i) {
            double s1 = (log_gap[i - 1] - log_gap[i - 2]) / (inv_eps[i - 1] - inv_eps[i - 2]);
            double s2 = (log_gap[i] - log_gap[i - 1]) / (inv_eps[i] - inv_eps[i - 1]);
            CHECK(s2 <= s1 + 0.05 * std::abs(s1));
        }
    }
}

TEST_CASE("supercritical gap decays algebraically in eps") {
    Grid g(0.0, 1.0, 4096);
    TransitionPattern pat(0.0, 1.0, {0.35, 0.65}, -1, 0.12);
    std::vector<double> lx, ly;
    double prev = 1e9;
    for (double eps : {0.1, 0.08, 0.06, 0.05}) {
        PotentialParams P(4.0, 2.0, eps);
        GapReport rep = lower_bound_gap(layered_initial(pat, P, g), pat, P);
        double a = std::abs(rep.gap);
        CHECK(a < prev);
        prev = a;
        lx.push_back(std::log(1.0 / eps));
        ly.push_back(std::log(a));
    }
    // rough power law |gap| ~ eps^k with a positive, moderate exponent
    double slope = (ly.front() - ly.back()) / (lx.back() - lx.front());
    CHECK(slope > 0.5);
    CHECK(slope < 8.0);
}

TEST_CASE("interfaces_of") {
    Grid g(0.0, 1.0, 512);
    SECTION("constant field away from K gives the empty set") {
        InterfaceSet s = interfaces_of(Field::constant(g, -1.0 + 1e-9), {{-0.5, 0.5}});
        CHECK(s.empty());
    }
    SECTION("sharp pattern with K={0}: one degenerate interval per jump") {
        TransitionPattern pat(0.0, 1.0, {0.3, 0.7}, -1, 0.1);
        Field v = pat.sharp_field(g);
        InterfaceSet s = interfaces_of(v, {{0.0, 0.0}});
        REQUIRE(s.intervals.size() == 2);
        for (size_t k = 0; k < 2; ++k) {
            CHECK(s.intervals[k].hi - s.intervals[k].lo <= g.h);
            double mid = 0.5 * (s.intervals[k].lo + s.intervals[k].hi);
            CHECK(std::abs(mid - pat.jumps[k]) <= g.h);
        }
    }
    SECTION("tanh layer width matches the closed-form inverse") {
        double eps = 0.05;
        std::vector<double> vals(g.n);
        for (int i = 0; i < g.n; ++i)
            vals[i] = std::tanh((g.node(i) - 0.5) / (std::sqrt(2.0) * eps));
        InterfaceSet s = interfaces_of(Field(g, vals), {{-0.9, 0.9}});
        REQUIRE(s.intervals.size() == 1);
        double width = s.intervals[0].hi - s.intervals[0].lo;
        double expect = 2.0 * std::sqrt(2.0) * eps * std::atanh(0.9);
        CHECK(std::abs(width - expect) <= 2.0 * g.h);
        CHECK(std::abs(0.5 * (s.intervals[0].hi + s.intervals[0].lo) - 0.5) <= g.h);
    }
    SECTION("K touching the wells is rejected") {
        CHECK_THROWS_WITH(interfaces_of(Field::constant(g, 0.0), {{0.5, 1.0}}),
                          Catch::Matchers::ContainsSubstring("rejected"));
        CHECK_THROWS_WITH(interfaces_of(Field::constant(g, 0.0), {{-1.2, -0.8}}),
                          Catch::Matchers::ContainsSubstring("rejected"));
    }
}

namespace {

InterfaceSet points(std::initializer_list<double> xs) {
    InterfaceSet s;
    for (double x : xs) s.intervals.push_back({x, x});
    return s;
}

// brute-force oracle: sample both sets densely, max of min-distances
double hausdorff_oracle(const InterfaceSet& A, const InterfaceSet& B, int samples = 1000) {
    auto sample_set = [&](const InterfaceSet& S) {
        std::vector<double> xs;
        for (const auto& iv : S.intervals) {
            int m = std::max(2, (int)(samples * (iv.hi - iv.lo)) + 2);
            for (int k = 0; k < m; ++k) xs.push_back(iv.lo + (iv.hi - iv.lo) * k / (m - 1));
        }
        return xs;
    };
    auto xa = sample_set(A);
    auto xb = sample_set(B);
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
}

InterfaceSet random_set(std::mt19937& rng) {
    std::uniform_int_distribution<int> nd(1, 4);
    std::uniform_real_distribution<double> xd(0.0, 1.0);
    std::uniform_real_distribution<double> wd(0.0, 0.15);
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
}

} // namespace

TEST_CASE("set_distance") {
    SECTION("identical sets have distance zero") {
        InterfaceSet a = points({0.2, 0.6});
        CHECK(set_distance(a, a).value == 0.0);
    }
    SECTION("point examples") {
        CHECK(set_distance(points({0.2, 0.6}), points({0.25, 0.55})).value ==
              Catch::Approx(0.05).margin(1e-15));
        CHECK(set_distance(points({0.5}), points({0.2, 0.8})).value ==
              Catch::Approx(0.3).margin(1e-15));
    }
    SECTION("empty set gives the +inf sentinel with a flag") {
        SetDistance d = set_distance(points({0.5}), InterfaceSet{});
        CHECK(d.empty_flag);
        CHECK(std::isinf(d.value));
    }
    SECTION("agrees with a brute-force sampled oracle on random instances") {
        std::mt19937 rng(777);
        for (int rep = 0; rep < 100; ++rep) {
            InterfaceSet a = random_set(rng);
            InterfaceSet b = random_set(rng);
            double exact = set_distance(a, b).value;
            double approx = hausdorff_oracle(a, b);
            CHECK(std::abs(exact - approx) <= 2e-3);
        }
    }
    SECTION("metric properties on random triples") {
        std::mt19937 rng(2025);
        for (int rep = 0; rep < 60; ++rep) {
            InterfaceSet a = random_set(rng), b = random_set(rng), c = random_set(rng);
            double ab = set_distance(a, b).value;
            double ba = set_distance(b, a).value;
            double ac = set_distance(a, c).value;
            double cb = set_distance(c, b).value;
            CHECK(ab == ba);
            CHECK(ab <= ac + cb + 1e-12);
        }
    }
}

TEST_CASE("exit_time") {
    auto make_run = [](std::vector<std::pair<double, double>> td, double t_final) {
        RunRecord rec;
        for (auto& [t, d] : td) {
            SeriesRow row;
            row.t = t;
            row.interface_distance = d;
            rec.rows.push_back(row);
        }
        rec.t_final = t_final;
        return rec;
    };
    SECTION("scripted jump is recovered within one snapshot interval") {
        RunRecord rec =
            make_run({{0, 0}, {10, 0.001}, {20, 0.001}, {40, 0.002}, {44, 0.1}, {50, 0.2}}, 50);
        ExitTime ex = exit_time(rec, 0.05);
        CHECK_FALSE(ex.censored);
        CHECK(ex.t >= 40.0);
        CHECK(ex.t <= 44.0);
        CHECK(ex.t == Catch::Approx(40.0 + (0.05 - 0.002) / (0.1 - 0.002) * 4.0).margin(1e-12));
    }
    SECTION("censored when never exceeded") {
        RunRecord rec = make_run({{0, 0}, {10, 0.01}, {100, 0.02}}, 100);
        ExitTime ex = exit_time(rec, 0.5);
        CHECK(ex.censored);
        CHECK(ex.t_max == 100.0);
    }
    SECTION("delta larger than the domain diameter censors") {
        RunRecord rec = make_run({{0, 0}, {1, 0.9}}, 1);
        CHECK(exit_time(rec, 2.0).censored);
    }
    SECTION("missing interface data is an error") {
        RunRecord rec;
        SeriesRow row;
        row.t = 0.0;
        rec.rows.push_back(row);
        CHECK_THROWS_WITH(exit_time(rec, 0.1),
                          Catch::Matchers::ContainsSubstring("no interface data"));
    }
}

TEST_CASE("exponent table") {
    SECTION("theta=4, p=2 exact rationals") {
        ExponentTable tab = exponent_table(PotentialParams(4.0, 2.0, 0.1), 4);
        CHECK(tab.alpha == 0.75);
        CHECK(tab.gamma == 3.0);
        CHECK(tab.k[0] == 0.0);
        CHECK(tab.k[1] == 0.75);
        CHECK(tab.k[2] == 1.3125);
    }
    SECTION("theta=3, p=2") {
        ExponentTable tab = exponent_table(PotentialParams(3.0, 2.0, 0.1), 3);
        CHECK(tab.alpha == Catch::Approx(5.0 / 6.0).epsilon(1e-15));
        CHECK(tab.k[1] == Catch::Approx(5.0 / 6.0).epsilon(1e-15));
        CHECK(tab.k[2] == Catch::Approx(55.0 / 36.0).epsilon(1e-15));
        CHECK(tab.gamma == Catch::Approx(5.0).epsilon(1e-15));
    }
    SECTION("monotone and geometrically convergent") {
        ExponentTable tab = exponent_table(PotentialParams(4.0, 2.0, 0.1), 40);
        for (size_t m = 1; m < tab.k.size(); ++m) {
            CHECK(tab.k[m] > tab.k[m - 1]);
            CHECK(tab.k[m] < tab.gamma);
        }
        CHECK(std::abs(tab.k[39] - tab.gamma) < std::pow(tab.alpha, 39) * tab.gamma);
    }
    SECTION("critical and subcritical rejected") {
        CHECK_THROWS_WITH(exponent_table(PotentialParams(2.0, 2.0, 0.1), 5),
                          Catch::Matchers::ContainsSubstring("supercritical exponents undefined"));
        CHECK_THROWS_WITH(exponent_table(PotentialParams(1.5, 2.0, 0.1), 5),
                          Catch::Matchers::ContainsSubstring("supercritical exponents undefined"));
    }
}

TEST_CASE("lower_bound_gap") {
    Grid g(0.0, 1.0, 512);
    PotentialParams P(2.0, 2.0, 0.05);
    TransitionPattern pat(0.0, 1.0, {0.35, 0.65}, -1, 0.1);
    SECTION("sharp steps are energy-expensive on the grid") {
        GapReport rep = lower_bound_gap(pat.sharp_field(g), pat, P);
        CHECK(rep.gap > 1.0);
    }
    SECTION("layered data satisfy the closeness hypothesis") {
        GapReport rep = lower_bound_gap(layered_initial(pat, P, g), pat, P);
        CHECK(rep.hypothesis_ok);
        CHECK(rep.l1_tilde < 0.05);
    }
    SECTION("hypothesis violation flagged, gap still returned") {
        GapReport rep = lower_bound_gap(Field::constant(g, 0.9), pat, P, 1e-4);
        CHECK_FALSE(rep.hypothesis_ok);
        CHECK(std::isfinite(rep.gap));
    }
}

TEST_CASE("scaling fits") {
    SECTION("synthetic exponential: T = exp(3/eps)") {
        std::vector<ExitRow> rows;
        for (double eps : {0.1, 0.08, 0.06, 0.05})
            rows.push_back({eps, std::exp(3.0 / eps), false});
        ScalingFit fit = fit_scaling(rows, ScalingModel::exponential, 2.0);
        CHECK(fit.slope == Catch::Approx(3.0).margin(1e-9));
        CHECK(fit.a_fit * 2.0 / 2.0 == Catch::Approx(3.0).margin(1e-6));
        CHECK(fit.r_squared == Catch::Approx(1.0).margin(1e-12));
    }
    SECTION("synthetic algebraic: T = eps^{-2.5}") {
        std::vector<ExitRow> rows;
        for (double eps : {0.1, 0.08, 0.06, 0.05})
            rows.push_back({eps, std::pow(eps, -2.5), false});
        ScalingFit fit = fit_scaling(rows, ScalingModel::algebraic, 2.0);
        CHECK(fit.k_fit == Catch::Approx(2.5).margin(1e-6));
        CHECK(fit.r_squared == Catch::Approx(1.0).margin(1e-12));
    }
    SECTION("censored rows are dropped and counted") {
        std::vector<ExitRow> rows{{0.1, 10.0, false}, {0.08, 100.0, false},
                                  {0.06, 0.0, true},  {0.05, 1000.0, false}};
        ScalingFit fit = fit_scaling(rows, ScalingModel::exponential, 2.0);
        CHECK(fit.n_used == 3);
        CHECK(fit.n_censored == 1);
    }
    SECTION("insufficient data") {
        std::vector<ExitRow> rows{{0.1, 10.0, false}, {0.08, 0.0, true}, {0.06, 0.0, true}};
        CHECK_THROWS_WITH(fit_scaling(rows, ScalingModel::exponential, 2.0),
                          Catch::Matchers::ContainsSubstring("insufficient data"));
    }
}
