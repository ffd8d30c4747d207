#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "pcahn/field.hpp"

using namespace pcahn;

TEST_CASE("grid invariants") {
    CHECK_THROWS_AS(Grid(1.0, 0.0, 64), std::invalid_argument);
    CHECK_THROWS_AS(Grid(0.0, 1.0, 8), std::invalid_argument);
    Grid g(0.0, 1.0, 10 * 16);
    CHECK(g.h == Catch::Approx(1.0 / 160));
    CHECK(g.node(0) == Catch::Approx(0.5 * g.h));
}

TEST_CASE("antiderivative of simple fields") {
    Grid g(0.0, 1.0, 16);
    SECTION("u = 1: faces ramp to 1") {
        AntiField t = antiderivative(Field::constant(g, 1.0));
        CHECK(t.values.front() == 0.0);
        CHECK(t.values.back() == Catch::Approx(1.0).margin(1e-15));
        CHECK(t.values[8] == Catch::Approx(0.5).margin(1e-15));
    }
    SECTION("u = 0: identically zero") {
        AntiField t = antiderivative(Field::constant(g, 0.0));
        for (double v : t.values) CHECK(v == 0.0);
    }
    SECTION("odd field about the midpoint: zero total mass") {
        Grid gm(-1.0, 1.0, 64);
        std::vector<double> vals(64);
        for (int i = 0; i < 64; ++i) vals[i] = std::sin(M_PI * gm.node(i));
        AntiField t = antiderivative(Field(gm, vals));
        CHECK(std::abs(t.values.back()) < 1e-14);
    }
}

TEST_CASE("antiderivative then face-differencing is the identity") {
    Grid g(-0.5, 2.0, 128);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    std::vector<double> vals(g.n);
    for (auto& v : vals) v = dist(rng);
    Field u(g, vals);
    AntiField t = antiderivative(u);
    for (int i = 0; i < g.n; ++i) {
        double back = (t.values[i + 1] - t.values[i]) / g.h;
        CHECK(back == Catch::Approx(u.values[i]).margin(1e-13));
    }
}

TEST_CASE("mass and norms") {
    Grid g(0.0, 1.0, 50 * 2);
    CHECK(mass(Field::constant(g, -1.0)) == Catch::Approx(-1.0).margin(1e-15));
    Field u = Field::constant(g, 0.3);
    CHECK(l1_dist(u, u) == 0.0);
    CHECK(l2_norm(Field::constant(g, 2.0)) == Catch::Approx(2.0).margin(1e-14));
    Grid g2(0.0, 2.0, 100);
    CHECK_THROWS_WITH(l1_dist(u, Field::constant(g2, 0.0)),
                      Catch::Matchers::ContainsSubstring("grid mismatch"));
}

TEST_CASE("l1 distance of a tanh layer to the sign function is O(eps)") {
    // oracle: int |tanh(x/(sqrt2 eps)) - sign(x)| dx = 2 sqrt2 ln2 eps
    auto measure = [](double eps) {
        Grid g(-1.0, 1.0, 16384);
        std::vector<double> a(g.n), b(g.n);
        for (int i = 0; i < g.n; ++i) {
            double x = g.node(i);
            a[i] = std::tanh(x / (std::sqrt(2.0) * eps));
            b[i] = x < 0 ? -1.0 : 1.0;
        }
        return l1_dist(Field(g, a), Field(g, b));
    };
    double d1 = measure(0.05);
    CHECK(d1 < 0.2);
    CHECK(d1 == Catch::Approx(2.0 * std::sqrt(2.0) * std::log(2.0) * 0.05).epsilon(1e-3));
    double d2 = measure(0.025);
    CHECK(d2 == Catch::Approx(0.5 * d1).epsilon(0.2));
}

TEST_CASE("antiderivative distance is controlled by the field distance") {
    // discrete version of ||u~ - v~||_L1 <= (b-a) ||u - v||_L1
    Grid g(0.0, 1.5, 96);
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> a(g.n), b(g.n);
        for (int i = 0; i < g.n; ++i) {
            a[i] = dist(rng);
            b[i] = dist(rng);
        }
        Field u(g, a), v(g, b);
        CHECK(l1_dist(antiderivative(u), antiderivative(v)) <= g.length() * l1_dist(u, v) + 1e-12);
    }
}

TEST_CASE("field csv round-trip") {
    Grid g(-0.25, 1.75, 32);
    std::vector<double> vals(g.n);
    for (int i = 0; i < g.n; ++i) vals[i] = std::cos(3.0 * g.node(i)) / 3.0;
    Field u(g, vals);
    std::stringstream ss;
    write_field_csv(u, ss, "theta=2 p=2");
    Field v = read_field_csv(ss);
    REQUIRE(v.grid == u.grid);
    for (int i = 0; i < g.n; ++i) CHECK(v.values[i] == u.values[i]);
}

TEST_CASE("field csv rejects corrupt input") {
    std::stringstream ss("x,u\n0.1,0.2\n");
    CHECK_THROWS_WITH(read_field_csv(ss), Catch::Matchers::ContainsSubstring("grid header"));
    std::stringstream s2("# grid a=0 b=1 n=16\nx,u\n0.1,banana\n");
    CHECK_THROWS_AS(read_field_csv(s2), error);
}
