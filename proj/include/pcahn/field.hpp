#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pcahn/errors.hpp"

namespace pcahn {

/// Uniform cell-centered finite-volume grid on [a,b]: nodes x_i = a + (i+1/2)h.
struct Grid {
    double a;
    double b;
    int n;
    double h;

    Grid() : Grid(0.0, 1.0, 16) {}
    Grid(double a_, double b_, int n_) : a(a_), b(b_), n(n_), h((b_ - a_) / n_) {
        if (!(a < b)) throw std::invalid_argument("Grid: need a<b");
        if (n < 16) throw std::invalid_argument("Grid: need n>=16");
    }

    double node(int i) const { return a + (i + 0.5) * h; }
    double face(int j) const { return a + j * h; }
    double length() const { return b - a; }

    bool operator==(const Grid& o) const { return a == o.a && b == o.b && n == o.n; }
};

/// Cell-average values of u on a Grid.
struct Field {
    Grid grid;
    std::vector<double> values;

    Field() : grid(), values(grid.n, 0.0) {}
    Field(Grid g, std::vector<double> v) : grid(g), values(std::move(v)) {
        if ((int)values.size() != grid.n) throw std::invalid_argument("Field: size/grid mismatch");
    }
    static Field constant(Grid g, double c) { return Field(g, std::vector<double>(g.n, c)); }

    double operator[](int i) const { return values[i]; }
    double& operator[](int i) { return values[i]; }
    int size() const { return grid.n; }
};

/// Face values of the antiderivative of u, with tilde(a) = 0.
struct AntiField {
    Grid grid;
    std::vector<double> values; // n+1 entries at faces
};

inline AntiField antiderivative(const Field& u) {
    AntiField t{u.grid, std::vector<double>(u.grid.n + 1, 0.0)};
    for (int i = 0; i < u.grid.n; ++i) t.values[i + 1] = t.values[i] + u.grid.h * u.values[i];
    return t;
}

inline double mass(const Field& u) {
    double s = 0.0;
    for (double v : u.values) s += v;
    return s * u.grid.h;
}

inline void check_same_grid(const Grid& x, const Grid& y) {
    if (!(x == y)) throw error("grid mismatch");
}

inline double l1_dist(const Field& u, const Field& v) {
    check_same_grid(u.grid, v.grid);
    double s = 0.0;
    for (int i = 0; i < u.size(); ++i) s += std::abs(u.values[i] - v.values[i]);
    return s * u.grid.h;
}

inline double l2_norm(const Field& u) {
    double s = 0.0;
    for (double v : u.values) s += v * v;
    return std::sqrt(s * u.grid.h);
}

/// L1 distance between two antiderivatives (trapezoid over faces).
inline double l1_dist(const AntiField& u, const AntiField& v) {
    check_same_grid(u.grid, v.grid);
    double s = 0.0;
    const int n = u.grid.n;
    for (int j = 0; j <= n; ++j) {
        double w = (j == 0 || j == n) ? 0.5 : 1.0;
        s += w * std::abs(u.values[j] - v.values[j]);
    }
    return s * u.grid.h;
}

// --- CSV import/export -------------------------------------------------
//
// Two columns (x,u), full precision, with a grid-echo header so files
// round-trip exactly:
//   # grid a=<...> b=<...> n=<...>
//   x,u

inline void write_field_csv(const Field& u, std::ostream& os,
                            const std::string& extra_header = "") {
    os.precision(17);
    os << "# grid a=" << u.grid.a << " b=" << u.grid.b << " n=" << u.grid.n << "\n";
    if (!extra_header.empty()) os << "# " << extra_header << "\n";
    os << "x,u\n";
    for (int i = 0; i < u.size(); ++i) os << u.grid.node(i) << "," << u.values[i] << "\n";
}

inline void write_field_csv(const Field& u, const std::string& path,
                            const std::string& extra_header = "") {
    std::ofstream os(path);
    require(os.good(), "cannot open for writing: " + path);
    write_field_csv(u, os, extra_header);
}

inline Field read_field_csv(std::istream& is, const std::string& name = "<stream>") {
    std::string line;
    double a = 0, b = 0;
    int n = -1;
    std::vector<double> vals;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind("# grid", 0) == 0) {
                if (std::sscanf(line.c_str(), "# grid a=%lf b=%lf n=%d", &a, &b, &n) != 3)
                    throw error(name + ":" + std::to_string(lineno) + ": bad grid header");
            }
            continue;
        }
        if (line.rfind("x,", 0) == 0) continue;
        double x, u;
        if (std::sscanf(line.c_str(), "%lf,%lf", &x, &u) != 2)
            throw error(name + ":" + std::to_string(lineno) + ": bad csv row");
        vals.push_back(u);
    }
    if (n < 0) throw error(name + ": missing grid header");
    if ((int)vals.size() != n) throw error(name + ": row count does not match grid n");
    return Field(Grid(a, b, n), std::move(vals));
}

inline Field read_field_csv_file(const std::string& path) {
    std::ifstream is(path);
    require(is.good(), "cannot open: " + path);
    return read_field_csv(is, path);
}

} // namespace pcahn
