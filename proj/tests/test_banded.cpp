#include <catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "pcahn/banded.hpp"

using namespace pcahn;

namespace {

// dense Gaussian elimination with partial pivoting, as the oracle
std::vector<double> dense_solve(std::vector<std::vector<double>> A, std::vector<double> b) {
    const int n = (int)b.size();
    for (int j = 0; j < n; ++j) {
        int ip = j;
        for (int i = j + 1; i < n; ++i)
            if (std::abs(A[i][j]) > std::abs(A[ip][j])) ip = i;
        std::swap(A[j], A[ip]);
        std::swap(b[j], b[ip]);
        for (int i = j + 1; i < n; ++i) {
            double m = A[i][j] / A[j][j];
            for (int c = j; c < n; ++c) A[i][c] -= m * A[j][c];
            b[i] -= m * b[j];
        }
    }
    for (int j = n - 1; j >= 0; --j) {
        for (int c = j + 1; c < n; ++c) b[j] -= A[j][c] * b[c];
        b[j] /= A[j][j];
    }
    return b;
}

} // namespace

TEST_CASE("banded LU matches a dense oracle on random systems") {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (auto [kl, ku] : {std::pair{1, 1}, {2, 2}, {3, 1}, {1, 3}}) {
        for (int rep = 0; rep < 10; ++rep) {
            const int n = 40;
            BandedMatrix B(n, kl, ku);
            std::vector<std::vector<double>> A(n, std::vector<double>(n, 0.0));
            for (int i = 0; i < n; ++i)
                for (int j = std::max(0, i - kl); j <= std::min(n - 1, i + ku); ++j) {
                    double v = dist(rng);
                    if (i == j) v += 0.5; // keep it comfortably nonsingular
                    A[i][j] = v;
                    B.at(i, j) = v;
                }
            std::vector<double> b(n);
            for (auto& x : b) x = dist(rng);
            auto xb = b;
            B.factor();
            B.solve(xb);
            auto xd = dense_solve(A, b);
            for (int i = 0; i < n; ++i) CHECK(xb[i] == Catch::Approx(xd[i]).margin(1e-10));
        }
    }
}

TEST_CASE("banded LU handles rows needing pivoting") {
    // leading entry zero forces a row swap immediately
    BandedMatrix B(4, 1, 1);
    double A[4][4] = {{0.0, 2.0, 0, 0}, {1.0, 1.0, 1.0, 0}, {0, 1.0, 3.0, 1.0}, {0, 0, 1.0, 2.0}};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            if (B.in_band(i, j)) B.at(i, j) = A[i][j];
    std::vector<double> b{2.0, 3.0, 5.0, 3.0};
    B.factor();
    B.solve(b);
    // verify A x = rhs
    double rhs[4] = {2.0, 3.0, 5.0, 3.0};
    for (int i = 0; i < 4; ++i) {
        double s = 0.0;
        for (int j = 0; j < 4; ++j) s += A[i][j] * b[j];
        CHECK(s == Catch::Approx(rhs[i]).margin(1e-12));
    }
}

TEST_CASE("singular matrix is reported") {
    BandedMatrix B(3, 1, 1);
    // column of zeros
    B.at(0, 0) = 0.0;
    B.at(1, 0) = 0.0;
    CHECK_THROWS_WITH(B.factor(), Catch::Matchers::ContainsSubstring("singular"));
}
