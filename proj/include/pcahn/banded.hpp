#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "pcahn/errors.hpp"

namespace pcahn {

/// Banded matrix with kl sub- and ku super-diagonals, LAPACK-style band
/// storage with room for the kl extra superdiagonals of pivoting fill-in.
/// Entry (i,j) lives at band row kl+ku+i-j of column j.
class BandedMatrix {
  public:
    BandedMatrix(int n, int kl, int ku)
        : n_(n), kl_(kl), ku_(ku), ld_(2 * kl + ku + 1), ab_((size_t)ld_ * n, 0.0), piv_(n, 0) {}

    int n() const { return n_; }
    int kl() const { return kl_; }
    int ku() const { return ku_; }

    // valid for -(kl+ku) <= i-j <= kl (the widened range holds fill-in)
    double& at(int i, int j) { return ab_[(kl_ + ku_ + i - j) + (size_t)ld_ * j]; }
    double at(int i, int j) const { return ab_[(kl_ + ku_ + i - j) + (size_t)ld_ * j]; }
    bool in_band(int i, int j) const { return j - i <= ku_ && i - j <= kl_; }

    void zero() {
        std::fill(ab_.begin(), ab_.end(), 0.0);
        factored_ = false;
    }

    /// LU factorization with partial pivoting (in place).
    void factor() {
        const int n = n_, kl = kl_;
        const int kv = kl_ + ku_;
        for (int j = 0; j < n; ++j) {
            int last = std::min(j + kl, n - 1);
            int ip = j;
            double amax = std::abs(at(j, j));
            for (int i = j + 1; i <= last; ++i) {
                double v = std::abs(at(i, j));
                if (v > amax) {
                    amax = v;
                    ip = i;
                }
            }
            piv_[j] = ip;
            if (amax == 0.0) throw error("banded LU: singular matrix");
            if (ip != j) {
                int jmax = std::min(j + kv, n - 1);
                for (int c = j; c <= jmax; ++c) std::swap(at(j, c), at(ip, c));
            }
            const double pivot = at(j, j);
            for (int i = j + 1; i <= last; ++i) {
                double m = at(i, j) / pivot;
                at(i, j) = m;
                int jmax = std::min(j + kv, n - 1);
                for (int c = j + 1; c <= jmax; ++c) at(i, c) -= m * at(j, c);
            }
        }
        factored_ = true;
    }

    /// Solve A x = b with the LU factors; b is overwritten by x.
    void solve(std::vector<double>& b) const {
        require(factored_, "banded LU: factor() before solve()");
        const int n = n_, kl = kl_;
        const int kv = kl_ + ku_;
        for (int j = 0; j < n; ++j) {
            if (piv_[j] != j) std::swap(b[j], b[piv_[j]]);
            int last = std::min(j + kl, n - 1);
            for (int i = j + 1; i <= last; ++i) b[i] -= at(i, j) * b[j];
        }
        for (int j = n - 1; j >= 0; --j) {
            b[j] /= at(j, j);
            int first = std::max(0, j - kv);
            for (int i = first; i < j; ++i) b[i] -= at(i, j) * b[j];
        }
    }

  private:
    int n_, kl_, ku_, ld_;
    std::vector<double> ab_;
    std::vector<int> piv_;
    bool factored_ = false;
};

} // namespace pcahn
