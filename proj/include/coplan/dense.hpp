#pragma once

// Minimal dense linear algebra: row-major matrix, LU solve with partial
// pivoting, Cholesky. Sized for node-count systems (tens to hundreds).

#include <cmath>
#include <stdexcept>
#include <vector>

namespace coplan {

struct DenseMatrix {
    int rows = 0, cols = 0;
    std::vector<double> a;

    DenseMatrix() = default;
    DenseMatrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

    double& at(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
    double at(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }
};

// In-place LU with partial pivoting; returns false on (near-)singularity.
struct DenseLu {
    DenseMatrix lu;
    std::vector<int> perm;

    bool factor(DenseMatrix m) {
        int n = m.rows;
        lu = std::move(m);
        perm.resize(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) perm[static_cast<size_t>(i)] = i;
        for (int k = 0; k < n; ++k) {
            int piv = k;
            double best = std::abs(lu.at(k, k));
            for (int i = k + 1; i < n; ++i)
                if (std::abs(lu.at(i, k)) > best) {
                    best = std::abs(lu.at(i, k));
                    piv = i;
                }
            if (best < 1e-12) return false;
            if (piv != k) {
                for (int j = 0; j < n; ++j) std::swap(lu.at(k, j), lu.at(piv, j));
                std::swap(perm[static_cast<size_t>(k)], perm[static_cast<size_t>(piv)]);
            }
            for (int i = k + 1; i < n; ++i) {
                double f = lu.at(i, k) / lu.at(k, k);
                lu.at(i, k) = f;
                for (int j = k + 1; j < n; ++j) lu.at(i, j) -= f * lu.at(k, j);
            }
        }
        return true;
    }

    std::vector<double> solve(const std::vector<double>& b) const {
        int n = lu.rows;
        std::vector<double> x(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) x[static_cast<size_t>(i)] = b[static_cast<size_t>(perm[static_cast<size_t>(i)])];
        for (int i = 1; i < n; ++i)
            for (int j = 0; j < i; ++j) x[static_cast<size_t>(i)] -= lu.at(i, j) * x[static_cast<size_t>(j)];
        for (int i = n - 1; i >= 0; --i) {
            for (int j = i + 1; j < n; ++j) x[static_cast<size_t>(i)] -= lu.at(i, j) * x[static_cast<size_t>(j)];
            x[static_cast<size_t>(i)] /= lu.at(i, i);
        }
        return x;
    }
};

// Lower Cholesky factor of a symmetric positive-definite matrix.
// Throws on non-PD input.
inline DenseMatrix cholesky(const DenseMatrix& m) {
    int n = m.rows;
    DenseMatrix l(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = m.at(i, j);
            for (int k = 0; k < j; ++k) s -= l.at(i, k) * l.at(j, k);
            if (i == j) {
                if (s <= 0.0) throw std::runtime_error("matrix is not positive definite");
                l.at(i, i) = std::sqrt(s);
            } else {
                l.at(i, j) = s / l.at(j, j);
            }
        }
    }
    return l;
}

}  // namespace coplan
