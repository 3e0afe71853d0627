#pragma once

// Test-only oracle: a naive dense two-phase tableau simplex, written
// independently of the production kernel. Only supports finite lower bounds
// (upper bounds become rows); that is all the generated test problems need.

#include <cassert>
#include <cmath>
#include <limits>
#include <vector>

#include "coplan/lp.hpp"

namespace lp_oracle {

struct Result {
    bool optimal = false;
    bool infeasible = false;
    bool unbounded = false;
    double objective = 0.0;
    std::vector<double> x;
};

namespace detail {

constexpr double kEps = 1e-9;

// min c x, A x = b, x >= 0, b >= 0; dense tableau, Bland's rule throughout.
inline bool tableau_phase(std::vector<std::vector<double>>& t, std::vector<int>& basis,
                          int m, int n, bool* unbounded) {
    for (;;) {
        int enter = -1;
        for (int j = 0; j < n; ++j)
            if (t[m][j] < -kEps) {
                enter = j;
                break;
            }
        if (enter < 0) return true;
        int leave = -1;
        double best = std::numeric_limits<double>::max();
        for (int i = 0; i < m; ++i)
            if (t[i][enter] > kEps) {
                double r = t[i][n] / t[i][enter];
                if (r < best - kEps || (r < best + kEps &&
                                        (leave < 0 || basis[i] < basis[leave]))) {
                    best = r;
                    leave = i;
                }
            }
        if (leave < 0) {
            if (unbounded) *unbounded = true;
            return false;
        }
        double piv = t[leave][enter];
        for (int j = 0; j <= n; ++j) t[leave][j] /= piv;
        for (int i = 0; i <= m; ++i) {
            if (i == leave) continue;
            double f = t[i][enter];
            if (std::abs(f) < 1e-13) continue;
            for (int j = 0; j <= n; ++j) t[i][j] -= f * t[leave][j];
        }
        basis[leave] = enter;
    }
}

}  // namespace detail

// Standard-form solver: min c x, rows with senses, x >= 0.
inline Result solve_standard(const std::vector<double>& c,
                             const std::vector<std::vector<double>>& a,
                             const std::vector<coplan::RowSense>& sense,
                             std::vector<double> b) {
    using coplan::RowSense;
    const int m = static_cast<int>(a.size());
    const int n0 = static_cast<int>(c.size());

    // flip rows to make b >= 0
    std::vector<std::vector<double>> rows = a;
    std::vector<RowSense> sn = sense;
    for (int i = 0; i < m; ++i)
        if (b[i] < 0) {
            for (double& v : rows[i]) v = -v;
            b[i] = -b[i];
            sn[i] = sn[i] == RowSense::LE   ? RowSense::GE
                    : sn[i] == RowSense::GE ? RowSense::LE
                                            : RowSense::EQ;
        }

    // columns: structural | slacks/surplus | artificials
    int n_slack = 0;
    for (auto s : sn)
        if (s != RowSense::EQ) ++n_slack;
    int n = n0 + n_slack + m;  // one artificial per row (some unused)
    int art0 = n0 + n_slack;

    std::vector<std::vector<double>> t(m + 1, std::vector<double>(n + 1, 0.0));
    std::vector<int> basis(m, -1);
    int sk = n0;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n0; ++j) t[i][j] = rows[i][j];
        if (sn[i] == RowSense::LE) t[i][sk] = 1.0;
        else if (sn[i] == RowSense::GE) t[i][sk] = -1.0;
        if (sn[i] != RowSense::EQ) ++sk;
        t[i][art0 + i] = 1.0;
        t[i][n] = b[i];
        basis[i] = art0 + i;
    }
    // phase-1 objective: sum of artificials, reduced against the basis
    for (int j = 0; j <= n; ++j) {
        double s = 0;
        for (int i = 0; i < m; ++i) s += t[i][j];
        t[m][j] = (j >= art0 && j < n) ? 1.0 - s : -s;
    }

    Result res;
    bool unb = false;
    detail::tableau_phase(t, basis, m, n, &unb);
    if (t[m][n] < -1e-7) {  // phase-1 objective is -(sum of artificials)
        res.infeasible = true;
        return res;
    }

    // pivot out any basic artificials at zero where possible
    for (int i = 0; i < m; ++i) {
        if (basis[i] < art0) continue;
        for (int j = 0; j < art0; ++j)
            if (std::abs(t[i][j]) > 1e-7) {
                double piv = t[i][j];
                for (int jj = 0; jj <= n; ++jj) t[i][jj] /= piv;
                for (int ii = 0; ii <= m; ++ii) {
                    if (ii == i) continue;
                    double f = t[ii][j];
                    if (std::abs(f) < 1e-13) continue;
                    for (int jj = 0; jj <= n; ++jj) t[ii][jj] -= f * t[i][jj];
                }
                basis[i] = j;
                break;
            }
    }

    // phase 2: original costs on structural columns; artificials forbidden
    for (int j = 0; j <= n; ++j) t[m][j] = 0.0;
    for (int j = 0; j < n0; ++j) t[m][j] = c[j];
    for (int j = art0; j < n; ++j) t[m][j] = 1e30;  // keep them out
    for (int i = 0; i < m; ++i) {
        double f = t[m][basis[i]];
        if (f != 0.0)
            for (int j = 0; j <= n; ++j) t[m][j] -= f * t[i][j];
    }

    unb = false;
    if (!detail::tableau_phase(t, basis, m, n, &unb)) {
        res.unbounded = unb;
        return res;
    }

    res.x.assign(n0, 0.0);
    for (int i = 0; i < m; ++i)
        if (basis[i] < n0) res.x[basis[i]] = t[i][n];
    res.objective = 0.0;
    for (int j = 0; j < n0; ++j) res.objective += c[j] * res.x[j];
    res.optimal = true;
    return res;
}

// LpProblem adapter: requires finite lower bounds; finite uppers become rows.
inline Result solve(const coplan::LpProblem& p) {
    using coplan::RowSense;
    const int n = p.n_cols();
    std::vector<double> c = p.cost;
    std::vector<std::vector<double>> a;
    std::vector<RowSense> sense;
    std::vector<double> b;

    for (const auto& r : p.rows) {
        std::vector<double> row(n, 0.0);
        for (size_t k = 0; k < r.cols.size(); ++k) row[r.cols[k]] = r.vals[k];
        a.push_back(std::move(row));
        sense.push_back(r.sense);
        b.push_back(r.rhs);
    }
    // shift x = z + lower
    double shift_cost = 0.0;
    for (int j = 0; j < n; ++j) {
        assert(std::isfinite(p.lower[j]));
        double l = p.lower[j];
        if (l != 0.0) {
            for (size_t i = 0; i < a.size(); ++i) b[i] -= a[i][j] * l;
            shift_cost += c[j] * l;
        }
        if (std::isfinite(p.upper[j])) {
            std::vector<double> row(n, 0.0);
            row[j] = 1.0;
            a.push_back(std::move(row));
            sense.push_back(RowSense::LE);
            b.push_back(p.upper[j] - l);
        }
    }

    Result r = solve_standard(c, a, sense, b);
    if (r.optimal) {
        for (int j = 0; j < n; ++j) r.x[j] += p.lower[j];
        r.objective += shift_cost;
    }
    return r;
}

}  // namespace lp_oracle
