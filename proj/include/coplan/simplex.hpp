#pragma once

// Revised simplex for bounded-variable LPs: two-phase with explicit
// artificials, Dantzig pricing with a Bland fallback after a run of
// degenerate pivots, sparse LU basis factorization (Gilbert-Peierls style)
// with product-form eta updates and periodic refactorization, and geometric
// row/column equilibration. Every optimal answer ships with a certificate
// (primal residual, dual sign residual, weak-duality gap) recomputed from a
// fresh factorization; if the certificate fails the solver reports a numeric
// failure rather than a wrong "optimal".

#include <algorithm>
#include <cmath>

#include "coplan/lp.hpp"

namespace coplan {

// ---------------------------------------------------------------------------
// Sparse LU

struct SparseLU {
    int m = 0;
    std::vector<int> prow;  // pivot original row per position
    std::vector<int> pinv;  // original row -> position
    std::vector<std::vector<std::pair<int, double>>> lcol;  // (orig row, mult)
    std::vector<std::vector<std::pair<int, double>>> ucol;  // (position, val)
    std::vector<double> udiag;

    // cols[j]: sparse column j as (orig row, value). Returns false if singular.
    bool factor(int dim, const std::vector<std::vector<std::pair<int, double>>>& cols) {
        m = dim;
        prow.assign(m, -1);
        pinv.assign(m, -1);
        lcol.assign(m, {});
        ucol.assign(m, {});
        udiag.assign(m, 0.0);
        std::vector<double> w(m, 0.0);
        std::vector<uint8_t> seen(m, 0);
        std::vector<int> touched, stack, stack_pos;
        touched.reserve(64);

        for (int j = 0; j < m; ++j) {
            // symbolic: rows reachable from the column pattern through L
            touched.clear();
            for (const auto& [r, v] : cols[j]) {
                if (seen[r]) continue;
                stack.clear();
                stack_pos.clear();
                stack.push_back(r);
                stack_pos.push_back(0);
                seen[r] = 1;
                while (!stack.empty()) {
                    int row = stack.back();
                    int k = pinv[row];
                    bool descended = false;
                    if (k >= 0) {
                        auto& lk = lcol[k];
                        for (int& ip = stack_pos.back(); ip < static_cast<int>(lk.size());) {
                            int rr = lk[ip].first;
                            ++ip;
                            if (!seen[rr]) {
                                seen[rr] = 1;
                                stack.push_back(rr);
                                stack_pos.push_back(0);
                                descended = true;
                                break;
                            }
                        }
                    }
                    if (!descended) {
                        touched.push_back(row);
                        stack.pop_back();
                        stack_pos.pop_back();
                    }
                }
            }
            for (int r : touched) seen[r] = 0;

            // numeric elimination in ascending pivot-position order
            for (const auto& [r, v] : cols[j]) w[r] = v;
            std::vector<std::pair<int, int>> pivs;  // (position, orig row)
            for (int r : touched)
                if (pinv[r] >= 0) pivs.push_back({pinv[r], r});
            std::sort(pivs.begin(), pivs.end());
            for (const auto& [k, r] : pivs) {
                double t = w[r];
                if (t == 0.0) continue;
                for (const auto& [rr, v] : lcol[k]) w[rr] -= v * t;
            }

            // pivot: largest magnitude among unpivoted touched rows
            int pivot_row = -1;
            double best = 0.0;
            for (int r : touched)
                if (pinv[r] < 0 && std::abs(w[r]) > best) {
                    best = std::abs(w[r]);
                    pivot_row = r;
                }
            if (pivot_row < 0 || best < 1e-11) {
                for (int r : touched) w[r] = 0.0;
                return false;
            }

            double piv = w[pivot_row];
            udiag[j] = piv;
            for (const auto& [k, r] : pivs)
                if (w[r] != 0.0) ucol[j].push_back({k, w[r]});
            for (int r : touched) {
                if (pinv[r] < 0 && r != pivot_row && w[r] != 0.0)
                    lcol[j].push_back({r, w[r] / piv});
                w[r] = 0.0;
            }
            prow[j] = pivot_row;
            pinv[pivot_row] = j;
        }
        return true;
    }

    // Solve B x = rhs. rhs indexed by original row; x by basis position.
    void ftran(const std::vector<double>& rhs, std::vector<double>& x,
               std::vector<double>& work) const {
        work = rhs;
        for (int k = 0; k < m; ++k) {
            double t = work[prow[k]];
            if (t != 0.0)
                for (const auto& [r, v] : lcol[k]) work[r] -= v * t;
        }
        x.assign(m, 0.0);
        for (int k = m - 1; k >= 0; --k) {
            double t = work[prow[k]] / udiag[k];
            x[k] = t;
            if (t != 0.0)
                for (const auto& [i, v] : ucol[k]) work[prow[i]] -= v * t;
        }
    }

    // Solve y^T B = c. c indexed by basis position; y by original row.
    void btran(const std::vector<double>& c, std::vector<double>& y,
               std::vector<double>& work) const {
        work.assign(m, 0.0);
        for (int k = 0; k < m; ++k) {
            double s = c[k];
            for (const auto& [i, v] : ucol[k]) s -= v * work[i];
            work[k] = s / udiag[k];
        }
        std::vector<double>& yhat = work;
        for (int k = m - 1; k >= 0; --k) {
            double s = yhat[k];
            for (const auto& [r, v] : lcol[k]) s -= v * yhat[pinv[r]];
            yhat[k] = s;
        }
        y.assign(m, 0.0);
        for (int k = 0; k < m; ++k) y[prow[k]] = yhat[k];
    }
};

// Product-form update column.
struct Eta {
    int pos = 0;                                // basis position replaced
    double diag = 1.0;                          // alpha[pos]
    std::vector<std::pair<int, double>> col;    // (position, alpha) off-diagonal
};

// ---------------------------------------------------------------------------
// Solver

struct SimplexOptions {
    double feas_tol = 1e-7;
    double dual_tol = 1e-7;
    int max_iters = 0;  // 0 -> automatic
    int refactor_every = 100;
    bool scale = true;
};

class SimplexSolver {
  public:
    explicit SimplexSolver(const LpProblem& p, SimplexOptions opt = {})
        : p_(p), opt_(opt) {
        build();
    }

    LpSolution solve(const Basis* warm = nullptr) {
        LpSolution sol;
        int iter_cap = opt_.max_iters > 0 ? opt_.max_iters : 20000 + 60 * (m_ + n_);

        for (int attempt = 0;; ++attempt) {
            reset_state(attempt == 0 ? warm : nullptr);

            // phase 1 while any artificial still carries row residual; its
            // costs price unscaled violation, so the phase-1 optimum is the
            // residual mass in the caller's units
            double infeas = artificial_mass() + total_infeasibility();
            if (infeas > opt_.feas_tol * (1.0 + rhs_norm_unscaled())) {
                LoopResult r = run(phase1_cost_, iter_cap, true);
                sol.iterations += r.iterations;
                if (r.status == LpStatus::NumericalFailure ||
                    r.status == LpStatus::IterationLimit) {
                    sol.status = r.status;
                    sol.message = r.message;
                    return sol;
                }
                double p1 = phase_objective(phase1_cost_);
                if (p1 > opt_.feas_tol * (1.0 + rhs_norm_unscaled()) * 10.0) {
                    sol.status = LpStatus::Infeasible;
                    sol.objective = p1;
                    sol.message = "phase-1 objective " + std::to_string(p1);
                    extract_duals(sol, phase1_cost_);  // Farkas-style certificate
                    return sol;
                }
            }
            // pin artificials for phase 2
            for (int j = art0_; j < ncols_; ++j) {
                lo_[j] = 0.0;
                up_[j] = 0.0;
            }

            LoopResult r2 = run(cost_, iter_cap, false);
            sol.iterations += r2.iterations;
            if (r2.status != LpStatus::Optimal) {
                sol.status = r2.status;
                sol.message = r2.message;
                return sol;
            }

            // accept only if the recomputed point is clean; otherwise retry
            // once from scratch with every direction entry in the ratio test
            if (!refactor()) {
                sol.status = LpStatus::NumericalFailure;
                sol.message = "final refactorization failed";
                return sol;
            }
            recompute_basics();
            if (total_infeasibility() <= opt_.feas_tol * (1.0 + rhs_norm_unscaled()) ||
                attempt >= 1) {
                finish(sol);
                return sol;
            }
            include_all_ratio_ = true;
        }
    }

  private:
    const LpProblem& p_;
    SimplexOptions opt_;

    int n_ = 0;       // structural columns
    int m_ = 0;       // rows
    int slack0_ = 0;  // first slack column
    int art0_ = 0;    // first artificial column
    int ncols_ = 0;

    // scaled internal data, column-wise
    std::vector<std::vector<std::pair<int, double>>> acol_;
    std::vector<double> cost_, phase1_cost_, lo_, up_, b_;
    std::vector<double> rscale_, cscale_;
    double rhs_norm_ = 1.0;

    // basis state
    std::vector<int> basic_;          // column per position
    std::vector<int> pos_of_;         // column -> position or -1
    std::vector<VarState> state_;     // per column
    std::vector<double> xval_;        // per column
    SparseLU lu_;
    std::vector<Eta> etas_;
    std::vector<double> work1_, work2_, ftran_x_, btran_y_;
    struct RatioCand {
        int pos;
        double cap;
        bool at_upper;
    };
    std::vector<RatioCand> cands_;
    bool just_refactored_ = false;
    bool include_all_ratio_ = false;  // retry mode: no small-entry cutoff

    struct LoopResult {
        LpStatus status = LpStatus::Optimal;
        int iterations = 0;
        std::string message;
    };

    void build() {
        n_ = p_.n_cols();
        m_ = p_.n_rows();
        slack0_ = n_;
        art0_ = n_ + m_;
        ncols_ = n_ + 2 * m_;

        rscale_.assign(m_, 1.0);
        cscale_.assign(n_, 1.0);
        if (opt_.scale) compute_scaling();

        acol_.assign(ncols_, {});
        for (int i = 0; i < m_; ++i) {
            const LpRow& r = p_.rows[i];
            for (size_t k = 0; k < r.cols.size(); ++k) {
                int j = r.cols[k];
                double v = r.vals[k] * rscale_[i] * cscale_[j];
                if (v != 0.0) acol_[j].push_back({i, v});
            }
        }
        for (int i = 0; i < m_; ++i) {
            acol_[slack0_ + i].push_back({i, 1.0});
            acol_[art0_ + i].push_back({i, 1.0});
        }

        cost_.assign(ncols_, 0.0);
        phase1_cost_.assign(ncols_, 0.0);
        lo_.assign(ncols_, 0.0);
        up_.assign(ncols_, 0.0);
        b_.assign(m_, 0.0);
        for (int j = 0; j < n_; ++j) {
            cost_[j] = p_.cost[j] * cscale_[j];
            lo_[j] = p_.lower[j] / cscale_[j];
            up_[j] = p_.upper[j] / cscale_[j];
        }
        for (int i = 0; i < m_; ++i) {
            b_[i] = p_.rows[i].rhs * rscale_[i];
            switch (p_.rows[i].sense) {
                case RowSense::LE:
                    lo_[slack0_ + i] = 0.0;
                    up_[slack0_ + i] = kInf;
                    break;
                case RowSense::GE:
                    lo_[slack0_ + i] = -kInf;
                    up_[slack0_ + i] = 0.0;
                    break;
                case RowSense::EQ:
                    lo_[slack0_ + i] = 0.0;
                    up_[slack0_ + i] = 0.0;
                    break;
            }
        }
        rhs_norm_ = 0.0;
        for (double v : b_) rhs_norm_ = std::max(rhs_norm_, std::abs(v));
    }

    void compute_scaling() {
        for (int pass = 0; pass < 2; ++pass) {
            std::vector<double> rmin(m_, kInf), rmax(m_, 0.0);
            for (int i = 0; i < m_; ++i) {
                const LpRow& r = p_.rows[i];
                for (size_t k = 0; k < r.cols.size(); ++k) {
                    double v = std::abs(r.vals[k]) * rscale_[i] * cscale_[r.cols[k]];
                    if (v > 0) {
                        rmin[i] = std::min(rmin[i], v);
                        rmax[i] = std::max(rmax[i], v);
                    }
                }
            }
            for (int i = 0; i < m_; ++i)
                if (rmax[i] > 0) rscale_[i] /= std::sqrt(rmin[i] * rmax[i]);
            std::vector<double> cmin(n_, kInf), cmax(n_, 0.0);
            for (int i = 0; i < m_; ++i) {
                const LpRow& r = p_.rows[i];
                for (size_t k = 0; k < r.cols.size(); ++k) {
                    int j = r.cols[k];
                    double v = std::abs(r.vals[k]) * rscale_[i] * cscale_[j];
                    if (v > 0) {
                        cmin[j] = std::min(cmin[j], v);
                        cmax[j] = std::max(cmax[j], v);
                    }
                }
            }
            for (int j = 0; j < n_; ++j)
                if (cmax[j] > 0) cscale_[j] /= std::sqrt(cmin[j] * cmax[j]);
        }
    }

    double nonbasic_rest(int j) const {
        if (lo_[j] > -kInf && up_[j] < kInf)
            return std::abs(lo_[j]) <= std::abs(up_[j]) ? lo_[j] : up_[j];
        if (lo_[j] > -kInf) return lo_[j];
        if (up_[j] < kInf) return up_[j];
        return 0.0;
    }

    void reset_state(const Basis* warm) {
        state_.assign(ncols_, VarState::AtLower);
        xval_.assign(ncols_, 0.0);
        pos_of_.assign(ncols_, -1);
        basic_.assign(m_, -1);
        etas_.clear();

        // nonbasic rest positions for structural and slack columns
        for (int j = 0; j < art0_; ++j) {
            double v = nonbasic_rest(j);
            xval_[j] = v;
            state_[j] = (lo_[j] <= -kInf && up_[j] >= kInf) ? VarState::FreeZero
                        : (v == lo_[j])                     ? VarState::AtLower
                                                            : VarState::AtUpper;
        }

        bool warm_ok = false;
        bool warm_sane = warm && !warm->empty() &&
                         static_cast<int>(warm->basic.size()) == m_ &&
                         static_cast<int>(warm->state.size()) == ncols_;
        if (warm_sane)
            for (int j : warm->basic)
                if (j < 0 || j >= ncols_) warm_sane = false;
        if (warm_sane) {
            // adopt, then verify the basis factors and is primal feasible
            for (int j = 0; j < ncols_; ++j) {
                state_[j] = warm->state[j];
                if (state_[j] != VarState::Basic) {
                    xval_[j] = state_[j] == VarState::AtLower   ? lo_[j]
                               : state_[j] == VarState::AtUpper ? up_[j]
                                                                : 0.0;
                    if (!std::isfinite(xval_[j])) xval_[j] = nonbasic_rest(j);
                }
            }
            for (int i = 0; i < m_; ++i) {
                basic_[i] = warm->basic[i];
                pos_of_[basic_[i]] = i;
            }
            if (refactor()) {
                recompute_basics();
                warm_ok = total_infeasibility() <=
                          opt_.feas_tol * (1.0 + rhs_norm_unscaled());
            }
            if (!warm_ok) {
                for (int i = 0; i < m_; ++i)
                    if (basic_[i] >= 0) pos_of_[basic_[i]] = -1;
                for (int j = 0; j < art0_; ++j) {
                    double v = nonbasic_rest(j);
                    xval_[j] = v;
                    state_[j] = (lo_[j] <= -kInf && up_[j] >= kInf) ? VarState::FreeZero
                                : (v == lo_[j])                     ? VarState::AtLower
                                                                    : VarState::AtUpper;
                }
            }
        }

        if (!warm_ok) {
            // artificial start: one artificial per row carries the residual
            std::vector<double> r = b_;
            for (int j = 0; j < art0_; ++j)
                if (xval_[j] != 0.0)
                    for (const auto& [i, v] : acol_[j]) r[i] -= v * xval_[j];
            for (int i = 0; i < m_; ++i) {
                int a = art0_ + i;
                basic_[i] = a;
                pos_of_[a] = i;
                state_[a] = VarState::Basic;
                xval_[a] = r[i];
                if (r[i] >= 0.0) {
                    lo_[a] = 0.0;
                    up_[a] = kInf;
                    phase1_cost_[a] = 1.0 / rscale_[i];
                } else {
                    lo_[a] = -kInf;
                    up_[a] = 0.0;
                    phase1_cost_[a] = -1.0 / rscale_[i];
                }
            }
            lu_ = SparseLU();
            std::vector<std::vector<std::pair<int, double>>> cols(m_);
            for (int i = 0; i < m_; ++i) cols[i] = acol_[basic_[i]];
            lu_.factor(m_, cols);  // identity; cannot fail
            etas_.clear();
        } else {
            // keep artificials pinned where the warm basis does not use them
            for (int i = 0; i < m_; ++i) {
                int a = art0_ + i;
                if (pos_of_[a] < 0) {
                    lo_[a] = 0.0;
                    up_[a] = 0.0;
                    xval_[a] = 0.0;
                    state_[a] = VarState::AtLower;
                }
                phase1_cost_[a] = 0.0;
            }
        }
    }

    bool refactor() {
        std::vector<std::vector<std::pair<int, double>>> cols(m_);
        for (int i = 0; i < m_; ++i) cols[i] = acol_[basic_[i]];
        SparseLU fresh;
        if (!fresh.factor(m_, cols)) return false;
        lu_ = std::move(fresh);
        etas_.clear();
        return true;
    }

    void recompute_basics() {
        std::vector<double> r = b_;
        for (int j = 0; j < ncols_; ++j)
            if (state_[j] != VarState::Basic && xval_[j] != 0.0)
                for (const auto& [i, v] : acol_[j]) r[i] -= v * xval_[j];
        lu_.ftran(r, ftran_x_, work1_);
        for (int i = 0; i < m_; ++i) xval_[basic_[i]] = ftran_x_[i];
    }

    // Unscaled magnitude of one scaled unit of column j.
    double col_unscale(int j) const {
        if (j < n_) return cscale_[j];
        int row = j < art0_ ? j - slack0_ : j - art0_;
        return 1.0 / rscale_[row];
    }

    // Bound violations of basic variables, in the caller's units.
    double total_infeasibility() const {
        double s = 0;
        for (int i = 0; i < m_; ++i) {
            int j = basic_[i];
            double v = 0;
            if (xval_[j] < lo_[j]) v = lo_[j] - xval_[j];
            if (xval_[j] > up_[j]) v = xval_[j] - up_[j];
            s += v * col_unscale(j);
        }
        return s;
    }

    // Row residual still parked on basic artificials, in the caller's units;
    // the real LP requires every artificial at zero even when its phase-1
    // bounds admit more.
    double artificial_mass() const {
        double s = 0;
        for (int i = 0; i < m_; ++i)
            if (basic_[i] >= art0_)
                s += std::abs(xval_[basic_[i]]) / rscale_[basic_[i] - art0_];
        return s;
    }

    double phase_objective(const std::vector<double>& c) const {
        double s = 0;
        for (int j = 0; j < ncols_; ++j)
            if (c[j] != 0.0 && xval_[j] != 0.0) s += c[j] * xval_[j];
        return s;
    }

    void ftran_col(int j, std::vector<double>& out) {
        std::vector<double> rhs(m_, 0.0);
        for (const auto& [i, v] : acol_[j]) rhs[i] = v;
        lu_.ftran(rhs, out, work1_);
        for (const Eta& e : etas_) {
            double t = out[e.pos] / e.diag;
            if (t != 0.0)
                for (const auto& [i, v] : e.col) out[i] -= v * t;
            out[e.pos] = t;
        }
    }

    void btran_cb(const std::vector<double>& c, std::vector<double>& y) {
        std::vector<double> cb(m_);
        for (int i = 0; i < m_; ++i) cb[i] = c[basic_[i]];
        for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
            double s = cb[it->pos];
            for (const auto& [i, v] : it->col) s -= v * cb[i];
            cb[it->pos] = s / it->diag;
        }
        lu_.btran(cb, y, work2_);
    }

    double reduced_cost(int j, const std::vector<double>& c,
                        const std::vector<double>& y) const {
        double d = c[j];
        for (const auto& [i, v] : acol_[j]) d -= y[i] * v;
        return d;
    }

    LoopResult run(const std::vector<double>& c, int iter_cap, bool phase1) {
        LoopResult res;
        int since_refactor = 0;
        long degenerate_run = 0;
        bool bland = false;
        const long bland_after = 5L * (m_ + n_);
        std::vector<double> y, alpha;

        for (;;) {
            if (res.iterations >= iter_cap) {
                res.status = LpStatus::IterationLimit;
                res.message = "simplex iteration limit";
                return res;
            }
            btran_cb(c, y);

            // pricing
            int enter = -1;
            double best_viol = bland ? 0.0 : opt_.dual_tol;
            int enter_dir = +1;
            for (int j = 0; j < ncols_; ++j) {
                if (state_[j] == VarState::Basic) continue;
                if (lo_[j] == up_[j]) continue;  // fixed
                double d = reduced_cost(j, c, y);
                int dir = 0;
                if (state_[j] == VarState::AtLower && d < -opt_.dual_tol) dir = +1;
                else if (state_[j] == VarState::AtUpper && d > opt_.dual_tol) dir = -1;
                else if (state_[j] == VarState::FreeZero && std::abs(d) > opt_.dual_tol)
                    dir = d < 0 ? +1 : -1;
                if (dir == 0) continue;
                if (bland) {  // first eligible index
                    enter = j;
                    enter_dir = dir;
                    break;
                }
                if (std::abs(d) > best_viol) {
                    best_viol = std::abs(d);
                    enter = j;
                    enter_dir = dir;
                }
            }
            if (enter < 0) {
                res.status = LpStatus::Optimal;
                return res;
            }

            ftran_col(enter, alpha);

            // Two-pass ratio test. Pass 1 finds the tightest cap over every
            // row with a non-negligible direction entry; pass 2 picks, among
            // rows blocking within a small relative window of that cap, the
            // one with the largest pivot. A tiny window keeps the drift of
            // near-min rows bounded by |g| * window, so large steps cannot
            // push skipped rows past their bounds.
            cands_.clear();
            double limit = kInf;
            double self_cap = up_[enter] - lo_[enter];  // bound flip distance
            if (self_cap < kInf) limit = self_cap;
            const double gcut = include_all_ratio_ ? 0.0 : 1e-12;
            for (int i = 0; i < m_; ++i) {
                double g = enter_dir * alpha[i];
                if (std::abs(g) <= gcut || g == 0.0) continue;
                int j = basic_[i];
                double cap;
                bool at_upper;
                if (g > 0) {  // basic decreases toward its lower bound
                    if (lo_[j] <= -kInf) continue;
                    cap = std::max(0.0, xval_[j] - lo_[j]) / g;
                    at_upper = false;
                } else {  // basic increases toward its upper bound
                    if (up_[j] >= kInf) continue;
                    cap = std::max(0.0, up_[j] - xval_[j]) / (-g);
                    at_upper = true;
                }
                cands_.push_back({i, cap, at_upper});
                if (cap < limit) limit = cap;
            }

            if (std::isinf(limit)) {
                res.status = phase1 ? LpStatus::NumericalFailure : LpStatus::Unbounded;
                res.message = phase1 ? "phase-1 unbounded (internal error)" : "unbounded";
                return res;
            }

            int leave_pos = -1;
            bool leave_at_upper = false;
            double delta = limit;
            const double window = 1e-9 + 1e-7 * limit;
            if (bland) {
                int best_col = -1;
                for (const auto& c : cands_)
                    if (c.cap <= limit + 1e-12 &&
                        (best_col < 0 || basic_[c.pos] < best_col)) {
                        best_col = basic_[c.pos];
                        leave_pos = c.pos;
                        leave_at_upper = c.at_upper;
                        delta = std::min(delta, c.cap);
                    }
            } else {
                double best_piv = 0.0;
                for (const auto& c : cands_)
                    if (c.cap <= limit + window && std::abs(alpha[c.pos]) > best_piv) {
                        best_piv = std::abs(alpha[c.pos]);
                        leave_pos = c.pos;
                        leave_at_upper = c.at_upper;
                        delta = c.cap;
                    }
            }
            // a bound flip within the window avoids the pivot entirely
            if (self_cap <= limit + window &&
                (leave_pos < 0 || self_cap <= delta)) {
                leave_pos = -1;
                delta = self_cap;
            }

            if (leave_pos >= 0 && std::abs(alpha[leave_pos]) < 1e-9) {
                // pivot too small to trust: refactor once and retry; if the
                // direction is unchanged afterwards, accept it and let the
                // next refactorization clean up
                if (++res.iterations >= iter_cap) {
                    res.status = LpStatus::IterationLimit;
                    return res;
                }
                if (!just_refactored_ && refactor()) {
                    recompute_basics();
                    just_refactored_ = true;
                    continue;
                }
                since_refactor = opt_.refactor_every;  // force cleanup next pivot
            }
            just_refactored_ = false;

            // degenerate-run bookkeeping drives the Bland fallback
            if (delta <= 1e-10) {
                if (++degenerate_run >= bland_after) bland = true;
            } else {
                degenerate_run = 0;
                bland = false;
            }
            if (delta != 0.0)
                for (int i = 0; i < m_; ++i)
                    if (alpha[i] != 0.0) xval_[basic_[i]] -= enter_dir * alpha[i] * delta;
            xval_[enter] += enter_dir * delta;
            ++res.iterations;

            if (leave_pos < 0) {
                // bound flip, no basis change
                state_[enter] =
                    state_[enter] == VarState::AtLower ? VarState::AtUpper : VarState::AtLower;
                xval_[enter] = state_[enter] == VarState::AtLower ? lo_[enter] : up_[enter];
                continue;
            }

            int leave = basic_[leave_pos];
            state_[leave] = leave_at_upper ? VarState::AtUpper : VarState::AtLower;
            xval_[leave] = leave_at_upper ? up_[leave] : lo_[leave];
            pos_of_[leave] = -1;
            basic_[leave_pos] = enter;
            pos_of_[enter] = leave_pos;
            state_[enter] = VarState::Basic;

            Eta e;
            e.pos = leave_pos;
            e.diag = alpha[leave_pos];
            for (int i = 0; i < m_; ++i)
                if (i != leave_pos && alpha[i] != 0.0) e.col.push_back({i, alpha[i]});
            etas_.push_back(std::move(e));

            if (++since_refactor >= opt_.refactor_every) {
                if (!refactor()) {
                    res.status = LpStatus::NumericalFailure;
                    res.message = "basis refactorization failed";
                    return res;
                }
                recompute_basics();
                since_refactor = 0;
            }
        }
    }

    void extract_duals(LpSolution& sol, const std::vector<double>& c) {
        std::vector<double> y;
        btran_cb(c, y);
        sol.row_dual.assign(m_, 0.0);
        for (int i = 0; i < m_; ++i) sol.row_dual[i] = y[i] * rscale_[i];
        sol.reduced_cost.assign(n_, 0.0);
        for (int j = 0; j < n_; ++j)
            sol.reduced_cost[j] = reduced_cost(j, c, y) / cscale_[j];
    }

    // Certified extraction for phase-2 optima.
    void finish(LpSolution& sol) {
        if (!refactor()) {
            sol.status = LpStatus::NumericalFailure;
            sol.message = "final refactorization failed";
            return;
        }
        recompute_basics();

        std::vector<double> y;
        btran_cb(cost_, y);

        sol.x.assign(n_, 0.0);
        for (int j = 0; j < n_; ++j) sol.x[j] = xval_[j] * cscale_[j];
        sol.row_dual.assign(m_, 0.0);
        for (int i = 0; i < m_; ++i) sol.row_dual[i] = y[i] * rscale_[i];
        sol.reduced_cost.assign(n_, 0.0);

        long double obj = 0.0;
        for (int j = 0; j < n_; ++j) obj += static_cast<long double>(p_.cost[j]) * sol.x[j];
        sol.objective = static_cast<double>(obj);

        // primal residual on the original rows
        double pres = 0.0;
        for (int i = 0; i < m_; ++i) {
            const LpRow& r = p_.rows[i];
            long double act = 0.0;
            for (size_t k = 0; k < r.cols.size(); ++k)
                act += static_cast<long double>(r.vals[k]) * sol.x[r.cols[k]];
            double a = static_cast<double>(act);
            double viol = 0.0;
            if (r.sense == RowSense::LE) viol = a - r.rhs;
            else if (r.sense == RowSense::GE) viol = r.rhs - a;
            else viol = std::abs(a - r.rhs);
            pres = std::max(pres, viol);
        }
        for (int j = 0; j < n_; ++j) {
            pres = std::max(pres, p_.lower[j] - sol.x[j]);
            pres = std::max(pres, sol.x[j] - p_.upper[j]);
        }
        sol.primal_residual = pres;

        // dual sign residual in the scaled space, plus the weak-duality bound
        double dres = 0.0;
        long double dual_obj = 0.0;
        for (int i = 0; i < m_; ++i) {
            dual_obj += static_cast<long double>(sol.row_dual[i]) * p_.rows[i].rhs;
            if (p_.rows[i].sense == RowSense::LE && sol.row_dual[i] > 0)
                dres = std::max(dres, sol.row_dual[i] / (1.0 + std::abs(sol.row_dual[i])));
            if (p_.rows[i].sense == RowSense::GE && sol.row_dual[i] < 0)
                dres = std::max(dres, -sol.row_dual[i] / (1.0 + std::abs(sol.row_dual[i])));
        }
        for (int j = 0; j < n_; ++j) {
            double dj = reduced_cost(j, cost_, y);
            sol.reduced_cost[j] = dj / cscale_[j];
            double d = sol.reduced_cost[j];
            double scale = 1.0 + std::abs(p_.cost[j]);
            if (state_[j] == VarState::Basic) {
                dres = std::max(dres, std::abs(d) / scale);
                dual_obj += 0.0;
            } else if (d >= 0) {
                if (p_.lower[j] <= -kInf) dres = std::max(dres, d / scale);
                else dual_obj += static_cast<long double>(d) * p_.lower[j];
            } else {
                if (p_.upper[j] >= kInf) dres = std::max(dres, -d / scale);
                else dual_obj += static_cast<long double>(d) * p_.upper[j];
            }
        }
        sol.dual_residual = dres;
        sol.duality_gap = std::abs(static_cast<double>(obj - dual_obj));

        // certificate gates; a failed certificate is never reported optimal
        bool ok = sol.primal_residual <= 1e-7 * (1.0 + rhs_norm_unscaled()) &&
                  sol.dual_residual <= 1e-5 &&
                  sol.duality_gap <= 1e-6 * (1.0 + std::abs(sol.objective));
        if (!ok) {
            if (std::getenv("COPLAN_LP_DEBUG")) {
                for (int j = 0; j < n_; ++j) {
                    double viol = std::max(p_.lower[j] - sol.x[j], sol.x[j] - p_.upper[j]);
                    if (viol > 1e-6)
                        std::fprintf(stderr,
                                     "[lp] col %d out of bounds: x=%g lo=%g up=%g state=%d "
                                     "scaled xval=%g lo_=%g up_=%g cscale=%g\n",
                                     j, sol.x[j], p_.lower[j], p_.upper[j],
                                     static_cast<int>(state_[j]), xval_[j], lo_[j], up_[j],
                                     cscale_[j]);
                }
            }
            sol.status = LpStatus::NumericalFailure;
            sol.message = "certificate failed: primal " + std::to_string(sol.primal_residual) +
                          " dual " + std::to_string(sol.dual_residual) + " gap " +
                          std::to_string(sol.duality_gap);
            return;
        }

        sol.status = LpStatus::Optimal;
        sol.basis.basic = basic_;
        sol.basis.state = state_;
    }

    double rhs_norm_unscaled() const {
        double v = 0;
        for (const auto& r : p_.rows) v = std::max(v, std::abs(r.rhs));
        return v;
    }
};

inline LpSolution solve_lp(const LpProblem& p, SimplexOptions opt = {},
                           const Basis* warm = nullptr) {
    SimplexSolver s(p, opt);
    return s.solve(warm);
}

}  // namespace coplan
