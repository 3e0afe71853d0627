#pragma once

// Decomposition driver: integer master with accumulating cuts, per-block
// feasibility subproblems (slack minimization) and optimality subproblems
// (recourse cost), bound maintenance, and the three acceleration devices:
// scenario-grouped subproblems, parallel dispatch with a deterministic merge,
// and compiling the peak-load scenario's blocks into the master itself.
//
// Copy constraints z = z_hat are explicit equality rows; the cut multipliers
// are the negated copy-row duals, so a subproblem value function V satisfies
// V(z) >= V(z_hat) - mu.(z - z_hat) for every feasible z.

#include <atomic>
#include <cstdio>
#include <future>
#include <numeric>

#include "coplan/compile.hpp"
#include "coplan/milp.hpp"

namespace coplan {

struct BendersOptions {
    double tol = 1e-4;          // relative |UB-LB| gap
    int group_size = 4;         // scenarios per subproblem
    bool seed_peak = true;      // embed the peak-load scenario in the master
    int max_iterations = 200;
    int threads = 1;
    double time_limit_sec = 0.0;
    double master_gap = 0.0;    // 0: tol/10
    SimplexOptions lp;
};

struct BendersCut {
    bool feasibility = false;
    int year = 1, day = 0, group = 0;
    double value = 0.0;             // Upsilon or Phi at the anchor
    std::vector<int> cols;          // global z columns (the year's span)
    std::vector<double> dual;       // lambda or mu per column
    std::vector<double> anchor;     // z_hat restricted to cols
    int iteration = 0;

    // cut right-hand side evaluated at z: value - dual.(z - anchor)
    double rhs_at(const std::vector<double>& z) const {
        double s = value;
        for (size_t k = 0; k < cols.size(); ++k)
            s -= dual[k] * (z[static_cast<size_t>(cols[k])] - anchor[k]);
        return s;
    }
};

struct BendersTracePoint {
    int iteration = 0;
    double lb = 0, ub = 0, gap = 0;
    int feas_cuts = 0, opt_cuts = 0;
    double wall_ms = 0;  // reported on the console log, not in trace files
};

struct GroupKey {
    int year = 1, day = 0, group = 0;
    std::vector<int> scens;
};

struct SubproblemResult {
    double value = 0.0;
    std::vector<double> dual;  // negated copy duals, per year-span column
    std::vector<std::vector<double>> x;  // per member scenario
    bool feasible = true;      // FP objective at (near) zero
    LpStatus status = LpStatus::Optimal;
    std::string message;
    Basis basis;
};

struct BendersResult {
    bool converged = false;
    double lb = -kInf, ub = kInf;
    int iterations = 0;
    std::vector<double> z;
    std::vector<std::vector<double>> dispatch;  // per model block at z
    std::vector<BendersCut> cuts;
    std::vector<BendersTracePoint> trace;
    std::string message;
    // incumbent bookkeeping behind the upper bound
    double incumbent_cz = 0.0;
    double incumbent_seed_value = 0.0;
    std::vector<double> incumbent_group_values;

    double gap() const { return std::abs(ub - lb) / std::max(1.0, std::abs(ub)); }
};

// ---------------------------------------------------------------------------
// Subproblem construction

namespace detail {

struct GroupLp {
    LpProblem lp;
    int z0 = 0, nzy = 0;           // local copy-column span
    int year_first = 0;            // global column of the first year-span var
    std::vector<int> x0;           // per member offset
    std::vector<int> copy_rows;    // row index per local z column
};

// mode: false -> feasibility (slack objective), true -> optimality
inline GroupLp build_group_lp(const CompactModel& m, int year, int day,
                              const std::vector<int>& scens,
                              const std::vector<double>& weights, bool optimality,
                              const std::vector<double>& zhat) {
    GroupLp g;
    auto [zfirst, zlast] = m.year_cols[static_cast<size_t>(year)];
    g.year_first = zfirst;
    g.nzy = zlast - zfirst;
    g.z0 = 0;
    for (int j = 0; j < g.nzy; ++j) g.lp.add_col(0.0, -kInf, kInf);

    for (size_t k = 0; k < scens.size(); ++k) {
        const Block& b = m.block(year, day, scens[k]);
        g.x0.push_back(g.lp.n_cols());
        for (int j = 0; j < m.x.count; ++j)
            g.lp.add_col(optimality ? weights[k] * b.q[j] : 0.0, b.xlo[j], b.xup[j]);
    }

    for (size_t k = 0; k < scens.size(); ++k) {
        const Block& b = m.block(year, day, scens[k]);
        int off = g.x0[k];
        for (const auto& r : b.eq) {
            std::vector<int> cols;
            std::vector<double> vals = r.xvals;
            cols.reserve(r.xcols.size() + 2);
            for (int c : r.xcols) cols.push_back(off + c);
            if (!optimality) {
                int sp = g.lp.add_col(1.0, 0.0, kInf);  // shortfall slack
                int sm = g.lp.add_col(1.0, 0.0, kInf);  // surplus slack
                cols.push_back(sp);
                vals.push_back(-1.0);
                cols.push_back(sm);
                vals.push_back(1.0);
            }
            g.lp.add_row(RowSense::EQ, r.rhs, cols, vals);
        }
        for (const auto& r : b.ineq) {
            std::vector<int> cols;
            std::vector<double> vals;
            for (size_t q = 0; q < r.zcols.size(); ++q) {
                cols.push_back(r.zcols[q] - zfirst);  // local copy column
                vals.push_back(r.zvals[q]);
            }
            for (size_t q = 0; q < r.xcols.size(); ++q) {
                cols.push_back(off + r.xcols[q]);
                vals.push_back(r.xvals[q]);
            }
            if (!optimality) {
                int eps = g.lp.add_col(1.0, 0.0, kInf);
                cols.push_back(eps);
                vals.push_back(-1.0);
            }
            g.lp.add_row(RowSense::LE, r.rhs, cols, vals);
        }
    }
    for (int j = 0; j < g.nzy; ++j)
        g.copy_rows.push_back(g.lp.add_row(RowSense::EQ, zhat[static_cast<size_t>(zfirst + j)],
                                           {j}, {1.0}));
    return g;
}

inline SubproblemResult run_group(const CompactModel& m, const GroupKey& key,
                                  const std::vector<double>& weights, bool optimality,
                                  const std::vector<double>& zhat,
                                  const SimplexOptions& lpopt, const Basis* warm = nullptr) {
    GroupLp g = build_group_lp(m, key.year, key.day, key.scens, weights, optimality, zhat);
    LpSolution sol = solve_lp(g.lp, lpopt, warm);
    SubproblemResult r;
    r.status = sol.status;
    if (!sol.optimal()) {
        r.message = "subproblem (" + std::to_string(key.year) + "," +
                    std::to_string(key.day) + ",g" + std::to_string(key.group) +
                    "): " + lp_status_name(sol.status) + " " + sol.message;
        return r;
    }
    r.value = sol.objective;
    r.dual.resize(static_cast<size_t>(g.nzy));
    for (int j = 0; j < g.nzy; ++j)
        r.dual[static_cast<size_t>(j)] = -sol.row_dual[static_cast<size_t>(g.copy_rows[static_cast<size_t>(j)])];
    for (size_t k = 0; k < key.scens.size(); ++k)
        r.x.emplace_back(sol.x.begin() + g.x0[k], sol.x.begin() + g.x0[k] + m.x.count);
    r.basis = std::move(sol.basis);
    return r;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Single-block interfaces (as used by the unit and acceptance suites)

// Slack-minimization check of one block at an anchor; value is the total
// residual mass, the dual prices the anchor.
inline SubproblemResult solve_feasibility(const CompactModel& m, int year, int day,
                                          int scen, const std::vector<double>& zhat,
                                          SimplexOptions lpopt = {}) {
    GroupKey key{year, day, 0, {scen}};
    SubproblemResult r = detail::run_group(m, key, {1.0}, false, zhat, lpopt);
    if (r.status == LpStatus::Optimal) {
        double scale = 1.0;
        for (const auto& row : m.block(year, day, scen).eq)
            scale = std::max(scale, std::abs(row.rhs));
        r.feasible = r.value <= 1e-6 * scale;
    }
    return r;
}

// Recourse cost of one block at an anchor (unweighted q.x).
inline SubproblemResult solve_optimality(const CompactModel& m, int year, int day,
                                         int scen, const std::vector<double>& zhat,
                                         SimplexOptions lpopt = {}) {
    GroupKey key{year, day, 0, {scen}};
    return detail::run_group(m, key, {1.0}, true, zhat, lpopt);
}

// True recourse value by substitution (no copy rows, no duals); used by the
// validity checks as an independent route to V(z).
inline double recourse_value_at(const CompactModel& m, int year, int day,
                                const std::vector<int>& scens,
                                const std::vector<double>& weights,
                                const std::vector<double>& z,
                                SimplexOptions lpopt = {}) {
    LpProblem lp;
    std::vector<int> x0;
    for (size_t k = 0; k < scens.size(); ++k) {
        const Block& b = m.block(year, day, scens[k]);
        x0.push_back(lp.n_cols());
        for (int j = 0; j < m.x.count; ++j)
            lp.add_col(weights[k] * b.q[j], b.xlo[j], b.xup[j]);
    }
    for (size_t k = 0; k < scens.size(); ++k) {
        const Block& b = m.block(year, day, scens[k]);
        for (const auto& r : b.eq) {
            std::vector<int> cols;
            for (int c : r.xcols) cols.push_back(x0[k] + c);
            lp.add_row(RowSense::EQ, r.rhs, cols, r.xvals);
        }
        for (const auto& r : b.ineq) {
            double rhs = r.rhs;
            for (size_t q = 0; q < r.zcols.size(); ++q)
                rhs -= r.zvals[q] * z[static_cast<size_t>(r.zcols[q])];
            std::vector<int> cols;
            for (int c : r.xcols) cols.push_back(x0[k] + c);
            lp.add_row(RowSense::LE, rhs, cols, r.xvals);
        }
    }
    LpSolution sol = solve_lp(lp, lpopt);
    if (!sol.optimal())
        throw std::runtime_error("recourse evaluation failed: " + sol.message);
    return sol.objective;
}

// ---------------------------------------------------------------------------
// Grouping

inline std::vector<GroupKey> group_blocks(const CompactModel& m, int group_size,
                                          int seed_scenario = -1) {
    if (group_size < 1) group_size = 1;
    std::vector<GroupKey> keys;
    for (int y = 1; y <= m.years(); ++y)
        for (int d = 0; d < m.days(); ++d) {
            int gid = 0;
            GroupKey cur{y, d, 0, {}};
            for (int s = 0; s < m.scenarios.size(); ++s) {
                if (s == seed_scenario) continue;
                cur.scens.push_back(s);
                if (static_cast<int>(cur.scens.size()) == group_size) {
                    keys.push_back(cur);
                    cur = GroupKey{y, d, ++gid, {}};
                }
            }
            if (!cur.scens.empty()) keys.push_back(cur);
        }
    return keys;
}

// ---------------------------------------------------------------------------
// Master

namespace detail {

struct MasterLayout {
    LpProblem lp;
    std::vector<uint8_t> integer;
    int phi0 = 0;                    // first epigraph column
    std::vector<int> seed_x0;        // per (y,d) when seeding, else empty
};

inline MasterLayout build_master(const CompactModel& m, const std::vector<GroupKey>& keys,
                                 const std::vector<BendersCut>& cuts, int seed_scenario) {
    MasterLayout ml;
    for (int j = 0; j < m.nz; ++j) {
        ml.lp.add_col(m.c[j], m.zlo[j], m.zup[j]);
        ml.integer.push_back(m.z_integer[j]);
    }
    ml.phi0 = ml.lp.n_cols();
    for (const auto& key : keys) {
        double lb = 0;
        for (int s : key.scens) {
            const Block& b = m.block(key.year, key.day, s);
            lb += b.prob * b.recourse_lb;
        }
        ml.lp.add_col(1.0, std::min(0.0, lb), kInf);
        ml.integer.push_back(0);
    }
    // embedded peak-scenario blocks
    if (seed_scenario >= 0) {
        for (int y = 1; y <= m.years(); ++y)
            for (int d = 0; d < m.days(); ++d) {
                const Block& b = m.block(y, d, seed_scenario);
                int off = ml.lp.n_cols();
                ml.seed_x0.push_back(off);
                for (int j = 0; j < m.x.count; ++j) {
                    ml.lp.add_col(b.prob * b.q[j], b.xlo[j], b.xup[j]);
                    ml.integer.push_back(0);
                }
                for (const auto& r : b.eq) {
                    std::vector<int> cols;
                    for (int c : r.xcols) cols.push_back(off + c);
                    ml.lp.add_row(RowSense::EQ, r.rhs, cols, r.xvals);
                }
                for (const auto& r : b.ineq) {
                    std::vector<int> cols = r.zcols;
                    std::vector<double> vals = r.zvals;
                    for (size_t q = 0; q < r.xcols.size(); ++q) {
                        cols.push_back(off + r.xcols[q]);
                        vals.push_back(r.xvals[q]);
                    }
                    ml.lp.add_row(RowSense::LE, r.rhs, cols, vals);
                }
            }
    }
    for (const auto& r : m.planning) ml.lp.add_row(RowSense::LE, r.rhs, r.cols, r.vals);

    // cuts: optimality  -mu.z - phi <= -value - mu.anchor
    //       feasibility -lambda.z   <= -value - lambda.anchor
    auto key_index = [&](const BendersCut& c) {
        for (size_t k = 0; k < keys.size(); ++k)
            if (keys[k].year == c.year && keys[k].day == c.day && keys[k].group == c.group)
                return static_cast<int>(k);
        return -1;
    };
    for (const auto& c : cuts) {
        std::vector<int> cols;
        std::vector<double> vals;
        double rhs = -c.value;
        for (size_t k = 0; k < c.cols.size(); ++k) {
            if (c.dual[k] == 0.0) {
                rhs -= c.dual[k] * c.anchor[k];
                continue;
            }
            cols.push_back(c.cols[k]);
            vals.push_back(-c.dual[k]);
            rhs -= c.dual[k] * c.anchor[k];
        }
        if (!c.feasibility) {
            int ki = key_index(c);
            if (ki < 0) continue;  // cut for a block now embedded in the master
            cols.push_back(ml.phi0 + ki);
            vals.push_back(-1.0);
        }
        ml.lp.add_row(RowSense::LE, rhs, cols, vals);
    }
    return ml;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Driver

struct MasterInfeasible : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline BendersResult benders_solve(const CompactModel& m, BendersOptions opt = {}) {
    auto t_start = std::chrono::steady_clock::now();
    auto elapsed_ms = [&]() {
        std::chrono::duration<double, std::milli> d =
            std::chrono::steady_clock::now() - t_start;
        return d.count();
    };

    BendersResult res;
    int seed_scen = opt.seed_peak ? m.scenarios.peak_load_scenario() : -1;
    std::vector<GroupKey> keys = group_blocks(m, opt.group_size, seed_scen);

    MilpOptions mopt;
    mopt.gap_tol = opt.master_gap > 0 ? opt.master_gap : opt.tol / 10.0;
    mopt.lp = opt.lp;

    double lb = -kInf, ub = kInf;
    std::vector<double> best_z;
    int stall = 0;
    double prev_lb = -kInf, prev_ub = kInf;

    for (int it = 1; it <= opt.max_iterations; ++it) {
        if (opt.time_limit_sec > 0 && elapsed_ms() > opt.time_limit_sec * 1000.0) {
            res.message = "time limit reached";
            break;
        }
        // ---- master
        detail::MasterLayout ml = detail::build_master(m, keys, res.cuts, seed_scen);
        MilpResult master = solve_milp(ml.lp, ml.integer, mopt);
        if (master.status == LpStatus::Infeasible)
            throw MasterInfeasible("master problem infeasible: " + master.message);
        if (master.status != LpStatus::Optimal && master.status != LpStatus::IterationLimit)
            throw std::runtime_error("master solve failed: " + master.message);
        lb = std::max(lb, master.bound);
        std::vector<double> zhat(master.x.begin(), master.x.begin() + m.nz);
        for (int j = 0; j < m.nz; ++j)
            if (m.z_integer[j]) zhat[static_cast<size_t>(j)] = std::round(zhat[static_cast<size_t>(j)]);

        // ---- subproblems, deterministic merge order
        std::vector<SubproblemResult> fps(keys.size()), ops(keys.size());
        std::vector<uint8_t> group_feasible(keys.size(), 0);
        auto work = [&](size_t k) {
            const GroupKey& key = keys[k];
            std::vector<double> w;
            for (int s : key.scens)
                w.push_back(m.block(key.year, key.day, s).prob);
            fps[k] = detail::run_group(m, key, w, false, zhat, opt.lp);
            if (fps[k].status != LpStatus::Optimal) return;
            double scale = 1.0;
            for (int s : key.scens)
                for (const auto& row : m.block(key.year, key.day, s).eq)
                    scale = std::max(scale, std::abs(row.rhs));
            if (fps[k].value <= 1e-6 * scale) {
                group_feasible[k] = 1;
                ops[k] = detail::run_group(m, key, w, true, zhat, opt.lp);
            }
        };
        if (opt.threads > 1) {
            std::vector<std::future<void>> futs;
            std::atomic<size_t> next{0};
            int nw = std::min<int>(opt.threads, static_cast<int>(keys.size()));
            for (int w = 0; w < nw; ++w)
                futs.push_back(std::async(std::launch::async, [&]() {
                    for (;;) {
                        size_t k = next.fetch_add(1);
                        if (k >= keys.size()) return;
                        work(k);
                    }
                }));
            for (auto& f : futs) f.get();
        } else {
            for (size_t k = 0; k < keys.size(); ++k) work(k);
        }

        // ---- cuts and bound update
        int n_feas = 0, n_opt = 0;
        bool all_feasible = true;
        long double recourse_sum = 0;
        for (size_t k = 0; k < keys.size(); ++k) {
            const GroupKey& key = keys[k];
            if (fps[k].status != LpStatus::Optimal)
                throw std::runtime_error(fps[k].message);
            auto [zf, zl] = m.year_cols[static_cast<size_t>(key.year)];
            std::vector<int> cols(static_cast<size_t>(zl - zf));
            std::iota(cols.begin(), cols.end(), zf);
            std::vector<double> anchor(zhat.begin() + zf, zhat.begin() + zl);
            if (!group_feasible[k]) {
                all_feasible = false;
                BendersCut cut;
                cut.feasibility = true;
                cut.year = key.year;
                cut.day = key.day;
                cut.group = key.group;
                cut.value = fps[k].value;
                cut.cols = cols;
                cut.dual = fps[k].dual;
                cut.anchor = anchor;
                cut.iteration = it;
                res.cuts.push_back(std::move(cut));
                ++n_feas;
            } else {
                if (ops[k].status != LpStatus::Optimal)
                    throw std::runtime_error(ops[k].message);
                recourse_sum += ops[k].value;
                BendersCut cut;
                cut.feasibility = false;
                cut.year = key.year;
                cut.day = key.day;
                cut.group = key.group;
                cut.value = ops[k].value;
                cut.cols = cols;
                cut.dual = ops[k].dual;
                cut.anchor = anchor;
                cut.iteration = it;
                res.cuts.push_back(std::move(cut));
                ++n_opt;
            }
        }

        if (all_feasible) {
            long double cz = 0;
            for (int j = 0; j < m.nz; ++j)
                cz += static_cast<long double>(m.c[j]) * zhat[static_cast<size_t>(j)];
            // embedded seed blocks contribute through the master's own columns
            long double seed_part = 0;
            if (seed_scen >= 0) {
                size_t bi = 0;
                for (int y = 1; y <= m.years(); ++y)
                    for (int d = 0; d < m.days(); ++d, ++bi) {
                        const Block& b = m.block(y, d, seed_scen);
                        int off = ml.seed_x0[bi];
                        for (int j = 0; j < m.x.count; ++j)
                            seed_part += static_cast<long double>(b.prob) * b.q[j] *
                                         master.x[static_cast<size_t>(off + j)];
                    }
            }
            double cand = static_cast<double>(cz + seed_part + recourse_sum);
            if (cand < ub) {
                ub = cand;
                best_z = zhat;
                res.incumbent_cz = static_cast<double>(cz);
                res.incumbent_seed_value = static_cast<double>(seed_part);
                res.incumbent_group_values.clear();
                for (size_t k = 0; k < keys.size(); ++k)
                    res.incumbent_group_values.push_back(ops[k].value);
            }
        }

        res.iterations = it;
        double gap = std::abs(ub - lb) / std::max(1.0, std::abs(ub));
        res.trace.push_back({it, lb, ub, gap, n_feas, n_opt, elapsed_ms()});

        if (ub < kInf && gap <= opt.tol) {
            res.converged = true;
            break;
        }
        // stall guard: no bound progress over several rounds means the cut
        // loop cannot separate further (typically a tolerance conflict)
        if (lb <= prev_lb + 1e-12 && ub >= prev_ub - 1e-12) {
            if (++stall >= 8) {
                res.message = "no bound progress over 8 iterations";
                break;
            }
        } else
            stall = 0;
        prev_lb = lb;
        prev_ub = ub;
    }

    res.lb = lb;
    res.ub = ub;
    if (best_z.empty()) {
        if (res.message.empty()) res.message = "no recourse-feasible master point found";
        return res;
    }
    res.z = best_z;

    // final dispatch at the incumbent, one LP per (year, day, scenario)
    for (int y = 1; y <= m.years(); ++y)
        for (int d = 0; d < m.days(); ++d)
            for (int s = 0; s < m.scenarios.size(); ++s) {
                SubproblemResult fp = solve_feasibility(m, y, d, s, best_z, opt.lp);
                if (fp.status != LpStatus::Optimal || !fp.feasible)
                    throw std::runtime_error(
                        "tolerance conflict: incumbent infeasible for block (" +
                        std::to_string(y) + "," + std::to_string(d) + "," +
                        std::to_string(s) + ")");
                SubproblemResult op = solve_optimality(m, y, d, s, best_z, opt.lp);
                if (op.status != LpStatus::Optimal)
                    throw std::runtime_error("final dispatch failed: " + op.message);
                res.dispatch.push_back(std::move(op.x[0]));
            }
    return res;
}

// Convergence-trace text: one line per iteration, deterministic fields only.
inline std::string trace_file_text(const BendersResult& r) {
    std::string s = "iter\tlb\tub\tgap\tfeas_cuts\topt_cuts\n";
    char buf[160];
    for (const auto& t : r.trace) {
        std::snprintf(buf, sizeof buf, "%d\t%.10g\t%.10g\t%.10g\t%d\t%d\n", t.iteration,
                      t.lb, t.ub, t.gap, t.feas_cuts, t.opt_cuts);
        s += buf;
    }
    return s;
}

}  // namespace coplan
