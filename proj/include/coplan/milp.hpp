#pragma once

// Branch and bound over LP relaxations: best-bound node selection,
// most-fractional branching with lowest-column tie-break, warm starts from
// the parent basis. No cutting planes and no rounding heuristics; the
// incumbent always comes from an integral LP relaxation.

#include <chrono>
#include <memory>
#include <queue>

#include "coplan/simplex.hpp"

namespace coplan {

struct MilpOptions {
    double gap_tol = 1e-4;   // relative |UB-LB| / max(1, |UB|)
    double int_tol = 1e-6;
    double time_limit_sec = 0.0;  // 0: none
    long max_nodes = 0;           // 0: none
    SimplexOptions lp;
};

struct MilpResult {
    LpStatus status = LpStatus::NumericalFailure;
    bool proven = false;     // gap criterion met
    double objective = 0.0;  // incumbent value
    double bound = 0.0;      // global lower bound (min sense)
    std::vector<double> x;
    long nodes = 0;
    std::string message;

    double gap() const {
        return std::abs(objective - bound) / std::max(1.0, std::abs(objective));
    }
};

namespace detail {

struct BbNode {
    // single bound tightening relative to the parent
    int col = -1;
    bool is_upper = false;
    double value = 0.0;
    double parent_bound = -kInf;
    int depth = 0;
    long id = 0;
    std::shared_ptr<BbNode> parent;
    std::shared_ptr<Basis> warm;
};

struct NodeOrder {
    bool operator()(const std::shared_ptr<BbNode>& a,
                    const std::shared_ptr<BbNode>& b) const {
        if (a->parent_bound != b->parent_bound) return a->parent_bound > b->parent_bound;
        return a->id > b->id;  // deterministic tie-break
    }
};

}  // namespace detail

inline MilpResult solve_milp(const LpProblem& problem,
                             const std::vector<uint8_t>& is_integer,
                             MilpOptions opt = {}) {
    using detail::BbNode;
    auto t0 = std::chrono::steady_clock::now();
    auto out_of_time = [&]() {
        if (opt.time_limit_sec <= 0) return false;
        std::chrono::duration<double> el = std::chrono::steady_clock::now() - t0;
        return el.count() > opt.time_limit_sec;
    };

    MilpResult res;
    LpProblem work = problem;  // bounds are mutated per node and restored

    auto apply_chain = [&](const BbNode* n) {
        for (const BbNode* p = n; p; p = p->parent.get()) {
            if (p->col < 0) continue;
            if (p->is_upper)
                work.upper[p->col] = std::min(work.upper[p->col], p->value);
            else
                work.lower[p->col] = std::max(work.lower[p->col], p->value);
        }
    };
    auto restore_bounds = [&]() {
        work.lower = problem.lower;
        work.upper = problem.upper;
    };

    // most fractional, ties by lowest column index
    auto pick_branch = [&](const std::vector<double>& x) {
        int arg = -1;
        double best_score = -1.0;
        for (size_t j = 0; j < is_integer.size(); ++j) {
            if (!is_integer[j]) continue;
            double f = x[j] - std::floor(x[j]);
            double dist = std::min(f, 1.0 - f);
            if (dist <= opt.int_tol) continue;
            double score = 0.5 - std::abs(f - 0.5);
            if (score > best_score + 1e-12) {
                best_score = score;
                arg = static_cast<int>(j);
            }
        }
        return arg;
    };

    std::priority_queue<std::shared_ptr<BbNode>, std::vector<std::shared_ptr<BbNode>>,
                        detail::NodeOrder>
        open;
    long next_id = 0;

    auto root = std::make_shared<BbNode>();
    root->id = next_id++;
    open.push(root);

    double incumbent = kInf;
    std::vector<double> incumbent_x;
    double global_lb = -kInf;
    bool have_incumbent = false;
    bool hit_limit = false;

    while (!open.empty()) {
        auto node = open.top();
        global_lb = std::max(global_lb, open.top()->parent_bound);
        if (have_incumbent) {
            double gap = std::abs(incumbent - std::max(global_lb, -1e300)) /
                         std::max(1.0, std::abs(incumbent));
            if (global_lb > -kInf && gap <= opt.gap_tol) break;
        }
        open.pop();
        if (have_incumbent && node->parent_bound >= incumbent - 1e-12) continue;
        if (out_of_time() || (opt.max_nodes > 0 && res.nodes >= opt.max_nodes)) {
            hit_limit = true;
            break;
        }

        restore_bounds();
        apply_chain(node.get());
        ++res.nodes;

        SimplexSolver solver(work, opt.lp);
        LpSolution sol = solver.solve(node->warm ? node->warm.get() : nullptr);

        if (sol.status == LpStatus::Infeasible) continue;
        if (sol.status == LpStatus::Unbounded) {
            if (node->col < 0) {
                res.status = LpStatus::Unbounded;
                res.message = "LP relaxation is unbounded";
                return res;
            }
            continue;  // cannot happen with valid bounds; treat as pruned
        }
        if (sol.status != LpStatus::Optimal) {
            res.status = sol.status;
            res.message = "node LP failed: " + sol.message;
            return res;
        }
        if (have_incumbent && sol.objective >= incumbent - 1e-12) continue;

        int branch_col = pick_branch(sol.x);
        if (branch_col < 0) {
            // integral: new incumbent with integers snapped exactly
            std::vector<double> snapped = sol.x;
            for (size_t j = 0; j < is_integer.size(); ++j)
                if (is_integer[j]) snapped[j] = std::round(snapped[j]);
            if (sol.objective < incumbent) {
                incumbent = sol.objective;
                incumbent_x = std::move(snapped);
                have_incumbent = true;
            }
            continue;
        }

        double v = sol.x[branch_col];
        auto warm = std::make_shared<Basis>(sol.basis);
        for (int side = 0; side < 2; ++side) {
            auto child = std::make_shared<BbNode>();
            child->col = branch_col;
            child->is_upper = side == 0;
            child->value = side == 0 ? std::floor(v) : std::ceil(v);
            child->parent_bound = sol.objective;
            child->depth = node->depth + 1;
            child->parent = node;
            child->warm = warm;
            child->id = next_id++;
            open.push(child);
        }
    }

    // root infeasible (no incumbent, nothing open, no bound)
    if (!have_incumbent) {
        if (hit_limit) {
            res.status = LpStatus::IterationLimit;
            res.message = "limit reached before any incumbent";
            res.bound = global_lb;
            return res;
        }
        res.status = LpStatus::Infeasible;
        res.message = "integer problem infeasible (every branch pruned by phase-1)";
        return res;
    }

    if (open.empty() && !hit_limit) global_lb = incumbent;

    res.status = LpStatus::Optimal;
    res.objective = incumbent;
    res.bound = std::min(global_lb, incumbent);
    res.x = std::move(incumbent_x);
    res.proven = !hit_limit && res.gap() <= opt.gap_tol;
    if (hit_limit) res.message = "stopped on node/time limit";
    return res;
}

}  // namespace coplan
