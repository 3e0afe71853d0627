#pragma once

// LP problem/solution containers shared by the simplex kernel, the
// branch-and-bound layer and the decomposition code. Rows are stored sparse;
// duals are reported per row in the row's own sense: for a minimization,
// equality duals are free, <= rows price at <= 0 and >= rows at >= 0, each
// equal to the derivative of the optimal value with respect to that rhs.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace coplan {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RowSense : uint8_t { LE, GE, EQ };

struct LpRow {
    RowSense sense = RowSense::LE;
    double rhs = 0.0;
    std::vector<int> cols;
    std::vector<double> vals;
};

struct LpProblem {
    std::vector<double> cost;
    std::vector<double> lower, upper;
    std::vector<LpRow> rows;

    int n_cols() const { return static_cast<int>(cost.size()); }
    int n_rows() const { return static_cast<int>(rows.size()); }

    int add_col(double c, double lo = 0.0, double up = kInf) {
        cost.push_back(c);
        lower.push_back(lo);
        upper.push_back(up);
        return n_cols() - 1;
    }

    int add_row(RowSense sense, double rhs, std::vector<int> cols,
                std::vector<double> vals) {
        LpRow r;
        r.sense = sense;
        r.rhs = rhs;
        r.cols = std::move(cols);
        r.vals = std::move(vals);
        rows.push_back(std::move(r));
        return n_rows() - 1;
    }
};

enum class LpStatus : uint8_t {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    NumericalFailure,
};

inline const char* lp_status_name(LpStatus s) {
    switch (s) {
        case LpStatus::Optimal: return "optimal";
        case LpStatus::Infeasible: return "infeasible";
        case LpStatus::Unbounded: return "unbounded";
        case LpStatus::IterationLimit: return "iteration-limit";
        case LpStatus::NumericalFailure: return "numerical-failure";
    }
    return "?";
}

// Nonbasic resting position, for warm starts.
enum class VarState : uint8_t { Basic, AtLower, AtUpper, FreeZero };

struct Basis {
    std::vector<int> basic;             // column per basis position
    std::vector<VarState> state;        // per structural column
    bool empty() const { return basic.empty(); }
};

struct LpSolution {
    LpStatus status = LpStatus::NumericalFailure;
    double objective = 0.0;
    std::vector<double> x;             // per column
    std::vector<double> row_dual;      // per row, sense convention above
    std::vector<double> reduced_cost;  // per column
    int iterations = 0;
    double primal_residual = 0.0;   // max row violation, original data
    double dual_residual = 0.0;     // max reduced-cost sign violation, scaled
    double duality_gap = 0.0;       // |primal - dual objective|
    std::string message;
    Basis basis;

    bool optimal() const { return status == LpStatus::Optimal; }
};

}  // namespace coplan
