#include <catch2/catch_amalgamated.hpp>

#include "coplan/accounting.hpp"
#include "coplan/benders.hpp"
#include "test_support.hpp"

using namespace coplan;
using test_support::flat_scenarios;
using test_support::pinned_ng_case;
using test_support::single_node_case;

namespace {

// single node, two scenarios, builds worthwhile; small enough to cross-check
// against the extensive form
struct SmallStudy {
    PlanningCase pc;
    ScenarioSet ss;

    SmallStudy() {
        pc = single_node_case(1, 1, 12);
        pc.peak_load_mw = 250.0;
        pc.econ.exchange_limit_mw = 60.0;
        ss = flat_scenarios(pc, 0.5, 0.4, 0.35, 0.0);
        Scenario hi = ss.scenarios[0];
        hi.id = 1;
        for (auto& row : hi.load_shape)
            for (double& v : row) v = 0.8;
        for (auto& row : hi.wind_shape)
            for (double& v : row) v = 0.15;
        ss.scenarios[0].prob_num = 1;
        ss.scenarios[0].prob_den = 2;
        hi.prob_num = 1;
        hi.prob_den = 2;
        ss.scenarios.push_back(hi);
    }
};

}  // namespace

TEST_CASE("optimality subproblem reproduces the hand dispatch cost") {
    PlanningCase pc = pinned_ng_case(true);
    ScenarioSet ss = flat_scenarios(pc);
    CompactModel m = compile(pc, ss);
    std::vector<double> z = test_support::zero_build_z(m);
    SubproblemResult fp = solve_feasibility(m, 1, 0, 0, z);
    REQUIRE(fp.status == LpStatus::Optimal);
    CHECK(fp.feasible);
    CHECK(fp.value <= 1e-7);
    SubproblemResult op = solve_optimality(m, 1, 0, 0, z);
    REQUIRE(op.status == LpStatus::Optimal);
    CHECK(op.value == Catch::Approx(47508.0).margin(1e-5));
}

TEST_CASE("zero capacity with positive demand yields the demand mass as slack") {
    PlanningCase pc = pinned_ng_case(false);
    ScenarioSet ss = flat_scenarios(pc);
    CompactModel m = compile(pc, ss);
    std::vector<double> z = test_support::zero_build_z(m);
    SubproblemResult fp = solve_feasibility(m, 1, 0, 0, z);
    REQUIRE(fp.status == LpStatus::Optimal);
    CHECK_FALSE(fp.feasible);
    // 24 steps of 50 MW shortfall
    CHECK(fp.value == Catch::Approx(1200.0).margin(1e-5));

    // the cut built from this anchor is violated by exactly the slack mass
    BendersCut cut;
    cut.feasibility = true;
    auto [zf, zl] = m.year_cols[1];
    cut.cols.resize(static_cast<size_t>(zl - zf));
    std::iota(cut.cols.begin(), cut.cols.end(), zf);
    cut.dual = fp.dual;
    cut.anchor.assign(z.begin() + zf, z.begin() + zl);
    cut.value = fp.value;
    CHECK(cut.rhs_at(z) == Catch::Approx(fp.value).margin(1e-7));
}

TEST_CASE("dual prices predict the effect of adding capacity") {
    PlanningCase pc = pinned_ng_case(false);
    ScenarioSet ss = flat_scenarios(pc);
    CompactModel m = compile(pc, ss);
    std::vector<double> z = test_support::zero_build_z(m);
    SubproblemResult fp = solve_feasibility(m, 1, 0, 0, z);
    REQUIRE(fp.status == LpStatus::Optimal);
    // raising installed gas capacity must reduce the projected slack mass
    auto [zf, zl] = m.year_cols[1];
    int ic_ng_local = m.idx_ic(1, 0, ResourceKind::NG) - zf;
    CHECK(fp.dual[static_cast<size_t>(ic_ng_local)] > 0.0);
}

TEST_CASE("benders matches the extensive form across configurations") {
    SmallStudy st;
    CompactModel m = compile(st.pc, st.ss);
    ExtensiveForm ef = extensive_form(m);
    MilpOptions mo;
    mo.gap_tol = 1e-6;
    MilpResult exact = solve_milp(ef.lp, ef.integer, mo);
    REQUIRE(exact.status == LpStatus::Optimal);

    for (int gs : {1, 2}) {
        for (bool seed : {false, true}) {
            BendersOptions bo;
            bo.tol = 1e-5;
            bo.group_size = gs;
            bo.seed_peak = seed;
            BendersResult r = benders_solve(m, bo);
            INFO("group " << gs << " seed " << seed);
            REQUIRE(r.converged);
            CHECK(std::abs(r.ub - exact.objective) <=
                  1e-4 * (1.0 + std::abs(exact.objective)));
            // bound sequences are monotone
            double lb = -kInf, ub = kInf;
            for (const auto& t : r.trace) {
                CHECK(t.lb >= lb - 1e-9);
                CHECK(t.ub <= ub + 1e-9);
                lb = t.lb;
                ub = t.ub;
                CHECK(lb <= ub + 1e-6 * (1.0 + std::abs(ub)));
            }
            // upper-bound audit: stored pieces reproduce the reported bound
            long double audit = r.incumbent_cz + r.incumbent_seed_value;
            for (double v : r.incumbent_group_values) audit += v;
            CHECK(std::abs(static_cast<double>(audit) - r.ub) <=
                  1e-9 * (1.0 + std::abs(r.ub)));
        }
    }
}

TEST_CASE("optimum is invariant to the grouping size") {
    SmallStudy st;
    CompactModel m = compile(st.pc, st.ss);
    std::vector<double> values;
    for (int gs : {1, 2, 4}) {
        BendersOptions bo;
        bo.tol = 1e-5;
        bo.group_size = gs;
        bo.seed_peak = false;
        BendersResult r = benders_solve(m, bo);
        REQUIRE(r.converged);
        values.push_back(r.ub);
    }
    for (double v : values)
        CHECK(std::abs(v - values[0]) <= 1e-4 * (1.0 + std::abs(values[0])));
}

TEST_CASE("ample capacity with seeding converges within three iterations") {
    PlanningCase pc = pinned_ng_case(true);
    ScenarioSet ss = flat_scenarios(pc);
    CompactModel m = compile(pc, ss);
    BendersOptions bo;
    bo.seed_peak = true;
    BendersResult r = benders_solve(m, bo);
    REQUIRE(r.converged);
    CHECK(r.iterations <= 3);

    bo.seed_peak = false;
    BendersResult r2 = benders_solve(m, bo);
    REQUIRE(r2.converged);
    CHECK(r2.iterations <= 3);
    CHECK(std::abs(r2.ub - r.ub) <= 1e-4 * (1.0 + std::abs(r.ub)));
}

TEST_CASE("feasibility cuts drive the master toward buildable plans") {
    // no initial capacity and no exchange: the first master point is
    // infeasible for recourse until cuts force generation to be built
    PlanningCase pc = pinned_ng_case(false);
    pc.resources[ResourceKind::NG].default_upper_mw = 200.0;
    ScenarioSet ss = flat_scenarios(pc);
    CompactModel m = compile(pc, ss);
    BendersOptions bo;
    bo.seed_peak = false;
    BendersResult r = benders_solve(m, bo);
    REQUIRE(r.converged);
    int n_feas = 0;
    for (const auto& c : r.cuts) n_feas += c.feasibility ? 1 : 0;
    CHECK(n_feas >= 1);
    PlanDecision plan = extract_plan(m, r.z);
    CHECK(plan.n_built(1, 0, ResourceKind::NG) >= 1);
    // every feasibility cut separates its anchor by its slack mass
    for (const auto& c : r.cuts) {
        if (!c.feasibility) continue;
        std::vector<double> anchor_full(static_cast<size_t>(m.nz), 0.0);
        for (size_t k = 0; k < c.cols.size(); ++k)
            anchor_full[static_cast<size_t>(c.cols[k])] = c.anchor[k];
        CHECK(c.rhs_at(anchor_full) == Catch::Approx(c.value).margin(1e-7));
        CHECK(c.value > 1e-6);
    }
}

TEST_CASE("reruns are deterministic and path independent") {
    SmallStudy st;
    CompactModel m = compile(st.pc, st.ss);
    BendersOptions bo;
    bo.group_size = 2;
    BendersResult a = benders_solve(m, bo);
    BendersResult b = benders_solve(m, bo);
    REQUIRE(a.converged);
    REQUIRE(b.converged);
    CHECK(trace_file_text(a) == trace_file_text(b));
    CHECK(a.z == b.z);
    // restart after discarding all cuts reproduces the same objective
    CHECK(std::abs(a.ub - b.ub) == 0.0);
}

TEST_CASE("threaded dispatch merges deterministically") {
    SmallStudy st;
    CompactModel m = compile(st.pc, st.ss);
    BendersOptions bo;
    bo.group_size = 1;
    bo.threads = 4;
    BendersResult threaded = benders_solve(m, bo);
    bo.threads = 1;
    BendersResult serial = benders_solve(m, bo);
    REQUIRE(threaded.converged);
    CHECK(trace_file_text(threaded) == trace_file_text(serial));
}

TEST_CASE("converged dispatch satisfies the conservation audits") {
    SmallStudy st;
    CompactModel m = compile(st.pc, st.ss);
    BendersResult r = benders_solve(m, {});
    REQUIRE(r.converged);
    Evaluation ev = evaluate(m, extract_plan(m, r.z), r.dispatch);
    CHECK(ev.audit.power_balance_mw <= 1e-6);
    CHECK(ev.audit.workload_balance_req_h <= 1e-6);
    CHECK(ev.audit.soc_wrap_mwh <= 1e-6);
    CHECK(ev.audit.thermal_wrap_mw <= 1e-6);
    // objective identity on the converged point
    CHECK(std::abs(m.objective_value(r.z, r.dispatch) - ev.objective) <=
          1e-9 * (1.0 + std::abs(ev.objective)));
}
