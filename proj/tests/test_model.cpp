#include <catch2/catch_amalgamated.hpp>

#include "coplan/accounting.hpp"
#include "coplan/benders.hpp"
#include "coplan/compile.hpp"
#include "coplan/milp.hpp"
#include "test_support.hpp"

using namespace coplan;
using test_support::flat_scenarios;
using test_support::pinned_ng_case;
using test_support::single_node_case;
using test_support::two_node_case;

TEST_CASE("empty system with zero demand optimizes to zero") {
    PlanningCase pc = single_node_case();
    pc.peak_load_mw = 0;
    pc.peak_workload_req_h = 0;
    pc.nodes[0].initial_capacity = {0, 0, 0, 0, 0};
    pc.nodes[0].initial_racks.clear();
    ScenarioSet ss = flat_scenarios(pc);
    CompactModel m = compile(pc, ss);
    ExtensiveForm ef = extensive_form(m);
    MilpResult r = solve_milp(ef.lp, ef.integer);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(std::abs(r.objective) <= 1e-6);
}

TEST_CASE("flat 50 MW gas dispatch prices out exactly") {
    PlanningCase pc = pinned_ng_case(true);
    ScenarioSet ss = flat_scenarios(pc);
    CompactModel m = compile(pc, ss);
    std::vector<double> z = test_support::zero_build_z(m);
    std::mt19937_64 rng(5);
    std::vector<std::vector<double>> xs;
    for (const Block& b : m.blocks) xs.push_back(test_support::random_dispatch(m, b, z, rng));
    Evaluation ev = evaluate(m, extract_plan(m, z), xs);
    // 24 h * 50 MW * 39.59 $/MWh
    CHECK(ev.cost.c_gen[0] == Catch::Approx(47508.0).margin(1e-6));
    CHECK(ev.audit.power_balance_mw <= 1e-6);
}

TEST_CASE("coal retirement books its disposal credit") {
    PlanningCase pc = single_node_case();
    ScenarioSet ss = flat_scenarios(pc);
    CompactModel m = compile(pc, ss);
    std::vector<double> z = test_support::zero_build_z(m);
    z[m.idx_ncg(1, 0)] = 1.0;
    z[m.idx_ic(1, 0, ResourceKind::CG)] -= pc.spec(ResourceKind::CG).unit_size;
    REQUIRE(test_support::planning_violation(m, z) <= 1e-9);
    std::mt19937_64 rng(7);
    std::vector<std::vector<double>> xs;
    for (const Block& b : m.blocks) xs.push_back(test_support::random_dispatch(m, b, z, rng));
    Evaluation ev = evaluate(m, extract_plan(m, z), xs);
    // 0.80 * 4,103,000 $/MW * 100 MW, undiscounted
    CHECK(ev.cost.c_rt[0] == Catch::Approx(3.2824e8).epsilon(1e-12));
}

TEST_CASE("solar build cost and embodied emissions per the catalog") {
    PlanningCase pc = single_node_case();
    ScenarioSet ss = flat_scenarios(pc);
    CompactModel m = compile(pc, ss);
    std::vector<double> z = test_support::zero_build_z(m);
    z[m.idx_n(1, 0, ResourceKind::PV)] = 1.0;
    z[m.idx_ic(1, 0, ResourceKind::PV)] += 10.0;
    std::mt19937_64 rng(11);
    std::vector<std::vector<double>> xs;
    for (const Block& b : m.blocks) xs.push_back(test_support::random_dispatch(m, b, z, rng));
    Evaluation ev = evaluate(m, extract_plan(m, z), xs);
    CHECK(ev.cost.c_gr[0] == Catch::Approx(13020000.0));
    CHECK(ev.emissions.emb_generation[0] == Catch::Approx(7429.5));
}

TEST_CASE("server embodied emissions decay with the technology factor") {
    PlanningCase pc = single_node_case(2);
    pc.servers[0].embodied_co2 = 325.0;  // 650,000 lbs per rack
    pc.econ.fix_embodied = 0.0;
    ScenarioSet ss = flat_scenarios(pc);
    CompactModel m = compile(pc, ss);
    std::vector<double> z = test_support::zero_build_z(m);
    z[m.idx_bn(2, 0, 0)] = 1.0;
    z[m.idx_in(2, 0, 0)] += 1.0;
    z[m.idx_indc(2, 0)] += 1.0;
    REQUIRE(test_support::planning_violation(m, z) <= 1e-9);
    std::mt19937_64 rng(13);
    std::vector<std::vector<double>> xs;
    for (const Block& b : m.blocks) xs.push_back(test_support::random_dispatch(m, b, z, rng));
    Evaluation ev = evaluate(m, extract_plan(m, z), xs);
    CHECK(ev.emissions.emb_dc[0] == 0.0);
    CHECK(ev.emissions.emb_dc[1] == Catch::Approx(0.95 * 325.0));
}

TEST_CASE("compiled objective matches the independent evaluator") {
    for (int which = 0; which < 2; ++which) {
        PlanningCase pc = which == 0 ? single_node_case() : two_node_case(2, 1, 8);
        ScenarioSet ss = flat_scenarios(pc);
        if (which == 1) {
            // second scenario with different shapes and growth
            Scenario hi = ss.scenarios[0];
            hi.id = 1;
            for (auto& row : hi.load_shape)
                for (double& v : row) v = 0.7;
            for (auto& row : hi.wind_shape)
                for (double& v : row) v = 0.2;
            hi.load_growth.back() = 1.05;
            ss.scenarios[0].prob_num = 3;
            ss.scenarios[0].prob_den = 4;
            hi.prob_num = 1;
            hi.prob_den = 4;
            ss.scenarios.push_back(hi);
        }
        CompactModel m = compile(pc, ss);
        std::mt19937_64 rng(101 + which);
        int checked = 0;
        for (int trial = 0; trial < 12; ++trial) {
            std::vector<double> z = test_support::random_feasible_z(m, rng);
            REQUIRE(test_support::planning_violation(m, z) <= 1e-6);
            std::vector<std::vector<double>> xs;
            bool feasible = true;
            try {
                for (const Block& b : m.blocks)
                    xs.push_back(test_support::random_dispatch(m, b, z, rng));
            } catch (const std::runtime_error&) {
                feasible = false;  // this draw starves some block; skip it
            }
            if (!feasible) continue;
            double compiled = m.objective_value(z, xs);
            Evaluation ev = evaluate(m, extract_plan(m, z), xs);
            INFO("case " << which << " trial " << trial);
            CHECK(std::abs(compiled - ev.objective) <=
                  1e-9 * (1.0 + std::abs(ev.objective)));
            ++checked;
        }
        CHECK(checked >= 6);
    }
}

TEST_CASE("operating-only mode drops embodied charges from the objective") {
    PlanningCase pc = single_node_case();
    ScenarioSet ss = flat_scenarios(pc);
    CompileOptions op_only;
    op_only.emissions = EmissionsMode::OpOnly;
    CompactModel m_em = compile(pc, ss);
    CompactModel m_op = compile(pc, ss, op_only);
    int j = m_em.idx_n(1, 0, ResourceKind::PV);
    double gap = m_em.c[j] - m_op.c[j];
    // difference is exactly the priced embodied tonnage of one unit
    double expect = pc.carbon_price(1) * pc.spec(ResourceKind::PV).embodied_co2 * 10.0;
    CHECK(gap == Catch::Approx(expect));
}

TEST_CASE("carbon scale sweeps the priced emissions only") {
    PlanningCase pc = single_node_case();
    ScenarioSet ss = flat_scenarios(pc);
    CompileOptions swept;
    swept.carbon_scale = 1.2;
    CompactModel a = compile(pc, ss);
    CompactModel b = compile(pc, ss, swept);
    int j = a.x.gen(0, 0, ResourceKind::NG);
    double base = pc.horizon.weight() * pc.horizon.dt_hours();
    double qa = a.blocks[0].q[j], qb = b.blocks[0].q[j];
    double emis = base * pc.carbon_price(1) * pc.spec(ResourceKind::NG).op_co2;
    CHECK(qb - qa == Catch::Approx(0.2 * emis));
}

TEST_CASE("block rows only touch their own year's planning columns") {
    PlanningCase pc = two_node_case(2, 2, 6);
    ScenarioSet ss = flat_scenarios(pc);
    CompactModel m = compile(pc, ss);
    for (const Block& b : m.blocks) {
        auto [zf, zl] = m.year_cols[static_cast<size_t>(b.year)];
        for (const auto& r : b.eq) CHECK(r.xcols.size() == r.xvals.size());
        for (const auto& r : b.ineq)
            for (int zc : r.zcols) {
                CHECK(zc >= zf);
                CHECK(zc < zl);
            }
    }
}

TEST_CASE("constraint coverage report names every family") {
    PlanningCase pc = two_node_case(2, 1, 6);
    ScenarioSet ss = flat_scenarios(pc);
    CompactModel m = compile(pc, ss);
    auto tags = m.coverage_report();
    for (const char* t :
         {"cap-recursion-gen", "cap-recursion-storage", "cap-recursion-line",
          "cap-recursion-link", "cg-retirement", "cg-nonneg", "cg-retire-cap", "ic-upper",
          "ic-lower", "rps-floor", "rps-floor-system", "server-stock", "server-monotone",
          "server-lifetime-retire", "rack-cap", "dc-rack-total", "power-balance",
          "line-flow-def", "soc-balance", "soc-cyclic", "workload-balance", "dc-throughput",
          "thermal-cap", "thermal-min", "ramp", "ramp-cyclic", "res-cap", "soc-window",
          "es-power", "exchange-limit", "active-racks", "line-limit", "transfer-limit",
          "integrality"}) {
        INFO(t);
        CHECK(tags[t] >= 1);
    }
}

TEST_CASE("row and column counts are pure functions of the case sizes") {
    PlanningCase pc = two_node_case(2, 2, 6);
    ScenarioSet ss = flat_scenarios(pc);
    // two scenarios to exercise the block count
    Scenario s2 = ss.scenarios[0];
    s2.id = 1;
    ss.scenarios[0].prob_num = 1;
    ss.scenarios[0].prob_den = 2;
    s2.prob_num = 1;
    s2.prob_den = 2;
    ss.scenarios.push_back(s2);
    CompactModel m = compile(pc, ss);

    const int Y = 2, D = 2, T = 6, NI = 2, NL = 1, NM = 1, S = 2;
    const int NP = 1;   // one delay-feasible pair
    const int NPZ = 1;  // with planning columns
    CHECK(m.nz == Y * (NI * (10 + 3 * NM + 1) + 2 * NL + 2 * NPZ));
    long sys_floors = 2;  // one per year? only year 1 in the fixture
    sys_floors = 1;
    long expected_planning =
        Y * (NI * (21 + 6 * NM) + 2 * NL + 2 * NPZ + 1) + sys_floors;
    CHECK(static_cast<long>(m.planning.size()) == expected_planning);
    CHECK(static_cast<int>(m.blocks.size()) == Y * D * S);
    CHECK(m.x.count == T * (NI * (10 + NM) + NL + NP));
    for (const Block& b : m.blocks) {
        CHECK(static_cast<int>(b.eq.size()) == T * (1 + NL + 3 * NI));
        CHECK(static_cast<int>(b.ineq.size()) == T * (NI * (18 + NM) + 2 * NL + 2 * NP));
    }
}

TEST_CASE("extensive form has first-stage plus one block per scenario") {
    PlanningCase pc = single_node_case();
    ScenarioSet ss = flat_scenarios(pc);
    CompactModel m = compile(pc, ss);
    ExtensiveForm ef = extensive_form(m);
    CHECK(ef.lp.n_cols() == m.nz + static_cast<int>(m.blocks.size()) * m.x.count);
    CHECK_THROWS_AS(extensive_form(m, 10), CompileError);
}

TEST_CASE("empty capacity windows are compile errors naming the spot") {
    PlanningCase pc = single_node_case();
    pc.resources[ResourceKind::NG].cap_limits.push_back({0, 1, 60.0, 50.0});
    ScenarioSet ss = flat_scenarios(pc);
    try {
        compile(pc, ss);
        FAIL("expected a compile error");
    } catch (const CompileError& e) {
        std::string msg = e.what();
        CHECK(msg.find("year 1") != std::string::npos);
        CHECK(msg.find("NG") != std::string::npos);
    }
}

TEST_CASE("conservation audits flag a corrupted dispatch") {
    PlanningCase pc = pinned_ng_case(true);
    ScenarioSet ss = flat_scenarios(pc);
    CompactModel m = compile(pc, ss);
    std::vector<double> z = test_support::zero_build_z(m);
    std::mt19937_64 rng(3);
    std::vector<std::vector<double>> xs;
    for (const Block& b : m.blocks) xs.push_back(test_support::random_dispatch(m, b, z, rng));
    Evaluation good = evaluate(m, extract_plan(m, z), xs);
    CHECK(good.audit.power_balance_mw <= 1e-6);
    CHECK(good.audit.workload_balance_req_h <= 1e-6);
    CHECK(good.audit.soc_wrap_mwh <= 1e-6);
    xs[0][m.x.gen(3, 0, ResourceKind::NG)] += 7.0;
    Evaluation bad = evaluate(m, extract_plan(m, z), xs);
    CHECK(bad.audit.power_balance_mw >= 6.9);
}

TEST_CASE("cumulative emissions are nondecreasing") {
    PlanningCase pc = two_node_case(2, 1, 6);
    ScenarioSet ss = flat_scenarios(pc);
    CompactModel m = compile(pc, ss);
    std::mt19937_64 rng(19);
    std::vector<double> z = test_support::random_feasible_z(m, rng);
    std::vector<std::vector<double>> xs;
    for (const Block& b : m.blocks) xs.push_back(test_support::random_dispatch(m, b, z, rng));
    Evaluation ev = evaluate(m, extract_plan(m, z), xs);
    double prev = 0;
    for (double v : ev.emissions.cumulative) {
        CHECK(v >= prev - 1e-12);
        prev = v;
    }
}
