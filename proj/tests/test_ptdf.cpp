#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "coplan/ptdf.hpp"
#include "test_support.hpp"

using namespace coplan;

namespace {

PlanningCase network_case(int n_nodes, const std::vector<std::array<double, 3>>& lines) {
    PlanningCase pc = test_support::single_node_case();
    pc.nodes.clear();
    for (int i = 0; i < n_nodes; ++i) {
        Node n;
        n.id = i;
        n.name = "n" + std::to_string(i);
        n.load_share = 1.0 / n_nodes;
        n.data_share = 1.0 / n_nodes;
        n.x_km = 100.0 * i;
        pc.nodes.push_back(n);
    }
    int id = 0;
    for (const auto& l : lines) {
        Line ln;
        ln.id = id++;
        ln.from = static_cast<int>(l[0]);
        ln.to = static_cast<int>(l[1]);
        ln.reactance_pu = l[2];
        ln.length_km = 100;
        ln.initial_capacity_mw = 100;
        pc.lines.push_back(ln);
    }
    return pc;
}

}  // namespace

TEST_CASE("two nodes, one line: all injection flows over it") {
    PlanningCase pc = network_case(2, {{0, 1, 0.1}});
    PtdfMatrix p = compute_ptdf(pc, 1);
    REQUIRE(p.n_corridors() == 1);
    CHECK(p.at(0, 0) == Catch::Approx(1.0));
    CHECK(p.at(0, 1) == 0.0);  // reference column
}

TEST_CASE("three-node ring with equal reactances") {
    PlanningCase pc = network_case(3, {{0, 1, 0.1}, {1, 2, 0.1}, {0, 2, 0.1}});
    PtdfMatrix p = compute_ptdf(pc, 2);
    // corridor 0-1: injection at node 0 (withdrawn at node 2) sends 1/3 via 0->1
    int c01 = -1;
    for (int l = 0; l < p.n_corridors(); ++l)
        if (p.corridors[l].from == 0 && p.corridors[l].to == 1) c01 = l;
    REQUIRE(c01 >= 0);
    CHECK(p.at(c01, 0) == Catch::Approx(1.0 / 3.0).margin(1e-12));
    // cross-check against the direct susceptance solve
    std::vector<double> inj = {1.0, 0.0, -1.0};
    auto flows = dc_flow_direct(p, inj);
    for (int l = 0; l < p.n_corridors(); ++l) {
        double via_gamma = 0;
        for (int i = 0; i < 3; ++i) via_gamma += p.at(l, i) * inj[i];
        CHECK(via_gamma == Catch::Approx(flows[l]).margin(1e-10));
    }
}

TEST_CASE("parallel lines merge into one corridor") {
    PlanningCase pc = network_case(2, {{0, 1, 0.2}, {1, 0, 0.2}});
    PtdfMatrix p = compute_ptdf(pc, 0);
    REQUIRE(p.n_corridors() == 1);
    CHECK(p.corridors[0].susceptance == Catch::Approx(10.0));
    CHECK(p.corridors[0].initial_capacity_mw == Catch::Approx(200.0));
}

TEST_CASE("gamma of the reference node is zero and magnitudes stay bounded") {
    PlanningCase pc = network_case(4, {{0, 1, 0.1}, {1, 2, 0.07}, {2, 3, 0.15}, {0, 3, 0.2}});
    PtdfMatrix p = compute_ptdf(pc, 0);
    for (int l = 0; l < p.n_corridors(); ++l) {
        CHECK(p.at(l, 0) == 0.0);
        for (int i = 0; i < 4; ++i) CHECK(std::abs(p.at(l, i)) <= 1.0 + 1e-9);
    }
}

TEST_CASE("random balanced injections: PTDF flows equal the direct solve") {
    PlanningCase pc = network_case(5, {{0, 1, 0.1},
                                       {1, 2, 0.08},
                                       {2, 3, 0.12},
                                       {3, 4, 0.05},
                                       {4, 0, 0.2},
                                       {1, 3, 0.3}});
    PtdfMatrix p = compute_ptdf(pc, 0);
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> inj(5);
        double sum = 0;
        for (int i = 0; i < 4; ++i) {
            inj[i] = d(rng);
            sum += inj[i];
        }
        inj[4] = -sum;  // balanced
        auto direct = dc_flow_direct(p, inj);
        for (int l = 0; l < p.n_corridors(); ++l) {
            double f = 0;
            for (int i = 0; i < 5; ++i) f += p.at(l, i) * inj[i];
            REQUIRE(std::abs(f - direct[l]) <= 1e-8);
        }
    }
}

TEST_CASE("flows do not depend on the reference node") {
    PlanningCase pc = network_case(4, {{0, 1, 0.1}, {1, 2, 0.07}, {2, 3, 0.15}, {0, 3, 0.2}});
    PtdfMatrix a = compute_ptdf(pc, 0);
    PtdfMatrix b = compute_ptdf(pc, 3);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> inj(4);
        double sum = 0;
        for (int i = 0; i < 3; ++i) {
            inj[i] = d(rng);
            sum += inj[i];
        }
        inj[3] = -sum;
        for (int l = 0; l < a.n_corridors(); ++l) {
            double fa = 0, fb = 0;
            for (int i = 0; i < 4; ++i) {
                fa += a.at(l, i) * inj[i];
                fb += b.at(l, i) * inj[i];
            }
            REQUIRE(std::abs(fa - fb) <= 1e-8);
        }
    }
}

TEST_CASE("disconnected networks are reported with the stranded nodes") {
    PlanningCase pc = network_case(4, {{0, 1, 0.1}, {2, 3, 0.1}});
    try {
        compute_ptdf(pc, 0);
        FAIL("expected a structural error");
    } catch (const NetworkError& e) {
        std::string msg = e.what();
        CHECK(msg.find("n2") != std::string::npos);
        CHECK(msg.find("n3") != std::string::npos);
    }
}
