#include <catch2/catch_amalgamated.hpp>

#include "coplan/case_io.hpp"
#include "test_support.hpp"

using namespace coplan;

TEST_CASE("table-style resource rows survive ingestion unchanged") {
    nlohmann::json doc = save_case_json(test_support::single_node_case());
    // feed lbs-suffixed emission keys to exercise the conversion path
    doc["resources"]["CG"].erase("embodied_co2_ton_per_mw");
    doc["resources"]["CG"]["embodied_co2_lbs_per_mw"] = 169091.0;
    doc["resources"]["ES"].erase("embodied_co2_ton_per_mwh");
    doc["resources"]["ES"]["embodied_co2_lbs_per_mwh"] = 240000.0;
    PlanningCase pc = load_case_json(doc);

    const ResourceSpec& cg = pc.spec(ResourceKind::CG);
    CHECK(cg.capex == 4103000.0);
    CHECK(cg.lifetime == 30);
    CHECK(cg.embodied_co2 == Catch::Approx(169091.0 / 2000.0));
    // 240,000 lbs/MWh -> 120 short tons/MWh
    CHECK(pc.spec(ResourceKind::ES).embodied_co2 == Catch::Approx(120.0));
}

TEST_CASE("kW rack power and GPU-hour throughput are normalized") {
    nlohmann::json doc = save_case_json(test_support::single_node_case());
    doc["servers"][0].erase("rack_power_mw");
    doc["servers"][0]["rack_power_kw"] = 50.0;
    doc["servers"][0].erase("throughput_req_per_rack_h");
    doc["servers"][0]["throughput_gpuh_per_rack_h"] = 150.0;
    PlanningCase pc = load_case_json(doc);
    CHECK(pc.servers[0].rack_power_mw == Catch::Approx(0.05));
    CHECK(pc.servers[0].throughput == Catch::Approx(1.5e6));
}

TEST_CASE("empty node list is rejected") {
    nlohmann::json doc = save_case_json(test_support::single_node_case());
    doc["nodes"] = nlohmann::json::array();
    try {
        load_case_json(doc);
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        bool found = false;
        for (const auto& i : e.issues) found = found || i == "no nodes";
        CHECK(found);
    }
}

TEST_CASE("validation reports every failed invariant at once") {
    PlanningCase pc = test_support::single_node_case();
    pc.nodes[0].load_share = 0.6;             // shares no longer sum to 1
    pc.resources[ResourceKind::NG].lifetime = 0;
    pc.econ.delay_limit_ms = 0;
    auto issues = validate_issues(pc);
    CHECK(issues.size() >= 3);
}

TEST_CASE("missing fields name the offending location") {
    nlohmann::json doc = save_case_json(test_support::single_node_case());
    doc["resources"]["NG"].erase("capex_usd_per_mw");
    try {
        load_case_json(doc);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("capex_usd_per_mw") != std::string::npos);
        CHECK(std::string(e.what()).find("NG") != std::string::npos);
    }
}

TEST_CASE("serialization round-trips to the identical document") {
    PlanningCase pc = test_support::single_node_case();
    std::string once = save_case(pc);
    PlanningCase reloaded = load_case_json(nlohmann::json::parse(once));
    std::string twice = save_case(reloaded);
    CHECK(once == twice);
}

TEST_CASE("normalization is idempotent") {
    // a saved case carries normalized unit keys only, so loading it again
    // performs no further conversion
    PlanningCase pc = test_support::single_node_case();
    PlanningCase a = load_case_json(save_case_json(pc));
    PlanningCase b = load_case_json(save_case_json(a));
    CHECK(save_case(a) == save_case(b));
    CHECK(a.spec(ResourceKind::ES).embodied_co2 == b.spec(ResourceKind::ES).embodied_co2);
}

TEST_CASE("delay feasibility threshold from the delay budget") {
    PlanningCase pc = test_support::single_node_case();
    // two more nodes: one nearby, one out of range
    Node near = pc.nodes[0], far = pc.nodes[0];
    near.id = 1;
    near.name = "near";
    near.x_km = 1000;
    far.id = 2;
    far.name = "far";
    far.x_km = 2500;
    pc.nodes[0].load_share = pc.nodes[0].data_share = 0.5;
    near.load_share = near.data_share = 0.3;
    near.initial_racks.clear();
    far.load_share = far.data_share = 0.2;
    far.initial_racks.clear();
    pc.nodes.push_back(near);
    pc.nodes.push_back(far);

    LinkFeasibility lf = link_feasibility(pc);
    CHECK(lf.h0_km == Catch::Approx(1960.78).margin(0.01));
    CHECK(lf.ok(0, 1));
    CHECK_FALSE(lf.ok(0, 2));  // 2500 km > H0
    CHECK_FALSE(lf.ok(0, 0));  // diagonal
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(lf.ok(i, j) == lf.ok(j, i));
}

TEST_CASE("coincident nodes are always link-feasible") {
    PlanningCase pc = test_support::single_node_case();
    Node twin = pc.nodes[0];
    twin.id = 1;
    twin.name = "twin";
    twin.initial_racks.clear();
    pc.nodes[0].load_share = pc.nodes[0].data_share = 0.5;
    twin.load_share = twin.data_share = 0.5;
    pc.nodes.push_back(twin);
    LinkFeasibility lf = link_feasibility(pc);
    CHECK(lf.ok(0, 1));
}

TEST_CASE("distance override wins over coordinates") {
    PlanningCase pc = test_support::single_node_case();
    Node other = pc.nodes[0];
    other.id = 1;
    other.name = "other";
    other.initial_racks.clear();
    pc.nodes[0].load_share = pc.nodes[0].data_share = 0.5;
    other.load_share = other.data_share = 0.5;
    pc.nodes.push_back(other);
    pc.distance_override_km = {0, 123, 123, 0};
    CHECK(pc.distance_km(0, 1) == 123.0);
}

TEST_CASE("residual value fractions") {
    PlanningCase pc = test_support::single_node_case(15);
    pc.resources[ResourceKind::CG].lifetime = 30;
    pc.resources[ResourceKind::CG].scrap_fraction = 0.15;

    // late install retains most value
    CHECK(residual_fraction(ResourceKind::CG, 15, pc) ==
          Catch::Approx((29.0 / 30.0) * 0.85 + 0.15).epsilon(1e-12));
    CHECK(residual_fraction(ResourceKind::CG, 15, pc) == Catch::Approx(0.9716666667));
    // early install
    CHECK(residual_fraction(ResourceKind::CG, 1, pc) ==
          Catch::Approx((15.0 / 30.0) * 0.85 + 0.15).epsilon(1e-12));
    // remaining life exactly zero beyond the horizon: scrap only
    CHECK(residual_fraction_for(15, 0.15, 15, 1) == Catch::Approx(0.15));
    // beyond-lifetime installs clamp at scrap
    CHECK(residual_fraction_for(10, 0.15, 15, 1) == Catch::Approx(0.15));

    CHECK_THROWS_AS(residual_fraction(ResourceKind::CG, 0, pc), std::out_of_range);
}

TEST_CASE("residual fraction is nondecreasing in install year") {
    PlanningCase pc = test_support::single_node_case(15);
    for (ResourceKind k : kAllKinds) {
        double prev = -1;
        for (int y = 1; y <= 15; ++y) {
            double r = residual_fraction(k, y, pc);
            CHECK(r >= prev - 1e-12);
            prev = r;
        }
    }
}

TEST_CASE("matpower bus/branch tables convert to case sections") {
    std::string m = R"(
function mpc = case3
mpc.bus = [
  1 3 90 30 0 0 1 1 0 230 1 1.1 0.9;
  2 1 60 20 0 0 1 1 0 230 1 1.1 0.9;
  3 1 50 15 0 0 1 1 0 230 1 1.1 0.9;
];
mpc.branch = [
  1 2 0.01 0.085 0 250 250 250 0 0 1 -360 360;
  2 3 0.01 0.092 0 250 250 250 0 0 1 -360 360;
];
)";
    nlohmann::json sections = coplan::matpower_to_sections(m);
    REQUIRE(sections["nodes"].size() == 3);
    REQUIRE(sections["lines"].size() == 2);
    CHECK(sections["nodes"][0]["load_share"].get<double>() == Catch::Approx(90.0 / 200.0));
    CHECK(sections["lines"][0]["reactance_pu"].get<double>() == Catch::Approx(0.085));
    CHECK(sections["lines"][0]["capacity_mw"].get<double>() == Catch::Approx(250.0));
    double total = 0;
    for (const auto& n : sections["nodes"]) total += n["load_share"].get<double>();
    CHECK(total == Catch::Approx(1.0));
}
