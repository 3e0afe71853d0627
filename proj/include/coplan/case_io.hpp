#pragma once

// Case-file ingestion and normalized serialization. The on-disk format is a
// single JSON document with sections: horizon, nodes, lines, resources,
// servers, econ, rps_floors, profiles. Numeric keys carry explicit unit
// suffixes; ingestion converts everything to the internal units (MW, MWh,
// short tons, requests/hour, ms/km) so downstream code never converts again.
// Serialization writes the already-normalized keys, which makes
// normalization idempotent: loading a saved case performs no conversion.

#include <fstream>
#include <sstream>

#include "coplan/case_model.hpp"
#include "json.hpp"

namespace coplan {

namespace detail {

using nlohmann::json;

inline double req_num(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key))
        throw ParseError("missing field '" + key + "' in " + where);
    if (!j[key].is_number())
        throw ParseError("field '" + key + "' in " + where + " must be a number");
    return j[key].get<double>();
}

inline double opt_num(const json& j, const std::string& key, double fallback) {
    return j.contains(key) ? j[key].get<double>() : fallback;
}

// Accepts either the lbs-suffixed or the ton-suffixed spelling of an
// emission coefficient; lbs are converted (1 short ton = 2000 lbs).
inline double emission_tons(const json& j, const std::string& stem,
                            const std::string& unit, const std::string& where,
                            double fallback = 0.0, bool required = false) {
    std::string lbs = stem + "_lbs_per_" + unit;
    std::string ton = stem + "_ton_per_" + unit;
    if (j.contains(ton)) return j[ton].get<double>();
    if (j.contains(lbs)) return j[lbs].get<double>() / 2000.0;
    if (required) throw ParseError("missing field '" + ton + "' (or '" + lbs + "') in " + where);
    return fallback;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Load

inline PlanningCase load_case_json(const nlohmann::json& doc) {
    using detail::emission_tons;
    using detail::opt_num;
    using detail::req_num;
    using nlohmann::json;

    PlanningCase pc;
    pc.name = doc.value("name", "case");

    if (!doc.contains("horizon")) throw ParseError("missing section 'horizon'");
    const json& hz = doc["horizon"];
    pc.horizon.years = static_cast<int>(req_num(hz, "years", "horizon"));
    pc.horizon.days_per_year = static_cast<int>(req_num(hz, "days_per_year", "horizon"));
    pc.horizon.hours_per_day = static_cast<int>(req_num(hz, "hours_per_day", "horizon"));
    pc.horizon.day_weight = opt_num(hz, "day_weight", 0.0);

    pc.peak_load_mw = req_num(doc, "peak_load_mw", "case");
    if (doc.contains("peak_workload_req_per_h"))
        pc.peak_workload_req_h = doc["peak_workload_req_per_h"].get<double>();
    else if (doc.contains("peak_workload_gpuh_per_h"))
        pc.peak_workload_req_h = doc["peak_workload_gpuh_per_h"].get<double>() * 1e4;
    else
        pc.peak_workload_req_h = 0.0;

    if (!doc.contains("nodes")) throw ParseError("missing section 'nodes'");
    for (const auto& jn : doc["nodes"]) {
        Node n;
        n.id = static_cast<int>(req_num(jn, "id", "node"));
        n.name = jn.value("name", std::to_string(n.id));
        n.load_share = req_num(jn, "load_share", "node " + n.name);
        n.data_share = req_num(jn, "data_share", "node " + n.name);
        if (jn.contains("coords_km")) {
            n.x_km = jn["coords_km"][0].get<double>();
            n.y_km = jn["coords_km"][1].get<double>();
        }
        if (jn.contains("initial_capacity_mw"))
            for (auto& [k, v] : jn["initial_capacity_mw"].items())
                n.initial_capacity[static_cast<size_t>(parse_kind(k))] = v.get<double>();
        if (jn.contains("initial_storage_mwh"))
            n.initial_capacity[static_cast<size_t>(ResourceKind::ES)] =
                jn["initial_storage_mwh"].get<double>();
        if (jn.contains("initial_racks"))
            for (auto& [k, v] : jn["initial_racks"].items())
                n.initial_racks[k] = v.get<double>();
        if (jn.contains("cooling_factor"))
            n.cooling_factor = jn["cooling_factor"].get<std::vector<std::vector<double>>>();
        pc.nodes.push_back(std::move(n));
    }

    if (doc.contains("lines"))
        for (const auto& jl : doc["lines"]) {
            Line l;
            l.id = static_cast<int>(opt_num(jl, "id", static_cast<double>(pc.lines.size())));
            l.from = static_cast<int>(req_num(jl, "from", "line"));
            l.to = static_cast<int>(req_num(jl, "to", "line"));
            l.length_km = req_num(jl, "length_km", "line");
            l.reactance_pu = req_num(jl, "reactance_pu", "line");
            l.initial_capacity_mw = req_num(jl, "capacity_mw", "line");
            l.unit_mw = opt_num(jl, "unit_mw", 0.0);
            l.expandable = jl.value("expandable", false);
            l.max_units = static_cast<int>(opt_num(jl, "max_units", 0.0));
            pc.lines.push_back(l);
        }

    if (!doc.contains("resources")) throw ParseError("missing section 'resources'");
    for (auto& [kname, jr] : doc["resources"].items()) {
        ResourceSpec r;
        r.kind = parse_kind(kname);
        std::string where = "resources." + kname;
        bool es = r.kind == ResourceKind::ES;
        std::string cap_unit = es ? "mwh" : "mw";
        r.unit_size = req_num(jr, "unit_" + cap_unit, where);
        r.capex = req_num(jr, "capex_usd_per_" + cap_unit, where);
        if (es) {
            r.power_capex = opt_num(jr, "power_capex_usd_per_mw", 0.0);
            r.power_per_mwh = req_num(jr, "power_rating_mw_per_mwh", where);
            r.charge_min_frac = opt_num(jr, "charge_min_frac", 0.0);
            r.discharge_min_frac = opt_num(jr, "discharge_min_frac", 0.0);
            r.soc_min_frac = opt_num(jr, "soc_min_frac", 0.0);
            r.soc_max_frac = opt_num(jr, "soc_max_frac", 1.0);
            r.eff_charge = opt_num(jr, "eff_charge", 1.0);
            r.eff_discharge = opt_num(jr, "eff_discharge", 1.0);
        }
        r.gen_cost = opt_num(jr, "gen_cost_usd_per_mwh", 0.0);
        r.om_cost = opt_num(jr, "om_cost_usd_per_mwh", 0.0);
        r.embodied_co2 = emission_tons(jr, "embodied_co2", cap_unit, where);
        r.op_co2 = emission_tons(jr, "op_co2", "mwh", where);
        r.lifetime = static_cast<int>(req_num(jr, "lifetime_yr", where));
        r.scrap_fraction = opt_num(jr, "scrap_fraction", 0.15);
        r.min_output_frac = opt_num(jr, "min_output_frac", 0.0);
        r.max_output_frac = opt_num(jr, "max_output_frac", 1.0);
        r.ramp_up = opt_num(jr, "ramp_up_frac_per_h", 1.0);
        r.ramp_down = opt_num(jr, "ramp_down_frac_per_h", 1.0);
        r.default_upper_mw = opt_num(jr, "default_upper_" + cap_unit, 0.0);
        if (jr.contains("cap_limits"))
            for (const auto& jc : jr["cap_limits"]) {
                CapLimit c;
                c.node = static_cast<int>(opt_num(jc, "node", -1.0));
                c.year = static_cast<int>(opt_num(jc, "year", 0.0));
                c.lower_mw = opt_num(jc, "lower_" + cap_unit, 0.0);
                c.upper_mw = req_num(jc, "upper_" + cap_unit, where + ".cap_limits");
                r.cap_limits.push_back(c);
            }
        pc.resources[r.kind] = std::move(r);
    }

    if (doc.contains("servers"))
        for (const auto& js : doc["servers"]) {
            ServerSpec s;
            s.type_id = js.value("type_id", "srv");
            std::string where = "servers." + s.type_id;
            s.capex = req_num(js, "capex_usd_per_rack", where);
            s.embodied_co2 = emission_tons(js, "embodied_co2", "rack", where);
            if (js.contains("rack_power_mw"))
                s.rack_power_mw = js["rack_power_mw"].get<double>();
            else
                s.rack_power_mw = req_num(js, "rack_power_kw", where) / 1000.0;
            if (js.contains("throughput_req_per_rack_h"))
                s.throughput = js["throughput_req_per_rack_h"].get<double>();
            else
                s.throughput = req_num(js, "throughput_gpuh_per_rack_h", where) * 1e4;
            s.pue = req_num(js, "pue", where);
            s.lifetime = static_cast<int>(req_num(js, "lifetime_yr", where));
            s.scrap_fraction = detail::opt_num(js, "scrap_fraction", 0.15);
            s.max_racks_per_node = detail::opt_num(js, "max_racks_per_node", 0.0);
            pc.servers.push_back(std::move(s));
        }

    if (!doc.contains("econ")) throw ParseError("missing section 'econ'");
    {
        const json& je = doc["econ"];
        EconParams& e = pc.econ;
        e.discount_rate = req_num(je, "discount_rate", "econ");
        e.carbon_price = opt_num(je, "carbon_price_usd_per_ton", 0.0);
        e.carbon_price_growth = opt_num(je, "carbon_price_growth", 0.0);
        e.fix_capex = opt_num(je, "fix_capex_usd_per_rack", 0.0);
        e.fix_embodied = emission_tons(je, "fix_embodied_co2", "rack", "econ");
        e.fix_lifetime = static_cast<int>(opt_num(je, "fix_lifetime_yr", 25));
        e.fix_scrap = opt_num(je, "fix_scrap_fraction", 0.15);
        e.tl_capex = opt_num(je, "tl_capex_usd_per_km_mw", 0.0);
        e.tl_embodied = emission_tons(je, "tl_embodied_co2", "km_mw", "econ");
        e.tl_lifetime = static_cast<int>(opt_num(je, "tl_lifetime_yr", 30));
        e.tl_scrap = opt_num(je, "tl_scrap_fraction", 0.15);
        e.tc_capex = opt_num(je, "tc_capex_usd_per_km", 0.0);
        e.tc_embodied = emission_tons(je, "tc_embodied_co2", "km", "econ");
        e.tc_lifetime = static_cast<int>(opt_num(je, "tc_lifetime_yr", 30));
        e.tc_scrap = opt_num(je, "tc_scrap_fraction", 0.15);
        e.tc_unit_req_h = opt_num(je, "tc_unit_req_per_h", 0.0);
        e.max_tc_units_per_pair = static_cast<int>(opt_num(je, "max_tc_units_per_pair", 0.0));
        if (je.contains("exchange_price_usd_per_mwh")) {
            const json& jp = je["exchange_price_usd_per_mwh"];
            e.price_on_peak = req_num(jp, "on_peak", "econ.exchange_price");
            e.price_mid_peak = req_num(jp, "mid_peak", "econ.exchange_price");
            e.price_off_peak = req_num(jp, "off_peak", "econ.exchange_price");
        }
        e.hour_tier = je.contains("hour_tiers")
                          ? je["hour_tiers"].get<std::vector<int>>()
                          : EconParams::default_hour_tiers();
        if (e.hour_tier.size() != 24) throw ParseError("econ.hour_tiers must have 24 entries");
        e.exchange_limit_mw = opt_num(je, "exchange_limit_mw", 0.0);
        if (je.contains("curtail_cost_usd_per_mwh")) {
            e.curtail_cost_pv = opt_num(je["curtail_cost_usd_per_mwh"], "PV", 0.0);
            e.curtail_cost_wt = opt_num(je["curtail_cost_usd_per_mwh"], "WT", 0.0);
        }
        if (je.contains("delay_ms_per_km"))
            e.delay_ms_per_km = je["delay_ms_per_km"].get<double>();
        else
            e.delay_ms_per_km = req_num(je, "delay_ms_per_100km", "econ") / 100.0;
        e.delay_limit_ms = req_num(je, "delay_limit_ms", "econ");
        e.tech_cost_factor = opt_num(je, "tech_cost_factor", 0.85);
        e.tech_co2_factor = opt_num(je, "tech_co2_factor", 0.95);
        e.cg_retire_cap_mw = opt_num(je, "cg_retire_cap_mw_per_yr", 0.0);
        e.cg_residual_start = opt_num(je, "cg_residual_start", 0.80);
        e.cg_residual_step = opt_num(je, "cg_residual_step", 0.045);
        if (je.contains("existing_links"))
            for (const auto& jl : je["existing_links"]) {
                ExistingLink l;
                l.from = static_cast<int>(req_num(jl, "from", "econ.existing_links"));
                l.to = static_cast<int>(req_num(jl, "to", "econ.existing_links"));
                l.capacity_req_h = req_num(jl, "capacity_req_per_h", "econ.existing_links");
                e.existing_links.push_back(l);
            }
    }

    if (doc.contains("rps_floors"))
        for (const auto& jf : doc["rps_floors"]) {
            RpsFloor f;
            f.year = static_cast<int>(req_num(jf, "year", "rps_floors"));
            f.kind = parse_kind(jf.at("kind").get<std::string>());
            f.node = static_cast<int>(opt_num(jf, "node", -1.0));
            f.min_mw = req_num(jf, "min_mw", "rps_floors");
            pc.rps_floors.push_back(f);
        }

    if (doc.contains("distance_override_km")) {
        for (const auto& row : doc["distance_override_km"])
            for (const auto& v : row)
                pc.distance_override_km.push_back(v.get<double>());
    }

    validate(pc);
    return pc;
}

inline PlanningCase load_case(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open case file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("case file " + path + " is not valid JSON: " + e.what());
    }
    try {
        return load_case_json(doc);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("case file " + path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Save (normalized units only)

inline nlohmann::json save_case_json(const PlanningCase& pc) {
    using nlohmann::json;
    json doc;
    doc["name"] = pc.name;
    doc["horizon"] = {{"years", pc.horizon.years},
                      {"days_per_year", pc.horizon.days_per_year},
                      {"hours_per_day", pc.horizon.hours_per_day}};
    if (pc.horizon.day_weight > 0) doc["horizon"]["day_weight"] = pc.horizon.day_weight;
    doc["peak_load_mw"] = pc.peak_load_mw;
    doc["peak_workload_req_per_h"] = pc.peak_workload_req_h;

    for (const auto& n : pc.nodes) {
        json jn;
        jn["id"] = n.id;
        jn["name"] = n.name;
        jn["load_share"] = n.load_share;
        jn["data_share"] = n.data_share;
        jn["coords_km"] = {n.x_km, n.y_km};
        json caps;
        for (ResourceKind k : {ResourceKind::NG, ResourceKind::CG, ResourceKind::PV,
                               ResourceKind::WT})
            if (n.initial_capacity[static_cast<size_t>(k)] != 0.0)
                caps[kind_name(k)] = n.initial_capacity[static_cast<size_t>(k)];
        if (!caps.is_null()) jn["initial_capacity_mw"] = caps;
        if (n.initial_capacity[static_cast<size_t>(ResourceKind::ES)] != 0.0)
            jn["initial_storage_mwh"] = n.initial_capacity[static_cast<size_t>(ResourceKind::ES)];
        if (!n.initial_racks.empty()) jn["initial_racks"] = n.initial_racks;
        if (!n.cooling_factor.empty()) jn["cooling_factor"] = n.cooling_factor;
        doc["nodes"].push_back(jn);
    }

    for (const auto& l : pc.lines) {
        json jl = {{"id", l.id},
                   {"from", l.from},
                   {"to", l.to},
                   {"length_km", l.length_km},
                   {"reactance_pu", l.reactance_pu},
                   {"capacity_mw", l.initial_capacity_mw},
                   {"expandable", l.expandable}};
        if (l.unit_mw > 0) jl["unit_mw"] = l.unit_mw;
        if (l.max_units > 0) jl["max_units"] = l.max_units;
        doc["lines"].push_back(jl);
    }
    if (pc.lines.empty()) doc["lines"] = json::array();

    for (const auto& [k, r] : pc.resources) {
        json jr;
        bool es = k == ResourceKind::ES;
        std::string cap_unit = es ? "mwh" : "mw";
        jr["unit_" + cap_unit] = r.unit_size;
        jr["capex_usd_per_" + cap_unit] = r.capex;
        if (es) {
            jr["power_capex_usd_per_mw"] = r.power_capex;
            jr["power_rating_mw_per_mwh"] = r.power_per_mwh;
            jr["charge_min_frac"] = r.charge_min_frac;
            jr["discharge_min_frac"] = r.discharge_min_frac;
            jr["soc_min_frac"] = r.soc_min_frac;
            jr["soc_max_frac"] = r.soc_max_frac;
            jr["eff_charge"] = r.eff_charge;
            jr["eff_discharge"] = r.eff_discharge;
        }
        jr["gen_cost_usd_per_mwh"] = r.gen_cost;
        jr["om_cost_usd_per_mwh"] = r.om_cost;
        jr["embodied_co2_ton_per_" + cap_unit] = r.embodied_co2;
        jr["op_co2_ton_per_mwh"] = r.op_co2;
        jr["lifetime_yr"] = r.lifetime;
        jr["scrap_fraction"] = r.scrap_fraction;
        jr["min_output_frac"] = r.min_output_frac;
        jr["max_output_frac"] = r.max_output_frac;
        jr["ramp_up_frac_per_h"] = r.ramp_up;
        jr["ramp_down_frac_per_h"] = r.ramp_down;
        jr["default_upper_" + cap_unit] = r.default_upper_mw;
        for (const auto& c : r.cap_limits)
            jr["cap_limits"].push_back({{"node", c.node},
                                        {"year", c.year},
                                        {"lower_" + cap_unit, c.lower_mw},
                                        {"upper_" + cap_unit, c.upper_mw}});
        doc["resources"][kind_name(k)] = jr;
    }

    doc["servers"] = json::array();
    for (const auto& s : pc.servers)
        doc["servers"].push_back({{"type_id", s.type_id},
                                  {"capex_usd_per_rack", s.capex},
                                  {"embodied_co2_ton_per_rack", s.embodied_co2},
                                  {"rack_power_mw", s.rack_power_mw},
                                  {"throughput_req_per_rack_h", s.throughput},
                                  {"pue", s.pue},
                                  {"lifetime_yr", s.lifetime},
                                  {"scrap_fraction", s.scrap_fraction},
                                  {"max_racks_per_node", s.max_racks_per_node}});

    const EconParams& e = pc.econ;
    json je;
    je["discount_rate"] = e.discount_rate;
    je["carbon_price_usd_per_ton"] = e.carbon_price;
    je["carbon_price_growth"] = e.carbon_price_growth;
    je["fix_capex_usd_per_rack"] = e.fix_capex;
    je["fix_embodied_co2_ton_per_rack"] = e.fix_embodied;
    je["fix_lifetime_yr"] = e.fix_lifetime;
    je["fix_scrap_fraction"] = e.fix_scrap;
    je["tl_capex_usd_per_km_mw"] = e.tl_capex;
    je["tl_embodied_co2_ton_per_km_mw"] = e.tl_embodied;
    je["tl_lifetime_yr"] = e.tl_lifetime;
    je["tl_scrap_fraction"] = e.tl_scrap;
    je["tc_capex_usd_per_km"] = e.tc_capex;
    je["tc_embodied_co2_ton_per_km"] = e.tc_embodied;
    je["tc_lifetime_yr"] = e.tc_lifetime;
    je["tc_scrap_fraction"] = e.tc_scrap;
    je["tc_unit_req_per_h"] = e.tc_unit_req_h;
    je["max_tc_units_per_pair"] = e.max_tc_units_per_pair;
    je["exchange_price_usd_per_mwh"] = {{"on_peak", e.price_on_peak},
                                        {"mid_peak", e.price_mid_peak},
                                        {"off_peak", e.price_off_peak}};
    je["hour_tiers"] = e.hour_tier;
    je["exchange_limit_mw"] = e.exchange_limit_mw;
    je["curtail_cost_usd_per_mwh"] = {{"PV", e.curtail_cost_pv}, {"WT", e.curtail_cost_wt}};
    je["delay_ms_per_km"] = e.delay_ms_per_km;
    je["delay_limit_ms"] = e.delay_limit_ms;
    je["tech_cost_factor"] = e.tech_cost_factor;
    je["tech_co2_factor"] = e.tech_co2_factor;
    je["cg_retire_cap_mw_per_yr"] = e.cg_retire_cap_mw;
    je["cg_residual_start"] = e.cg_residual_start;
    je["cg_residual_step"] = e.cg_residual_step;
    if (!e.existing_links.empty())
        for (const auto& l : e.existing_links)
            je["existing_links"].push_back(
                {{"from", l.from}, {"to", l.to}, {"capacity_req_per_h", l.capacity_req_h}});
    doc["econ"] = je;

    for (const auto& f : pc.rps_floors)
        doc["rps_floors"].push_back({{"year", f.year},
                                     {"kind", kind_name(f.kind)},
                                     {"node", f.node},
                                     {"min_mw", f.min_mw}});

    if (!pc.distance_override_km.empty()) {
        size_t n = pc.nodes.size();
        json rows = json::array();
        for (size_t i = 0; i < n; ++i) {
            json row = json::array();
            for (size_t j = 0; j < n; ++j) row.push_back(pc.distance_override_km[i * n + j]);
            rows.push_back(row);
        }
        doc["distance_override_km"] = rows;
    }
    return doc;
}

inline std::string save_case(const PlanningCase& pc) {
    return save_case_json(pc).dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// MATPOWER-style converter

// Reads the bus/branch tables of a MATPOWER .m file and emits the nodes and
// lines sections of a case document. Load shares come from Pd; coordinates
// are laid out on a circle and line lengths derive from reactance
// (km = reactance_pu * km_per_pu), both meant to be edited afterwards.
inline nlohmann::json matpower_to_sections(const std::string& m_text,
                                           double km_per_pu = 1000.0) {
    auto read_matrix = [&](const std::string& name) {
        std::vector<std::vector<double>> rows;
        size_t p = m_text.find(name);
        if (p == std::string::npos) throw ParseError("matpower: missing " + name);
        p = m_text.find('[', p);
        size_t q = m_text.find(']', p);
        if (p == std::string::npos || q == std::string::npos)
            throw ParseError("matpower: malformed " + name);
        std::string body = m_text.substr(p + 1, q - p - 1);
        std::stringstream ss(body);
        std::string line;
        while (std::getline(ss, line, ';')) {
            std::stringstream ls(line);
            std::vector<double> row;
            double v;
            while (ls >> v) row.push_back(v);
            if (!row.empty()) rows.push_back(row);
        }
        return rows;
    };

    auto buses = read_matrix("mpc.bus");
    auto branches = read_matrix("mpc.branch");

    double total_pd = 0;
    for (const auto& b : buses) total_pd += b.at(2);

    nlohmann::json out;
    std::map<int, int> bus_index;
    int idx = 0;
    for (const auto& b : buses) {
        int bus_id = static_cast<int>(b.at(0));
        bus_index[bus_id] = idx;
        double share = total_pd > 0 ? b.at(2) / total_pd : 1.0 / buses.size();
        double ang = 2.0 * 3.14159265358979323846 * idx / buses.size();
        out["nodes"].push_back({{"id", idx},
                                {"name", "bus" + std::to_string(bus_id)},
                                {"load_share", share},
                                {"data_share", share},
                                {"coords_km", {500.0 * std::cos(ang), 500.0 * std::sin(ang)}}});
        ++idx;
    }
    int lid = 0;
    for (const auto& br : branches) {
        double x = br.at(3);
        out["lines"].push_back({{"id", lid++},
                                {"from", bus_index.at(static_cast<int>(br.at(0)))},
                                {"to", bus_index.at(static_cast<int>(br.at(1)))},
                                {"reactance_pu", x},
                                {"length_km", std::abs(x) * km_per_pu},
                                {"capacity_mw", br.size() > 5 ? br.at(5) : 0.0},
                                {"expandable", true}});
    }
    return out;
}

}  // namespace coplan
