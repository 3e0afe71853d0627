#pragma once

// Static planning-case description: nodes, transmission corridors, resource
// and server catalogs, economic parameters and the study horizon. A
// PlanningCase is immutable once loaded and validated; everything downstream
// (scenario realization, model compilation, accounting) reads from it.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace coplan {

// ---------------------------------------------------------------------------
// Errors

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Carries every failed invariant, not just the first one.
struct ValidationError : std::runtime_error {
    explicit ValidationError(std::vector<std::string> problems)
        : std::runtime_error(join(problems)), issues(std::move(problems)) {}
    std::vector<std::string> issues;

  private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s = "case validation failed:";
        for (const auto& p : v) { s += "\n  - " + p; }
        return s;
    }
};

// ---------------------------------------------------------------------------
// Resource kinds

enum class ResourceKind : int { NG = 0, CG = 1, PV = 2, WT = 3, ES = 4 };

inline constexpr std::array<ResourceKind, 5> kAllKinds = {
    ResourceKind::NG, ResourceKind::CG, ResourceKind::PV, ResourceKind::WT,
    ResourceKind::ES};

// Kinds that may be newly built; CG is retirement-only.
inline constexpr std::array<ResourceKind, 4> kBuildableKinds = {
    ResourceKind::NG, ResourceKind::PV, ResourceKind::WT, ResourceKind::ES};

inline const char* kind_name(ResourceKind k) {
    switch (k) {
        case ResourceKind::NG: return "NG";
        case ResourceKind::CG: return "CG";
        case ResourceKind::PV: return "PV";
        case ResourceKind::WT: return "WT";
        case ResourceKind::ES: return "ES";
    }
    return "?";
}

inline ResourceKind parse_kind(const std::string& s) {
    for (ResourceKind k : kAllKinds)
        if (s == kind_name(k)) return k;
    throw ParseError("unknown resource kind: " + s);
}

inline bool is_thermal(ResourceKind k) {
    return k == ResourceKind::NG || k == ResourceKind::CG;
}
inline bool is_renewable(ResourceKind k) {
    return k == ResourceKind::PV || k == ResourceKind::WT;
}

// ---------------------------------------------------------------------------
// Domain types

struct Node {
    int id = 0;
    std::string name;
    double load_share = 0.0;  // fraction of system electric load
    double data_share = 0.0;  // fraction of system computing workload
    double x_km = 0.0, y_km = 0.0;
    // MW by kind (MWh for ES)
    std::array<double, 5> initial_capacity{0, 0, 0, 0, 0};
    // racks by server type id
    std::map<std::string, double> initial_racks;
    // cooling efficiency multiplier on PUE, [day][hour-step]; empty -> 1.0
    std::vector<std::vector<double>> cooling_factor;

    double cooling(int d, int t) const {
        if (cooling_factor.empty()) return 1.0;
        return cooling_factor[static_cast<size_t>(d)][static_cast<size_t>(t)];
    }
};

struct Line {
    int id = 0;
    int from = 0, to = 0;
    double length_km = 0.0;
    double initial_capacity_mw = 0.0;
    double reactance_pu = 0.0;
    double unit_mw = 0.0;      // expansion block size
    bool expandable = false;
    int max_units = 0;         // per-year cap on added units
};

// Per-node, per-year installed-capacity window. year == 0 means "every year".
struct CapLimit {
    int node = -1;  // -1: every node
    int year = 0;
    double lower_mw = 0.0;
    double upper_mw = 0.0;
};

struct ResourceSpec {
    ResourceKind kind = ResourceKind::NG;
    double unit_size = 0.0;        // MW per unit (MWh for ES)
    double capex = 0.0;            // $/MW ($/MWh energy part for ES)
    double power_capex = 0.0;      // ES only, $/MW on the power rating
    double gen_cost = 0.0;         // $/MWh, thermal only
    double om_cost = 0.0;          // $/MWh
    double embodied_co2 = 0.0;     // short ton per MW (per MWh for ES)
    double op_co2 = 0.0;           // short ton per MWh, thermal only
    int lifetime = 1;              // years
    double scrap_fraction = 0.0;   // residual value floor
    double min_output_frac = 0.0;  // beta_min
    double max_output_frac = 1.0;  // beta_max
    double ramp_up = 1.0;          // fraction of IC per hour, thermal
    double ramp_down = 1.0;
    // ES-only operating window
    double power_per_mwh = 0.0;    // max charge/discharge MW per MWh installed
    double charge_min_frac = 0.0;
    double discharge_min_frac = 0.0;
    double soc_min_frac = 0.0;
    double soc_max_frac = 1.0;
    double eff_charge = 1.0;
    double eff_discharge = 1.0;
    double default_upper_mw = 0.0;     // capacity cap when no CapLimit matches
    std::vector<CapLimit> cap_limits;  // overrides, most specific wins

    // Capacity window for (year, node), from overrides or the default cap.
    std::pair<double, double> capacity_window(int year, int node) const {
        double lo = 0.0, hi = default_upper_mw;
        int best = -1;
        for (const auto& c : cap_limits) {
            if (c.node != -1 && c.node != node) continue;
            if (c.year != 0 && c.year != year) continue;
            int score = (c.node != -1 ? 2 : 0) + (c.year != 0 ? 1 : 0);
            if (score >= best) {
                best = score;
                lo = c.lower_mw;
                hi = c.upper_mw;
            }
        }
        return {lo, hi};
    }

    // $ per installed unit (ES pays both the energy and the power rating).
    double unit_capex() const {
        if (kind == ResourceKind::ES)
            return capex * unit_size + power_capex * power_per_mwh * unit_size;
        return capex * unit_size;
    }
};

struct ServerSpec {
    std::string type_id;
    double capex = 0.0;          // $/rack
    double embodied_co2 = 0.0;   // short ton/rack
    double rack_power_mw = 0.0;  // MW/rack (IT load)
    double throughput = 0.0;     // requests per hour per rack
    double pue = 1.0;
    int lifetime = 1;            // years
    double scrap_fraction = 0.0;
    double max_racks_per_node = 0.0;
};

struct ExistingLink {
    int from = 0, to = 0;
    double capacity_req_h = 0.0;  // requests/hour
};

struct RpsFloor {
    int year = 0;
    ResourceKind kind = ResourceKind::PV;
    int node = -1;       // -1: applies to every node
    double min_mw = 0.0;
};

struct EconParams {
    double discount_rate = 0.04;           // sigma
    double carbon_price = 22.0;            // $/short ton, year 1
    double carbon_price_growth = 0.023;    // per year
    double fix_capex = 0.0;                // $/rack, buildings and racks
    double fix_embodied = 0.0;             // short ton/rack
    int fix_lifetime = 25;
    double fix_scrap = 0.15;
    double tl_capex = 0.0;                 // $/(km*MW)
    double tl_embodied = 0.0;              // short ton/(km*MW)
    int tl_lifetime = 30;
    double tl_scrap = 0.15;
    double tc_capex = 0.0;                 // $/km per link module
    double tc_embodied = 0.0;              // short ton/km per link module
    int tc_lifetime = 30;
    double tc_scrap = 0.15;
    double tc_unit_req_h = 0.0;            // requests/hour per link module
    int max_tc_units_per_pair = 0;
    double price_on_peak = 0.0;            // $/MWh exchange tiers
    double price_mid_peak = 0.0;
    double price_off_peak = 0.0;
    std::vector<int> hour_tier;            // per clock hour 0..23: 0 off, 1 mid, 2 on
    double exchange_limit_mw = 0.0;
    double curtail_cost_pv = 0.0;          // $/MWh
    double curtail_cost_wt = 0.0;
    double delay_ms_per_km = 0.0;          // tau0 after unit normalization
    double delay_limit_ms = 0.0;           // T_req
    double tech_cost_factor = 0.85;        // gamma_tech, applied as f^(y-1)
    double tech_co2_factor = 0.95;         // lambda_tech, applied as f^(y-1)
    double cg_retire_cap_mw = 0.0;         // per year, system-wide
    double cg_residual_start = 0.80;
    double cg_residual_step = 0.045;
    std::vector<ExistingLink> existing_links;

    double buy_price(int clock_hour) const { return tier_price(clock_hour); }
    double sell_price(int clock_hour) const { return tier_price(clock_hour); }

    // Default tier map: on-peak 14-19, mid 7-13 and 20-22, off otherwise.
    static std::vector<int> default_hour_tiers() {
        std::vector<int> t(24, 0);
        for (int h = 7; h <= 13; ++h) t[static_cast<size_t>(h)] = 1;
        for (int h = 14; h <= 19; ++h) t[static_cast<size_t>(h)] = 2;
        for (int h = 20; h <= 22; ++h) t[static_cast<size_t>(h)] = 1;
        return t;
    }

  private:
    double tier_price(int clock_hour) const {
        int tier = hour_tier.empty() ? 0 : hour_tier[static_cast<size_t>(clock_hour % 24)];
        return tier == 2 ? price_on_peak : tier == 1 ? price_mid_peak : price_off_peak;
    }
};

struct Horizon {
    int years = 1;
    int days_per_year = 1;
    int hours_per_day = 24;   // steps per day; each step spans 24/steps hours
    double day_weight = 0.0;  // representative days per year; 0 -> 365/days

    double dt_hours() const { return 24.0 / hours_per_day; }
    double weight() const {
        return day_weight > 0 ? day_weight : 365.0 / days_per_year;
    }
    int clock_hour(int t) const {
        return static_cast<int>(t * dt_hours());
    }
};

struct PlanningCase {
    std::string name;
    std::vector<Node> nodes;
    std::vector<Line> lines;
    std::map<ResourceKind, ResourceSpec> resources;
    std::vector<ServerSpec> servers;
    EconParams econ;
    Horizon horizon;
    double peak_load_mw = 0.0;
    double peak_workload_req_h = 0.0;  // requests/hour
    std::vector<RpsFloor> rps_floors;
    // Optional explicit distances (km); row-major n*n. Empty -> Euclidean.
    std::vector<double> distance_override_km;

    int n_nodes() const { return static_cast<int>(nodes.size()); }
    int n_servers() const { return static_cast<int>(servers.size()); }

    double distance_km(int i, int j) const {
        if (!distance_override_km.empty())
            return distance_override_km[static_cast<size_t>(i) * nodes.size() +
                                        static_cast<size_t>(j)];
        double dx = nodes[static_cast<size_t>(i)].x_km - nodes[static_cast<size_t>(j)].x_km;
        double dy = nodes[static_cast<size_t>(i)].y_km - nodes[static_cast<size_t>(j)].y_km;
        return std::sqrt(dx * dx + dy * dy);
    }

    const ResourceSpec& spec(ResourceKind k) const { return resources.at(k); }

    double initial_racks(int node, int server) const {
        const auto& m = nodes[static_cast<size_t>(node)].initial_racks;
        auto it = m.find(servers[static_cast<size_t>(server)].type_id);
        return it == m.end() ? 0.0 : it->second;
    }

    double existing_link_req_h(int i, int j) const {
        for (const auto& l : econ.existing_links)
            if ((l.from == i && l.to == j) || (l.from == j && l.to == i))
                return l.capacity_req_h;
        return 0.0;
    }

    // gamma_tech^y / lambda_tech^y with year 1 as the base year.
    double tech_cost_mult(int year) const {
        return std::pow(econ.tech_cost_factor, year - 1);
    }
    double tech_co2_mult(int year) const {
        return std::pow(econ.tech_co2_factor, year - 1);
    }

    // Carbon price in year y, optionally scaled by a sweep factor kappa.
    double carbon_price(int year, double kappa = 1.0) const {
        return kappa * econ.carbon_price *
               std::pow(1.0 + econ.carbon_price_growth, year - 1);
    }

    double discount(int year) const {
        return 1.0 / std::pow(1.0 + econ.discount_rate, year);
    }

    // Residual value rate of retired CG capacity in year y.
    double cg_retire_residual(int year) const {
        double r = econ.cg_residual_start - econ.cg_residual_step * (year - 1);
        return r < 0.0 ? 0.0 : r;
    }
};

// ---------------------------------------------------------------------------
// Residual value at end of horizon

// Fraction of capex recovered at the end of the horizon for an asset with
// the given lifetime installed in `install_year`, floored at scrap value.
inline double residual_fraction_for(int lifetime, double scrap, int horizon_years,
                                    int install_year) {
    double used = static_cast<double>(horizon_years - install_year + 1);
    double r = (lifetime - used) / lifetime * (1.0 - scrap) + scrap;
    return r < scrap ? scrap : r;
}

inline double residual_fraction(ResourceKind kind, int install_year,
                                const PlanningCase& pc) {
    auto it = pc.resources.find(kind);
    if (it == pc.resources.end())
        throw std::out_of_range(std::string("no such resource in case: ") +
                                kind_name(kind));
    if (install_year < 1 || install_year > pc.horizon.years)
        throw std::out_of_range("install_year outside horizon");
    return residual_fraction_for(it->second.lifetime, it->second.scrap_fraction,
                                 pc.horizon.years, install_year);
}

// ---------------------------------------------------------------------------
// Data-link delay feasibility

// Z[i][j] = 1 iff node i can serve node j within the propagation-delay
// budget; diagonal is zero. H0 = T_req / tau0.
struct LinkFeasibility {
    int n = 0;
    std::vector<uint8_t> z;
    double h0_km = 0.0;
    bool ok(int i, int j) const {
        return z[static_cast<size_t>(i) * n + static_cast<size_t>(j)] != 0;
    }
};

inline LinkFeasibility link_feasibility(const PlanningCase& pc) {
    LinkFeasibility lf;
    lf.n = pc.n_nodes();
    lf.h0_km = pc.econ.delay_limit_ms / pc.econ.delay_ms_per_km;
    lf.z.assign(static_cast<size_t>(lf.n) * lf.n, 0);
    for (int i = 0; i < lf.n; ++i)
        for (int j = 0; j < lf.n; ++j)
            if (i != j && pc.distance_km(i, j) <= lf.h0_km)
                lf.z[static_cast<size_t>(i) * lf.n + static_cast<size_t>(j)] = 1;
    return lf;
}

// ---------------------------------------------------------------------------
// Validation

inline std::vector<std::string> validate_issues(const PlanningCase& pc) {
    std::vector<std::string> bad;
    auto chk = [&](bool ok, const std::string& msg) {
        if (!ok) bad.push_back(msg);
    };

    chk(!pc.nodes.empty(), "no nodes");
    chk(pc.horizon.years >= 1, "horizon.years must be >= 1");
    chk(pc.horizon.days_per_year >= 1, "horizon.days_per_year must be >= 1");
    chk(pc.horizon.hours_per_day >= 1 && 24 % pc.horizon.hours_per_day == 0,
        "horizon.hours_per_day must divide 24");
    chk(pc.peak_load_mw >= 0, "peak_load_mw must be >= 0");
    chk(pc.peak_workload_req_h >= 0, "peak_workload_req_h must be >= 0");

    double sl = 0, sd = 0;
    for (const auto& n : pc.nodes) {
        sl += n.load_share;
        sd += n.data_share;
        for (ResourceKind k : kAllKinds)
            chk(n.initial_capacity[static_cast<size_t>(k)] >= 0,
                "node " + n.name + ": negative initial capacity for " + kind_name(k));
        for (const auto& [sid, r] : n.initial_racks)
            chk(r >= 0, "node " + n.name + ": negative initial racks for " + sid);
        for (const auto& day : n.cooling_factor)
            for (double c : day)
                chk(c >= 0, "node " + n.name + ": cooling factor must be >= 0");
        if (!n.cooling_factor.empty()) {
            chk(static_cast<int>(n.cooling_factor.size()) == pc.horizon.days_per_year,
                "node " + n.name + ": cooling profile day count mismatch");
            for (const auto& day : n.cooling_factor)
                chk(static_cast<int>(day.size()) == pc.horizon.hours_per_day,
                    "node " + n.name + ": cooling profile hour count mismatch");
        }
    }
    if (!pc.nodes.empty()) {
        chk(std::abs(sl - 1.0) <= 1e-9, "load shares must sum to 1");
        chk(std::abs(sd - 1.0) <= 1e-9, "data shares must sum to 1");
    }

    for (const auto& l : pc.lines) {
        chk(l.length_km > 0, "line " + std::to_string(l.id) + ": length must be > 0");
        chk(l.reactance_pu > 0, "line " + std::to_string(l.id) + ": reactance must be > 0");
        chk(l.initial_capacity_mw >= 0,
            "line " + std::to_string(l.id) + ": negative initial capacity");
        chk(l.from >= 0 && l.from < pc.n_nodes() && l.to >= 0 && l.to < pc.n_nodes() &&
                l.from != l.to,
            "line " + std::to_string(l.id) + ": bad endpoints");
    }

    for (const auto& [k, r] : pc.resources) {
        std::string tag = std::string("resource ") + kind_name(k) + ": ";
        chk(r.unit_size > 0, tag + "unit size must be > 0");
        chk(r.capex >= 0 && r.gen_cost >= 0 && r.om_cost >= 0, tag + "costs must be >= 0");
        chk(r.embodied_co2 >= 0 && r.op_co2 >= 0, tag + "emission factors must be >= 0");
        chk(r.lifetime >= 1, tag + "lifetime must be >= 1");
        chk(0 <= r.min_output_frac && r.min_output_frac <= r.max_output_frac &&
                r.max_output_frac <= 1.0,
            tag + "need 0 <= beta_min <= beta_max <= 1");
        if (k == ResourceKind::ES) {
            chk(r.eff_charge > 0 && r.eff_charge <= 1.0 && r.eff_discharge > 0 &&
                    r.eff_discharge <= 1.0,
                tag + "efficiencies must be in (0, 1]");
            chk(0 <= r.soc_min_frac && r.soc_min_frac <= r.soc_max_frac &&
                    r.soc_max_frac <= 1.0,
                tag + "need 0 <= soc_min <= soc_max <= 1");
            chk(r.power_per_mwh > 0, tag + "power rating must be > 0");
        }
        chk(r.scrap_fraction >= 0 && r.scrap_fraction < 1, tag + "scrap fraction in [0,1)");
    }

    for (const auto& s : pc.servers) {
        std::string tag = "server " + s.type_id + ": ";
        chk(s.pue >= 1.0, tag + "PUE must be >= 1");
        chk(s.throughput > 0, tag + "throughput must be > 0");
        chk(s.lifetime >= 1, tag + "lifetime must be >= 1");
        chk(s.capex >= 0 && s.embodied_co2 >= 0, tag + "costs must be >= 0");
        chk(s.rack_power_mw > 0, tag + "rack power must be > 0");
    }

    const auto& e = pc.econ;
    chk(e.discount_rate >= 0 && e.discount_rate < 1, "discount rate must be in [0, 1)");
    chk(e.delay_limit_ms > 0, "delay limit must be > 0");
    chk(e.delay_ms_per_km > 0, "delay per km must be > 0");
    chk(e.carbon_price >= 0 && e.price_on_peak >= 0 && e.price_mid_peak >= 0 &&
            e.price_off_peak >= 0 && e.curtail_cost_pv >= 0 && e.curtail_cost_wt >= 0 &&
            e.fix_capex >= 0 && e.tl_capex >= 0 && e.tc_capex >= 0,
        "all prices must be >= 0");
    chk(e.exchange_limit_mw >= 0, "exchange limit must be >= 0");

    if (!pc.distance_override_km.empty())
        chk(pc.distance_override_km.size() == pc.nodes.size() * pc.nodes.size(),
            "distance override must be n*n");

    for (const auto& f : pc.rps_floors) {
        chk(f.year >= 0 && f.year <= pc.horizon.years, "rps floor: year outside horizon");
        chk(f.min_mw >= 0, "rps floor: min must be >= 0");
    }
    return bad;
}

inline void validate(const PlanningCase& pc) {
    auto bad = validate_issues(pc);
    if (!bad.empty()) throw ValidationError(std::move(bad));
}

}  // namespace coplan
