#pragma once

// Lowers (PlanningCase, ScenarioSet) into the two-stage compact form: an
// integer planning block (c, A, b) over all years plus one operational block
// (q, E, f, F, G, h) per (year, day, scenario). Planning equalities are
// emitted as paired inequalities; operational equalities stay equality rows.
//
// Conventions baked in here and mirrored by the accounting evaluator:
//  - representative days are weighted up to annual totals (day_weight),
//  - investment and operating costs are discounted per year; the carbon
//    charge escalates per year but is not discounted,
//  - available renewable output enters as shape * installed capacity, which
//    couples the operational rows to the planning columns and moves the
//    capacity-dependent part of the curtailment charge into the first-stage
//    objective,
//  - workload quantities are rates in requests/hour throughout.

#include <map>

#include "coplan/lp.hpp"
#include "coplan/ptdf.hpp"
#include "coplan/scenario.hpp"

namespace coplan {

enum class EmissionsMode { OpOnly, OpAndEmbodied };

struct CompileOptions {
    EmissionsMode emissions = EmissionsMode::OpAndEmbodied;
    double carbon_scale = 1.0;  // kappa sweep multiplier on the carbon price
    int ref_node = 0;
};

struct CompileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Workload-transfer pair (unordered, first < second).
struct LinkPair {
    int first = 0, second = 0;
    bool delay_ok = false;     // within the propagation budget
    double distance_km = 0.0;
    double existing_req_h = 0.0;
};

// ---------------------------------------------------------------------------
// Variable indexing

// Planning-variable roles: build/retire counts are integer, capacities and
// rack totals are the affine bookkeeping columns they drive.
enum class ZRole : uint8_t {
    UnitsBuilt,      // generation or storage units added (kind, year, node)
    CgUnitsRetired,  // coal units retired
    InstalledCap,    // IC per kind
    LineUnitsBuilt,  // corridor expansion units
    LineCap,         // corridor capacity
    RacksBuilt,
    RacksRetired,
    RacksInstalled,  // per server type
    RacksTotal,      // per node, all types
    LinkUnitsBuilt,  // data-link modules on a pair
    LinkCap,         // data-link capacity on a pair (requests/hour)
};

struct ZVar {
    ZRole role;
    int year = 0;      // 1-based
    int node = -1;
    int kind = -1;     // ResourceKind index
    int corridor = -1;
    int server = -1;
    int pair = -1;
};

// Operational-variable roles within one (year, day, scenario) block.
enum class XRole : uint8_t {
    Gen,         // per thermal/renewable kind
    Charge,
    Discharge,
    Soc,
    Buy,
    Sell,
    LineFlow,
    DcServed,    // requests/hour served locally
    Transfer,    // requests/hour moved between a pair (signed, first->second)
    ActiveRacks,
};

struct XVar {
    XRole role;
    int t = 0;
    int node = -1;
    int kind = -1;
    int corridor = -1;
    int server = -1;
    int pair = -1;
};

// Shared layout of every operational block.
struct XLayout {
    int steps = 0, nodes = 0, corridors = 0, pairs = 0, servers = 0;
    int per_t = 0, count = 0;
    std::vector<XVar> meta;

    // per (t, i): NG, CG, PV, WT, Charge, Discharge, Soc, Buy, Sell, DcServed,
    // ActiveRacks[m]; then per (t, l): LineFlow; per (t, p): Transfer
    int node_stride() const { return 10 + servers; }

    int gen(int t, int i, ResourceKind k) const {
        int off = 0;
        switch (k) {
            case ResourceKind::NG: off = 0; break;
            case ResourceKind::CG: off = 1; break;
            case ResourceKind::PV: off = 2; break;
            case ResourceKind::WT: off = 3; break;
            default: throw std::logic_error("gen() needs a generating kind");
        }
        return t * per_t + i * node_stride() + off;
    }
    int charge(int t, int i) const { return t * per_t + i * node_stride() + 4; }
    int discharge(int t, int i) const { return t * per_t + i * node_stride() + 5; }
    int soc(int t, int i) const { return t * per_t + i * node_stride() + 6; }
    int buy(int t, int i) const { return t * per_t + i * node_stride() + 7; }
    int sell(int t, int i) const { return t * per_t + i * node_stride() + 8; }
    int dc_served(int t, int i) const { return t * per_t + i * node_stride() + 9; }
    int active_racks(int t, int i, int m) const {
        return t * per_t + i * node_stride() + 10 + m;
    }
    int line_flow(int t, int l) const { return t * per_t + nodes * node_stride() + l; }
    int transfer(int t, int p) const {
        return t * per_t + nodes * node_stride() + corridors + p;
    }
};

inline XLayout make_xlayout(int steps, int nodes, int corridors, int pairs, int servers) {
    XLayout x;
    x.steps = steps;
    x.nodes = nodes;
    x.corridors = corridors;
    x.pairs = pairs;
    x.servers = servers;
    x.per_t = nodes * x.node_stride() + corridors + pairs;
    x.count = steps * x.per_t;
    x.meta.resize(static_cast<size_t>(x.count));
    for (int t = 0; t < steps; ++t) {
        for (int i = 0; i < nodes; ++i) {
            x.meta[x.gen(t, i, ResourceKind::NG)] = {XRole::Gen, t, i, 0, -1, -1, -1};
            x.meta[x.gen(t, i, ResourceKind::CG)] = {XRole::Gen, t, i, 1, -1, -1, -1};
            x.meta[x.gen(t, i, ResourceKind::PV)] = {XRole::Gen, t, i, 2, -1, -1, -1};
            x.meta[x.gen(t, i, ResourceKind::WT)] = {XRole::Gen, t, i, 3, -1, -1, -1};
            x.meta[x.charge(t, i)] = {XRole::Charge, t, i};
            x.meta[x.discharge(t, i)] = {XRole::Discharge, t, i};
            x.meta[x.soc(t, i)] = {XRole::Soc, t, i};
            x.meta[x.buy(t, i)] = {XRole::Buy, t, i};
            x.meta[x.sell(t, i)] = {XRole::Sell, t, i};
            x.meta[x.dc_served(t, i)] = {XRole::DcServed, t, i};
            for (int m = 0; m < servers; ++m)
                x.meta[x.active_racks(t, i, m)] = {XRole::ActiveRacks, t, i, -1, -1, m, -1};
        }
        for (int l = 0; l < corridors; ++l)
            x.meta[x.line_flow(t, l)] = {XRole::LineFlow, t, -1, -1, l, -1, -1};
        for (int p = 0; p < pairs; ++p)
            x.meta[x.transfer(t, p)] = {XRole::Transfer, t, -1, -1, -1, -1, p};
    }
    return x;
}

// ---------------------------------------------------------------------------
// Rows

struct PlanningRow {  // a z <= rhs
    std::vector<int> cols;
    std::vector<double> vals;
    double rhs = 0.0;
    std::string tag;
};

struct BlockEqRow {  // e x = f
    std::vector<int> xcols;
    std::vector<double> xvals;
    double rhs = 0.0;
    std::string tag;
};

struct BlockIneqRow {  // f z + g x <= h
    std::vector<int> zcols;
    std::vector<double> zvals;
    std::vector<int> xcols;
    std::vector<double> xvals;
    double rhs = 0.0;
    std::string tag;
};

struct Block {
    int year = 1, day = 0, scen = 0;
    double prob = 1.0;
    std::vector<double> q;  // per x column; day weight and discount included
    std::vector<BlockEqRow> eq;
    std::vector<BlockIneqRow> ineq;
    std::vector<double> xlo, xup;
    double recourse_lb = 0.0;  // proven lower bound on q.x over physical caps
};

// ---------------------------------------------------------------------------
// Compact model

struct CompactModel {
    const PlanningCase* pc = nullptr;
    ScenarioSet scenarios;
    CompileOptions opts;
    PtdfMatrix ptdf;
    LinkFeasibility linkz;
    std::vector<LinkPair> pairs;

    // first stage
    int nz = 0;
    std::vector<double> c, zlo, zup;
    std::vector<uint8_t> z_integer;
    std::vector<ZVar> zmeta;
    std::vector<PlanningRow> planning;
    std::vector<std::pair<int, int>> year_cols;  // [first, last) per year (1-based idx 0 unused)

    XLayout x;
    std::vector<Block> blocks;  // ordered (year, day, scenario)

    // index maps (year 1-based)
    std::vector<int> z_n, z_ncg, z_ic, z_ntl, z_ictl, z_bn, z_rn, z_in, z_indc, z_ntc,
        z_ybar;

    int years() const { return pc->horizon.years; }
    int days() const { return pc->horizon.days_per_year; }
    int steps() const { return pc->horizon.hours_per_day; }
    int nodes() const { return pc->n_nodes(); }
    int servers() const { return pc->n_servers(); }
    int n_pairs() const { return static_cast<int>(pairs.size()); }

    int idx_n(int y, int i, ResourceKind k) const {
        return z_n[((y - 1) * nodes() + i) * 5 + static_cast<int>(k)];
    }
    int idx_ncg(int y, int i) const { return z_ncg[(y - 1) * nodes() + i]; }
    int idx_ic(int y, int i, ResourceKind k) const {
        return z_ic[((y - 1) * nodes() + i) * 5 + static_cast<int>(k)];
    }
    int idx_ntl(int y, int l) const { return z_ntl[(y - 1) * ptdf.n_corridors() + l]; }
    int idx_ictl(int y, int l) const { return z_ictl[(y - 1) * ptdf.n_corridors() + l]; }
    int idx_bn(int y, int i, int m) const {
        return z_bn[((y - 1) * nodes() + i) * servers() + m];
    }
    int idx_rn(int y, int i, int m) const {
        return z_rn[((y - 1) * nodes() + i) * servers() + m];
    }
    int idx_in(int y, int i, int m) const {
        return z_in[((y - 1) * nodes() + i) * servers() + m];
    }
    int idx_indc(int y, int i) const { return z_indc[(y - 1) * nodes() + i]; }
    int idx_ntc(int y, int p) const { return z_ntc[(y - 1) * n_pairs() + p]; }
    int idx_ybar(int y, int p) const { return z_ybar[(y - 1) * n_pairs() + p]; }

    const Block& block(int y, int d, int s) const {
        return blocks[static_cast<size_t>(((y - 1) * days() + d) * scenarios.size() + s)];
    }

    // Full objective for a first-stage point and per-block dispatches
    // (blocks indexed as in `blocks`).
    double objective_value(const std::vector<double>& z,
                           const std::vector<std::vector<double>>& xs) const {
        long double v = 0;
        for (int j = 0; j < nz; ++j) v += static_cast<long double>(c[j]) * z[j];
        for (size_t b = 0; b < blocks.size(); ++b) {
            const Block& blk = blocks[b];
            long double qx = 0;
            for (int j = 0; j < x.count; ++j)
                qx += static_cast<long double>(blk.q[j]) * xs[b][j];
            v += static_cast<long double>(blk.prob) * qx;
        }
        return static_cast<double>(v);
    }

    std::map<std::string, long> coverage_report() const {
        std::map<std::string, long> tags;
        for (const auto& r : planning) tags[r.tag]++;
        for (const auto& b : blocks) {
            for (const auto& r : b.eq) tags[r.tag]++;
            for (const auto& r : b.ineq) tags[r.tag]++;
        }
        long nint = 0;
        for (uint8_t f : z_integer) nint += f;
        tags["integrality"] = nint;
        return tags;
    }
};

// ---------------------------------------------------------------------------
// Compiler

namespace detail {

struct ZBuilder {
    CompactModel& m;
    int add(ZRole role, int year, int node, int kind, int corridor, int server, int pair,
            double lo, double up, bool integer) {
        m.zmeta.push_back({role, year, node, kind, corridor, server, pair});
        m.zlo.push_back(lo);
        m.zup.push_back(up);
        m.z_integer.push_back(integer ? 1 : 0);
        m.c.push_back(0.0);
        return m.nz++;
    }
};

}  // namespace detail

inline std::vector<LinkPair> build_link_pairs(const PlanningCase& pc,
                                              const LinkFeasibility& lf) {
    std::vector<LinkPair> pairs;
    for (int i = 0; i < pc.n_nodes(); ++i)
        for (int j = i + 1; j < pc.n_nodes(); ++j) {
            LinkPair p;
            p.first = i;
            p.second = j;
            p.delay_ok = lf.ok(i, j);
            p.distance_km = pc.distance_km(i, j);
            p.existing_req_h = pc.existing_link_req_h(i, j);
            if (p.delay_ok || p.existing_req_h > 0) pairs.push_back(p);
        }
    return pairs;
}

inline CompactModel compile(const PlanningCase& pc, const ScenarioSet& scens,
                            CompileOptions opts = {}) {
    check_scenarios_fit(scens, pc);
    CompactModel m;
    m.pc = &pc;
    m.scenarios = scens;
    m.opts = opts;
    m.ptdf = compute_ptdf(pc, opts.ref_node);
    m.linkz = link_feasibility(pc);
    m.pairs = build_link_pairs(pc, m.linkz);

    const int Y = m.years(), D = m.days(), T = m.steps(), NI = m.nodes();
    const int NL = m.ptdf.n_corridors(), NP = m.n_pairs(), NM = m.servers();
    const double dt = pc.horizon.dt_hours();
    const double wd = pc.horizon.weight();

    // ---- static sanity of capacity windows
    for (int y = 1; y <= Y; ++y)
        for (int i = 0; i < NI; ++i)
            for (ResourceKind k : kBuildableKinds) {
                auto [lo, hi] = pc.spec(k).capacity_window(y, i);
                if (lo > hi + 1e-9)
                    throw CompileError("capacity window is empty for year " +
                                       std::to_string(y) + ", node " +
                                       pc.nodes[static_cast<size_t>(i)].name + ", " + kind_name(k));
            }

    // ---- first-stage columns
    detail::ZBuilder zb{m};
    m.z_n.assign(static_cast<size_t>(Y) * NI * 5, -1);
    m.z_ncg.assign(static_cast<size_t>(Y) * NI, -1);
    m.z_ic.assign(static_cast<size_t>(Y) * NI * 5, -1);
    m.z_ntl.assign(static_cast<size_t>(Y) * NL, -1);
    m.z_ictl.assign(static_cast<size_t>(Y) * NL, -1);
    m.z_bn.assign(static_cast<size_t>(Y) * NI * NM, -1);
    m.z_rn.assign(static_cast<size_t>(Y) * NI * NM, -1);
    m.z_in.assign(static_cast<size_t>(Y) * NI * NM, -1);
    m.z_indc.assign(static_cast<size_t>(Y) * NI, -1);
    m.z_ntc.assign(static_cast<size_t>(Y) * NP, -1);
    m.z_ybar.assign(static_cast<size_t>(Y) * NP, -1);
    m.year_cols.assign(static_cast<size_t>(Y) + 1, {0, 0});

    auto ic0 = [&](int i, ResourceKind k) {
        return pc.nodes[static_cast<size_t>(i)].initial_capacity[static_cast<size_t>(k)];
    };

    for (int y = 1; y <= Y; ++y) {
        int first = m.nz;
        for (int i = 0; i < NI; ++i) {
            for (ResourceKind k : kBuildableKinds) {
                const ResourceSpec& r = pc.spec(k);
                double cap_hi = 0;
                for (int yy = 1; yy <= Y; ++yy)
                    cap_hi = std::max(cap_hi, r.capacity_window(yy, i).second);
                double room = std::max(0.0, cap_hi - ic0(i, k));
                int nmax = static_cast<int>(std::floor(room / r.unit_size + 1e-9));
                m.z_n[((y - 1) * NI + i) * 5 + static_cast<int>(k)] = zb.add(
                    ZRole::UnitsBuilt, y, i, static_cast<int>(k), -1, -1, -1, 0, nmax, true);
            }
            {
                const ResourceSpec& r = pc.spec(ResourceKind::CG);
                int nmax = static_cast<int>(std::floor(ic0(i, ResourceKind::CG) / r.unit_size + 1e-9));
                m.z_ncg[(y - 1) * NI + i] =
                    zb.add(ZRole::CgUnitsRetired, y, i, static_cast<int>(ResourceKind::CG), -1,
                           -1, -1, 0, nmax, true);
            }
            for (ResourceKind k : kAllKinds)
                m.z_ic[((y - 1) * NI + i) * 5 + static_cast<int>(k)] = zb.add(
                    ZRole::InstalledCap, y, i, static_cast<int>(k), -1, -1, -1, 0, kInf, false);
        }
        for (int l = 0; l < NL; ++l) {
            const Corridor& cor = m.ptdf.corridors[static_cast<size_t>(l)];
            int nmax = cor.expandable ? cor.max_units : 0;
            m.z_ntl[(y - 1) * NL + l] =
                zb.add(ZRole::LineUnitsBuilt, y, -1, -1, l, -1, -1, 0, nmax, true);
            m.z_ictl[(y - 1) * NL + l] =
                zb.add(ZRole::LineCap, y, -1, -1, l, -1, -1, 0, kInf, false);
        }
        for (int i = 0; i < NI; ++i) {
            for (int mm = 0; mm < NM; ++mm) {
                double cap = pc.servers[static_cast<size_t>(mm)].max_racks_per_node;
                m.z_bn[((y - 1) * NI + i) * NM + mm] =
                    zb.add(ZRole::RacksBuilt, y, i, -1, -1, mm, -1, 0, cap, true);
                m.z_rn[((y - 1) * NI + i) * NM + mm] =
                    zb.add(ZRole::RacksRetired, y, i, -1, -1, mm, -1, 0, cap, true);
                m.z_in[((y - 1) * NI + i) * NM + mm] =
                    zb.add(ZRole::RacksInstalled, y, i, -1, -1, mm, -1, 0, kInf, false);
            }
            m.z_indc[(y - 1) * NI + i] =
                zb.add(ZRole::RacksTotal, y, i, -1, -1, -1, -1, 0, kInf, false);
        }
        for (int p = 0; p < NP; ++p) {
            if (!m.pairs[static_cast<size_t>(p)].delay_ok) continue;
            m.z_ntc[(y - 1) * NP + p] = zb.add(ZRole::LinkUnitsBuilt, y, -1, -1, -1, -1, p,
                                               0, pc.econ.max_tc_units_per_pair, true);
            m.z_ybar[(y - 1) * NP + p] =
                zb.add(ZRole::LinkCap, y, -1, -1, -1, -1, p, 0, kInf, false);
        }
        m.year_cols[static_cast<size_t>(y)] = {first, m.nz};
    }

    // ---- planning rows (equalities as <= pairs)
    auto add_le = [&](std::vector<int> cols, std::vector<double> vals, double rhs,
                      const std::string& tag) {
        m.planning.push_back({std::move(cols), std::move(vals), rhs, tag});
    };
    auto add_eq = [&](const std::vector<int>& cols, const std::vector<double>& vals,
                      double rhs, const std::string& tag) {
        add_le(cols, vals, rhs, tag);
        std::vector<double> neg(vals.size());
        for (size_t k = 0; k < vals.size(); ++k) neg[k] = -vals[k];
        add_le(cols, neg, -rhs, tag);
    };

    for (int y = 1; y <= Y; ++y) {
        for (int i = 0; i < NI; ++i) {
            // capacity recursion for buildable kinds
            for (ResourceKind k : kBuildableKinds) {
                const ResourceSpec& r = pc.spec(k);
                std::vector<int> cols = {m.idx_ic(y, i, k), m.idx_n(y, i, k)};
                std::vector<double> vals = {1.0, -r.unit_size};
                double rhs = 0.0;
                if (y == 1) rhs = ic0(i, k);
                else {
                    cols.push_back(m.idx_ic(y - 1, i, k));
                    vals.push_back(-1.0);
                }
                add_eq(cols, vals, rhs,
                       k == ResourceKind::ES ? "cap-recursion-storage" : "cap-recursion-gen");
            }
            // coal: retirement only
            {
                const ResourceSpec& r = pc.spec(ResourceKind::CG);
                std::vector<int> cols = {m.idx_ic(y, i, ResourceKind::CG), m.idx_ncg(y, i)};
                std::vector<double> vals = {1.0, r.unit_size};
                double rhs = 0.0;
                if (y == 1) rhs = ic0(i, ResourceKind::CG);
                else {
                    cols.push_back(m.idx_ic(y - 1, i, ResourceKind::CG));
                    vals.push_back(-1.0);
                }
                add_eq(cols, vals, rhs, "cg-retirement");
                add_le({m.idx_ic(y, i, ResourceKind::CG)}, {-1.0}, 0.0, "cg-nonneg");
            }
            // capacity windows, with renewable floors folded in
            for (ResourceKind k : kBuildableKinds) {
                auto [lo, hi] = pc.spec(k).capacity_window(y, i);
                for (const auto& f : pc.rps_floors)
                    if (f.kind == k && f.year == y && f.node == i) lo = std::max(lo, f.min_mw);
                add_le({m.idx_ic(y, i, k)}, {1.0}, hi, "ic-upper");
                add_le({m.idx_ic(y, i, k)}, {-1.0}, -lo,
                       lo > 0 ? "rps-floor" : "ic-lower");
            }
            // server stock
            for (int mm = 0; mm < NM; ++mm) {
                const ServerSpec& sv = pc.servers[static_cast<size_t>(mm)];
                double in0 = pc.initial_racks(i, mm);
                std::vector<int> cols = {m.idx_in(y, i, mm), m.idx_bn(y, i, mm),
                                         m.idx_rn(y, i, mm)};
                std::vector<double> vals = {1.0, -1.0, 1.0};
                double rhs = 0.0;
                if (y == 1) rhs = in0;
                else {
                    cols.push_back(m.idx_in(y - 1, i, mm));
                    vals.push_back(-1.0);
                }
                add_eq(cols, vals, rhs, "server-stock");
                // monotone per type
                if (y == 1)
                    add_le({m.idx_in(y, i, mm)}, {-1.0}, -in0, "server-monotone");
                else
                    add_le({m.idx_in(y - 1, i, mm), m.idx_in(y, i, mm)}, {1.0, -1.0}, 0.0,
                           "server-monotone");
                // lifetime retirement: forced replacement schedule
                if (y - sv.lifetime >= 1)
                    add_eq({m.idx_rn(y, i, mm), m.idx_bn(y - sv.lifetime, i, mm)}, {1.0, -1.0},
                           0.0, "server-lifetime-retire");
                else
                    add_eq({m.idx_rn(y, i, mm)}, {1.0}, 0.0, "server-lifetime-retire");
                add_le({m.idx_in(y, i, mm)}, {1.0}, sv.max_racks_per_node, "rack-cap");
            }
            // per-node rack total
            {
                std::vector<int> cols = {m.idx_indc(y, i)};
                std::vector<double> vals = {1.0};
                for (int mm = 0; mm < NM; ++mm) {
                    cols.push_back(m.idx_in(y, i, mm));
                    vals.push_back(-1.0);
                }
                add_eq(cols, vals, 0.0, "dc-rack-total");
            }
        }
        // line capacity recursion
        for (int l = 0; l < NL; ++l) {
            const Corridor& cor = m.ptdf.corridors[static_cast<size_t>(l)];
            std::vector<int> cols = {m.idx_ictl(y, l), m.idx_ntl(y, l)};
            std::vector<double> vals = {1.0, -(cor.unit_mw > 0 ? cor.unit_mw : 1.0)};
            double rhs = 0.0;
            if (y == 1) rhs = cor.initial_capacity_mw;
            else {
                cols.push_back(m.idx_ictl(y - 1, l));
                vals.push_back(-1.0);
            }
            add_eq(cols, vals, rhs, "cap-recursion-line");
        }
        // data-link capacity recursion
        for (int p = 0; p < NP; ++p) {
            if (m.idx_ybar(y, p) < 0) continue;
            std::vector<int> cols = {m.idx_ybar(y, p), m.idx_ntc(y, p)};
            std::vector<double> vals = {1.0, -pc.econ.tc_unit_req_h};
            double rhs = 0.0;
            if (y > 1) {
                cols.push_back(m.idx_ybar(y - 1, p));
                vals.push_back(-1.0);
            }
            add_eq(cols, vals, rhs, "cap-recursion-link");
        }
        // system-wide coal retirement cap
        if (pc.econ.cg_retire_cap_mw > 0) {
            std::vector<int> cols;
            std::vector<double> vals;
            for (int i = 0; i < NI; ++i) {
                cols.push_back(m.idx_ncg(y, i));
                vals.push_back(pc.spec(ResourceKind::CG).unit_size);
            }
            add_le(cols, vals, pc.econ.cg_retire_cap_mw, "cg-retire-cap");
        }
        // system-wide renewable floors
        for (const auto& f : pc.rps_floors) {
            if (f.year != y || f.node != -1) continue;
            std::vector<int> cols;
            std::vector<double> vals;
            for (int i = 0; i < NI; ++i) {
                cols.push_back(m.idx_ic(y, i, f.kind));
                vals.push_back(-1.0);
            }
            add_le(cols, vals, -f.min_mw, "rps-floor-system");
        }
    }

    // ---- first-stage objective
    const int S = m.scenarios.size();
    const double DY = pc.discount(Y);
    const bool em = opts.emissions == EmissionsMode::OpAndEmbodied;
    for (int y = 1; y <= Y; ++y) {
        const double Dy = pc.discount(y);
        const double hbar = pc.carbon_price(y, opts.carbon_scale);
        const double gamma = pc.tech_cost_mult(y);
        const double lambda = pc.tech_co2_mult(y);
        for (int i = 0; i < NI; ++i) {
            for (ResourceKind k : kBuildableKinds) {
                const ResourceSpec& r = pc.spec(k);
                double cap = Dy * r.unit_capex();
                double rv = DY * residual_fraction_for(r.lifetime, r.scrap_fraction, Y, y) *
                            r.unit_capex();
                double emb = em ? hbar * r.embodied_co2 * r.unit_size : 0.0;
                m.c[m.idx_n(y, i, k)] += cap - rv + emb;
            }
            {
                const ResourceSpec& r = pc.spec(ResourceKind::CG);
                m.c[m.idx_ncg(y, i)] -=
                    Dy * pc.cg_retire_residual(y) * r.capex * r.unit_size;
            }
            for (int mm = 0; mm < NM; ++mm) {
                const ServerSpec& sv = pc.servers[static_cast<size_t>(mm)];
                double fix_rv = DY * residual_fraction_for(pc.econ.fix_lifetime,
                                                           pc.econ.fix_scrap, Y, y) *
                                pc.econ.fix_capex;
                m.c[m.idx_bn(y, i, mm)] += Dy * (gamma * sv.capex + pc.econ.fix_capex) -
                                           fix_rv +
                                           (em ? hbar * (lambda * sv.embodied_co2 +
                                                         pc.econ.fix_embodied)
                                               : 0.0);
                m.c[m.idx_rn(y, i, mm)] +=
                    -Dy * (sv.scrap_fraction * gamma * sv.capex + pc.econ.fix_capex) +
                    fix_rv - (em ? hbar * pc.econ.fix_embodied : 0.0);
            }
        }
        for (int l = 0; l < NL; ++l) {
            const Corridor& cor = m.ptdf.corridors[static_cast<size_t>(l)];
            double unit = cor.unit_mw > 0 ? cor.unit_mw : 1.0;
            double per_mw = cor.length_km * pc.econ.tl_capex;
            double rv = DY * residual_fraction_for(pc.econ.tl_lifetime, pc.econ.tl_scrap, Y, y);
            m.c[m.idx_ntl(y, l)] += unit * (Dy * per_mw - rv * per_mw +
                                            (em ? hbar * pc.econ.tl_embodied * cor.length_km
                                                : 0.0));
        }
        for (int p = 0; p < NP; ++p) {
            if (m.idx_ntc(y, p) < 0) continue;
            const LinkPair& lp = m.pairs[static_cast<size_t>(p)];
            double rv = DY * residual_fraction_for(pc.econ.tc_lifetime, pc.econ.tc_scrap, Y, y);
            m.c[m.idx_ntc(y, p)] +=
                Dy * lp.distance_km * pc.econ.tc_capex - rv * lp.distance_km * pc.econ.tc_capex +
                (em ? hbar * pc.econ.tc_embodied * lp.distance_km : 0.0);
        }
        // capacity-dependent curtailment charge (expected over scenarios)
        for (int i = 0; i < NI; ++i)
            for (int d = 0; d < D; ++d)
                for (int s = 0; s < S; ++s) {
                    const Scenario& sc = m.scenarios.scenarios[static_cast<size_t>(s)];
                    double pi = sc.probability();
                    for (int t = 0; t < T; ++t) {
                        double base = pi * wd * Dy * dt;
                        m.c[m.idx_ic(y, i, ResourceKind::WT)] +=
                            base * pc.econ.curtail_cost_wt *
                            sc.wind_shape[static_cast<size_t>(d)][static_cast<size_t>(t)];
                        m.c[m.idx_ic(y, i, ResourceKind::PV)] +=
                            base * pc.econ.curtail_cost_pv *
                            sc.solar_shape[static_cast<size_t>(d)][static_cast<size_t>(t)];
                    }
                }
    }

    // ---- operational blocks
    m.x = make_xlayout(T, NI, NL, NP, NM);
    m.blocks.reserve(static_cast<size_t>(Y) * D * S);

    for (int y = 1; y <= Y; ++y) {
        const double Dy = pc.discount(y);
        const double hbar = pc.carbon_price(y, opts.carbon_scale);
        for (int d = 0; d < D; ++d) {
            for (int s = 0; s < S; ++s) {
                const Scenario& sc = m.scenarios.scenarios[static_cast<size_t>(s)];
                Block b;
                b.year = y;
                b.day = d;
                b.scen = s;
                b.prob = sc.probability();
                b.q.assign(static_cast<size_t>(m.x.count), 0.0);
                b.xlo.assign(static_cast<size_t>(m.x.count), 0.0);
                b.xup.assign(static_cast<size_t>(m.x.count), kInf);

                const double cw = wd * Dy * dt;   // $ weight per MW of dispatch
                const double ew = wd * hbar * dt; // carbon charge weight

                for (int t = 0; t < T; ++t) {
                    int hour = pc.horizon.clock_hour(t);
                    for (int i = 0; i < NI; ++i) {
                        const ResourceSpec& ng = pc.spec(ResourceKind::NG);
                        const ResourceSpec& cg = pc.spec(ResourceKind::CG);
                        const ResourceSpec& pv = pc.spec(ResourceKind::PV);
                        const ResourceSpec& wt = pc.spec(ResourceKind::WT);
                        const ResourceSpec& es = pc.spec(ResourceKind::ES);
                        b.q[m.x.gen(t, i, ResourceKind::NG)] =
                            cw * (ng.gen_cost + ng.om_cost) + ew * ng.op_co2;
                        b.q[m.x.gen(t, i, ResourceKind::CG)] =
                            cw * (cg.gen_cost + cg.om_cost) + ew * cg.op_co2;
                        b.q[m.x.gen(t, i, ResourceKind::PV)] =
                            cw * (pv.om_cost - pc.econ.curtail_cost_pv);
                        b.q[m.x.gen(t, i, ResourceKind::WT)] =
                            cw * (wt.om_cost - pc.econ.curtail_cost_wt);
                        b.q[m.x.charge(t, i)] = cw * es.om_cost;
                        b.q[m.x.discharge(t, i)] = cw * es.om_cost;
                        b.q[m.x.buy(t, i)] = cw * pc.econ.buy_price(hour);
                        b.q[m.x.sell(t, i)] = -cw * pc.econ.sell_price(hour);
                        b.xup[m.x.soc(t, i)] = kInf;
                        // line flow and transfers are free variables
                    }
                    for (int l = 0; l < NL; ++l) {
                        b.xlo[m.x.line_flow(t, l)] = -kInf;
                    }
                    for (int p = 0; p < NP; ++p) b.xlo[m.x.transfer(t, p)] = -kInf;
                }

                // equalities
                for (int t = 0; t < T; ++t) {
                    int tm = t == 0 ? T - 1 : t - 1;
                    // system power balance
                    {
                        BlockEqRow row;
                        row.tag = "power-balance";
                        double rhs = 0.0;
                        for (int i = 0; i < NI; ++i) {
                            for (ResourceKind k :
                                 {ResourceKind::NG, ResourceKind::CG, ResourceKind::PV,
                                  ResourceKind::WT}) {
                                row.xcols.push_back(m.x.gen(t, i, k));
                                row.xvals.push_back(1.0);
                            }
                            row.xcols.push_back(m.x.discharge(t, i));
                            row.xvals.push_back(1.0);
                            row.xcols.push_back(m.x.charge(t, i));
                            row.xvals.push_back(-1.0);
                            row.xcols.push_back(m.x.buy(t, i));
                            row.xvals.push_back(1.0);
                            row.xcols.push_back(m.x.sell(t, i));
                            row.xvals.push_back(-1.0);
                            for (int mm = 0; mm < NM; ++mm) {
                                const ServerSpec& sv = pc.servers[static_cast<size_t>(mm)];
                                row.xcols.push_back(m.x.active_racks(t, i, mm));
                                row.xvals.push_back(-sv.pue * sv.rack_power_mw *
                                                    pc.nodes[static_cast<size_t>(i)].cooling(d, t));
                            }
                            rhs += realize(pc, sc, y, d, t, i).load_mw;
                        }
                        row.rhs = rhs;
                        b.eq.push_back(std::move(row));
                    }
                    // corridor flows via distribution factors
                    for (int l = 0; l < NL; ++l) {
                        BlockEqRow row;
                        row.tag = "line-flow-def";
                        row.xcols.push_back(m.x.line_flow(t, l));
                        row.xvals.push_back(1.0);
                        double rhs = 0.0;
                        for (int i = 0; i < NI; ++i) {
                            double g = m.ptdf.at(l, i);
                            if (g == 0.0) {
                                rhs -= 0.0;
                                continue;
                            }
                            for (ResourceKind k :
                                 {ResourceKind::NG, ResourceKind::CG, ResourceKind::PV,
                                  ResourceKind::WT}) {
                                row.xcols.push_back(m.x.gen(t, i, k));
                                row.xvals.push_back(-g);
                            }
                            row.xcols.push_back(m.x.discharge(t, i));
                            row.xvals.push_back(-g);
                            row.xcols.push_back(m.x.charge(t, i));
                            row.xvals.push_back(g);
                            row.xcols.push_back(m.x.buy(t, i));
                            row.xvals.push_back(-g);
                            row.xcols.push_back(m.x.sell(t, i));
                            row.xvals.push_back(g);
                            for (int mm = 0; mm < NM; ++mm) {
                                const ServerSpec& sv = pc.servers[static_cast<size_t>(mm)];
                                row.xcols.push_back(m.x.active_racks(t, i, mm));
                                row.xvals.push_back(g * sv.pue * sv.rack_power_mw *
                                                    pc.nodes[static_cast<size_t>(i)].cooling(d, t));
                            }
                            rhs -= g * realize(pc, sc, y, d, t, i).load_mw;
                        }
                        row.rhs = rhs;
                        b.eq.push_back(std::move(row));
                    }
                    for (int i = 0; i < NI; ++i) {
                        const ResourceSpec& es = pc.spec(ResourceKind::ES);
                        // storage energy balance, cyclic at the first step
                        BlockEqRow soc;
                        soc.tag = t == 0 ? "soc-cyclic" : "soc-balance";
                        soc.xcols = {m.x.soc(t, i), m.x.soc(tm, i), m.x.charge(t, i),
                                     m.x.discharge(t, i)};
                        soc.xvals = {1.0, -1.0, -es.eff_charge * dt, dt / es.eff_discharge};
                        soc.rhs = 0.0;
                        b.eq.push_back(std::move(soc));
                        // workload balance
                        BlockEqRow wl;
                        wl.tag = "workload-balance";
                        wl.xcols.push_back(m.x.dc_served(t, i));
                        wl.xvals.push_back(1.0);
                        for (int p = 0; p < NP; ++p) {
                            if (m.pairs[static_cast<size_t>(p)].first == i) {
                                wl.xcols.push_back(m.x.transfer(t, p));
                                wl.xvals.push_back(-1.0);
                            } else if (m.pairs[static_cast<size_t>(p)].second == i) {
                                wl.xcols.push_back(m.x.transfer(t, p));
                                wl.xvals.push_back(1.0);
                            }
                        }
                        wl.rhs = realize(pc, sc, y, d, t, i).workload_req_h;
                        b.eq.push_back(std::move(wl));
                        // served workload from active racks
                        BlockEqRow th;
                        th.tag = "dc-throughput";
                        th.xcols.push_back(m.x.dc_served(t, i));
                        th.xvals.push_back(1.0);
                        for (int mm = 0; mm < NM; ++mm) {
                            th.xcols.push_back(m.x.active_racks(t, i, mm));
                            th.xvals.push_back(-pc.servers[static_cast<size_t>(mm)].throughput);
                        }
                        th.rhs = 0.0;
                        b.eq.push_back(std::move(th));
                    }
                }

                // inequalities (F z + G x <= h)
                auto cap_row = [&](int xcol, double xcoef, int zcol, double zcoef,
                                   double rhs, const char* tag) {
                    BlockIneqRow r;
                    if (zcol >= 0) {
                        r.zcols.push_back(zcol);
                        r.zvals.push_back(zcoef);
                    }
                    r.xcols.push_back(xcol);
                    r.xvals.push_back(xcoef);
                    r.rhs = rhs;
                    r.tag = tag;
                    b.ineq.push_back(std::move(r));
                };

                for (int t = 0; t < T; ++t) {
                    int tm = t == 0 ? T - 1 : t - 1;
                    for (int i = 0; i < NI; ++i) {
                        for (ResourceKind k : {ResourceKind::NG, ResourceKind::CG}) {
                            const ResourceSpec& r = pc.spec(k);
                            int icz = m.idx_ic(y, i, k);
                            cap_row(m.x.gen(t, i, k), 1.0, icz, -r.max_output_frac, 0.0,
                                    "thermal-cap");
                            cap_row(m.x.gen(t, i, k), -1.0, icz, r.min_output_frac, 0.0,
                                    "thermal-min");
                            // ramps, cyclic at the first step
                            BlockIneqRow up;
                            up.tag = t == 0 ? "ramp-cyclic" : "ramp";
                            up.xcols = {m.x.gen(t, i, k), m.x.gen(tm, i, k)};
                            up.xvals = {1.0, -1.0};
                            up.zcols = {icz};
                            up.zvals = {-r.ramp_up * dt};
                            up.rhs = 0.0;
                            b.ineq.push_back(std::move(up));
                            BlockIneqRow dn;
                            dn.tag = t == 0 ? "ramp-cyclic" : "ramp";
                            dn.xcols = {m.x.gen(tm, i, k), m.x.gen(t, i, k)};
                            dn.xvals = {1.0, -1.0};
                            dn.zcols = {icz};
                            dn.zvals = {-r.ramp_down * dt};
                            dn.rhs = 0.0;
                            b.ineq.push_back(std::move(dn));
                        }
                        // renewables capped by shape * installed capacity
                        cap_row(m.x.gen(t, i, ResourceKind::WT), 1.0,
                                m.idx_ic(y, i, ResourceKind::WT),
                                -sc.wind_shape[static_cast<size_t>(d)][static_cast<size_t>(t)], 0.0,
                                "res-cap");
                        cap_row(m.x.gen(t, i, ResourceKind::PV), 1.0,
                                m.idx_ic(y, i, ResourceKind::PV),
                                -sc.solar_shape[static_cast<size_t>(d)][static_cast<size_t>(t)], 0.0,
                                "res-cap");
                        // storage windows
                        const ResourceSpec& es = pc.spec(ResourceKind::ES);
                        int esz = m.idx_ic(y, i, ResourceKind::ES);
                        cap_row(m.x.soc(t, i), 1.0, esz, -es.soc_max_frac, 0.0, "soc-window");
                        cap_row(m.x.soc(t, i), -1.0, esz, es.soc_min_frac, 0.0, "soc-window");
                        cap_row(m.x.charge(t, i), 1.0, esz, -es.power_per_mwh, 0.0, "es-power");
                        cap_row(m.x.charge(t, i), -1.0, esz, es.charge_min_frac, 0.0,
                                "es-power");
                        cap_row(m.x.discharge(t, i), 1.0, esz, -es.power_per_mwh, 0.0,
                                "es-power");
                        cap_row(m.x.discharge(t, i), -1.0, esz, es.discharge_min_frac, 0.0,
                                "es-power");
                        // exchange interface
                        cap_row(m.x.buy(t, i), 1.0, -1, 0.0, pc.econ.exchange_limit_mw,
                                "exchange-limit");
                        cap_row(m.x.sell(t, i), 1.0, -1, 0.0, pc.econ.exchange_limit_mw,
                                "exchange-limit");
                        // active racks within installed stock
                        for (int mm = 0; mm < NM; ++mm)
                            cap_row(m.x.active_racks(t, i, mm), 1.0, m.idx_in(y, i, mm), -1.0,
                                    0.0, "active-racks");
                    }
                    for (int l = 0; l < NL; ++l) {
                        cap_row(m.x.line_flow(t, l), 1.0, m.idx_ictl(y, l), -1.0, 0.0,
                                "line-limit");
                        cap_row(m.x.line_flow(t, l), -1.0, m.idx_ictl(y, l), -1.0, 0.0,
                                "line-limit");
                    }
                    for (int p = 0; p < NP; ++p) {
                        const LinkPair& lp = m.pairs[static_cast<size_t>(p)];
                        int yb = m.idx_ybar(y, p);
                        cap_row(m.x.transfer(t, p), 1.0, yb, yb >= 0 ? -1.0 : 0.0,
                                lp.existing_req_h, "transfer-limit");
                        cap_row(m.x.transfer(t, p), -1.0, yb, yb >= 0 ? -1.0 : 0.0,
                                lp.existing_req_h, "transfer-limit");
                    }
                }

                // proven recourse lower bound over physical caps
                {
                    long double lb = 0;
                    for (int j = 0; j < m.x.count; ++j) {
                        if (b.q[j] >= 0) continue;
                        const XVar& xv = m.x.meta[static_cast<size_t>(j)];
                        double cap = 0.0;
                        if (xv.role == XRole::Gen) {
                            ResourceKind k = static_cast<ResourceKind>(xv.kind);
                            double hi = 0;
                            for (int yy = 1; yy <= Y; ++yy)
                                hi = std::max(hi,
                                              pc.spec(k).capacity_window(yy, xv.node).second);
                            hi = std::max(hi, ic0(xv.node, k));
                            double shape = 1.0;
                            if (k == ResourceKind::WT)
                                shape = sc.wind_shape[static_cast<size_t>(d)][static_cast<size_t>(xv.t)];
                            if (k == ResourceKind::PV)
                                shape = sc.solar_shape[static_cast<size_t>(d)][static_cast<size_t>(xv.t)];
                            cap = hi * shape * pc.spec(k).max_output_frac;
                            if (is_renewable(k)) cap = hi * shape;
                        } else if (xv.role == XRole::Sell || xv.role == XRole::Buy) {
                            cap = pc.econ.exchange_limit_mw;
                        } else {
                            continue;  // remaining roles never price negative
                        }
                        lb += static_cast<long double>(b.q[j]) * cap;
                    }
                    b.recourse_lb = std::min(0.0, static_cast<double>(lb));
                }

                m.blocks.push_back(std::move(b));
            }
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Extensive form

// Deterministic-equivalent MILP over all blocks; the desk-scale oracle.
struct ExtensiveForm {
    LpProblem lp;
    std::vector<uint8_t> integer;
    int z_count = 0;
    std::vector<int> x_offset;  // per block
};

inline ExtensiveForm extensive_form(const CompactModel& m, size_t var_cap = 200000) {
    size_t total = static_cast<size_t>(m.nz) + m.blocks.size() * static_cast<size_t>(m.x.count);
    if (total > var_cap)
        throw CompileError("extensive form exceeds the variable cap: " +
                           std::to_string(total) + " > " + std::to_string(var_cap));
    ExtensiveForm ef;
    ef.z_count = m.nz;
    for (int j = 0; j < m.nz; ++j) {
        ef.lp.add_col(m.c[j], m.zlo[j], m.zup[j]);
        ef.integer.push_back(m.z_integer[j]);
    }
    for (const Block& b : m.blocks) {
        ef.x_offset.push_back(ef.lp.n_cols());
        for (int j = 0; j < m.x.count; ++j) {
            ef.lp.add_col(b.prob * b.q[j], b.xlo[j], b.xup[j]);
            ef.integer.push_back(0);
        }
    }
    for (const auto& r : m.planning) ef.lp.add_row(RowSense::LE, r.rhs, r.cols, r.vals);
    for (size_t bi = 0; bi < m.blocks.size(); ++bi) {
        const Block& b = m.blocks[bi];
        int off = ef.x_offset[bi];
        for (const auto& r : b.eq) {
            std::vector<int> cols;
            cols.reserve(r.xcols.size());
            for (int c : r.xcols) cols.push_back(off + c);
            ef.lp.add_row(RowSense::EQ, r.rhs, cols, r.xvals);
        }
        for (const auto& r : b.ineq) {
            std::vector<int> cols = r.zcols;
            std::vector<double> vals = r.zvals;
            for (size_t k = 0; k < r.xcols.size(); ++k) {
                cols.push_back(off + r.xcols[k]);
                vals.push_back(r.xvals[k]);
            }
            ef.lp.add_row(RowSense::LE, r.rhs, cols, vals);
        }
    }
    return ef;
}

// ---------------------------------------------------------------------------
// Plan extraction

// Integer first-stage decision, decoded from a solver point.
struct PlanDecision {
    int years = 0, nodes = 0, servers = 0, corridors = 0, pairs = 0;
    // [y][i][kind] and friends, flattened
    std::vector<long> units_built;    // buildable kinds, slot per all 5 kinds
    std::vector<long> cg_retired;     // units
    std::vector<long> line_units;     // per corridor
    std::vector<long> racks_built, racks_retired;
    std::vector<long> link_units;     // per pair

    long n_built(int y, int i, ResourceKind k) const {
        return units_built[((y - 1) * nodes + i) * 5 + static_cast<int>(k)];
    }
    long n_cg(int y, int i) const { return cg_retired[(y - 1) * nodes + i]; }
    long n_line(int y, int l) const { return line_units[(y - 1) * corridors + l]; }
    long n_racks_built(int y, int i, int m) const {
        return racks_built[((y - 1) * nodes + i) * servers + m];
    }
    long n_racks_retired(int y, int i, int m) const {
        return racks_retired[((y - 1) * nodes + i) * servers + m];
    }
    long n_link(int y, int p) const { return link_units[(y - 1) * pairs + p]; }
};

inline PlanDecision extract_plan(const CompactModel& m, const std::vector<double>& z) {
    PlanDecision p;
    p.years = m.years();
    p.nodes = m.nodes();
    p.servers = m.servers();
    p.corridors = m.ptdf.n_corridors();
    p.pairs = m.n_pairs();
    auto r = [](double v) { return std::lround(v); };
    p.units_built.assign(static_cast<size_t>(p.years) * p.nodes * 5, 0);
    p.cg_retired.assign(static_cast<size_t>(p.years) * p.nodes, 0);
    p.line_units.assign(static_cast<size_t>(p.years) * std::max(p.corridors, 1), 0);
    p.racks_built.assign(static_cast<size_t>(p.years) * p.nodes * std::max(p.servers, 1), 0);
    p.racks_retired = p.racks_built;
    p.link_units.assign(static_cast<size_t>(p.years) * std::max(p.pairs, 1), 0);
    for (int y = 1; y <= p.years; ++y) {
        for (int i = 0; i < p.nodes; ++i) {
            for (ResourceKind k : kBuildableKinds)
                p.units_built[((y - 1) * p.nodes + i) * 5 + static_cast<int>(k)] =
                    r(z[m.idx_n(y, i, k)]);
            p.cg_retired[(y - 1) * p.nodes + i] = r(z[m.idx_ncg(y, i)]);
            for (int mm = 0; mm < p.servers; ++mm) {
                p.racks_built[((y - 1) * p.nodes + i) * p.servers + mm] =
                    r(z[m.idx_bn(y, i, mm)]);
                p.racks_retired[((y - 1) * p.nodes + i) * p.servers + mm] =
                    r(z[m.idx_rn(y, i, mm)]);
            }
        }
        for (int l = 0; l < p.corridors; ++l)
            p.line_units[(y - 1) * p.corridors + l] = r(z[m.idx_ntl(y, l)]);
        for (int pp = 0; pp < p.pairs; ++pp)
            if (m.idx_ntc(y, pp) >= 0)
                p.link_units[(y - 1) * p.pairs + pp] = r(z[m.idx_ntc(y, pp)]);
    }
    return p;
}

}  // namespace coplan
