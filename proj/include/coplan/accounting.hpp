#pragma once

// Independent cost/emission evaluator and report writer. Recomputes every
// cost and emission category directly from the case data, the integer plan
// and the dispatch — deliberately not from the compiled coefficient arrays —
// so it doubles as the oracle for the compiler's objective assembly.

#include <iomanip>
#include <sstream>

#include "coplan/compile.hpp"

namespace coplan {

struct CostReport {
    int years = 0;
    // per-year categories, undiscounted
    std::vector<double> c_gr, c_dc, c_tl, c_tc, c_rt;        // investment side
    std::vector<double> c_gen, c_om, c_ex, c_curt;           // operating side
    std::vector<double> served_energy_mwh;                   // annualized
    std::vector<double> lcoe;                                // $/MWh
    double residual_value = 0.0;  // end-of-horizon, undiscounted
    double invest_total = 0.0;    // F(z), discounted
    double oper_total = 0.0;      // G(x), discounted, expected

    double total_cost() const { return invest_total + oper_total; }
};

struct EmissionReport {
    int years = 0;
    std::vector<double> emb_generation, emb_dc, emb_tl, emb_tc;  // short tons
    std::vector<double> oper;                                    // expected
    std::vector<double> cumulative;                              // running total

    double year_total(int y) const {
        return emb_generation[y] + emb_dc[y] + emb_tl[y] + emb_tc[y] + oper[y];
    }
    double total() const {
        double s = 0;
        for (int y = 0; y < years; ++y) s += year_total(y);
        return s;
    }
};

struct Kpis {
    double renewable_capacity_mw = 0.0;   // final year, PV + WT
    double renewable_capacity_share = 0;  // of generation capacity, final year
    double storage_mwh = 0.0;             // final year
    double curtailment_frac = 0.0;        // spilled / available renewable energy
    double peak_dc_power_mw = 0.0;        // served, max over all blocks
    double racks_installed = 0.0;         // final year
};

struct ConservationAudit {
    double power_balance_mw = 0.0;       // max residual
    double workload_balance_req_h = 0.0;
    double soc_wrap_mwh = 0.0;           // cyclic storage rows
    double thermal_wrap_mw = 0.0;        // cyclic ramp rows (violation beyond limit)
};

struct Evaluation {
    CostReport cost;
    EmissionReport emissions;
    Kpis kpis;
    ConservationAudit audit;
    double objective = 0.0;  // TC + sum_y hbar_y * TE_y (per emissions mode)
};

// ---------------------------------------------------------------------------

namespace detail {

// capacity trajectories rebuilt from the integer plan by plain recursion
struct Trajectories {
    int years, nodes, servers, corridors, pairs;
    std::vector<double> ic;      // [y][i][kind]
    std::vector<double> in;      // [y][i][m]
    std::vector<double> ictl;    // [y][l]
    std::vector<double> ybar;    // [y][p]

    double& at_ic(int y, int i, int k) { return ic[((y - 1) * nodes + i) * 5 + k]; }
    double& at_in(int y, int i, int m) { return in[((y - 1) * nodes + i) * servers + m]; }
};

inline Trajectories build_trajectories(const CompactModel& m, const PlanDecision& plan) {
    const PlanningCase& pc = *m.pc;
    Trajectories tr;
    tr.years = plan.years;
    tr.nodes = plan.nodes;
    tr.servers = std::max(plan.servers, 1);
    tr.corridors = std::max(plan.corridors, 1);
    tr.pairs = std::max(plan.pairs, 1);
    tr.ic.assign(static_cast<size_t>(tr.years) * tr.nodes * 5, 0.0);
    tr.in.assign(static_cast<size_t>(tr.years) * tr.nodes * tr.servers, 0.0);
    tr.ictl.assign(static_cast<size_t>(tr.years) * tr.corridors, 0.0);
    tr.ybar.assign(static_cast<size_t>(tr.years) * tr.pairs, 0.0);

    for (int y = 1; y <= tr.years; ++y) {
        for (int i = 0; i < tr.nodes; ++i) {
            for (ResourceKind k : kAllKinds) {
                int ki = static_cast<int>(k);
                double prev = y == 1 ? pc.nodes[static_cast<size_t>(i)]
                                           .initial_capacity[static_cast<size_t>(ki)]
                                     : tr.at_ic(y - 1, i, ki);
                double delta = 0;
                if (k == ResourceKind::CG)
                    delta = -static_cast<double>(plan.n_cg(y, i)) * pc.spec(k).unit_size;
                else
                    delta = static_cast<double>(plan.n_built(y, i, k)) * pc.spec(k).unit_size;
                tr.at_ic(y, i, ki) = prev + delta;
            }
            for (int mm = 0; mm < plan.servers; ++mm) {
                double prev = y == 1 ? pc.initial_racks(i, mm) : tr.at_in(y - 1, i, mm);
                tr.at_in(y, i, mm) = prev +
                                     static_cast<double>(plan.n_racks_built(y, i, mm)) -
                                     static_cast<double>(plan.n_racks_retired(y, i, mm));
            }
        }
        for (int l = 0; l < plan.corridors; ++l) {
            const Corridor& cor = m.ptdf.corridors[static_cast<size_t>(l)];
            double prev = y == 1 ? cor.initial_capacity_mw : tr.ictl[(y - 2) * tr.corridors + l];
            tr.ictl[(y - 1) * tr.corridors + l] =
                prev + static_cast<double>(plan.n_line(y, l)) *
                           (cor.unit_mw > 0 ? cor.unit_mw : 1.0);
        }
        for (int p = 0; p < plan.pairs; ++p) {
            double prev = y == 1 ? 0.0 : tr.ybar[(y - 2) * tr.pairs + p];
            tr.ybar[(y - 1) * tr.pairs + p] =
                prev + static_cast<double>(plan.n_link(y, p)) * pc.econ.tc_unit_req_h;
        }
    }
    return tr;
}

}  // namespace detail

// xs: one dispatch vector per model block, ordered like model.blocks.
inline Evaluation evaluate(const CompactModel& m, const PlanDecision& plan,
                           const std::vector<std::vector<double>>& xs) {
    const PlanningCase& pc = *m.pc;
    const int Y = m.years(), D = m.days(), T = m.steps(), NI = m.nodes(), NM = m.servers();
    const int S = m.scenarios.size();
    const double dt = pc.horizon.dt_hours();
    const double wd = pc.horizon.weight();
    if (xs.size() != m.blocks.size())
        throw std::invalid_argument("evaluate: dispatch count does not match the model");
    for (const auto& x : xs)
        if (static_cast<int>(x.size()) != m.x.count)
            throw std::invalid_argument("evaluate: dispatch vector has the wrong layout");

    detail::Trajectories tr = detail::build_trajectories(m, plan);

    Evaluation ev;
    CostReport& c = ev.cost;
    EmissionReport& e = ev.emissions;
    c.years = e.years = Y;
    auto zeros = [&]() { return std::vector<double>(static_cast<size_t>(Y), 0.0); };
    c.c_gr = zeros();
    c.c_dc = zeros();
    c.c_tl = zeros();
    c.c_tc = zeros();
    c.c_rt = zeros();
    c.c_gen = zeros();
    c.c_om = zeros();
    c.c_ex = zeros();
    c.c_curt = zeros();
    c.served_energy_mwh = zeros();
    c.lcoe = zeros();
    e.emb_generation = zeros();
    e.emb_dc = zeros();
    e.emb_tl = zeros();
    e.emb_tc = zeros();
    e.oper = zeros();
    e.cumulative = zeros();

    // ---- investment-side categories
    long double rv = 0;
    for (int y = 1; y <= Y; ++y) {
        int yi = y - 1;
        double gamma = pc.tech_cost_mult(y);
        double lambda = pc.tech_co2_mult(y);
        for (int i = 0; i < NI; ++i) {
            for (ResourceKind k : kBuildableKinds) {
                const ResourceSpec& r = pc.spec(k);
                double n = static_cast<double>(plan.n_built(y, i, k));
                c.c_gr[yi] += n * r.unit_capex();
                e.emb_generation[yi] += n * r.embodied_co2 * r.unit_size;
                rv += n * residual_fraction_for(r.lifetime, r.scrap_fraction, Y, y) *
                      r.unit_capex();
            }
            {
                const ResourceSpec& r = pc.spec(ResourceKind::CG);
                double mw = static_cast<double>(plan.n_cg(y, i)) * r.unit_size;
                c.c_rt[yi] += pc.cg_retire_residual(y) * r.capex * mw;
            }
            double delta_racks = 0;
            for (int mm = 0; mm < NM; ++mm) {
                const ServerSpec& sv = pc.servers[static_cast<size_t>(mm)];
                double bn = static_cast<double>(plan.n_racks_built(y, i, mm));
                double rn = static_cast<double>(plan.n_racks_retired(y, i, mm));
                c.c_dc[yi] += gamma * sv.capex * bn;
                c.c_rt[yi] += sv.scrap_fraction * gamma * sv.capex * rn;
                e.emb_dc[yi] += lambda * sv.embodied_co2 * bn;
                delta_racks += bn - rn;
            }
            c.c_dc[yi] += pc.econ.fix_capex * delta_racks;
            e.emb_dc[yi] += pc.econ.fix_embodied * delta_racks;
            rv += residual_fraction_for(pc.econ.fix_lifetime, pc.econ.fix_scrap, Y, y) *
                  pc.econ.fix_capex * delta_racks;
        }
        for (int l = 0; l < m.ptdf.n_corridors(); ++l) {
            const Corridor& cor = m.ptdf.corridors[static_cast<size_t>(l)];
            double mw = static_cast<double>(plan.n_line(y, l)) *
                        (cor.unit_mw > 0 ? cor.unit_mw : 1.0);
            c.c_tl[yi] += cor.length_km * pc.econ.tl_capex * mw;
            e.emb_tl[yi] += pc.econ.tl_embodied * cor.length_km * mw;
            rv += residual_fraction_for(pc.econ.tl_lifetime, pc.econ.tl_scrap, Y, y) *
                  cor.length_km * pc.econ.tl_capex * mw;
        }
        for (int p = 0; p < m.n_pairs(); ++p) {
            double n = static_cast<double>(plan.n_link(y, p));
            double km = m.pairs[static_cast<size_t>(p)].distance_km;
            c.c_tc[yi] += km * pc.econ.tc_capex * n;
            e.emb_tc[yi] += pc.econ.tc_embodied * km * n;
            rv += residual_fraction_for(pc.econ.tc_lifetime, pc.econ.tc_scrap, Y, y) * km *
                  pc.econ.tc_capex * n;
        }
    }
    c.residual_value = static_cast<double>(rv);

    // ---- operating-side categories (probability-weighted)
    for (size_t bi = 0; bi < m.blocks.size(); ++bi) {
        const Block& b = m.blocks[bi];
        const std::vector<double>& x = xs[bi];
        const Scenario& sc = m.scenarios.scenarios[static_cast<size_t>(b.scen)];
        int yi = b.year - 1;
        double w = b.prob * wd * dt;
        for (int t = 0; t < T; ++t) {
            int hour = pc.horizon.clock_hour(t);
            for (int i = 0; i < NI; ++i) {
                double png = x[m.x.gen(t, i, ResourceKind::NG)];
                double pcg = x[m.x.gen(t, i, ResourceKind::CG)];
                double ppv = x[m.x.gen(t, i, ResourceKind::PV)];
                double pwt = x[m.x.gen(t, i, ResourceKind::WT)];
                c.c_gen[yi] += w * (pc.spec(ResourceKind::NG).gen_cost * png +
                                    pc.spec(ResourceKind::CG).gen_cost * pcg);
                c.c_om[yi] += w * (pc.spec(ResourceKind::NG).om_cost * png +
                                   pc.spec(ResourceKind::CG).om_cost * pcg +
                                   pc.spec(ResourceKind::PV).om_cost * ppv +
                                   pc.spec(ResourceKind::WT).om_cost * pwt +
                                   pc.spec(ResourceKind::ES).om_cost *
                                       (x[m.x.charge(t, i)] + x[m.x.discharge(t, i)]));
                c.c_ex[yi] += w * (pc.econ.buy_price(hour) * x[m.x.buy(t, i)] -
                                   pc.econ.sell_price(hour) * x[m.x.sell(t, i)]);
                double avail_wt =
                    sc.wind_shape[static_cast<size_t>(b.day)][static_cast<size_t>(t)] *
                    tr.at_ic(b.year, i, static_cast<int>(ResourceKind::WT));
                double avail_pv =
                    sc.solar_shape[static_cast<size_t>(b.day)][static_cast<size_t>(t)] *
                    tr.at_ic(b.year, i, static_cast<int>(ResourceKind::PV));
                c.c_curt[yi] += w * (pc.econ.curtail_cost_wt * (avail_wt - pwt) +
                                     pc.econ.curtail_cost_pv * (avail_pv - ppv));
                e.oper[yi] += w * (pc.spec(ResourceKind::NG).op_co2 * png +
                                   pc.spec(ResourceKind::CG).op_co2 * pcg);
                double p_dc = 0;
                for (int mm = 0; mm < NM; ++mm) {
                    const ServerSpec& sv = pc.servers[static_cast<size_t>(mm)];
                    p_dc += sv.pue * sv.rack_power_mw *
                            pc.nodes[static_cast<size_t>(i)].cooling(b.day, t) *
                            x[m.x.active_racks(t, i, mm)];
                }
                ev.kpis.peak_dc_power_mw = std::max(ev.kpis.peak_dc_power_mw, p_dc);
                c.served_energy_mwh[yi] +=
                    w * (realize(pc, sc, b.year, b.day, t, i).load_mw + p_dc);
            }
        }
    }

    // ---- totals, discounting, the weighted objective
    long double f = 0, g = 0, weighted_te = 0;
    for (int y = 1; y <= Y; ++y) {
        int yi = y - 1;
        double Dy = pc.discount(y);
        f += Dy * (c.c_gr[yi] + c.c_dc[yi] + c.c_tl[yi] + c.c_tc[yi] - c.c_rt[yi]);
        g += Dy * (c.c_gen[yi] + c.c_om[yi] + c.c_ex[yi] + c.c_curt[yi]);
        double opm = c.c_gen[yi] + c.c_om[yi] + c.c_ex[yi] + c.c_curt[yi];
        c.lcoe[yi] = c.served_energy_mwh[yi] > 0 ? opm / c.served_energy_mwh[yi] : 0.0;
        double hbar = pc.carbon_price(y, m.opts.carbon_scale);
        double te_y = e.oper[yi];
        if (m.opts.emissions == EmissionsMode::OpAndEmbodied)
            te_y += e.emb_generation[yi] + e.emb_dc[yi] + e.emb_tl[yi] + e.emb_tc[yi];
        weighted_te += hbar * te_y;
        e.cumulative[yi] = (yi > 0 ? e.cumulative[yi - 1] : 0.0) + e.year_total(yi);
    }
    f -= pc.discount(Y) * rv;
    c.invest_total = static_cast<double>(f);
    c.oper_total = static_cast<double>(g);
    ev.objective = static_cast<double>(f + g + weighted_te);

    // ---- KPIs
    {
        double res = 0, gen_total = 0;
        for (int i = 0; i < NI; ++i) {
            res += tr.at_ic(Y, i, static_cast<int>(ResourceKind::PV)) +
                   tr.at_ic(Y, i, static_cast<int>(ResourceKind::WT));
            for (ResourceKind k : {ResourceKind::NG, ResourceKind::CG, ResourceKind::PV,
                                   ResourceKind::WT})
                gen_total += tr.at_ic(Y, i, static_cast<int>(k));
            ev.kpis.storage_mwh += tr.at_ic(Y, i, static_cast<int>(ResourceKind::ES));
            for (int mm = 0; mm < NM; ++mm) ev.kpis.racks_installed += tr.at_in(Y, i, mm);
        }
        ev.kpis.renewable_capacity_mw = res;
        ev.kpis.renewable_capacity_share = gen_total > 0 ? res / gen_total : 0.0;
        long double avail = 0, spilled = 0;
        for (size_t bi = 0; bi < m.blocks.size(); ++bi) {
            const Block& b = m.blocks[bi];
            const Scenario& sc = m.scenarios.scenarios[static_cast<size_t>(b.scen)];
            for (int t = 0; t < T; ++t)
                for (int i = 0; i < NI; ++i) {
                    double a =
                        sc.wind_shape[static_cast<size_t>(b.day)][static_cast<size_t>(t)] *
                            tr.at_ic(b.year, i, static_cast<int>(ResourceKind::WT)) +
                        sc.solar_shape[static_cast<size_t>(b.day)][static_cast<size_t>(t)] *
                            tr.at_ic(b.year, i, static_cast<int>(ResourceKind::PV));
                    double used = xs[bi][m.x.gen(t, i, ResourceKind::WT)] +
                                  xs[bi][m.x.gen(t, i, ResourceKind::PV)];
                    avail += b.prob * a;
                    spilled += b.prob * (a - used);
                }
        }
        ev.kpis.curtailment_frac =
            avail > 0 ? static_cast<double>(spilled / avail) : 0.0;
    }

    // ---- conservation audits
    for (size_t bi = 0; bi < m.blocks.size(); ++bi) {
        const Block& b = m.blocks[bi];
        const std::vector<double>& x = xs[bi];
        const Scenario& sc = m.scenarios.scenarios[static_cast<size_t>(b.scen)];
        for (int t = 0; t < T; ++t) {
            int tm = t == 0 ? T - 1 : t - 1;
            double bal = 0, wl_res = 0;
            for (int i = 0; i < NI; ++i) {
                double gen = x[m.x.gen(t, i, ResourceKind::NG)] +
                             x[m.x.gen(t, i, ResourceKind::CG)] +
                             x[m.x.gen(t, i, ResourceKind::PV)] +
                             x[m.x.gen(t, i, ResourceKind::WT)] +
                             x[m.x.discharge(t, i)] - x[m.x.charge(t, i)] +
                             x[m.x.buy(t, i)] - x[m.x.sell(t, i)];
                double p_dc = 0;
                for (int mm = 0; mm < NM; ++mm) {
                    const ServerSpec& sv = pc.servers[static_cast<size_t>(mm)];
                    p_dc += sv.pue * sv.rack_power_mw *
                            pc.nodes[static_cast<size_t>(i)].cooling(b.day, t) *
                            x[m.x.active_racks(t, i, mm)];
                }
                bal += gen - p_dc - realize(pc, sc, b.year, b.day, t, i).load_mw;
                double wl = x[m.x.dc_served(t, i)];
                for (int p = 0; p < m.n_pairs(); ++p) {
                    if (m.pairs[static_cast<size_t>(p)].first == i)
                        wl -= x[m.x.transfer(t, p)];
                    else if (m.pairs[static_cast<size_t>(p)].second == i)
                        wl += x[m.x.transfer(t, p)];
                }
                wl_res = std::max(
                    wl_res, std::abs(wl - realize(pc, sc, b.year, b.day, t, i).workload_req_h));
                if (t == 0) {
                    const ResourceSpec& es = pc.spec(ResourceKind::ES);
                    double wrap = x[m.x.soc(0, i)] - x[m.x.soc(T - 1, i)] -
                                  dt * (es.eff_charge * x[m.x.charge(0, i)] -
                                        x[m.x.discharge(0, i)] / es.eff_discharge);
                    ev.audit.soc_wrap_mwh = std::max(ev.audit.soc_wrap_mwh, std::abs(wrap));
                    for (ResourceKind k : {ResourceKind::NG, ResourceKind::CG}) {
                        const ResourceSpec& r = pc.spec(k);
                        double step = x[m.x.gen(0, i, k)] - x[m.x.gen(tm, i, k)];
                        double limit_up =
                            r.ramp_up * dt * tr.at_ic(b.year, i, static_cast<int>(k));
                        double limit_dn =
                            r.ramp_down * dt * tr.at_ic(b.year, i, static_cast<int>(k));
                        double viol = std::max(step - limit_up, -step - limit_dn);
                        ev.audit.thermal_wrap_mw = std::max(ev.audit.thermal_wrap_mw,
                                                            std::max(0.0, viol));
                    }
                }
            }
            ev.audit.power_balance_mw = std::max(ev.audit.power_balance_mw, std::abs(bal));
            ev.audit.workload_balance_req_h = std::max(ev.audit.workload_balance_req_h, wl_res);
        }
    }
    return ev;
}

// ---------------------------------------------------------------------------
// Report files

namespace detail {

inline std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

}  // namespace detail

inline std::string costs_tsv(const CostReport& c) {
    std::string s =
        "year\tc_gr_usd\tc_dc_usd\tc_tl_usd\tc_tc_usd\tc_rt_usd\tc_gen_usd\tc_om_usd\t"
        "c_ex_usd\tc_curt_usd\tserved_mwh\tlcoe_usd_per_mwh\n";
    for (int y = 0; y < c.years; ++y) {
        s += std::to_string(y + 1);
        for (double v : {c.c_gr[y], c.c_dc[y], c.c_tl[y], c.c_tc[y], c.c_rt[y], c.c_gen[y],
                         c.c_om[y], c.c_ex[y], c.c_curt[y], c.served_energy_mwh[y], c.lcoe[y]})
            s += "\t" + detail::fmt(v);
        s += "\n";
    }
    s += "# residual_value_usd\t" + detail::fmt(c.residual_value) + "\n";
    s += "# invest_total_usd\t" + detail::fmt(c.invest_total) + "\n";
    s += "# oper_total_usd\t" + detail::fmt(c.oper_total) + "\n";
    return s;
}

inline std::string emissions_tsv(const EmissionReport& e) {
    std::string s =
        "year\temb_generation_ton\temb_dc_ton\temb_tl_ton\temb_tc_ton\toper_ton\t"
        "year_total_ton\tcumulative_ton\n";
    for (int y = 0; y < e.years; ++y) {
        s += std::to_string(y + 1);
        for (double v : {e.emb_generation[y], e.emb_dc[y], e.emb_tl[y], e.emb_tc[y], e.oper[y],
                         e.year_total(y), e.cumulative[y]})
            s += "\t" + detail::fmt(v);
        s += "\n";
    }
    return s;
}

inline std::string kpis_tsv(const Kpis& k, const Evaluation& ev) {
    std::string s = "key\tvalue\n";
    auto row = [&](const char* key, double v) {
        s += std::string(key) + "\t" + detail::fmt(v) + "\n";
    };
    row("objective_usd", ev.objective);
    row("invest_total_usd", ev.cost.invest_total);
    row("oper_total_usd", ev.cost.oper_total);
    row("total_emissions_ton", ev.emissions.total());
    row("renewable_capacity_mw", k.renewable_capacity_mw);
    row("renewable_capacity_share", k.renewable_capacity_share);
    row("storage_mwh", k.storage_mwh);
    row("curtailment_frac", k.curtailment_frac);
    row("peak_dc_power_mw", k.peak_dc_power_mw);
    row("racks_installed", k.racks_installed);
    return s;
}

}  // namespace coplan
