#pragma once

// DC power-transfer distribution factors. Parallel lines between the same
// node pair are merged into a single corridor (susceptances add, ratings and
// expansion options add); flows and limits downstream are per corridor.

#include <algorithm>
#include <map>
#include <queue>

#include "coplan/case_model.hpp"
#include "coplan/dense.hpp"

namespace coplan {

// One corridor per unordered node pair with at least one line.
struct Corridor {
    int from = 0, to = 0;          // from < to
    double susceptance = 0.0;      // sum of 1/x over member lines
    double length_km = 0.0;        // susceptance-weighted mean
    double initial_capacity_mw = 0.0;
    double unit_mw = 0.0;
    bool expandable = false;
    int max_units = 0;
    std::vector<int> line_ids;
};

inline std::vector<Corridor> build_corridors(const PlanningCase& pc) {
    std::map<std::pair<int, int>, Corridor> by_pair;
    for (const auto& l : pc.lines) {
        auto key = std::minmax(l.from, l.to);
        Corridor& c = by_pair[key];
        if (c.line_ids.empty()) {
            c.from = key.first;
            c.to = key.second;
        }
        double b = 1.0 / l.reactance_pu;
        c.length_km = (c.length_km * c.susceptance + l.length_km * b) / (c.susceptance + b);
        c.susceptance += b;
        c.initial_capacity_mw += l.initial_capacity_mw;
        c.unit_mw += l.unit_mw;
        c.expandable = c.expandable || l.expandable;
        c.max_units += l.max_units;
        c.line_ids.push_back(l.id);
    }
    std::vector<Corridor> out;
    out.reserve(by_pair.size());
    for (auto& [k, c] : by_pair) out.push_back(std::move(c));
    return out;
}

struct PtdfMatrix {
    int n_nodes = 0;
    int ref_node = 0;
    std::vector<Corridor> corridors;
    // gamma[l * n_nodes + i]: sensitivity of corridor-l flow (from->to) to
    // injection at node i withdrawn at the reference node.
    std::vector<double> gamma;

    double at(int corridor, int node) const {
        return gamma[static_cast<size_t>(corridor) * n_nodes + node];
    }
    int n_corridors() const { return static_cast<int>(corridors.size()); }
};

struct NetworkError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline PtdfMatrix compute_ptdf(const PlanningCase& pc, int ref_node = 0) {
    const int n = pc.n_nodes();
    PtdfMatrix out;
    out.n_nodes = n;
    out.ref_node = ref_node;
    out.corridors = build_corridors(pc);
    const int m = out.n_corridors();
    out.gamma.assign(static_cast<size_t>(m) * n, 0.0);
    if (n == 1 || m == 0) {
        if (n > 1) {
            // no lines but several nodes: disconnected by construction
            throw NetworkError("network is disconnected: no transmission corridors");
        }
        return out;
    }

    // connectivity check; report the stranded component
    {
        std::vector<int> comp(static_cast<size_t>(n), -1);
        std::vector<std::vector<int>> adj(static_cast<size_t>(n));
        for (const auto& c : out.corridors) {
            adj[static_cast<size_t>(c.from)].push_back(c.to);
            adj[static_cast<size_t>(c.to)].push_back(c.from);
        }
        std::queue<int> q;
        q.push(ref_node);
        comp[static_cast<size_t>(ref_node)] = 0;
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (int v : adj[static_cast<size_t>(u)])
                if (comp[static_cast<size_t>(v)] < 0) {
                    comp[static_cast<size_t>(v)] = 0;
                    q.push(v);
                }
        }
        std::string stranded;
        for (int i = 0; i < n; ++i)
            if (comp[static_cast<size_t>(i)] < 0)
                stranded += (stranded.empty() ? "" : ", ") + pc.nodes[static_cast<size_t>(i)].name;
        if (!stranded.empty())
            throw NetworkError("network is disconnected; unreachable nodes: " + stranded);
    }

    // reduced nodal susceptance matrix (reference row/column removed)
    auto red = [&](int i) { return i < ref_node ? i : i - 1; };
    DenseMatrix bbus(n - 1, n - 1);
    for (const auto& c : out.corridors) {
        int i = c.from, j = c.to;
        if (i != ref_node) bbus.at(red(i), red(i)) += c.susceptance;
        if (j != ref_node) bbus.at(red(j), red(j)) += c.susceptance;
        if (i != ref_node && j != ref_node) {
            bbus.at(red(i), red(j)) -= c.susceptance;
            bbus.at(red(j), red(i)) -= c.susceptance;
        }
    }
    DenseLu lu;
    if (!lu.factor(std::move(bbus)))
        throw NetworkError("reduced susceptance matrix is singular");

    // column i of gamma: flows for unit injection at i, withdrawal at ref
    for (int i = 0; i < n; ++i) {
        if (i == ref_node) continue;  // gamma[:, ref] stays 0
        std::vector<double> e(static_cast<size_t>(n - 1), 0.0);
        e[static_cast<size_t>(red(i))] = 1.0;
        std::vector<double> theta = lu.solve(e);
        auto angle = [&](int node) {
            return node == ref_node ? 0.0 : theta[static_cast<size_t>(red(node))];
        };
        for (int l = 0; l < m; ++l) {
            const Corridor& c = out.corridors[static_cast<size_t>(l)];
            out.gamma[static_cast<size_t>(l) * n + i] =
                c.susceptance * (angle(c.from) - angle(c.to));
        }
    }
    return out;
}

// Reference DC power flow for a balanced injection vector, solved directly
// from the susceptance matrix. Used to cross-check PTDF products.
inline std::vector<double> dc_flow_direct(const PtdfMatrix& p,
                                          const std::vector<double>& injection) {
    const int n = p.n_nodes;
    int ref = p.ref_node;
    auto red = [&](int i) { return i < ref ? i : i - 1; };
    DenseMatrix bbus(n - 1, n - 1);
    for (const auto& c : p.corridors) {
        int i = c.from, j = c.to;
        if (i != ref) bbus.at(red(i), red(i)) += c.susceptance;
        if (j != ref) bbus.at(red(j), red(j)) += c.susceptance;
        if (i != ref && j != ref) {
            bbus.at(red(i), red(j)) -= c.susceptance;
            bbus.at(red(j), red(i)) -= c.susceptance;
        }
    }
    DenseLu lu;
    if (!lu.factor(std::move(bbus))) throw NetworkError("singular susceptance matrix");
    std::vector<double> rhs(static_cast<size_t>(n - 1));
    for (int i = 0; i < n; ++i)
        if (i != ref) rhs[static_cast<size_t>(red(i))] = injection[static_cast<size_t>(i)];
    std::vector<double> theta = lu.solve(rhs);
    auto angle = [&](int node) {
        return node == ref ? 0.0 : theta[static_cast<size_t>(red(node))];
    };
    std::vector<double> flow(p.corridors.size());
    for (size_t l = 0; l < p.corridors.size(); ++l)
        flow[l] = p.corridors[l].susceptance *
                  (angle(p.corridors[l].from) - angle(p.corridors[l].to));
    return flow;
}

}  // namespace coplan
