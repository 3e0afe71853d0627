#pragma once

// Scenario data: one realization of every uncertain factor over the whole
// horizon, plus scenario-set reduction and serialization. Probabilities are
// kept as exact cluster-count fractions so a set always sums to one.

#include <fstream>

#include "coplan/case_model.hpp"
#include "coplan/kmeans.hpp"
#include "json.hpp"

namespace coplan {

struct Scenario {
    int id = 0;
    long prob_num = 1, prob_den = 1;  // probability as an exact fraction
    std::vector<double> load_growth;  // per year, lambda_load
    std::vector<double> data_growth;  // per year, lambda_data
    // shape factors, [day][step]
    std::vector<std::vector<double>> load_shape;
    std::vector<std::vector<double>> data_shape;
    std::vector<std::vector<double>> wind_shape;
    std::vector<std::vector<double>> solar_shape;

    double probability() const {
        return static_cast<double>(prob_num) / static_cast<double>(prob_den);
    }

    // Flat feature vector for clustering: all shapes plus both growth paths.
    std::vector<double> feature_vector() const {
        std::vector<double> f;
        auto app = [&](const std::vector<std::vector<double>>& m) {
            for (const auto& row : m) f.insert(f.end(), row.begin(), row.end());
        };
        app(load_shape);
        app(data_shape);
        app(wind_shape);
        app(solar_shape);
        f.insert(f.end(), load_growth.begin(), load_growth.end());
        f.insert(f.end(), data_growth.begin(), data_growth.end());
        return f;
    }
};

struct ScenarioSet {
    std::vector<Scenario> scenarios;
    uint64_t seed = 0;
    std::string provenance;  // sampling config snapshot

    int size() const { return static_cast<int>(scenarios.size()); }

    // Index of the scenario with the largest realized system load factor.
    int peak_load_scenario() const {
        int best = 0;
        double best_v = -1;
        for (int s = 0; s < size(); ++s) {
            const Scenario& sc = scenarios[static_cast<size_t>(s)];
            double g = 0;
            for (double v : sc.load_growth) g = std::max(g, v);
            double d = 0;
            for (const auto& row : sc.load_shape)
                for (double v : row) d = std::max(d, v);
            if (g * d > best_v) {
                best_v = g * d;
                best = s;
            }
        }
        return best;
    }
};

// Realized operating point for (scenario, year, day, step, node).
struct Realization {
    double load_mw = 0.0;
    double workload_req_h = 0.0;
    double wind_cap_factor = 0.0;
    double solar_cap_factor = 0.0;
};

inline Realization realize(const PlanningCase& pc, const Scenario& sc, int year,
                           int day, int step, int node) {
    const Node& n = pc.nodes[static_cast<size_t>(node)];
    Realization r;
    r.load_mw = n.load_share * sc.load_growth[static_cast<size_t>(year - 1)] *
                sc.load_shape[static_cast<size_t>(day)][static_cast<size_t>(step)] *
                pc.peak_load_mw;
    r.workload_req_h = n.data_share * sc.data_growth[static_cast<size_t>(year - 1)] *
                       sc.data_shape[static_cast<size_t>(day)][static_cast<size_t>(step)] *
                       pc.peak_workload_req_h;
    r.wind_cap_factor = sc.wind_shape[static_cast<size_t>(day)][static_cast<size_t>(step)];
    r.solar_cap_factor = sc.solar_shape[static_cast<size_t>(day)][static_cast<size_t>(step)];
    return r;
}

// ---------------------------------------------------------------------------
// Reduction

// Clusters the draws and returns one scenario per non-empty cluster, with
// probability = cluster size / draw count kept as an exact fraction.
inline ScenarioSet reduce_kmeans(const std::vector<Scenario>& draws, int k,
                                 uint64_t seed) {
    if (draws.empty()) throw std::invalid_argument("reduce_kmeans: no draws");
    if (k <= 0) throw std::invalid_argument("reduce_kmeans: k must be positive");
    const int n = static_cast<int>(draws.size());
    k = std::min(k, n);

    std::vector<std::vector<double>> feats;
    feats.reserve(draws.size());
    for (const auto& d : draws) feats.push_back(d.feature_vector());
    KmeansResult km = kmeans(feats, k, seed);

    const int years = static_cast<int>(draws[0].load_growth.size());
    const int days = static_cast<int>(draws[0].load_shape.size());
    const int steps = static_cast<int>(draws[0].load_shape[0].size());

    ScenarioSet out;
    out.seed = seed;
    int sid = 0;
    for (int c = 0; c < k; ++c) {
        if (km.counts[static_cast<size_t>(c)] == 0) continue;
        const std::vector<double>& f = km.centroids[static_cast<size_t>(c)];
        Scenario sc;
        sc.id = sid++;
        sc.prob_num = km.counts[static_cast<size_t>(c)];
        sc.prob_den = n;
        size_t p = 0;
        auto take = [&](int rows, int cols) {
            std::vector<std::vector<double>> m(static_cast<size_t>(rows),
                                               std::vector<double>(static_cast<size_t>(cols)));
            for (auto& row : m)
                for (auto& v : row) v = f[p++];
            return m;
        };
        sc.load_shape = take(days, steps);
        sc.data_shape = take(days, steps);
        sc.wind_shape = take(days, steps);
        sc.solar_shape = take(days, steps);
        sc.load_growth.assign(f.begin() + static_cast<long>(p),
                              f.begin() + static_cast<long>(p) + years);
        p += static_cast<size_t>(years);
        sc.data_growth.assign(f.begin() + static_cast<long>(p),
                              f.begin() + static_cast<long>(p) + years);
        out.scenarios.push_back(std::move(sc));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json scenario_set_json(const ScenarioSet& ss) {
    nlohmann::json doc;
    doc["seed"] = ss.seed;
    doc["provenance"] = ss.provenance;
    doc["scenarios"] = nlohmann::json::array();
    for (const auto& s : ss.scenarios)
        doc["scenarios"].push_back({{"id", s.id},
                                    {"prob_num", s.prob_num},
                                    {"prob_den", s.prob_den},
                                    {"load_growth", s.load_growth},
                                    {"data_growth", s.data_growth},
                                    {"load_shape", s.load_shape},
                                    {"data_shape", s.data_shape},
                                    {"wind_shape", s.wind_shape},
                                    {"solar_shape", s.solar_shape}});
    return doc;
}

inline std::string save_scenarios(const ScenarioSet& ss) {
    return scenario_set_json(ss).dump(2) + "\n";
}

inline ScenarioSet load_scenarios_json(const nlohmann::json& doc) {
    ScenarioSet ss;
    ss.seed = doc.value("seed", 0ULL);
    ss.provenance = doc.value("provenance", "");
    for (const auto& js : doc.at("scenarios")) {
        Scenario s;
        s.id = js.at("id").get<int>();
        s.prob_num = js.at("prob_num").get<long>();
        s.prob_den = js.at("prob_den").get<long>();
        s.load_growth = js.at("load_growth").get<std::vector<double>>();
        s.data_growth = js.at("data_growth").get<std::vector<double>>();
        s.load_shape = js.at("load_shape").get<std::vector<std::vector<double>>>();
        s.data_shape = js.at("data_shape").get<std::vector<std::vector<double>>>();
        s.wind_shape = js.at("wind_shape").get<std::vector<std::vector<double>>>();
        s.solar_shape = js.at("solar_shape").get<std::vector<std::vector<double>>>();
        ss.scenarios.push_back(std::move(s));
    }
    if (ss.scenarios.empty()) throw ParseError("scenario set is empty");
    long num = 0;
    long den = ss.scenarios[0].prob_den;
    for (const auto& s : ss.scenarios) {
        if (s.prob_den != den) throw ParseError("scenario probabilities have mixed denominators");
        num += s.prob_num;
    }
    if (num != den) throw ParseError("scenario probabilities do not sum to one");
    return ss;
}

inline ScenarioSet load_scenarios(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open scenario file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("scenario file " + path + " is not valid JSON: " + e.what());
    }
    return load_scenarios_json(doc);
}

// Dimension compatibility with a case; throws on mismatch.
inline void check_scenarios_fit(const ScenarioSet& ss, const PlanningCase& pc) {
    for (const auto& s : ss.scenarios) {
        bool ok = static_cast<int>(s.load_growth.size()) == pc.horizon.years &&
                  static_cast<int>(s.data_growth.size()) == pc.horizon.years &&
                  static_cast<int>(s.load_shape.size()) == pc.horizon.days_per_year &&
                  static_cast<int>(s.load_shape[0].size()) == pc.horizon.hours_per_day;
        if (!ok)
            throw ValidationError({"scenario " + std::to_string(s.id) +
                                   " does not match the case horizon dimensions"});
    }
}

}  // namespace coplan
