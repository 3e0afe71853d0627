#pragma once

// Hierarchical uncertainty sampling: distribution-driven marginals (Weibull
// wind speed, normal demand variation, attenuated clear-sky solar, annual
// growth paths), Latin Hypercube stratification, Iman-Conover rank
// correlation control, then k-means reduction to a weighted scenario set.
//
// All random variates go through explicit inverse-CDF transforms of mt19937_64
// uniforms, so a fixed seed reproduces byte-identical scenario sets on any
// platform.

#include <numeric>
#include <random>

#include "coplan/dense.hpp"
#include "coplan/scenario.hpp"
#include "json.hpp"

namespace coplan {

// ---------------------------------------------------------------------------
// Quantile functions

// Acklam's rational approximation of the standard normal quantile
// (|relative error| < 1.15e-9 over (0,1)).
inline double normal_quantile(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1 - plow;
    if (p <= 0) return -std::numeric_limits<double>::infinity();
    if (p >= 1) return std::numeric_limits<double>::infinity();
    if (p < plow) {
        double q = std::sqrt(-2 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    if (p > phigh) {
        double q = std::sqrt(-2 * std::log(1 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    double q = p - 0.5, r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

inline double weibull_quantile(double p, double shape, double scale) {
    return scale * std::pow(-std::log1p(-p), 1.0 / shape);
}

// Piecewise wind power curve: cubic between cut-in and rated speed.
inline double wind_power_curve(double speed, double cut_in, double rated,
                               double cut_out) {
    if (speed < cut_in || speed >= cut_out) return 0.0;
    if (speed >= rated) return 1.0;
    double f = (speed * speed * speed - cut_in * cut_in * cut_in) /
               (rated * rated * rated - cut_in * cut_in * cut_in);
    return f;
}

// ---------------------------------------------------------------------------
// Sampling configuration

struct CorrelationSpec {
    std::string a, b;  // dimension names, e.g. "wind:0", "load:2", "g_load"
    double rho = 0.0;
};

struct SamplingConfig {
    int days = 1;
    int steps = 24;
    int years = 1;
    std::string preset_name = "baseline";
    // wind speed marginal per representative day plus a diurnal profile
    std::vector<double> weibull_shape;   // per day
    std::vector<double> weibull_scale;   // per day, m/s
    std::vector<std::vector<double>> wind_profile;  // [d][t]
    double cut_in_ms = 3.0, rated_ms = 12.0, cut_out_ms = 25.0;
    // solar: deterministic clear-sky shape times a sampled daily attenuation
    std::vector<std::vector<double>> solar_clear_sky;  // [d][t]
    double solar_att_mean = 0.75, solar_att_sigma = 0.15;
    // demand: hourly mean shape times a sampled daily level
    std::vector<std::vector<double>> load_mean_shape;  // [d][t]
    double load_sigma = 0.05;
    // long-term growth
    double load_growth_mean = 0.01, load_growth_sigma = 0.005;
    std::vector<double> data_growth_path;  // per year, from the chosen preset
    double data_growth_sigma = 0.10;       // multiplicative noise on the path
    // candidate daily workload patterns; one is drawn per scenario
    std::vector<std::vector<double>> workload_patterns;  // [pattern][t]
    std::vector<CorrelationSpec> correlations;

    int n_dims() const { return 3 * days + 3; }
    // dimension order: wind:0..D-1, solar:0..D-1, load:0..D-1, g_load, g_data, pattern
    std::string dim_name(int d) const {
        if (d < days) return "wind:" + std::to_string(d);
        if (d < 2 * days) return "solar:" + std::to_string(d - days);
        if (d < 3 * days) return "load:" + std::to_string(d - 2 * days);
        int r = d - 3 * days;
        return r == 0 ? "g_load" : r == 1 ? "g_data" : "pattern";
    }
    int dim_index(const std::string& name) const {
        for (int d = 0; d < n_dims(); ++d)
            if (dim_name(d) == name) return d;
        throw ParseError("unknown sampling dimension: " + name);
    }
};

// The five named annual computing-demand trajectories. Curve values are this
// project's own synthetic presets (the study instances they stand in for are
// not tabulated anywhere); treat them as editable configuration.
inline std::vector<double> data_growth_preset(const std::string& name, int years) {
    std::vector<double> v(static_cast<size_t>(years));
    auto lerp_path = [&](double start, double end, double bend) {
        for (int y = 0; y < years; ++y) {
            double u = years > 1 ? static_cast<double>(y) / (years - 1) : 0.0;
            v[static_cast<size_t>(y)] = start + (end - start) * std::pow(u, bend);
        }
    };
    if (name == "high-demand") {
        lerp_path(1.0, 8.0, 1.0);
    } else if (name == "baseline") {
        lerp_path(1.0, 5.0, 1.0);
    } else if (name == "efficiency-gain") {
        lerp_path(1.0, 3.5, 1.4);
    } else if (name == "new-model-surge") {
        // slow start, surge in the back half
        for (int y = 0; y < years; ++y) {
            double u = years > 1 ? static_cast<double>(y) / (years - 1) : 0.0;
            v[static_cast<size_t>(y)] = u < 0.5 ? 1.0 + 1.2 * u : 1.6 + 9.0 * (u - 0.5);
        }
    } else if (name == "ai-bust") {
        for (int y = 0; y < years; ++y) {
            double u = years > 1 ? static_cast<double>(y) / (years - 1) : 0.0;
            v[static_cast<size_t>(y)] = u < 0.35 ? 1.0 + 2.6 * u : 1.91 - 0.6 * (u - 0.35);
        }
    } else {
        throw ParseError("unknown data-growth preset: " + name +
                         " (expected high-demand|baseline|efficiency-gain|"
                         "new-model-surge|ai-bust)");
    }
    return v;
}

// Built-in profiles for any (days, steps) grid. Representative days sweep the
// seasons; hour shapes are smooth sinusoids. Values are synthetic defaults.
inline SamplingConfig default_sampling_config(int days, int steps, int years,
                                              const std::string& preset = "baseline") {
    SamplingConfig cfg;
    cfg.days = days;
    cfg.steps = steps;
    cfg.years = years;
    cfg.preset_name = preset;
    const double pi = 3.14159265358979323846;
    double dt = 24.0 / steps;
    for (int d = 0; d < days; ++d) {
        // season position in [0,1): 0 = winter, 0.5 = summer
        double season = days > 1 ? static_cast<double>(d) / days : 0.25;
        cfg.weibull_shape.push_back(2.0);
        cfg.weibull_scale.push_back(8.5 - 1.5 * std::sin(season * 2 * pi));  // windier winters
        std::vector<double> wp(static_cast<size_t>(steps)), cs(static_cast<size_t>(steps)),
            lm(static_cast<size_t>(steps));
        for (int t = 0; t < steps; ++t) {
            double h = (t + 0.5) * dt;  // mid-step clock hour
            wp[static_cast<size_t>(t)] = 0.85 + 0.15 * std::cos((h - 3.0) / 24.0 * 2 * pi);
            double sun = std::sin(pi * (h - 6.0) / 12.0);
            double season_scale = 0.75 + 0.25 * std::sin(season * 2 * pi);
            cs[static_cast<size_t>(t)] =
                (h > 6.0 && h < 18.0 && sun > 0) ? season_scale * std::pow(sun, 1.2) : 0.0;
            double diurnal = 0.70 + 0.24 * std::exp(-std::pow(h - 17.5, 2) / 18.0) +
                             0.10 * std::exp(-std::pow(h - 9.0, 2) / 16.0);
            double season_load = 1.0 + 0.12 * std::cos(season * 2 * pi) * 0.5;
            lm[static_cast<size_t>(t)] = std::min(1.0, diurnal * season_load);
        }
        cfg.wind_profile.push_back(wp);
        cfg.solar_clear_sky.push_back(cs);
        cfg.load_mean_shape.push_back(lm);
    }
    cfg.data_growth_path = data_growth_preset(preset, years);
    // five daily workload patterns: flat, office-hours, evening, double-peak,
    // night-batch
    for (int p = 0; p < 5; ++p) {
        std::vector<double> pat(static_cast<size_t>(steps));
        for (int t = 0; t < steps; ++t) {
            double h = (t + 0.5) * dt;
            double v = 0.8;
            switch (p) {
                case 0: v = 0.90; break;
                case 1: v = 0.55 + 0.40 * std::exp(-std::pow(h - 14.0, 2) / 24.0); break;
                case 2: v = 0.55 + 0.40 * std::exp(-std::pow(h - 20.0, 2) / 16.0); break;
                case 3:
                    v = 0.50 + 0.30 * std::exp(-std::pow(h - 10.0, 2) / 10.0) +
                        0.30 * std::exp(-std::pow(h - 19.0, 2) / 10.0);
                    break;
                case 4: v = 0.95 - 0.35 * std::exp(-std::pow(h - 15.0, 2) / 40.0); break;
            }
            pat[static_cast<size_t>(t)] = std::min(1.0, v);
        }
        cfg.workload_patterns.push_back(pat);
    }
    return cfg;
}

inline nlohmann::json sampling_config_json(const SamplingConfig& cfg) {
    nlohmann::json j;
    j["preset"] = cfg.preset_name;
    j["days"] = cfg.days;
    j["steps"] = cfg.steps;
    j["years"] = cfg.years;
    j["weibull_shape"] = cfg.weibull_shape;
    j["weibull_scale_ms"] = cfg.weibull_scale;
    j["power_curve_ms"] = {{"cut_in", cfg.cut_in_ms}, {"rated", cfg.rated_ms},
                           {"cut_out", cfg.cut_out_ms}};
    j["solar_attenuation"] = {{"mean", cfg.solar_att_mean}, {"sigma", cfg.solar_att_sigma}};
    j["load_sigma"] = cfg.load_sigma;
    j["load_growth"] = {{"mean", cfg.load_growth_mean}, {"sigma", cfg.load_growth_sigma}};
    j["data_growth_path"] = cfg.data_growth_path;
    j["data_growth_sigma"] = cfg.data_growth_sigma;
    j["note"] = "profiles and growth paths are synthetic configuration defaults";
    return j;
}

// ---------------------------------------------------------------------------
// Latin Hypercube + Iman-Conover

// n-by-k matrix of stratified uniforms: per column, exactly one sample in
// each of the n equal-probability bins.
inline std::vector<std::vector<double>> lhs_uniforms(int n, int k, std::mt19937_64& rng) {
    std::vector<std::vector<double>> u(static_cast<size_t>(n),
                                       std::vector<double>(static_cast<size_t>(k)));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<int> perm(static_cast<size_t>(n));
    for (int j = 0; j < k; ++j) {
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        for (int i = 0; i < n; ++i)
            u[static_cast<size_t>(i)][static_cast<size_t>(j)] =
                (perm[static_cast<size_t>(i)] + unif(rng)) / n;
    }
    return u;
}

namespace detail {

inline DenseMatrix sample_correlation(const std::vector<std::vector<double>>& m) {
    int n = static_cast<int>(m.size());
    int k = static_cast<int>(m[0].size());
    std::vector<double> mean(static_cast<size_t>(k), 0), sd(static_cast<size_t>(k), 0);
    for (const auto& row : m)
        for (int j = 0; j < k; ++j) mean[static_cast<size_t>(j)] += row[static_cast<size_t>(j)];
    for (auto& v : mean) v /= n;
    DenseMatrix c(k, k);
    for (const auto& row : m)
        for (int a = 0; a < k; ++a)
            for (int b = 0; b <= a; ++b)
                c.at(a, b) += (row[static_cast<size_t>(a)] - mean[static_cast<size_t>(a)]) *
                              (row[static_cast<size_t>(b)] - mean[static_cast<size_t>(b)]);
    for (int a = 0; a < k; ++a) sd[static_cast<size_t>(a)] = std::sqrt(c.at(a, a));
    for (int a = 0; a < k; ++a)
        for (int b = 0; b <= a; ++b) {
            double denom = sd[static_cast<size_t>(a)] * sd[static_cast<size_t>(b)];
            double v = denom > 0 ? c.at(a, b) / denom : (a == b ? 1.0 : 0.0);
            c.at(a, b) = v;
            c.at(b, a) = v;
        }
    return c;
}

// Solve L x = b for lower-triangular L.
inline std::vector<double> forward_sub(const DenseMatrix& l, const std::vector<double>& b) {
    int n = l.rows;
    std::vector<double> x(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        double s = b[static_cast<size_t>(i)];
        for (int j = 0; j < i; ++j) s -= l.at(i, j) * x[static_cast<size_t>(j)];
        x[static_cast<size_t>(i)] = s / l.at(i, i);
    }
    return x;
}

}  // namespace detail

// Reorders each column of `u` so the joint rank correlation approximates
// `target` (Iman-Conover). Requires n > k + 1; the caller skips otherwise.
inline void iman_conover(std::vector<std::vector<double>>& u, const DenseMatrix& target,
                         std::mt19937_64& rng) {
    const int n = static_cast<int>(u.size());
    const int k = static_cast<int>(u[0].size());

    DenseMatrix lc = cholesky(target);  // throws if target is not PD

    // van der Waerden score matrix with independently shuffled columns
    std::vector<double> scores(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        scores[static_cast<size_t>(i)] = normal_quantile((i + 1.0) / (n + 1.0));
    std::vector<std::vector<double>> m(static_cast<size_t>(n),
                                       std::vector<double>(static_cast<size_t>(k)));
    std::vector<int> perm(static_cast<size_t>(n));
    for (int j = 0; j < k; ++j) {
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        for (int i = 0; i < n; ++i)
            m[static_cast<size_t>(i)][static_cast<size_t>(j)] =
                scores[static_cast<size_t>(perm[static_cast<size_t>(i)])];
    }

    DenseMatrix e = detail::sample_correlation(m);
    for (int i = 0; i < k; ++i) e.at(i, i) += 1e-10;  // guard against rank loss
    DenseMatrix le = cholesky(e);

    // mstar = m * T^T with T = lc * le^{-1}: per row, y = le^{-1} m_i, then
    // mstar_i = lc * y.
    std::vector<std::vector<double>> mstar(static_cast<size_t>(n),
                                           std::vector<double>(static_cast<size_t>(k)));
    for (int i = 0; i < n; ++i) {
        std::vector<double> y = detail::forward_sub(le, m[static_cast<size_t>(i)]);
        for (int a = 0; a < k; ++a) {
            double s = 0;
            for (int b = 0; b <= a; ++b) s += lc.at(a, b) * y[static_cast<size_t>(b)];
            mstar[static_cast<size_t>(i)][static_cast<size_t>(a)] = s;
        }
    }

    // column-wise: order statistics of u rearranged by the ranks of mstar
    std::vector<int> idx(static_cast<size_t>(n)), rank(static_cast<size_t>(n));
    std::vector<double> col(static_cast<size_t>(n));
    for (int j = 0; j < k; ++j) {
        for (int i = 0; i < n; ++i) col[static_cast<size_t>(i)] = u[static_cast<size_t>(i)][static_cast<size_t>(j)];
        std::sort(col.begin(), col.end());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](int a, int b) {
            return mstar[static_cast<size_t>(a)][static_cast<size_t>(j)] <
                   mstar[static_cast<size_t>(b)][static_cast<size_t>(j)];
        });
        for (int r = 0; r < n; ++r) rank[static_cast<size_t>(idx[static_cast<size_t>(r)])] = r;
        for (int i = 0; i < n; ++i)
            u[static_cast<size_t>(i)][static_cast<size_t>(j)] = col[static_cast<size_t>(rank[static_cast<size_t>(i)])];
    }
}

// ---------------------------------------------------------------------------
// Raw draws

// One joint draw with both the underlying marginal samples and the realized
// per-scenario factors.
struct RawDraw {
    std::vector<double> wind_speed_ms;  // per day
    std::vector<double> solar_att;      // per day
    std::vector<double> load_level;     // per day
    double load_growth_rate = 0.0;
    double data_growth_mult = 1.0;
    int pattern = 0;
    Scenario realized;  // probability fields unset
};

inline DenseMatrix correlation_target(const SamplingConfig& cfg) {
    int k = cfg.n_dims();
    DenseMatrix c(k, k);
    for (int i = 0; i < k; ++i) c.at(i, i) = 1.0;
    for (const auto& s : cfg.correlations) {
        int a = cfg.dim_index(s.a), b = cfg.dim_index(s.b);
        c.at(a, b) = s.rho;
        c.at(b, a) = s.rho;
    }
    return c;
}

inline std::vector<RawDraw> sample_raw(const SamplingConfig& cfg, int n, uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample_raw: n must be >= 1");
    std::mt19937_64 rng(seed);
    const int k = cfg.n_dims();
    auto u = lhs_uniforms(n, k, rng);
    if (n > k + 1) {
        DenseMatrix target = correlation_target(cfg);
        iman_conover(u, target, rng);
    } else if (!cfg.correlations.empty()) {
        // too few samples to shape correlations; validate the target anyway
        cholesky(correlation_target(cfg));
    }

    const int D = cfg.days, T = cfg.steps, Y = cfg.years;
    const int P = static_cast<int>(cfg.workload_patterns.size());
    std::vector<RawDraw> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        RawDraw r;
        const auto& ui = u[static_cast<size_t>(i)];
        for (int d = 0; d < D; ++d) {
            r.wind_speed_ms.push_back(weibull_quantile(
                ui[static_cast<size_t>(d)], cfg.weibull_shape[static_cast<size_t>(d)],
                cfg.weibull_scale[static_cast<size_t>(d)]));
            double att = cfg.solar_att_mean +
                         cfg.solar_att_sigma * normal_quantile(ui[static_cast<size_t>(D + d)]);
            r.solar_att.push_back(std::clamp(att, 0.0, 1.0));
            double lev = 1.0 + cfg.load_sigma * normal_quantile(ui[static_cast<size_t>(2 * D + d)]);
            r.load_level.push_back(std::max(0.05, lev));
        }
        r.load_growth_rate = cfg.load_growth_mean +
                             cfg.load_growth_sigma * normal_quantile(ui[static_cast<size_t>(3 * D)]);
        r.data_growth_mult = std::max(
            0.05, 1.0 + cfg.data_growth_sigma * normal_quantile(ui[static_cast<size_t>(3 * D + 1)]));
        r.pattern = std::min(P - 1, static_cast<int>(ui[static_cast<size_t>(3 * D + 2)] * P));

        Scenario& sc = r.realized;
        sc.load_shape.assign(static_cast<size_t>(D), std::vector<double>(static_cast<size_t>(T)));
        sc.data_shape = sc.load_shape;
        sc.wind_shape = sc.load_shape;
        sc.solar_shape = sc.load_shape;
        for (int d = 0; d < D; ++d)
            for (int t = 0; t < T; ++t) {
                double cf = wind_power_curve(r.wind_speed_ms[static_cast<size_t>(d)],
                                             cfg.cut_in_ms, cfg.rated_ms, cfg.cut_out_ms);
                sc.wind_shape[static_cast<size_t>(d)][static_cast<size_t>(t)] = std::clamp(
                    cf * cfg.wind_profile[static_cast<size_t>(d)][static_cast<size_t>(t)], 0.0, 1.0);
                sc.solar_shape[static_cast<size_t>(d)][static_cast<size_t>(t)] = std::clamp(
                    cfg.solar_clear_sky[static_cast<size_t>(d)][static_cast<size_t>(t)] *
                        r.solar_att[static_cast<size_t>(d)],
                    0.0, 1.0);
                sc.load_shape[static_cast<size_t>(d)][static_cast<size_t>(t)] =
                    std::max(1e-6, cfg.load_mean_shape[static_cast<size_t>(d)][static_cast<size_t>(t)] *
                                       r.load_level[static_cast<size_t>(d)]);
                // workload has no seasonal axis: same pattern on every day
                sc.data_shape[static_cast<size_t>(d)][static_cast<size_t>(t)] =
                    cfg.workload_patterns[static_cast<size_t>(r.pattern)][static_cast<size_t>(t)];
            }
        for (int y = 1; y <= Y; ++y) {
            sc.load_growth.push_back(std::pow(1.0 + r.load_growth_rate, y - 1));
            sc.data_growth.push_back(cfg.data_growth_path[static_cast<size_t>(y - 1)] *
                                     r.data_growth_mult);
        }
        out.push_back(std::move(r));
    }
    return out;
}

// Full pipeline: sample n joint draws, reduce to at most k weighted scenarios.
inline ScenarioSet generate_scenario_set(const SamplingConfig& cfg, int n, int k,
                                         uint64_t seed) {
    auto draws = sample_raw(cfg, n, seed);
    std::vector<Scenario> realized;
    realized.reserve(draws.size());
    for (auto& d : draws) realized.push_back(std::move(d.realized));
    ScenarioSet ss;
    if (k >= n) {
        for (int i = 0; i < n; ++i) {
            realized[static_cast<size_t>(i)].id = i;
            realized[static_cast<size_t>(i)].prob_num = 1;
            realized[static_cast<size_t>(i)].prob_den = n;
        }
        ss.scenarios = std::move(realized);
    } else {
        ss = reduce_kmeans(realized, k, seed + 1);
    }
    ss.seed = seed;
    ss.provenance = sampling_config_json(cfg).dump();
    return ss;
}

}  // namespace coplan
