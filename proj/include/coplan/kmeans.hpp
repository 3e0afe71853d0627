#pragma once

// K-means with k-means++ seeding and Lloyd iterations, deterministic under a
// fixed seed. Points are z-scored before clustering so no feature dominates
// on account of its unit; centroids are reported in the original space.

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace coplan {

struct KmeansResult {
    std::vector<std::vector<double>> centroids;  // original space
    std::vector<int> assignment;                 // per point
    std::vector<int> counts;                     // per cluster
    double inertia = 0.0;
    int iterations = 0;
};

namespace detail {

inline double sqdist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace detail

inline KmeansResult kmeans(const std::vector<std::vector<double>>& points, int k,
                           uint64_t seed, int max_iter = 300,
                           double rel_tol = 1e-6) {
    if (points.empty()) throw std::invalid_argument("kmeans: empty input");
    if (k <= 0) throw std::invalid_argument("kmeans: k must be positive");
    if (k > static_cast<int>(points.size()))
        throw std::invalid_argument("kmeans: k exceeds point count");
    const size_t n = points.size();
    const size_t dim = points[0].size();

    // z-score per feature; constant features stay as-is
    std::vector<double> mean(dim, 0.0), sd(dim, 0.0);
    for (const auto& p : points)
        for (size_t j = 0; j < dim; ++j) mean[j] += p[j];
    for (size_t j = 0; j < dim; ++j) mean[j] /= static_cast<double>(n);
    for (const auto& p : points)
        for (size_t j = 0; j < dim; ++j) {
            double d = p[j] - mean[j];
            sd[j] += d * d;
        }
    for (size_t j = 0; j < dim; ++j) {
        sd[j] = std::sqrt(sd[j] / static_cast<double>(n));
        if (sd[j] < 1e-12) sd[j] = 1.0;
    }
    std::vector<std::vector<double>> z(n, std::vector<double>(dim));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < dim; ++j) z[i][j] = (points[i][j] - mean[j]) / sd[j];

    // k-means++ seeding
    std::mt19937_64 rng(seed);
    std::vector<std::vector<double>> centers;
    {
        std::uniform_int_distribution<size_t> first(0, n - 1);
        centers.push_back(z[first(rng)]);
        std::vector<double> d2(n);
        while (static_cast<int>(centers.size()) < k) {
            double total = 0;
            for (size_t i = 0; i < n; ++i) {
                double best = std::numeric_limits<double>::max();
                for (const auto& c : centers) best = std::min(best, detail::sqdist(z[i], c));
                d2[i] = best;
                total += best;
            }
            size_t pick = 0;
            if (total <= 0) {
                // all points coincide with chosen centers: take the first
                // point not yet used as a center
                std::uniform_int_distribution<size_t> any(0, n - 1);
                pick = any(rng);
            } else {
                std::uniform_real_distribution<double> u(0.0, total);
                double r = u(rng), acc = 0;
                for (size_t i = 0; i < n; ++i) {
                    acc += d2[i];
                    if (acc >= r) {
                        pick = i;
                        break;
                    }
                }
            }
            centers.push_back(z[pick]);
        }
    }

    KmeansResult res;
    res.assignment.assign(n, 0);
    double prev_inertia = std::numeric_limits<double>::max();
    for (int it = 0; it < max_iter; ++it) {
        // assign; ties go to the lowest cluster index
        double inertia = 0;
        for (size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            int arg = 0;
            for (int c = 0; c < k; ++c) {
                double d = detail::sqdist(z[i], centers[static_cast<size_t>(c)]);
                if (d < best - 1e-15) {
                    best = d;
                    arg = c;
                }
            }
            res.assignment[i] = arg;
            inertia += best;
        }
        // update
        std::vector<std::vector<double>> acc(static_cast<size_t>(k),
                                             std::vector<double>(dim, 0.0));
        std::vector<int> cnt(static_cast<size_t>(k), 0);
        for (size_t i = 0; i < n; ++i) {
            cnt[static_cast<size_t>(res.assignment[i])]++;
            for (size_t j = 0; j < dim; ++j)
                acc[static_cast<size_t>(res.assignment[i])][j] += z[i][j];
        }
        for (int c = 0; c < k; ++c) {
            if (cnt[static_cast<size_t>(c)] == 0) continue;  // keep the old center
            for (size_t j = 0; j < dim; ++j)
                centers[static_cast<size_t>(c)][j] =
                    acc[static_cast<size_t>(c)][j] / cnt[static_cast<size_t>(c)];
        }
        res.iterations = it + 1;
        if (prev_inertia < std::numeric_limits<double>::max()) {
            double denom = prev_inertia > 0 ? prev_inertia : 1.0;
            if (std::abs(prev_inertia - inertia) / denom < rel_tol) {
                res.inertia = inertia;
                break;
            }
        }
        prev_inertia = inertia;
        res.inertia = inertia;
    }

    res.counts.assign(static_cast<size_t>(k), 0);
    for (size_t i = 0; i < n; ++i) res.counts[static_cast<size_t>(res.assignment[i])]++;

    // centroids back in original units
    res.centroids.assign(static_cast<size_t>(k), std::vector<double>(dim, 0.0));
    std::vector<int> cnt(static_cast<size_t>(k), 0);
    for (size_t i = 0; i < n; ++i) {
        cnt[static_cast<size_t>(res.assignment[i])]++;
        for (size_t j = 0; j < dim; ++j)
            res.centroids[static_cast<size_t>(res.assignment[i])][j] += points[i][j];
    }
    for (int c = 0; c < k; ++c)
        for (size_t j = 0; j < dim; ++j)
            if (cnt[static_cast<size_t>(c)] > 0)
                res.centroids[static_cast<size_t>(c)][j] /= cnt[static_cast<size_t>(c)];
    return res;
}

}  // namespace coplan
