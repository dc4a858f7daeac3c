#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "economy/errors.hpp"

namespace economy {

// How an incomplete series is turned into group probabilities.
enum class MembershipKind {
    Softmin,  // exp(-lambda * (d_k - min d)), lambda = 1 / mean d
    Hard,     // one-hot on the nearest centroid
};

struct ClusterModel {
    std::vector<std::vector<double>> centroids;
    std::uint64_t seed = 0;
    MembershipKind membership_kind = MembershipKind::Softmin;

    std::size_t k() const noexcept { return centroids.size(); }
    std::size_t dim() const noexcept { return centroids.empty() ? 0 : centroids.front().size(); }

    // Euclidean distance between `prefix` and the first prefix.size()
    // coordinates of centroid k.
    double prefix_distance(std::size_t k, std::span<const double> prefix) const {
        const auto& c = centroids[k];
        double acc = 0.0;
        for (std::size_t i = 0; i < prefix.size(); ++i) {
            const double d = prefix[i] - c[i];
            acc += d * d;
        }
        return std::sqrt(acc);
    }

    std::size_t nearest(std::span<const double> prefix) const {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < centroids.size(); ++k) {
            const double d = prefix_distance(k, prefix);
            if (d < best_d) {
                best_d = d;
                best = k;
            }
        }
        return best;
    }
};

struct KMeansOptions {
    std::size_t max_iterations = 100;
    double tolerance = 1e-6;
};

struct KMeansResult {
    ClusterModel model;
    std::vector<std::size_t> assignment;
    std::vector<double> inertia_history;  // after every assignment step
    std::size_t iterations = 0;

    double inertia() const { return inertia_history.empty() ? 0.0 : inertia_history.back(); }
};

namespace detail {

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

} // namespace detail

// Lloyd iterations with k-means++ seeding. Empty clusters are re-seeded from
// the point farthest from its current centroid.
inline KMeansResult kmeans_fit(const std::vector<std::vector<double>>& data, std::size_t K,
                               std::uint64_t seed, const KMeansOptions& opt = {}) {
    const std::size_t n = data.size();
    if (K == 0) {
        throw DataError("k-means needs K >= 1");
    }
    if (n < K) {
        throw DataError("k-means needs at least K=" + std::to_string(K) + " points, got " +
                        std::to_string(n));
    }
    const std::size_t dim = data.front().size();
    for (const auto& v : data) {
        if (v.size() != dim) throw DataError("k-means input vectors have different lengths");
    }

    std::mt19937_64 rng(seed);
    std::vector<std::vector<double>> centers;
    centers.reserve(K);
    {
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        centers.push_back(data[pick(rng)]);
        std::vector<double> d2(n);
        for (std::size_t i = 0; i < n; ++i) d2[i] = detail::sq_dist(data[i], centers[0]);
        std::vector<bool> chosen(n, false);
        while (centers.size() < K) {
            const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
            std::size_t next = n;
            if (total > 0.0) {
                std::uniform_real_distribution<double> u(0.0, total);
                double r = u(rng);
                for (std::size_t i = 0; i < n; ++i) {
                    if (d2[i] <= 0.0) continue;
                    next = i;
                    r -= d2[i];
                    if (r <= 0.0) break;
                }
            } else {
                // every point coincides with a center: take any unused row
                for (std::size_t i = 0; i < n && next == n; ++i) {
                    if (!chosen[i]) next = i;
                }
            }
            chosen[next] = true;
            centers.push_back(data[next]);
            for (std::size_t i = 0; i < n; ++i) {
                d2[i] = std::min(d2[i], detail::sq_dist(data[i], centers.back()));
            }
        }
    }

    KMeansResult res;
    res.assignment.assign(n, 0);
    std::vector<double> point_cost(n);
    for (std::size_t it = 0; it < opt.max_iterations; ++it) {
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < K; ++k) {
                const double d = detail::sq_dist(data[i], centers[k]);
                if (d < best) {
                    best = d;
                    res.assignment[i] = k;
                }
            }
            point_cost[i] = best;
            inertia += best;
        }
        if (!res.inertia_history.empty()) {
            const double prev = res.inertia_history.back();
            if (inertia > prev + 1e-9 * std::max(1.0, prev)) {
                throw std::logic_error("k-means inertia increased between iterations");
            }
        }
        res.inertia_history.push_back(inertia);
        res.iterations = it + 1;

        std::vector<std::vector<double>> next(K, std::vector<double>(dim, 0.0));
        std::vector<std::size_t> sizes(K, 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto& c = next[res.assignment[i]];
            for (std::size_t j = 0; j < dim; ++j) c[j] += data[i][j];
            ++sizes[res.assignment[i]];
        }
        for (std::size_t k = 0; k < K; ++k) {
            if (sizes[k] == 0) {
                const auto far = static_cast<std::size_t>(
                    std::max_element(point_cost.begin(), point_cost.end()) - point_cost.begin());
                next[k] = data[far];
                point_cost[far] = 0.0;
                continue;
            }
            for (auto& v : next[k]) v /= static_cast<double>(sizes[k]);
        }
        double shift = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            shift = std::max(shift, std::sqrt(detail::sq_dist(next[k], centers[k])));
        }
        centers = std::move(next);
        if (shift < opt.tolerance) {
            break;
        }
    }
    // Final assignment against the returned centroids.
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < K; ++k) {
            const double d = detail::sq_dist(data[i], centers[k]);
            if (d < best) {
                best = d;
                res.assignment[i] = k;
            }
        }
        inertia += best;
    }
    if (inertia > res.inertia_history.back() + 1e-9 * std::max(1.0, res.inertia_history.back())) {
        throw std::logic_error("k-means inertia increased between iterations");
    }
    res.inertia_history.push_back(inertia);
    res.model.centroids = std::move(centers);
    res.model.seed = seed;
    return res;
}

// P(g_k | prefix) over the K clusters.
inline std::vector<double> membership(const ClusterModel& m, std::span<const double> prefix) {
    if (m.k() == 0) {
        throw ModelError("cluster model has no centroids");
    }
    if (prefix.size() > m.dim()) {
        throw ModelError("prefix of length " + std::to_string(prefix.size()) +
                         " is longer than the centroids (" + std::to_string(m.dim()) + ")");
    }
    const std::size_t K = m.k();
    std::vector<double> d(K);
    for (std::size_t k = 0; k < K; ++k) d[k] = m.prefix_distance(k, prefix);
    std::vector<double> out(K, 0.0);
    if (m.membership_kind == MembershipKind::Hard) {
        out[static_cast<std::size_t>(std::min_element(d.begin(), d.end()) - d.begin())] = 1.0;
        return out;
    }
    const double dmin = *std::min_element(d.begin(), d.end());
    const double dmean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(K);
    const double sharpness = 1.0 / (dmean + 1e-12);
    double total = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        out[k] = std::exp(-sharpness * (d[k] - dmin));
        total += out[k];
    }
    for (auto& v : out) v /= total;
    return out;
}

} // namespace economy
