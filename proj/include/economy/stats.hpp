#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "economy/errors.hpp"

namespace economy::stats {

// Average (mid) ranks, 1-based, of `v` in ascending order.
inline std::vector<double> average_ranks(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

struct WilcoxonResult {
    double statistic = 0.0;  // min(W+, W-)
    double w_plus = 0.0;     // rank sum of positive differences a - b
    double w_minus = 0.0;
    std::size_t n = 0;       // non-zero differences
    double p_value = 1.0;    // two-sided
    bool exact = true;
    int direction = 0;       // +1: a tends to exceed b, -1: a tends to be lower
};

inline constexpr std::size_t kWilcoxonMinPairs = 6;
inline constexpr std::size_t kWilcoxonExactLimit = 25;

// Two-sided paired test. Zero differences are dropped and ties get mid-ranks.
// Up to 25 pairs the null distribution of W+ is computed exactly from the
// observed (possibly tied) ranks; above that a normal approximation with tie
// and continuity corrections is used.
inline WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw StatsError("paired samples differ in size");
    std::vector<double> diff;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (d != 0.0) diff.push_back(d);
    }
    const std::size_t n = diff.size();
    if (n < kWilcoxonMinPairs) {
        throw StatsError("too few pairs: " + std::to_string(n) + " non-zero differences, need " +
                         std::to_string(kWilcoxonMinPairs));
    }
    std::vector<double> mags(n);
    for (std::size_t i = 0; i < n; ++i) mags[i] = std::abs(diff[i]);
    const auto ranks = average_ranks(mags);

    WilcoxonResult r;
    r.n = n;
    for (std::size_t i = 0; i < n; ++i) (diff[i] > 0 ? r.w_plus : r.w_minus) += ranks[i];
    r.statistic = std::min(r.w_plus, r.w_minus);
    r.direction = r.w_plus > r.w_minus ? 1 : (r.w_plus < r.w_minus ? -1 : 0);

    if (n <= kWilcoxonExactLimit) {
        // Mid-ranks are multiples of 1/2: count subsets of doubled ranks.
        std::vector<std::size_t> twice(n);
        std::size_t total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            twice[i] = static_cast<std::size_t>(std::lround(2.0 * ranks[i]));
            total += twice[i];
        }
        std::vector<double> ways(total + 1, 0.0);
        ways[0] = 1.0;
        for (auto w : twice) {
            for (std::size_t s = total; s >= w; --s) {
                ways[s] += ways[s - w];
                if (s == w) break;
            }
        }
        const auto obs = static_cast<std::size_t>(std::lround(2.0 * r.w_plus));
        double below = 0.0, above = 0.0, all = 0.0;
        for (std::size_t s = 0; s <= total; ++s) {
            all += ways[s];
            if (s <= obs) below += ways[s];
            if (s >= obs) above += ways[s];
        }
        r.p_value = std::min(1.0, 2.0 * std::min(below, above) / all);
        r.exact = true;
        return r;
    }

    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    double tie_term = 0.0;
    {
        std::vector<double> sorted = mags;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < n;) {
            std::size_t j = i;
            while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
            const double t = static_cast<double>(j - i + 1);
            tie_term += t * t * t - t;
            i = j + 1;
        }
    }
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    const double z = std::max(0.0, std::abs(r.w_plus - mean) - 0.5) / std::sqrt(var);
    r.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
    r.exact = false;
    return r;
}

// Studentized range based critical values for the Nemenyi test at alpha = 0.05,
// indexed by the number of methods k = 2..10.
inline constexpr std::array<double, 11> kNemenyiQ05{
    0.0, 0.0, 1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164};

inline double nemenyi_critical_difference(std::size_t k, std::size_t N) {
    if (k < 2 || k >= kNemenyiQ05.size()) {
        throw StatsError("Nemenyi table covers 2..10 methods, got " + std::to_string(k));
    }
    if (N == 0) throw StatsError("Nemenyi needs at least one dataset");
    const double kk = static_cast<double>(k);
    return kNemenyiQ05[k] * std::sqrt(kk * (kk + 1.0) / (6.0 * static_cast<double>(N)));
}

struct FriedmanResult {
    double chi_square = 0.0;
    double p_value = 1.0;
    std::vector<double> mean_ranks;  // per method, rank 1 = lowest score
    double critical_difference = 0.0;
    // Maximal sets of methods (indices, best rank first) whose mean ranks lie
    // within one critical difference of each other.
    std::vector<std::vector<std::size_t>> groups;
};

inline constexpr std::size_t kFriedmanMinMethods = 3;
inline constexpr std::size_t kFriedmanMinDatasets = 10;

// scores[m][d]: score of method m on dataset d, lower is better (AvgCost).
inline FriedmanResult friedman_nemenyi(const std::vector<std::vector<double>>& scores) {
    const std::size_t k = scores.size();
    if (k < kFriedmanMinMethods) {
        throw StatsError("Friedman test needs at least 3 methods, got " + std::to_string(k));
    }
    const std::size_t N = scores.front().size();
    for (const auto& row : scores) {
        if (row.size() != N) throw StatsError("score matrix is ragged");
    }
    if (N < kFriedmanMinDatasets) {
        throw StatsError("Friedman test needs at least 10 datasets, got " + std::to_string(N));
    }
    FriedmanResult r;
    r.mean_ranks.assign(k, 0.0);
    std::vector<double> col(k);
    for (std::size_t d = 0; d < N; ++d) {
        for (std::size_t m = 0; m < k; ++m) col[m] = scores[m][d];
        const auto ranks = average_ranks(col);
        for (std::size_t m = 0; m < k; ++m) r.mean_ranks[m] += ranks[m];
    }
    for (auto& v : r.mean_ranks) v /= static_cast<double>(N);

    const double kk = static_cast<double>(k);
    const double NN = static_cast<double>(N);
    double sum_sq = 0.0;
    for (double R : r.mean_ranks) sum_sq += R * R;
    r.chi_square = std::max(0.0, 12.0 * NN / (kk * (kk + 1.0)) *
                                     (sum_sq - kk * (kk + 1.0) * (kk + 1.0) / 4.0));
    boost::math::chi_squared dist(kk - 1.0);
    r.p_value = r.chi_square <= 0.0 ? 1.0 : boost::math::cdf(boost::math::complement(dist, r.chi_square));
    r.critical_difference = nemenyi_critical_difference(k, N);

    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return r.mean_ranks[a] < r.mean_ranks[b]; });
    std::size_t covered_to = 0;  // exclusive end of the last emitted group
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i;
        while (j + 1 < k &&
               r.mean_ranks[order[j + 1]] - r.mean_ranks[order[i]] <= r.critical_difference) {
            ++j;
        }
        if (j + 1 > covered_to) {
            r.groups.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                                  order.begin() + static_cast<std::ptrdiff_t>(j + 1));
            covered_to = j + 1;
        }
    }
    return r;
}

} // namespace economy::stats
