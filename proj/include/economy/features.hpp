#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string_view>

#include "economy/errors.hpp"

namespace economy {

inline constexpr std::size_t kFeatureCount = 12;

using FeatureVector = std::array<double, kFeatureCount>;

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames{
    "mean",  "std",   "min",    "max",    "first",   "last",
    "slope", "mean_abs_change", "energy", "autocorr1", "mean_crossing_rate", "range"};

// Statistical and temporal summary of a prefix. Population standard deviation;
// slope is the least-squares fit against the sample index; lag-1
// autocorrelation and the crossing rate fall back to 0 when undefined.
inline FeatureVector extract_features(std::span<const double> prefix) {
    const std::size_t t = prefix.size();
    if (t == 0) {
        throw DataError("cannot extract features from an empty prefix");
    }
    double sum = 0.0, sum_sq = 0.0;
    double lo = prefix[0], hi = prefix[0];
    for (double v : prefix) {
        if (!std::isfinite(v)) {
            throw DataError("non-finite value in prefix");
        }
        sum += v;
        sum_sq += v * v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double n = static_cast<double>(t);
    const double mean = sum / n;

    double ss = 0.0;
    for (double v : prefix) {
        ss += (v - mean) * (v - mean);
    }
    const double sd = std::sqrt(ss / n);

    double slope = 0.0;
    if (t >= 2) {
        const double x_mean = (n - 1.0) / 2.0;
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < t; ++i) {
            const double dx = static_cast<double>(i) - x_mean;
            sxy += dx * (prefix[i] - mean);
            sxx += dx * dx;
        }
        slope = sxy / sxx;
    }

    double abs_change = 0.0;
    std::size_t crossings = 0;
    double lag_cov = 0.0;
    for (std::size_t i = 1; i < t; ++i) {
        abs_change += std::abs(prefix[i] - prefix[i - 1]);
        const double a = prefix[i - 1] - mean;
        const double b = prefix[i] - mean;
        if (a * b < 0.0) {
            ++crossings;
        }
        lag_cov += a * b;
    }
    const double mean_abs_change = t >= 2 ? abs_change / (n - 1.0) : 0.0;
    const double crossing_rate = t >= 2 ? static_cast<double>(crossings) / (n - 1.0) : 0.0;
    const double autocorr = (t >= 3 && ss > 0.0) ? lag_cov / ss : 0.0;

    return {mean, sd, lo, hi, prefix.front(), prefix.back(),
            slope, mean_abs_change, sum_sq / n, autocorr, crossing_rate, hi - lo};
}

} // namespace economy
