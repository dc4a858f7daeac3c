#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "economy/dataset.hpp"
#include "economy/errors.hpp"

namespace economy::synth {

enum class Kind {
    Delayed,      // classes identical until the onset, then shifted apart
    Regimes,      // two shape regimes with opposite class majorities
    Homogeneous,  // labels independent of the values
};

inline std::optional<Kind> parse_kind(std::string_view s) {
    if (s == "delayed") return Kind::Delayed;
    if (s == "regimes") return Kind::Regimes;
    if (s == "homogeneous") return Kind::Homogeneous;
    return std::nullopt;
}

struct Options {
    Kind kind = Kind::Delayed;
    std::size_t count = 300;
    std::size_t length = 40;
    double onset = 0.5;  // fraction of T where the class signal starts
    double shift = 2.0;  // class-1 offset after the onset
    double noise = 1.0;
    std::uint64_t seed = 1;
};

namespace detail {

// Exactly half of the series (rounded down) get label 1, in random order.
inline std::vector<Label> balanced_labels(std::size_t n, std::mt19937_64& rng) {
    std::vector<Label> y(n, 0);
    std::fill(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n / 2), 1);
    std::shuffle(y.begin(), y.end(), rng);
    return y;
}

} // namespace detail

inline Dataset generate(const Options& o) {
    if (o.count < 2 || o.length < 2) throw DataError("synthetic data needs count >= 2 and length >= 2");
    if (o.onset < 0.0 || o.onset > 1.0) throw DataError("onset must lie in [0, 1]");
    std::mt19937_64 rng(o.seed);
    std::normal_distribution<double> noise(0.0, o.noise);
    const auto labels = detail::balanced_labels(o.count, rng);
    const auto onset_index = static_cast<std::size_t>(std::floor(o.onset * static_cast<double>(o.length)));
    const double T = static_cast<double>(o.length);

    std::vector<LabeledSeries> out;
    out.reserve(o.count);
    for (std::size_t i = 0; i < o.count; ++i) {
        LabeledSeries s;
        s.label = labels[i];
        s.values.resize(o.length);
        switch (o.kind) {
        case Kind::Delayed:
            for (std::size_t t = 0; t < o.length; ++t) {
                const double signal = (s.label == 1 && t >= onset_index) ? o.shift : 0.0;
                s.values[t] = signal + noise(rng);
            }
            break;
        case Kind::Regimes: {
            // Regime A: slow sine, 80% class 1. Regime B: ramp, 80% class 0.
            // The class itself shows up as a late offset.
            std::bernoulli_distribution coin(0.5);
            const bool regime_a = coin(rng);
            std::bernoulli_distribution agree(0.8);
            s.label = agree(rng) ? (regime_a ? 1 : 0) : (regime_a ? 0 : 1);
            for (std::size_t t = 0; t < o.length; ++t) {
                const double x = static_cast<double>(t) / T;
                const double base = regime_a ? 3.0 * std::sin(2.0 * std::numbers::pi * x) : 6.0 * x - 3.0;
                const double signal = (s.label == 1 && t >= onset_index) ? o.shift : 0.0;
                s.values[t] = base + signal + noise(rng);
            }
            break;
        }
        case Kind::Homogeneous:
            for (std::size_t t = 0; t < o.length; ++t) s.values[t] = noise(rng);
            break;
        }
        out.push_back(std::move(s));
    }
    return Dataset(std::move(out));
}

} // namespace economy::synth
