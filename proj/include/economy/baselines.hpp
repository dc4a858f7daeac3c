#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "economy/classifiers.hpp"
#include "economy/cost.hpp"
#include "economy/economy.hpp"

namespace economy {

// Stopping-rule baseline: trigger as soon as
//   g1 * p1 + g2 * p2 + g3 * t/T > 0
// where p1 is the largest posterior and p2 the gap between the two posteriors.
struct SRParams {
    double g1 = 0.0, g2 = 0.0, g3 = 0.0;

    bool operator==(const SRParams&) const = default;
};

inline bool sr_trigger(const SRParams& p, double p1, double p2, std::size_t t, std::size_t T) {
    const double v = p.g1 * p1 + p.g2 * p2 +
                     p.g3 * static_cast<double>(t) / static_cast<double>(T);
    return v > 0.0;
}

struct SRDecision {
    std::size_t grid_index = 0;
    std::size_t trigger_time = 0;
    int label = 0;
};

// Walks the grid with the chain's scores for one series; forced at T.
inline SRDecision sr_decide(const SRParams& p, std::span<const double> scores,
                            const TimestampGrid& grid) {
    const std::size_t G = grid.size();
    for (std::size_t g = 0; g < G; ++g) {
        const double s = scores[g];
        const double p1 = std::max(s, 1.0 - s);
        const double p2 = std::abs(s - (1.0 - s));
        if (g + 1 == G || sr_trigger(p, p1, p2, grid[g], grid.length())) {
            return {g, grid[g], predict_label(s)};
        }
    }
    return {G - 1, grid.back(), predict_label(scores[G - 1])};
}

inline SRDecision sr_decide(const SRParams& p, const ClassifierChain& chain,
                            const LabeledSeries& s) {
    std::vector<double> scores(chain.size());
    for (std::size_t g = 0; g < chain.size(); ++g) scores[g] = chain.score(s, g);
    return sr_decide(p, scores, chain.grid());
}

// The 41 values -1, -0.95, ..., 0.95, 1.
inline std::array<double, 41> sr_grid_values() {
    std::array<double, 41> out{};
    for (int i = -20; i <= 20; ++i) out[static_cast<std::size_t>(i + 20)] = i / 20.0;
    return out;
}

struct SRTuning {
    SRParams params;
    double avg_cost = 0.0;
};

// Exhaustive grid search minimising AvgCost on the tuning series. Candidates
// are visited in ascending (g1, g2, g3) order and only a strictly better cost
// replaces the incumbent.
inline SRTuning sr_tune(const std::vector<const ScoredSet*>& tuning, const TimestampGrid& grid,
                        const CostModel& cost) {
    struct Step {
        double p1, p2, frac, cost;
    };
    std::vector<std::vector<Step>> steps;
    for (const auto* set : tuning) {
        for (std::size_t i = 0; i < set->size(); ++i) {
            const int y = (*set->data)[i].label;
            std::vector<Step> row;
            row.reserve(grid.size());
            for (std::size_t g = 0; g < grid.size(); ++g) {
                const double s = set->scores[i][g];
                row.push_back({std::max(s, 1.0 - s), std::abs(2.0 * s - 1.0),
                               static_cast<double>(grid[g]) / static_cast<double>(grid.length()),
                               cost.mis(y, predict_label(s)) + cost.delay(grid[g])});
            }
            steps.push_back(std::move(row));
        }
    }
    if (steps.empty()) throw DataError("SR tuning set is empty");

    const auto values = sr_grid_values();
    SRTuning best{{}, std::numeric_limits<double>::infinity()};
    for (double g1 : values) {
        for (double g2 : values) {
            for (double g3 : values) {
                double total = 0.0;
                for (const auto& row : steps) {
                    const Step* chosen = &row.back();
                    for (const auto& st : row) {
                        if (g1 * st.p1 + g2 * st.p2 + g3 * st.frac > 0.0) {
                            chosen = &st;
                            break;
                        }
                    }
                    total += chosen->cost;
                }
                const double avg = total / static_cast<double>(steps.size());
                if (avg < best.avg_cost) best = {{g1, g2, g3}, avg};
            }
        }
    }
    return best;
}

} // namespace economy
