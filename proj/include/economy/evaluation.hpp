#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "economy/baselines.hpp"
#include "economy/classifiers.hpp"
#include "economy/cost.hpp"
#include "economy/economy.hpp"
#include "economy/errors.hpp"

namespace economy {

struct RunRecord {
    std::size_t series_id = 0;
    std::size_t trigger_time = 0;
    int prediction = 0;
    int truth = 0;
    double misclassification_cost = 0.0;
    double delay_cost = 0.0;

    double cost() const noexcept { return misclassification_cost + delay_cost; }
};

inline RunRecord make_record(const CostModel& cm, std::size_t id, std::size_t t, int yhat, int y) {
    return {id, t, yhat, y, cm.mis(y, yhat), delay_cost(cm, t)};
}

namespace detail {
inline void require_records(const std::vector<RunRecord>& r) {
    if (r.empty()) throw DataError("no run records");
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}
} // namespace detail

inline double avg_cost(const std::vector<RunRecord>& records) {
    detail::require_records(records);
    double acc = 0.0;
    for (const auto& r : records) acc += r.cost();
    return acc / static_cast<double>(records.size());
}

inline double mean_misclassification_cost(const std::vector<RunRecord>& records) {
    detail::require_records(records);
    double acc = 0.0;
    for (const auto& r : records) acc += r.misclassification_cost;
    return acc / static_cast<double>(records.size());
}

inline double mean_delay_cost(const std::vector<RunRecord>& records) {
    detail::require_records(records);
    double acc = 0.0;
    for (const auto& r : records) acc += r.delay_cost;
    return acc / static_cast<double>(records.size());
}

// Median trigger time over T.
inline double earliness(const std::vector<RunRecord>& records, std::size_t T) {
    detail::require_records(records);
    std::vector<double> t;
    t.reserve(records.size());
    for (const auto& r : records) t.push_back(static_cast<double>(r.trigger_time));
    return detail::median(std::move(t)) / static_cast<double>(T);
}

// Cohen's kappa of predictions against truths; 0 when chance agreement is 1.
inline double kappa(const std::vector<RunRecord>& records) {
    detail::require_records(records);
    double c[2][2] = {{0, 0}, {0, 0}};  // [truth][prediction]
    for (const auto& r : records) c[r.truth][r.prediction] += 1.0;
    const double n = static_cast<double>(records.size());
    const double po = (c[0][0] + c[1][1]) / n;
    const double pe = ((c[0][0] + c[0][1]) * (c[0][0] + c[1][0]) +
                       (c[1][0] + c[1][1]) * (c[0][1] + c[1][1])) /
                      (n * n);
    if (pe >= 1.0) return 0.0;
    return (po - pe) / (1.0 - pe);
}

// Runs a trained trigger model over a dataset.
inline std::vector<RunRecord> run_economy(const TriggerModel& m, const Dataset& d) {
    std::vector<RunRecord> out;
    out.reserve(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto dec = decide(m, d[i]);
        out.push_back(make_record(m.cost, i, dec.trigger_time, dec.label, d[i].label));
    }
    return out;
}

inline std::vector<RunRecord> run_sr(const SRParams& p, const ScoredSet& set,
                                     const TimestampGrid& grid, const CostModel& cm) {
    std::vector<RunRecord> out;
    out.reserve(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto dec = sr_decide(p, set.scores[i], grid);
        out.push_back(make_record(cm, i, dec.trigger_time, dec.label, (*set.data)[i].label));
    }
    return out;
}

struct PosthocResult {
    double avg_cost = 0.0;
    std::vector<std::size_t> optimal_times;  // t* per series
    std::vector<RunRecord> records;
};

// Retrospective optimum: per series, the grid timestamp minimising the
// incurred cost C_m(h_t(x_t)|y) + C_d(t), earliest on ties.
inline PosthocResult posthoc_optimal_cost(const ClassifierChain& chain, const Dataset& d,
                                          const CostModel& cm) {
    if (d.empty()) throw DataError("no series to evaluate");
    PosthocResult out;
    const auto& grid = chain.grid();
    for (std::size_t i = 0; i < d.size(); ++i) {
        RunRecord best;
        bool have = false;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const auto r = make_record(cm, i, grid[g], predict_label(chain.score(d[i], g)),
                                       d[i].label);
            if (!have || r.cost() < best.cost()) {
                best = r;
                have = true;
            }
        }
        out.optimal_times.push_back(best.trigger_time);
        out.records.push_back(best);
    }
    out.avg_cost = avg_cost(out.records);
    return out;
}

struct MetricsReport {
    double avg_cost = 0.0;
    double earliness = 0.0;
    double kappa = 0.0;
    double delta_cost = 0.0;
    double optimal_cost = 0.0;
};

inline MetricsReport summarize(const std::vector<RunRecord>& records, std::size_t T,
                               double optimal_cost) {
    MetricsReport m;
    m.avg_cost = avg_cost(records);
    m.earliness = earliness(records, T);
    m.kappa = kappa(records);
    m.optimal_cost = optimal_cost;
    m.delta_cost = std::abs(m.avg_cost - optimal_cost);
    return m;
}

struct ParetoPoint {
    std::string method;
    double alpha = 0.0;
    double earliness = 0.0;
    double kappa = 0.0;
    bool dominated = false;
};

// Marks points dominated by another method at the same alpha: no later and
// no worse kappa, strictly better in one of the two.
inline void mark_dominated(std::vector<ParetoPoint>& points) {
    for (auto& a : points) {
        a.dominated = false;
        for (const auto& b : points) {
            if (&a == &b || a.alpha != b.alpha) continue;
            const bool no_worse = b.earliness <= a.earliness && b.kappa >= a.kappa;
            const bool better = b.earliness < a.earliness || b.kappa > a.kappa;
            if (no_worse && better) {
                a.dominated = true;
                break;
            }
        }
    }
}

} // namespace economy
