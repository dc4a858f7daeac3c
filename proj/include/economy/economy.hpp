#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "economy/classifiers.hpp"
#include "economy/clustering.hpp"
#include "economy/cost.hpp"
#include "economy/dataset.hpp"
#include "economy/errors.hpp"

namespace economy {

enum class Variant { K, MultiK, GammaLite, Gamma };

// Full: every future grid step is a candidate. Myopic: only "now" versus the
// next grid step.
enum class Horizon { Full, Myopic };

inline std::string_view variant_name(Variant v) {
    switch (v) {
    case Variant::K: return "economy-k";
    case Variant::MultiK: return "economy-multi-k";
    case Variant::GammaLite: return "economy-gamma-lite";
    case Variant::Gamma: return "economy-gamma";
    }
    return "?";
}

inline std::optional<Variant> parse_variant(std::string_view name) {
    for (auto v : {Variant::K, Variant::MultiK, Variant::GammaLite, Variant::Gamma}) {
        if (variant_name(v) == name) return v;
    }
    return std::nullopt;
}

// Equal-frequency cut points over [0, 1]. bounds.front() == 0, bounds.back() == 1;
// interval j is [bounds[j], bounds[j+1]), the last one closed.
struct IntervalPartition {
    std::vector<double> bounds{0.0, 1.0};

    std::size_t size() const noexcept { return bounds.size() - 1; }

    std::size_t locate(double score) const {
        const auto inner_end = bounds.end() - 1;
        auto it = std::upper_bound(bounds.begin() + 1, inner_end, score);
        return static_cast<std::size_t>(it - (bounds.begin() + 1));
    }

    bool operator==(const IntervalPartition&) const = default;
};

// Cut j sits midway between the order statistics on either side of rank
// j*n/K. Cuts at or below the smallest score would leave an empty lower
// interval and are dropped; duplicate cuts are merged.
inline IntervalPartition equal_frequency_partition(std::vector<double> scores, std::size_t K) {
    if (K == 0) throw DataError("need K >= 1 intervals");
    if (scores.size() < K) {
        throw DataError("equal-frequency discretisation needs at least K scores");
    }
    std::sort(scores.begin(), scores.end());
    const std::size_t n = scores.size();
    IntervalPartition p;
    p.bounds = {0.0};
    for (std::size_t j = 1; j < K; ++j) {
        const std::size_t i = j * n / K;  // number of scores meant to fall below the cut
        if (i == 0 || i >= n) continue;
        const double cut = 0.5 * (scores[i - 1] + scores[i]);
        if (cut <= scores.front() || cut >= 1.0) continue;
        if (cut > p.bounds.back()) p.bounds.push_back(cut);
    }
    p.bounds.push_back(1.0);
    return p;
}

// Row-stochastic, rows = intervals at t, columns = intervals at the next grid
// step. Square unless merged cut points changed the interval count.
struct TransitionMatrix {
    std::vector<std::vector<double>> m;

    std::size_t rows() const noexcept { return m.size(); }
    std::size_t cols() const noexcept { return m.empty() ? 0 : m.front().size(); }
    double operator()(std::size_t i, std::size_t j) const { return m[i][j]; }
};

// Per (origin timestamp, group): class prior frozen at the origin and the
// confusion matrix of h_f on the group's members for every grid index f.
struct GroupTable {
    ClassPrior prior{0.5, 0.5};
    std::vector<ConfusionMatrix> confusion;  // indexed by grid position
};

struct TriggerModel {
    Variant variant = Variant::Gamma;
    Horizon horizon = Horizon::Full;
    std::size_t k = 1;  // requested number of groups
    CostModel cost;
    std::shared_ptr<const ClassifierChain> chain;

    std::vector<ClusterModel> clusters;        // K: 1 model; multi-K: one per grid step
    std::vector<IntervalPartition> intervals;  // gamma variants: one per grid step
    std::vector<std::vector<GroupTable>> tables;  // [origin grid index][group]
    std::vector<TransitionMatrix> transitions;    // gamma: between consecutive grid steps

    const TimestampGrid& grid() const { return chain->grid(); }

    std::size_t groups_at(std::size_t origin) const { return tables.at(origin).size(); }

    void check() const {
        if (!chain) throw ModelError("trigger model has no classifier chain");
        const std::size_t G = grid().size();
        if (tables.size() != G) throw ModelError("group tables do not cover the grid");
        for (const auto& row : tables) {
            if (row.empty()) throw ModelError("grid step without groups");
            for (const auto& g : row) {
                if (g.confusion.size() != G) {
                    throw ModelError("confusion tables do not cover the grid");
                }
            }
        }
        if (cost.length != grid().length()) {
            throw ModelError("cost model length differs from the series length");
        }
        switch (variant) {
        case Variant::K:
            if (clusters.size() != 1) throw ModelError("economy-k needs exactly one cluster model");
            break;
        case Variant::MultiK:
            if (clusters.size() != G) throw ModelError("economy-multi-k needs one cluster model per step");
            break;
        case Variant::Gamma:
            if (transitions.size() + 1 != G) {
                throw ModelError("economy-gamma needs |grid|-1 transition matrices");
            }
            for (std::size_t i = 0; i + 1 < G; ++i) {
                if (transitions[i].rows() != tables[i].size() ||
                    transitions[i].cols() != tables[i + 1].size()) {
                    throw ModelError("transition matrix shape disagrees with the partitions");
                }
            }
            [[fallthrough]];
        case Variant::GammaLite:
            if (intervals.size() != G) throw ModelError("gamma variants need one partition per step");
            for (std::size_t i = 0; i < G; ++i) {
                if (intervals[i].size() != tables[i].size()) {
                    throw ModelError("interval count disagrees with the group tables");
                }
            }
            break;
        }
    }
};

// A dataset together with the chain's scores on it, [series][grid index].
struct ScoredSet {
    const Dataset* data = nullptr;
    std::vector<std::vector<double>> scores;

    std::size_t size() const { return data->size(); }
};

inline ScoredSet score_set(const ClassifierChain& chain, const Dataset& d) {
    return {&d, score_matrix(chain, d)};
}

namespace detail {

// assignment[origin][i] = group of series i at grid position `origin`.
inline std::vector<std::vector<GroupTable>> build_group_tables(
    const ScoredSet& meta, const std::vector<std::vector<std::size_t>>& assignment,
    const std::vector<std::size_t>& group_counts) {
    const std::size_t G = assignment.size();
    const std::size_t n = meta.size();
    std::vector<std::vector<GroupTable>> tables(G);
    for (std::size_t o = 0; o < G; ++o) {
        const std::size_t K = group_counts[o];
        std::vector<std::size_t> n0(K, 0), n1(K, 0);
        // pairs[k][f] = (y, yhat) of members of group k evaluated with h_f
        std::vector<std::vector<std::vector<std::array<int, 2>>>> pairs(
            K, std::vector<std::vector<std::array<int, 2>>>(G));
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t k = assignment[o][i];
            const int y = (*meta.data)[i].label;
            (y == 1 ? n1 : n0)[k] += 1;
            for (std::size_t f = 0; f < G; ++f) {
                pairs[k][f].push_back({y, predict_label(meta.scores[i][f])});
            }
        }
        tables[o].resize(K);
        for (std::size_t k = 0; k < K; ++k) {
            tables[o][k].prior = prior_from_counts(n0[k], n1[k]);
            tables[o][k].confusion.reserve(G);
            for (std::size_t f = 0; f < G; ++f) {
                tables[o][k].confusion.push_back(confusion_from_pairs(pairs[k][f]));
            }
        }
    }
    return tables;
}

inline std::vector<std::vector<double>> prefixes(const Dataset& d, std::size_t t) {
    std::vector<std::vector<double>> out;
    out.reserve(d.size());
    for (const auto& s : d.series()) out.push_back(truncate(s, t));
    return out;
}

inline void require_meta(const Dataset& meta, std::size_t K) {
    if (meta.empty()) throw DataError("meta-training subset is empty");
    if (K == 0) throw DataError("number of groups must be at least 1");
    if (meta.size() < K) {
        throw DataError("meta-training subset has " + std::to_string(meta.size()) +
                        " series, fewer than K=" + std::to_string(K));
    }
}

} // namespace detail

// Groups from k-means on full-length meta series; confusion tables use the
// hard nearest-centroid assignment.
inline TriggerModel train_economy_k(const ScoredSet& meta,
                                    std::shared_ptr<const ClassifierChain> chain, std::size_t K,
                                    std::uint64_t seed, const CostModel& cost) {
    detail::require_meta(*meta.data, K);
    const std::size_t G = chain->size();
    auto fit = kmeans_fit(detail::prefixes(*meta.data, meta.data->length()), K, seed);
    TriggerModel m;
    m.variant = Variant::K;
    m.k = K;
    m.cost = cost;
    m.chain = std::move(chain);
    std::vector<std::vector<std::size_t>> assignment(G, fit.assignment);
    m.tables = detail::build_group_tables(meta, assignment, std::vector<std::size_t>(G, K));
    m.clusters.push_back(std::move(fit.model));
    m.check();
    return m;
}

// One k-means partition per grid step, fitted on prefixes of that length. The
// table for origin t conditions on the group formed at t.
inline TriggerModel train_economy_multi_k(const ScoredSet& meta,
                                          std::shared_ptr<const ClassifierChain> chain,
                                          std::size_t K, std::uint64_t seed,
                                          const CostModel& cost) {
    detail::require_meta(*meta.data, K);
    const std::size_t G = chain->size();
    TriggerModel m;
    m.variant = Variant::MultiK;
    m.k = K;
    m.cost = cost;
    std::vector<std::vector<std::size_t>> assignment;
    for (std::size_t o = 0; o < G; ++o) {
        auto fit = kmeans_fit(detail::prefixes(*meta.data, chain->grid()[o]), K, seed);
        assignment.push_back(std::move(fit.assignment));
        m.clusters.push_back(std::move(fit.model));
    }
    m.tables = detail::build_group_tables(meta, assignment, std::vector<std::size_t>(G, K));
    m.chain = std::move(chain);
    m.check();
    return m;
}

namespace detail {

inline void fit_intervals(TriggerModel& m, const ScoredSet& meta, std::size_t K,
                          std::vector<std::vector<std::size_t>>& assignment) {
    const std::size_t G = m.chain->size();
    std::vector<std::size_t> counts;
    for (std::size_t o = 0; o < G; ++o) {
        std::vector<double> s;
        s.reserve(meta.size());
        for (const auto& row : meta.scores) s.push_back(row[o]);
        auto part = equal_frequency_partition(s, K);
        std::vector<std::size_t> a(meta.size());
        for (std::size_t i = 0; i < meta.size(); ++i) a[i] = part.locate(meta.scores[i][o]);
        assignment.push_back(std::move(a));
        counts.push_back(part.size());
        m.intervals.push_back(std::move(part));
    }
    m.tables = build_group_tables(meta, assignment, counts);
}

} // namespace detail

// Groups are equal-frequency bins of h_t's confidence on the meta series.
inline TriggerModel train_economy_gamma_lite(const ScoredSet& meta,
                                             std::shared_ptr<const ClassifierChain> chain,
                                             std::size_t K, const CostModel& cost) {
    detail::require_meta(*meta.data, K);
    TriggerModel m;
    m.variant = Variant::GammaLite;
    m.k = K;
    m.cost = cost;
    m.chain = std::move(chain);
    std::vector<std::vector<std::size_t>> assignment;
    detail::fit_intervals(m, meta, K, assignment);
    m.check();
    return m;
}

// Gamma-lite partitions plus Markov transition matrices between the
// confidence intervals of consecutive grid steps (+1 smoothing per cell).
inline TriggerModel train_economy_gamma(const ScoredSet& meta,
                                        std::shared_ptr<const ClassifierChain> chain,
                                        std::size_t K, const CostModel& cost) {
    detail::require_meta(*meta.data, K);
    TriggerModel m;
    m.variant = Variant::Gamma;
    m.k = K;
    m.cost = cost;
    m.chain = std::move(chain);
    std::vector<std::vector<std::size_t>> assignment;
    detail::fit_intervals(m, meta, K, assignment);
    const std::size_t G = m.chain->size();
    for (std::size_t o = 0; o + 1 < G; ++o) {
        const std::size_t R = m.intervals[o].size();
        const std::size_t C = m.intervals[o + 1].size();
        std::vector<std::vector<double>> counts(R, std::vector<double>(C, kSmoothing));
        for (std::size_t i = 0; i < meta.size(); ++i) {
            counts[assignment[o][i]][assignment[o + 1][i]] += 1.0;
        }
        for (auto& row : counts) {
            double total = 0.0;
            for (double v : row) total += v;
            for (auto& v : row) v /= total;
        }
        m.transitions.push_back({std::move(counts)});
    }
    m.check();
    return m;
}

inline TriggerModel train_economy(Variant v, const ScoredSet& meta,
                                  std::shared_ptr<const ClassifierChain> chain, std::size_t K,
                                  std::uint64_t seed, const CostModel& cost) {
    switch (v) {
    case Variant::K: return train_economy_k(meta, std::move(chain), K, seed, cost);
    case Variant::MultiK: return train_economy_multi_k(meta, std::move(chain), K, seed, cost);
    case Variant::GammaLite: return train_economy_gamma_lite(meta, std::move(chain), K, cost);
    case Variant::Gamma: return train_economy_gamma(meta, std::move(chain), K, cost);
    }
    throw ModelError("unknown variant");
}

// Convenience overloads scoring subset b of a split.
inline TriggerModel train_economy(Variant v, const SplitBundle& splits,
                                  std::shared_ptr<const ClassifierChain> chain, std::size_t K,
                                  std::uint64_t seed, const CostModel& cost) {
    const auto meta = score_set(*chain, splits.meta_train);
    return train_economy(v, meta, std::move(chain), K, seed, cost);
}

namespace detail {

inline double misclassification_term(const TriggerModel& m, const GroupTable& g,
                                     std::size_t future) {
    const auto& conf = g.confusion.at(future);
    double acc = 0.0;
    for (int y = 0; y < 2; ++y) {
        double inner = 0.0;
        for (int yhat = 0; yhat < 2; ++yhat) inner += conf(y, yhat) * m.cost.mis(y, yhat);
        acc += g.prior[y] * inner;
    }
    return acc;
}

inline void check_offsets(const TriggerModel& m, std::size_t origin, std::size_t future) {
    if (origin >= m.grid().size() || future >= m.grid().size() || future < origin) {
        throw ModelError("origin/future grid positions out of range");
    }
}

} // namespace detail

// Expected cost of deciding at grid position `future` seen from `origin`:
//   sum_k P(g_k|x_t) sum_y P(y|g_k) sum_yhat P_{t+tau}(yhat|y,g_k) C_m(yhat|y) + C_d(t+tau)
// with group membership and priors frozen at the origin.
inline double expected_cost_grouped_at(const TriggerModel& m, std::span<const double> membership,
                                       std::size_t origin, std::size_t future) {
    detail::check_offsets(m, origin, future);
    const auto& groups = m.tables[origin];
    if (membership.size() != groups.size()) {
        throw ModelError("membership vector has " + std::to_string(membership.size()) +
                         " entries, the model has " + std::to_string(groups.size()) + " groups");
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < groups.size(); ++k) {
        if (membership[k] == 0.0) continue;
        acc += membership[k] * detail::misclassification_term(m, groups[k], future);
    }
    return acc + m.cost.delay(m.grid()[future]);
}

// Timestamp form: t and t + tau must both be on the grid.
inline double expected_cost_grouped(const TriggerModel& m, std::span<const double> membership,
                                    std::size_t t, std::size_t tau) {
    return expected_cost_grouped_at(m, membership, m.grid().index_of(t),
                                    m.grid().index_of(t + tau));
}

inline std::vector<double> propagate(std::span<const double> gamma,
                                     std::span<const TransitionMatrix> matrices) {
    std::vector<double> cur(gamma.begin(), gamma.end());
    for (const auto& M : matrices) {
        if (M.rows() != cur.size()) throw ModelError("gamma vector does not match the matrix");
        std::vector<double> next(M.cols(), 0.0);
        for (std::size_t i = 0; i < M.rows(); ++i) {
            if (cur[i] == 0.0) continue;
            for (std::size_t j = 0; j < M.cols(); ++j) next[j] += cur[i] * M(i, j);
        }
        cur = std::move(next);
    }
    return cur;
}

// gamma_{t+tau} = gamma_t^T * M_t^{t+1} * ... * M_{t+tau-1}^{t+tau}, positions on the grid.
inline std::vector<double> propagate_gamma_at(const TriggerModel& m, std::span<const double> gamma,
                                              std::size_t origin, std::size_t future) {
    detail::check_offsets(m, origin, future);
    if (m.variant != Variant::Gamma) throw ModelError("only economy-gamma has transition matrices");
    return propagate(gamma, std::span<const TransitionMatrix>(m.transitions)
                                .subspan(origin, future - origin));
}

inline std::vector<double> propagate_gamma(const TriggerModel& m, std::span<const double> gamma,
                                           std::size_t t, std::size_t tau) {
    return propagate_gamma_at(m, gamma, m.grid().index_of(t), m.grid().index_of(t + tau));
}

// Future cost with the confidence distribution propagated to t+tau and the
// interval-conditioned tables of t+tau.
inline double expected_cost_gamma_at(const TriggerModel& m, std::span<const double> gamma,
                                     std::size_t origin, std::size_t future) {
    const auto g = propagate_gamma_at(m, gamma, origin, future);
    const auto& groups = m.tables[future];
    double acc = 0.0;
    for (std::size_t j = 0; j < groups.size(); ++j) {
        if (g[j] == 0.0) continue;
        acc += g[j] * detail::misclassification_term(m, groups[j], future);
    }
    return acc + m.cost.delay(m.grid()[future]);
}

inline double expected_cost_gamma(const TriggerModel& m, std::span<const double> gamma,
                                  std::size_t t, std::size_t tau) {
    return expected_cost_gamma_at(m, gamma, m.grid().index_of(t), m.grid().index_of(t + tau));
}

// Group probabilities of a prefix at grid position `origin`: cluster
// membership for the k-means variants, a one-hot confidence interval for the
// gamma variants.
inline std::vector<double> current_membership(const TriggerModel& m, std::size_t origin,
                                              std::span<const double> prefix) {
    switch (m.variant) {
    case Variant::K: return membership(m.clusters.front(), prefix);
    case Variant::MultiK: return membership(m.clusters.at(origin), prefix);
    case Variant::GammaLite:
    case Variant::Gamma: {
        const double p = m.chain->at_index(origin).score(prefix);
        std::vector<double> out(m.intervals.at(origin).size(), 0.0);
        out[m.intervals[origin].locate(p)] = 1.0;
        return out;
    }
    }
    throw ModelError("unknown variant");
}

// f_tau at grid position `origin` for every candidate future position,
// in increasing order starting with `origin` itself.
inline std::vector<double> future_costs(const TriggerModel& m, std::size_t origin,
                                        std::span<const double> member, Horizon horizon) {
    const std::size_t G = m.grid().size();
    const std::size_t last = horizon == Horizon::Full ? G - 1 : std::min(origin + 1, G - 1);
    std::vector<double> out;
    out.reserve(last - origin + 1);
    for (std::size_t f = origin; f <= last; ++f) {
        out.push_back(m.variant == Variant::Gamma ? expected_cost_gamma_at(m, member, origin, f)
                                                  : expected_cost_grouped_at(m, member, origin, f));
    }
    return out;
}

struct Decision {
    std::size_t trigger_time = 0;  // t-hat*, on the grid
    std::size_t grid_index = 0;
    int label = 0;
    double score = 0.0;         // h_{t-hat*}(x) = P(y=1)
    std::vector<double> costs;  // f_tau evaluated at the trigger step
};

// Online decision rule. Feed prefixes at successive grid timestamps; the
// first call whose best future offset is 0 (ties resolved towards 0) or that
// reaches T returns the decision.
class Decider {
public:
    explicit Decider(const TriggerModel& model) : model_(&model) { model.check(); }

    std::optional<Decision> observe(std::span<const double> prefix) {
        if (decision_) {
            throw ModelError("series already triggered");
        }
        const auto& grid = model_->grid();
        if (next_ >= grid.size()) {
            throw ModelError("no grid step left");
        }
        if (prefix.size() != grid[next_]) {
            throw ModelError("expected a prefix of length " + std::to_string(grid[next_]) +
                             ", got " + std::to_string(prefix.size()));
        }
        const std::size_t origin = next_++;
        const auto member = current_membership(*model_, origin, prefix);
        auto costs = future_costs(*model_, origin, member, model_->horizon);
        const auto best = static_cast<std::size_t>(
            std::min_element(costs.begin(), costs.end()) - costs.begin());
        if (best == 0 || origin + 1 == grid.size()) {
            Decision d;
            d.trigger_time = grid[origin];
            d.grid_index = origin;
            d.score = model_->chain->at_index(origin).score(prefix);
            d.label = predict_label(d.score);
            d.costs = std::move(costs);
            decision_ = d;
        }
        return decision_;
    }

    bool triggered() const noexcept { return decision_.has_value(); }

    const Decision& result() const {
        if (!decision_) throw ModelError("stream ended before a decision was triggered");
        return *decision_;
    }

private:
    const TriggerModel* model_;
    std::size_t next_ = 0;
    std::optional<Decision> decision_;
};

inline Decision decide(const TriggerModel& m, const LabeledSeries& s) {
    Decider d(m);
    for (std::size_t t : m.grid().timestamps()) {
        if (d.observe(prefix_view(s, t))) break;
    }
    return d.result();
}

} // namespace economy
