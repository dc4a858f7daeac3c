#pragma once

#include <functional>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "economy/classifiers.hpp"
#include "economy/dataset.hpp"
#include "economy/economy.hpp"

namespace testing_helpers {

using namespace economy;

// Classifier returning whatever the callback says about the prefix.
class StubClassifier final : public ProbClassifier {
public:
    StubClassifier(std::size_t t, std::function<double(std::span<const double>)> f)
        : t_(t), f_(std::move(f)) {}

    std::size_t timestamp() const noexcept override { return t_; }
    double score(std::span<const double> prefix) const override {
        check_length(prefix);
        return f_(prefix);
    }

private:
    std::size_t t_;
    std::function<double(std::span<const double>)> f_;
};

// Same callback at every grid step; it also receives the prefix length.
inline std::shared_ptr<const ClassifierChain> stub_chain(
    const TimestampGrid& grid, std::function<double(std::span<const double>)> f) {
    std::vector<std::shared_ptr<const ProbClassifier>> models;
    for (std::size_t t : grid.timestamps()) models.push_back(std::make_shared<StubClassifier>(t, f));
    return std::make_shared<const ClassifierChain>(grid, std::move(models));
}

inline std::shared_ptr<const ClassifierChain> constant_chain(const TimestampGrid& grid, double p) {
    return stub_chain(grid, [p](std::span<const double>) { return p; });
}

inline std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> v(n);
    double s = 0.0;
    for (auto& x : v) s += (x = e(rng));
    for (auto& x : v) x /= s;
    return v;
}

inline ConfusionMatrix random_confusion(std::mt19937_64& rng) {
    ConfusionMatrix c;
    for (int y = 0; y < 2; ++y) {
        auto r = random_simplex(rng, 2);
        c.p[y] = {r[0], r[1]};
    }
    return c;
}

// A structurally valid model with random tables; scores come from a chain
// returning a constant 0.5, so only the tables matter.
inline TriggerModel random_model(std::mt19937_64& rng, Variant v, std::size_t K, std::size_t G,
                                 double alpha) {
    std::vector<std::size_t> ts;
    for (std::size_t i = 1; i <= G; ++i) ts.push_back(i);
    TimestampGrid grid(ts, G);
    TriggerModel m;
    m.variant = v;
    m.k = K;
    m.cost = CostModel(alpha, G);
    m.chain = constant_chain(grid, 0.5);
    m.tables.assign(G, std::vector<GroupTable>(K));
    for (auto& row : m.tables) {
        for (auto& g : row) {
            auto pr = random_simplex(rng, 2);
            g.prior = {pr[0], pr[1]};
            for (std::size_t f = 0; f < G; ++f) g.confusion.push_back(random_confusion(rng));
        }
    }
    if (v == Variant::K || v == Variant::MultiK) {
        const std::size_t nmodels = v == Variant::K ? 1 : G;
        for (std::size_t i = 0; i < nmodels; ++i) {
            ClusterModel c;
            std::normal_distribution<double> n(0.0, 1.0);
            c.centroids.assign(K, std::vector<double>(G));
            for (auto& row : c.centroids)
                for (auto& x : row) x = n(rng);
            m.clusters.push_back(std::move(c));
        }
    } else {
        IntervalPartition p;
        p.bounds.clear();
        for (std::size_t j = 0; j <= K; ++j) p.bounds.push_back(static_cast<double>(j) / K);
        m.intervals.assign(G, p);
        if (v == Variant::Gamma) {
            for (std::size_t i = 0; i + 1 < G; ++i) {
                TransitionMatrix M;
                for (std::size_t r = 0; r < K; ++r) M.m.push_back(random_simplex(rng, K));
                m.transitions.push_back(std::move(M));
            }
        }
    }
    m.check();
    return m;
}

inline Dataset make_dataset(const std::vector<std::vector<double>>& values, const std::vector<int>& labels) {
    std::vector<LabeledSeries> s;
    for (std::size_t i = 0; i < values.size(); ++i) s.push_back({values[i], labels[i]});
    return Dataset(std::move(s));
}

} // namespace testing_helpers
