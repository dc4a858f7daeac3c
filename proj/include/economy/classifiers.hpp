#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "economy/dataset.hpp"
#include "economy/errors.hpp"
#include "economy/features.hpp"

namespace economy {

// A probabilistic binary scorer bound to one truncation length. The trigger
// strategies only ever see this interface, so any calibrated model can stand
// in for the built-in logistic one.
class ProbClassifier {
public:
    virtual ~ProbClassifier() = default;

    virtual std::size_t timestamp() const noexcept = 0;

    // Probability of class 1 for a prefix of exactly timestamp() values.
    virtual double score(std::span<const double> prefix) const = 0;

protected:
    void check_length(std::span<const double> prefix) const {
        if (prefix.size() != timestamp()) {
            throw ModelError("classifier for t=" + std::to_string(timestamp()) +
                             " received a prefix of length " + std::to_string(prefix.size()));
        }
    }
};

inline int predict_label(double score) noexcept { return score >= 0.5 ? 1 : 0; }

inline double sigmoid(double z) noexcept {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

struct LogisticConfig {
    std::size_t iterations = 500;
    double learning_rate = 0.5;
    double l2 = 1e-3;
};

// L2-regularised logistic regression over z-scored features.
class LogisticClassifier final : public ProbClassifier {
public:
    LogisticClassifier(std::size_t timestamp, FeatureVector weights, double bias,
                       FeatureVector feature_mean, FeatureVector feature_scale)
        : t_(timestamp),
          weights_(weights),
          bias_(bias),
          mean_(feature_mean),
          scale_(feature_scale) {}

    std::size_t timestamp() const noexcept override { return t_; }

    double score(std::span<const double> prefix) const override {
        check_length(prefix);
        return score_features(extract_features(prefix));
    }

    double activation(const FeatureVector& f) const noexcept {
        double z = bias_;
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
            z += weights_[j] * (f[j] - mean_[j]) / scale_[j];
        }
        return z;
    }

    double score_features(const FeatureVector& f) const noexcept { return sigmoid(activation(f)); }

    const FeatureVector& weights() const noexcept { return weights_; }
    double bias() const noexcept { return bias_; }
    const FeatureVector& feature_mean() const noexcept { return mean_; }
    const FeatureVector& feature_scale() const noexcept { return scale_; }

private:
    std::size_t t_;
    FeatureVector weights_;
    double bias_;
    FeatureVector mean_;
    FeatureVector scale_;
};

// Full-batch gradient descent from zero weights; deterministic.
inline LogisticClassifier train_logistic(std::size_t timestamp,
                                         const std::vector<FeatureVector>& features,
                                         const std::vector<int>& labels,
                                         const LogisticConfig& cfg = {}) {
    const std::size_t n = features.size();
    if (n == 0 || labels.size() != n) {
        throw DataError("logistic training needs matching, non-empty features and labels");
    }
    std::size_t positives = 0;
    for (int y : labels) positives += y == 1 ? 1 : 0;
    if (positives == 0 || positives == n) {
        throw DataError("training set at t=" + std::to_string(timestamp) + " has a single class");
    }

    FeatureVector mean{}, scale{};
    for (const auto& f : features) {
        for (std::size_t j = 0; j < kFeatureCount; ++j) mean[j] += f[j];
    }
    for (auto& m : mean) m /= static_cast<double>(n);
    for (const auto& f : features) {
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
            scale[j] += (f[j] - mean[j]) * (f[j] - mean[j]);
        }
    }
    for (auto& s : scale) {
        s = std::sqrt(s / static_cast<double>(n));
        if (!(s > 1e-12)) s = 1.0;  // constant feature
    }

    std::vector<FeatureVector> z(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
            z[i][j] = (features[i][j] - mean[j]) / scale[j];
        }
    }

    FeatureVector w{};
    double b = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        FeatureVector grad{};
        double grad_b = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double a = b;
            for (std::size_t j = 0; j < kFeatureCount; ++j) a += w[j] * z[i][j];
            const double err = sigmoid(a) - static_cast<double>(labels[i]);
            for (std::size_t j = 0; j < kFeatureCount; ++j) grad[j] += err * z[i][j];
            grad_b += err;
        }
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
            w[j] -= cfg.learning_rate * (grad[j] * inv_n + cfg.l2 * w[j]);
        }
        b -= cfg.learning_rate * grad_b * inv_n;
    }
    return LogisticClassifier(timestamp, w, b, mean, scale);
}

// One classifier per grid timestamp.
class ClassifierChain {
public:
    ClassifierChain() = default;

    ClassifierChain(TimestampGrid grid, std::vector<std::shared_ptr<const ProbClassifier>> models)
        : grid_(std::move(grid)), models_(std::move(models)) {
        if (models_.size() != grid_.size()) {
            throw ModelError("classifier chain does not cover the timestamp grid");
        }
        for (std::size_t i = 0; i < models_.size(); ++i) {
            if (!models_[i] || models_[i]->timestamp() != grid_[i]) {
                throw ModelError("classifier " + std::to_string(i) +
                                 " is missing or bound to the wrong timestamp");
            }
        }
    }

    const TimestampGrid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return models_.size(); }

    const ProbClassifier& at_index(std::size_t i) const { return *models_.at(i); }
    const ProbClassifier& at_time(std::size_t t) const { return at_index(grid_.index_of(t)); }
    const std::vector<std::shared_ptr<const ProbClassifier>>& models() const noexcept {
        return models_;
    }

    // Score of series `s` truncated at the i-th grid timestamp.
    double score(const LabeledSeries& s, std::size_t i) const {
        return models_.at(i)->score(prefix_view(s, grid_[i]));
    }

private:
    TimestampGrid grid_;
    std::vector<std::shared_ptr<const ProbClassifier>> models_;
};

inline ClassifierChain train_chain(const Dataset& train, const TimestampGrid& grid,
                                   const LogisticConfig& cfg = {}) {
    if (!train.is_binary()) {
        throw DataError("classifier training set must contain exactly the classes {0, 1}");
    }
    if (grid.length() != train.length()) {
        throw DataError("grid length does not match the series length");
    }
    std::vector<int> labels;
    for (const auto& s : train.series()) labels.push_back(s.label);

    std::vector<std::shared_ptr<const ProbClassifier>> models;
    for (std::size_t t : grid.timestamps()) {
        std::vector<FeatureVector> feats;
        feats.reserve(train.size());
        for (const auto& s : train.series()) {
            feats.push_back(extract_features(prefix_view(s, t)));
        }
        models.push_back(std::make_shared<LogisticClassifier>(train_logistic(t, feats, labels, cfg)));
    }
    return ClassifierChain(grid, std::move(models));
}

// Rows indexed by true class y, columns by prediction: P(yhat | y).
struct ConfusionMatrix {
    std::array<std::array<double, 2>, 2> p{{{0.5, 0.5}, {0.5, 0.5}}};
    std::array<std::array<std::size_t, 2>, 2> counts{};

    double operator()(int y, int yhat) const { return p[y][yhat]; }
};

using ClassPrior = std::array<double, 2>;

inline constexpr double kSmoothing = 1.0;

// P(yhat|y) from (y, yhat) pairs, +1 per cell.
inline ConfusionMatrix confusion_from_pairs(std::span<const std::array<int, 2>> pairs) {
    ConfusionMatrix m;
    for (const auto& [y, yhat] : pairs) {
        ++m.counts[y][yhat];
    }
    for (int y = 0; y < 2; ++y) {
        const double row = static_cast<double>(m.counts[y][0] + m.counts[y][1]) + 2 * kSmoothing;
        for (int k = 0; k < 2; ++k) {
            m.p[y][k] = (static_cast<double>(m.counts[y][k]) + kSmoothing) / row;
        }
    }
    return m;
}

inline ClassPrior prior_from_counts(std::size_t n0, std::size_t n1) {
    const double total = static_cast<double>(n0 + n1) + 2 * kSmoothing;
    return {(static_cast<double>(n0) + kSmoothing) / total,
            (static_cast<double>(n1) + kSmoothing) / total};
}

using SeriesFilter = std::function<bool(std::size_t index, const LabeledSeries&)>;

inline ConfusionMatrix estimate_confusion(const ProbClassifier& c, const Dataset& eval,
                                          const SeriesFilter& keep = {}) {
    std::vector<std::array<int, 2>> pairs;
    for (std::size_t i = 0; i < eval.size(); ++i) {
        const auto& s = eval[i];
        if (keep && !keep(i, s)) continue;
        const double p = c.score(prefix_view(s, c.timestamp()));
        pairs.push_back({s.label, predict_label(p)});
    }
    return confusion_from_pairs(pairs);
}

inline ClassPrior estimate_priors(const Dataset& eval, const SeriesFilter& keep = {}) {
    std::size_t n0 = 0, n1 = 0;
    for (std::size_t i = 0; i < eval.size(); ++i) {
        const auto& s = eval[i];
        if (keep && !keep(i, s)) continue;
        (s.label == 1 ? n1 : n0) += 1;
    }
    return prior_from_counts(n0, n1);
}

// Scores of every series at every grid timestamp: [series][grid index].
inline std::vector<std::vector<double>> score_matrix(const ClassifierChain& chain,
                                                     const Dataset& d) {
    std::vector<std::vector<double>> out(d.size(), std::vector<double>(chain.size()));
    for (std::size_t i = 0; i < d.size(); ++i) {
        for (std::size_t g = 0; g < chain.size(); ++g) {
            out[i][g] = chain.score(d[i], g);
        }
    }
    return out;
}

} // namespace economy
