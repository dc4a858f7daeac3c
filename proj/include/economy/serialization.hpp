#pragma once

#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "economy/baselines.hpp"
#include "economy/classifiers.hpp"
#include "economy/clustering.hpp"
#include "economy/cost.hpp"
#include "economy/economy.hpp"
#include "economy/errors.hpp"

namespace economy {

using json = nlohmann::json;

inline constexpr int kChainFormatVersion = 1;
inline constexpr int kModelFormatVersion = 1;
inline constexpr const char* kChainFormat = "economy-classifier-chain";
inline constexpr const char* kModelFormat = "economy-trigger-model";

namespace detail {

inline json features_to_json(const FeatureVector& f) { return json(std::vector<double>(f.begin(), f.end())); }

inline FeatureVector features_from_json(const json& j) {
    const auto v = j.get<std::vector<double>>();
    if (v.size() != kFeatureCount) throw ModelError("feature vector of the wrong size in document");
    FeatureVector out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
}

inline void expect_format(const json& j, const char* format, int version) {
    if (!j.is_object() || j.value("format", "") != format) {
        throw ModelError(std::string("document is not a ") + format);
    }
    if (j.value("version", 0) != version) {
        throw ModelError(std::string(format) + " version " + std::to_string(j.value("version", 0)) +
                         " is not supported");
    }
}

} // namespace detail

inline json to_json(const CostModel& c) {
    return {{"alpha", c.alpha},
            {"length", c.length},
            {"misclassification",
             {{c.misclassification[0][0], c.misclassification[0][1]},
              {c.misclassification[1][0], c.misclassification[1][1]}}}};
}

inline CostModel cost_from_json(const json& j) {
    CostModel c;
    c.alpha = j.at("alpha").get<double>();
    c.length = j.at("length").get<std::size_t>();
    const auto& m = j.at("misclassification");
    for (int y = 0; y < 2; ++y)
        for (int k = 0; k < 2; ++k) c.misclassification[y][k] = m.at(y).at(k).get<double>();
    c.validate();
    return c;
}

inline json to_json(const SRParams& p) { return {{"g1", p.g1}, {"g2", p.g2}, {"g3", p.g3}}; }

inline SRParams sr_params_from_json(const json& j) {
    return {j.at("g1").get<double>(), j.at("g2").get<double>(), j.at("g3").get<double>()};
}

inline json to_json(const ClassifierChain& chain) {
    json classifiers = json::array();
    for (const auto& m : chain.models()) {
        const auto* lr = dynamic_cast<const LogisticClassifier*>(m.get());
        if (!lr) throw ModelError("only logistic classifiers can be serialised");
        classifiers.push_back({{"t", lr->timestamp()},
                               {"weights", detail::features_to_json(lr->weights())},
                               {"bias", lr->bias()},
                               {"feature_mean", detail::features_to_json(lr->feature_mean())},
                               {"feature_scale", detail::features_to_json(lr->feature_scale())}});
    }
    return {{"format", kChainFormat},
            {"version", kChainFormatVersion},
            {"length", chain.grid().length()},
            {"grid", chain.grid().timestamps()},
            {"features", std::vector<std::string>(kFeatureNames.begin(), kFeatureNames.end())},
            {"classifiers", classifiers}};
}

inline ClassifierChain chain_from_json(const json& j) {
    detail::expect_format(j, kChainFormat, kChainFormatVersion);
    TimestampGrid grid(j.at("grid").get<std::vector<std::size_t>>(), j.at("length").get<std::size_t>());
    std::vector<std::shared_ptr<const ProbClassifier>> models;
    for (const auto& c : j.at("classifiers")) {
        models.push_back(std::make_shared<LogisticClassifier>(
            c.at("t").get<std::size_t>(), detail::features_from_json(c.at("weights")),
            c.at("bias").get<double>(), detail::features_from_json(c.at("feature_mean")),
            detail::features_from_json(c.at("feature_scale"))));
    }
    return ClassifierChain(std::move(grid), std::move(models));
}

inline json to_json(const TriggerModel& m) {
    m.check();
    json clusters = json::array();
    for (const auto& c : m.clusters) {
        clusters.push_back({{"seed", c.seed},
                            {"membership", c.membership_kind == MembershipKind::Hard ? "hard" : "softmin"},
                            {"centroids", c.centroids}});
    }
    json intervals = json::array();
    for (const auto& p : m.intervals) intervals.push_back(p.bounds);
    json tables = json::array();
    for (const auto& row : m.tables) {
        json jr = json::array();
        for (const auto& g : row) {
            json conf = json::array();
            for (const auto& c : g.confusion) {
                conf.push_back({{"p", c.p}, {"counts", c.counts}});
            }
            jr.push_back({{"prior", g.prior}, {"confusion", conf}});
        }
        tables.push_back(std::move(jr));
    }
    json transitions = json::array();
    for (const auto& t : m.transitions) transitions.push_back(t.m);
    return {{"format", kModelFormat},
            {"version", kModelFormatVersion},
            {"variant", variant_name(m.variant)},
            {"horizon", m.horizon == Horizon::Full ? "full" : "myopic"},
            {"k", m.k},
            {"cost", to_json(m.cost)},
            {"chain", to_json(*m.chain)},
            {"clusters", clusters},
            {"intervals", intervals},
            {"tables", tables},
            {"transitions", transitions}};
}

inline TriggerModel model_from_json(const json& j) {
    detail::expect_format(j, kModelFormat, kModelFormatVersion);
    TriggerModel m;
    const auto v = parse_variant(j.at("variant").get<std::string>());
    if (!v) throw ModelError("unknown variant '" + j.at("variant").get<std::string>() + "'");
    m.variant = *v;
    const auto horizon = j.at("horizon").get<std::string>();
    if (horizon != "full" && horizon != "myopic") throw ModelError("unknown horizon '" + horizon + "'");
    m.horizon = horizon == "full" ? Horizon::Full : Horizon::Myopic;
    m.k = j.at("k").get<std::size_t>();
    m.cost = cost_from_json(j.at("cost"));
    m.chain = std::make_shared<const ClassifierChain>(chain_from_json(j.at("chain")));
    for (const auto& c : j.at("clusters")) {
        ClusterModel cm;
        cm.seed = c.at("seed").get<std::uint64_t>();
        cm.membership_kind = c.at("membership").get<std::string>() == "hard" ? MembershipKind::Hard
                                                                             : MembershipKind::Softmin;
        cm.centroids = c.at("centroids").get<std::vector<std::vector<double>>>();
        m.clusters.push_back(std::move(cm));
    }
    for (const auto& p : j.at("intervals")) {
        m.intervals.push_back({p.get<std::vector<double>>()});
    }
    for (const auto& row : j.at("tables")) {
        std::vector<GroupTable> groups;
        for (const auto& g : row) {
            GroupTable gt;
            gt.prior = g.at("prior").get<ClassPrior>();
            for (const auto& c : g.at("confusion")) {
                ConfusionMatrix cm;
                cm.p = c.at("p").get<decltype(cm.p)>();
                cm.counts = c.at("counts").get<decltype(cm.counts)>();
                gt.confusion.push_back(cm);
            }
            groups.push_back(std::move(gt));
        }
        m.tables.push_back(std::move(groups));
    }
    for (const auto& t : j.at("transitions")) {
        m.transitions.push_back({t.get<std::vector<std::vector<double>>>()});
    }
    m.check();
    return m;
}

inline void save_json(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ModelError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

inline json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ModelError("'" + path + "' is not valid JSON: " + e.what());
    }
}

} // namespace economy
