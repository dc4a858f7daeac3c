#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "economy/baselines.hpp"
#include "economy/classifiers.hpp"
#include "economy/cost.hpp"
#include "economy/dataset.hpp"
#include "economy/economy.hpp"
#include "economy/errors.hpp"
#include "economy/evaluation.hpp"
#include "economy/serialization.hpp"
#include "economy/stats.hpp"

namespace economy {

namespace fs = std::filesystem;

// Low, medium and high delay-cost ranges.
inline const std::vector<double> kDefaultAlphas{
    1e-4, 2e-4, 4e-4, 8e-4, 1e-3, 3e-3, 5e-3, 8e-3,
    0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09,
    0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};

inline const std::vector<std::string> kDefaultMethods{
    "economy-k", "economy-multi-k", "economy-gamma-lite", "economy-gamma", "sr"};

// A method name is a base ("economy-gamma", "sr") with optional modifiers:
// "+myopic" restricts the horizon to the next grid step, "+k1" pins K to 1.
struct MethodSpec {
    std::string name;
    bool is_sr = false;
    Variant variant = Variant::Gamma;
    Horizon horizon = Horizon::Full;
    bool force_k1 = false;
};

inline MethodSpec parse_method(const std::string& name) {
    MethodSpec m;
    m.name = name;
    std::string base = name;
    std::vector<std::string> mods;
    for (auto pos = base.find('+'); pos != std::string::npos; pos = base.find('+')) {
        auto rest = base.substr(pos + 1);
        base = base.substr(0, pos);
        std::stringstream ss(rest);
        std::string mod;
        while (std::getline(ss, mod, '+')) mods.push_back(mod);
    }
    if (base == "sr") {
        m.is_sr = true;
        if (!mods.empty()) throw ConfigError("method 'sr' takes no modifiers");
        return m;
    }
    const auto v = parse_variant(base);
    if (!v) throw ConfigError("unknown method '" + name + "'");
    m.variant = *v;
    for (const auto& mod : mods) {
        if (mod == "myopic") m.horizon = Horizon::Myopic;
        else if (mod == "k1") m.force_k1 = true;
        else throw ConfigError("unknown method modifier '+" + mod + "'");
    }
    return m;
}

struct RunConfig {
    std::vector<std::string> data;
    std::uint64_t seed = 0;
    std::vector<double> alphas = kDefaultAlphas;
    std::vector<std::string> methods = kDefaultMethods;
    std::size_t k_min = 1, k_max = 20;
    double grid_frac = 0.05;
    LogisticConfig classifier;
    std::string out = "results";
    std::size_t workers = 1;
    bool myopic = false;  // add a "+myopic" twin for every economy method

    void validate() const {
        if (alphas.empty()) throw ConfigError("no alpha values");
        for (double a : alphas) {
            if (!(a >= 0.0)) throw ConfigError("alpha values must be non-negative");
        }
        if (methods.empty()) throw ConfigError("no methods");
        for (const auto& m : methods) parse_method(m);
        if (k_min < 1 || k_max < k_min) throw ConfigError("invalid K range");
        if (!(grid_frac > 0.0) || grid_frac > 1.0) throw ConfigError("grid fraction must lie in (0, 1]");
        if (workers < 1) throw ConfigError("need at least one worker");
        if (classifier.iterations < 1 || !(classifier.learning_rate > 0.0) || !(classifier.l2 >= 0.0)) {
            throw ConfigError("invalid classifier hyper-parameters");
        }
    }

    std::vector<MethodSpec> method_specs() const {
        std::vector<MethodSpec> out_specs;
        for (const auto& m : methods) out_specs.push_back(parse_method(m));
        if (myopic) {
            for (const auto& m : methods) {
                auto spec = parse_method(m);
                if (spec.is_sr || spec.horizon == Horizon::Myopic) continue;
                out_specs.push_back(parse_method(m + "+myopic"));
            }
        }
        return out_specs;
    }
};

namespace detail {

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    if (!parse_double(trim(v), out)) throw ConfigError("'" + key + "': '" + v + "' is not a number");
    return out;
}

inline std::uint64_t to_uint(const std::string& key, const std::string& v) {
    const auto t = trim(v);
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (ec != std::errc{} || ptr != t.data() + t.size()) {
        throw ConfigError("'" + key + "': '" + v + "' is not a non-negative integer");
    }
    return out;
}

inline bool to_bool(const std::string& key, const std::string& v) {
    const auto t = trim(v);
    if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
    if (t == "0" || t == "false" || t == "no" || t == "off") return false;
    throw ConfigError("'" + key + "': '" + v + "' is not a boolean");
}

// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

} // namespace detail

// Applies `key = value` settings. Keys match the long CLI flags.
inline void apply_setting(RunConfig& c, const std::string& key_in, const std::string& value) {
    const auto key = detail::trim(key_in);
    if (key == "data") c.data = detail::split_list(value);
    else if (key == "seed") c.seed = detail::to_uint(key, value);
    else if (key == "alpha") {
        c.alphas.clear();
        for (const auto& a : detail::split_list(value)) c.alphas.push_back(detail::to_double(key, a));
    } else if (key == "methods") c.methods = detail::split_list(value);
    else if (key == "k-range") {
        const auto v = detail::trim(value);
        auto sep = v.find("..");
        std::size_t skip = 2;
        if (sep == std::string::npos) {
            sep = v.find('-');
            skip = 1;
        }
        if (sep == std::string::npos) {
            c.k_min = c.k_max = detail::to_uint(key, v);
        } else {
            c.k_min = detail::to_uint(key, v.substr(0, sep));
            c.k_max = detail::to_uint(key, v.substr(sep + skip));
        }
    } else if (key == "grid-frac") c.grid_frac = detail::to_double(key, value);
    else if (key == "out") c.out = detail::trim(value);
    else if (key == "workers") c.workers = detail::to_uint(key, value);
    else if (key == "myopic") c.myopic = detail::to_bool(key, value);
    else if (key == "lr-iterations") c.classifier.iterations = detail::to_uint(key, value);
    else if (key == "lr-rate") c.classifier.learning_rate = detail::to_double(key, value);
    else if (key == "lr-l2") c.classifier.l2 = detail::to_double(key, value);
    else throw ConfigError("unknown setting '" + key + "'");
}

// Flat `key = value` file; '#' starts a comment.
inline std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(no) + ": expected key = value");
        }
        out[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
    }
    return out;
}

// Canonical text of every setting that influences results (not out/workers).
inline std::string canonical_config(const RunConfig& c) {
    std::ostringstream s;
    s << "data=";
    for (const auto& d : c.data) s << d << ';';
    s << "|seed=" << c.seed << "|alpha=";
    for (double a : c.alphas) s << detail::fmt(a) << ';';
    s << "|methods=";
    for (const auto& m : c.methods) s << m << ';';
    s << "|k=" << c.k_min << ".." << c.k_max << "|grid=" << detail::fmt(c.grid_frac)
      << "|lr=" << c.classifier.iterations << ',' << detail::fmt(c.classifier.learning_rate) << ','
      << detail::fmt(c.classifier.l2) << "|myopic=" << c.myopic;
    return s.str();
}

inline std::string config_hash(const RunConfig& c) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(detail::fnv1a(canonical_config(c))));
    return buf;
}

struct NamedDataset {
    std::string name;
    Dataset data;
};

// Loads a dataset entry. A directory, or a file named *_TRAIN.<ext> with a
// sibling *_TEST.<ext>, is read as the concatenation of both files.
inline NamedDataset load_dataset_entry(const std::string& entry) {
    fs::path p(entry);
    auto pair_of = [](const fs::path& train) -> std::optional<fs::path> {
        const auto stem = train.stem().string();
        if (stem.size() < 6 || stem.substr(stem.size() - 6) != "_TRAIN") return std::nullopt;
        auto test = train.parent_path() / (stem.substr(0, stem.size() - 6) + "_TEST" +
                                           train.extension().string());
        if (fs::exists(test)) return test;
        return std::nullopt;
    };
    if (fs::is_directory(p)) {
        std::vector<fs::path> trains;
        for (const auto& e : fs::directory_iterator(p)) {
            const auto ext = e.path().extension().string();
            if ((ext == ".tsv" || ext == ".txt") && pair_of(e.path())) trains.push_back(e.path());
        }
        std::sort(trains.begin(), trains.end());
        if (trains.empty()) throw DataError("'" + entry + "' holds no *_TRAIN/*_TEST pair");
        const auto& train = trains.front();
        const auto stem = train.stem().string();
        return {stem.substr(0, stem.size() - 6),
                Dataset::concat(load_ucr_tsv(train.string()), load_ucr_tsv(pair_of(train)->string()))};
    }
    if (auto test = pair_of(p)) {
        const auto stem = p.stem().string();
        return {stem.substr(0, stem.size() - 6),
                Dataset::concat(load_ucr_tsv(p.string()), load_ucr_tsv(test->string()))};
    }
    const auto ext = p.extension().string();
    if (ext != ".tsv" && ext != ".txt") {
        throw DataError("'" + entry + "': expected a .tsv or .txt file");
    }
    return {p.stem().string(), load_ucr_tsv(entry)};
}

struct ResultRow {
    std::string dataset;
    std::string method;
    double alpha = 0.0;
    std::optional<std::size_t> k;
    std::optional<SRParams> sr;
    MetricsReport metrics;
    std::string config_hash;
};

inline constexpr const char* kCsvHeader =
    "dataset,method,alpha,k,sr_g1,sr_g2,sr_g3,avg_cost,earliness,kappa,delta_cost,optimal_cost,config_hash";

inline std::string to_csv_line(const ResultRow& r) {
    std::ostringstream s;
    s << r.dataset << ',' << r.method << ',' << detail::fmt(r.alpha) << ',';
    if (r.k) s << *r.k;
    s << ',';
    if (r.sr) s << detail::fmt(r.sr->g1) << ',' << detail::fmt(r.sr->g2) << ',' << detail::fmt(r.sr->g3);
    else s << ",,";
    s << ',' << detail::fmt(r.metrics.avg_cost) << ',' << detail::fmt(r.metrics.earliness) << ','
      << detail::fmt(r.metrics.kappa) << ',' << detail::fmt(r.metrics.delta_cost) << ','
      << detail::fmt(r.metrics.optimal_cost) << ',' << r.config_hash;
    return s.str();
}

inline std::vector<ResultRow> read_results_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open results '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || detail::trim(line) != kCsvHeader) {
        throw DataError("'" + path + "' is not a results file");
    }
    std::vector<ResultRow> rows;
    std::size_t no = 1;
    while (std::getline(in, line)) {
        ++no;
        if (detail::trim(line).empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (!line.empty() && line.back() == ',') f.emplace_back();
        if (f.size() != 13) throw DataError(path + ":" + std::to_string(no) + ": expected 13 columns");
        ResultRow r;
        r.dataset = f[0];
        r.method = f[1];
        r.alpha = detail::to_double("alpha", f[2]);
        if (!f[3].empty()) r.k = detail::to_uint("k", f[3]);
        if (!f[4].empty()) {
            r.sr = SRParams{detail::to_double("sr_g1", f[4]), detail::to_double("sr_g2", f[5]),
                            detail::to_double("sr_g3", f[6])};
        }
        r.metrics.avg_cost = detail::to_double("avg_cost", f[7]);
        r.metrics.earliness = detail::to_double("earliness", f[8]);
        r.metrics.kappa = detail::to_double("kappa", f[9]);
        r.metrics.delta_cost = detail::to_double("delta_cost", f[10]);
        r.metrics.optimal_cost = detail::to_double("optimal_cost", f[11]);
        r.config_hash = f[12];
        rows.push_back(std::move(r));
    }
    return rows;
}

struct KSelection {
    std::size_t k = 1;
    double tuning_cost = 0.0;
    std::vector<double> costs_by_k;  // index i <-> K = k_min + i
};

// Prepared state of one dataset: splits, chain and cached scores.
struct PreparedDataset {
    std::string name;
    Dataset data;
    SplitBundle splits;
    std::shared_ptr<const ClassifierChain> chain;
    ScoredSet meta, tuning, test;

    PreparedDataset() = default;
    PreparedDataset(const PreparedDataset&) = delete;
    PreparedDataset& operator=(const PreparedDataset&) = delete;
};

inline std::unique_ptr<PreparedDataset> prepare_dataset(std::string name, const Dataset& raw,
                                                        std::uint64_t seed, double grid_frac,
                                                        const LogisticConfig& lr) {
    auto p = std::make_unique<PreparedDataset>();
    p->name = std::move(name);
    p->data = raw.is_binary() ? raw : binarize_majority(raw);
    p->splits = make_splits(p->data, seed);
    const auto grid = TimestampGrid::fractional(p->data.length(), grid_frac);
    p->chain = std::make_shared<const ClassifierChain>(train_chain(p->splits.classifier_train, grid, lr));
    p->meta = score_set(*p->chain, p->splits.meta_train);
    p->tuning = score_set(*p->chain, p->splits.k_tuning);
    p->test = score_set(*p->chain, p->splits.test);
    return p;
}

// Trains one model per K in [k_min, min(k_max, |subset b|)]; tables do not
// depend on alpha, so callers re-cost the same models for every alpha.
inline std::vector<TriggerModel> train_candidates(const PreparedDataset& p, const MethodSpec& m,
                                                  std::size_t k_min, std::size_t k_max,
                                                  std::uint64_t seed) {
    std::vector<TriggerModel> out;
    if (m.force_k1) k_min = k_max = 1;
    k_max = std::min(k_max, p.meta.size());
    for (std::size_t K = k_min; K <= k_max; ++K) {
        auto model = train_economy(m.variant, p.meta, p.chain, K, seed, CostModel(0.0, p.data.length()));
        model.horizon = m.horizon;
        out.push_back(std::move(model));
    }
    if (out.empty()) throw DataError("no admissible K for '" + m.name + "'");
    return out;
}

// AvgCost on subset c for every candidate; the smallest K wins ties.
inline KSelection select_k(std::vector<TriggerModel>& candidates, const Dataset& tuning,
                           const CostModel& cost) {
    KSelection sel;
    double best = std::numeric_limits<double>::infinity();
    for (auto& model : candidates) {
        model.cost = cost;
        const double c = avg_cost(run_economy(model, tuning));
        sel.costs_by_k.push_back(c);
        if (c < best) {
            best = c;
            sel.k = model.k;
            sel.tuning_cost = c;
        }
    }
    return sel;
}

struct DatasetOutcome {
    std::string name;
    bool ok = false;
    std::string error;
    std::size_t series = 0, length = 0;
    std::vector<ResultRow> rows;
};

inline DatasetOutcome run_dataset(const std::string& entry, const RunConfig& cfg,
                                  const std::string& hash,
                                  const std::optional<std::string>& artifact_dir = std::nullopt) {
    DatasetOutcome out;
    out.name = entry;
    try {
        auto named = load_dataset_entry(entry);
        out.name = named.name;
        auto p = prepare_dataset(named.name, named.data, cfg.seed, cfg.grid_frac, cfg.classifier);
        out.series = p->data.size();
        out.length = p->data.length();
        if (artifact_dir) {
            save_json(to_json(*p->chain), (fs::path(*artifact_dir) / (p->name + ".chain.json")).string());
        }
        const std::size_t T = p->data.length();
        std::vector<PosthocResult> posthoc;
        for (double a : cfg.alphas) posthoc.push_back(posthoc_optimal_cost(*p->chain, p->splits.test, CostModel(a, T)));

        for (const auto& spec : cfg.method_specs()) {
            if (spec.is_sr) {
                for (std::size_t ai = 0; ai < cfg.alphas.size(); ++ai) {
                    const CostModel cost(cfg.alphas[ai], T);
                    const auto tuned = sr_tune({&p->meta, &p->tuning}, p->chain->grid(), cost);
                    const auto rec = run_sr(tuned.params, p->test, p->chain->grid(), cost);
                    out.rows.push_back({p->name, spec.name, cfg.alphas[ai], std::nullopt, tuned.params,
                                        summarize(rec, T, posthoc[ai].avg_cost), hash});
                }
                continue;
            }
            auto candidates = train_candidates(*p, spec, cfg.k_min, cfg.k_max, cfg.seed);
            for (std::size_t ai = 0; ai < cfg.alphas.size(); ++ai) {
                const CostModel cost(cfg.alphas[ai], T);
                const auto sel = select_k(candidates, p->splits.k_tuning, cost);
                auto& model = candidates[sel.k - candidates.front().k];
                model.cost = cost;
                const auto rec = run_economy(model, p->splits.test);
                out.rows.push_back({p->name, spec.name, cfg.alphas[ai], sel.k, std::nullopt,
                                    summarize(rec, T, posthoc[ai].avg_cost), hash});
            }
        }
        out.ok = true;
    } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
        out.rows.clear();
    }
    return out;
}

// Aligned per-dataset AvgCost columns of the given methods at one alpha.
struct AlignedScores {
    double alpha = 0.0;
    std::vector<std::string> datasets;
    std::vector<std::string> methods;
    std::vector<std::vector<double>> scores;  // [method][dataset]
};

inline std::vector<AlignedScores> align_results(const std::vector<ResultRow>& rows) {
    std::map<double, std::map<std::string, std::map<std::string, double>>> table;  // alpha -> method -> dataset
    std::vector<std::string> method_order;
    for (const auto& r : rows) {
        if (std::find(method_order.begin(), method_order.end(), r.method) == method_order.end()) {
            method_order.push_back(r.method);
        }
        auto& cell = table[r.alpha][r.method];
        if (cell.count(r.dataset)) {
            throw DataError("duplicate result for " + r.dataset + "/" + r.method + " at alpha " +
                            detail::fmt(r.alpha));
        }
        cell[r.dataset] = r.metrics.avg_cost;
    }
    std::vector<AlignedScores> out;
    for (const auto& [alpha, by_method] : table) {
        AlignedScores a;
        a.alpha = alpha;
        std::set<std::string> reference;
        bool first = true;
        for (const auto& m : method_order) {
            auto it = by_method.find(m);
            if (it == by_method.end()) throw DataError("method '" + m + "' missing at alpha " + detail::fmt(alpha));
            std::set<std::string> ds;
            for (const auto& [d, v] : it->second) ds.insert(d);
            if (first) {
                reference = ds;
                first = false;
            } else if (ds != reference) {
                throw DataError("misaligned result sets: '" + m + "' covers different datasets at alpha " +
                                detail::fmt(alpha));
            }
        }
        a.datasets.assign(reference.begin(), reference.end());
        a.methods = method_order;
        for (const auto& m : method_order) {
            std::vector<double> col;
            for (const auto& d : a.datasets) col.push_back(by_method.at(m).at(d));
            a.scores.push_back(std::move(col));
        }
        out.push_back(std::move(a));
    }
    return out;
}

// Reference method against every other method at every alpha: "better" or
// "worse" when the two-sided Wilcoxon test rejects at `level`, else "n.s.".
inline json wilcoxon_report(const std::vector<AlignedScores>& aligned, const std::string& reference,
                            double level = 0.05) {
    json rows = json::array();
    for (const auto& a : aligned) {
        const auto ref_it = std::find(a.methods.begin(), a.methods.end(), reference);
        if (ref_it == a.methods.end()) throw DataError("reference method '" + reference + "' not in results");
        const auto ref = static_cast<std::size_t>(ref_it - a.methods.begin());
        json cells = json::object();
        for (std::size_t m = 0; m < a.methods.size(); ++m) {
            if (m == ref) continue;
            json cell;
            try {
                const auto w = stats::wilcoxon_signed_rank(a.scores[ref], a.scores[m]);
                std::string verdict = "n.s.";
                // lower AvgCost is better: direction -1 means the reference is lower
                if (w.p_value < level) verdict = w.direction < 0 ? "better" : "worse";
                cell = {{"verdict", verdict}, {"p_value", w.p_value}, {"statistic", w.statistic},
                        {"n", w.n}, {"exact", w.exact}};
            } catch (const StatsError& e) {
                cell = {{"verdict", "n.s."}, {"p_value", 1.0}, {"note", e.what()}};
            }
            cells[a.methods[m]] = cell;
        }
        rows.push_back({{"alpha", a.alpha}, {"reference", reference}, {"against", cells}});
    }
    return rows;
}

inline json nemenyi_report(const std::vector<AlignedScores>& aligned) {
    json rows = json::array();
    for (const auto& a : aligned) {
        json row = {{"alpha", a.alpha}, {"methods", a.methods}, {"datasets", a.datasets.size()}};
        try {
            const auto f = stats::friedman_nemenyi(a.scores);
            json groups = json::array();
            for (const auto& g : f.groups) {
                json names = json::array();
                for (auto i : g) names.push_back(a.methods[i]);
                groups.push_back(names);
            }
            row["friedman_chi_square"] = f.chi_square;
            row["friedman_p_value"] = f.p_value;
            row["mean_ranks"] = f.mean_ranks;
            row["critical_difference"] = f.critical_difference;
            row["groups"] = groups;
        } catch (const StatsError& e) {
            row["skipped"] = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::vector<ParetoPoint> pareto_points(const std::vector<ResultRow>& rows) {
    std::map<std::pair<double, std::string>, std::tuple<double, double, std::size_t>> acc;
    std::vector<std::pair<double, std::string>> order;
    for (const auto& r : rows) {
        auto key = std::make_pair(r.alpha, r.method);
        if (!acc.count(key)) order.push_back(key);
        auto& [e, k, n] = acc[key];
        e += r.metrics.earliness;
        k += r.metrics.kappa;
        ++n;
    }
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<ParetoPoint> out;
    for (const auto& key : order) {
        const auto& [e, k, n] = acc[key];
        out.push_back({key.second, key.first, e / static_cast<double>(n), k / static_cast<double>(n), false});
    }
    mark_dominated(out);
    return out;
}

struct AlphaChoice {
    std::string dataset;
    double alpha = 0.0;
    double spread = 0.0;
    std::string best_method;
};

// Per dataset, the alpha with the widest AvgCost gap between the best and
// the worst method.
inline std::vector<AlphaChoice> select_alpha(const std::vector<ResultRow>& rows) {
    std::map<std::string, std::map<double, std::vector<const ResultRow*>>> by;
    for (const auto& r : rows) by[r.dataset][r.alpha].push_back(&r);
    std::vector<AlphaChoice> out;
    for (const auto& [ds, alphas] : by) {
        AlphaChoice best{ds, 0.0, -1.0, ""};
        for (const auto& [alpha, rs] : alphas) {
            auto [lo, hi] = std::minmax_element(rs.begin(), rs.end(), [](auto a, auto b) {
                return a->metrics.avg_cost < b->metrics.avg_cost;
            });
            const double spread = (*hi)->metrics.avg_cost - (*lo)->metrics.avg_cost;
            if (spread > best.spread) best = {ds, alpha, spread, (*lo)->method};
        }
        out.push_back(best);
    }
    return out;
}

struct BenchmarkReport {
    std::vector<DatasetOutcome> datasets;
    std::vector<ResultRow> rows;
    std::string config_hash;

    bool all_ok() const {
        return std::all_of(datasets.begin(), datasets.end(), [](const auto& d) { return d.ok; });
    }
};

// Runs every dataset (in parallel up to cfg.workers) and writes
// <out>/results.csv, <out>/summary.json and <out>/models/<dataset>.chain.json.
inline BenchmarkReport run_benchmark(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.data.empty()) throw ConfigError("no datasets given");
    BenchmarkReport report;
    report.config_hash = config_hash(cfg);
    const fs::path out_dir(cfg.out);
    fs::create_directories(out_dir / "models");

    report.datasets.resize(cfg.data.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cfg.data.size(); i = next++) {
            report.datasets[i] = run_dataset(cfg.data[i], cfg, report.config_hash, (out_dir / "models").string());
        }
    };
    const std::size_t n_threads = std::min(cfg.workers, cfg.data.size());
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < n_threads; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (const auto& d : report.datasets) {
        report.rows.insert(report.rows.end(), d.rows.begin(), d.rows.end());
    }

    {
        std::ofstream csv(out_dir / "results.csv");
        if (!csv) throw ConfigError("cannot write into '" + cfg.out + "'");
        csv << kCsvHeader << '\n';
        for (const auto& r : report.rows) csv << to_csv_line(r) << '\n';
    }

    json datasets = json::array();
    for (const auto& d : report.datasets) {
        json j = {{"name", d.name}, {"status", d.ok ? "ok" : "quarantined"}};
        if (d.ok) {
            j["series"] = d.series;
            j["length"] = d.length;
        } else {
            j["error"] = d.error;
        }
        datasets.push_back(j);
    }
    json statistics = json::object();
    if (!report.rows.empty()) {
        try {
            const auto aligned = align_results(report.rows);
            statistics["nemenyi"] = nemenyi_report(aligned);
            const auto specs = cfg.method_specs();
            const bool has_gamma = std::any_of(specs.begin(), specs.end(), [](const auto& s) {
                return s.name == "economy-gamma";
            });
            statistics["wilcoxon"] = wilcoxon_report(aligned, has_gamma ? "economy-gamma" : specs.front().name);
        } catch (const std::exception& e) {
            statistics["skipped"] = e.what();
        }
    }
    json summary = {{"config_hash", report.config_hash},
                    {"config", canonical_config(cfg)},
                    {"datasets", datasets},
                    {"statistics", statistics}};
    save_json(summary, (out_dir / "summary.json").string());
    return report;
}

} // namespace economy
