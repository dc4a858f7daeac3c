#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "economy/protocol.hpp"
#include "economy/synthetic.hpp"

using namespace economy;

namespace {

// Run options shared by train and benchmark. Values stay strings so that a
// config file can be layered underneath whatever was given on the command line.
struct RunFlags {
    std::string config;
    std::map<std::string, std::string> given;
    std::vector<std::pair<std::string, CLI::Option*>> options;
    std::vector<std::string> data;
    std::string seed, alpha, methods, k_range, grid_frac, out, workers, lr_iterations, lr_rate, lr_l2;
    bool myopic = false;
    CLI::Option* myopic_opt = nullptr;

    void attach(CLI::App& app) {
        app.add_option("--config", config, "key = value settings file (command line wins)");
        options.emplace_back("data", app.add_option("--data", data, "dataset file or directory (repeatable)"));
        options.emplace_back("seed", app.add_option("--seed", seed, "split and clustering seed"));
        options.emplace_back("alpha", app.add_option("--alpha", alpha, "comma-separated delay slopes"));
        options.emplace_back("methods", app.add_option("--methods", methods, "comma-separated methods"));
        options.emplace_back("k-range", app.add_option("--k-range", k_range, "K search range, e.g. 1..20"));
        options.emplace_back("grid-frac", app.add_option("--grid-frac", grid_frac, "grid step as a fraction of T"));
        options.emplace_back("out", app.add_option("--out", out, "output directory or file"));
        options.emplace_back("workers", app.add_option("--workers", workers, "parallel datasets"));
        options.emplace_back("lr-iterations", app.add_option("--lr-iterations", lr_iterations, "logistic GD iterations"));
        options.emplace_back("lr-rate", app.add_option("--lr-rate", lr_rate, "logistic GD learning rate"));
        options.emplace_back("lr-l2", app.add_option("--lr-l2", lr_l2, "logistic L2 penalty"));
        myopic_opt = app.add_flag("--myopic", myopic, "also run the myopic twin of every economy method");
    }

    RunConfig resolve() const {
        RunConfig c;
        if (!config.empty()) {
            for (const auto& [k, v] : read_config_file(config)) apply_setting(c, k, v);
        }
        for (const auto& [key, opt] : options) {
            if (opt->count() == 0) continue;
            if (key == "data") {
                c.data = data;
                continue;
            }
            apply_setting(c, key, opt->as<std::string>());
        }
        if (myopic_opt->count() > 0) c.myopic = myopic;
        c.validate();
        return c;
    }
};

void print_json(const json& j) { std::cout << j.dump(2) << '\n'; }

json metrics_json(const MetricsReport& m) {
    return {{"avg_cost", m.avg_cost},
            {"earliness", m.earliness},
            {"kappa", m.kappa},
            {"delta_cost", m.delta_cost},
            {"optimal_cost", m.optimal_cost}};
}

constexpr const char* kSrFormat = "economy-sr-model";

int cmd_train(const RunConfig& cfg, std::optional<std::size_t> fixed_k) {
    if (cfg.data.size() != 1) throw ConfigError("train takes exactly one --data entry");
    if (cfg.alphas.size() != 1) throw ConfigError("train takes exactly one --alpha value");
    if (cfg.methods.size() != 1) throw ConfigError("train takes exactly one method");
    const auto spec = parse_method(cfg.methods.front());
    auto named = load_dataset_entry(cfg.data.front());
    auto p = prepare_dataset(named.name, named.data, cfg.seed, cfg.grid_frac, cfg.classifier);
    const CostModel cost(cfg.alphas.front(), p->data.length());
    json doc;
    if (spec.is_sr) {
        const auto tuned = sr_tune({&p->meta, &p->tuning}, p->chain->grid(), cost);
        doc = {{"format", kSrFormat}, {"version", 1}, {"params", to_json(tuned.params)},
               {"cost", to_json(cost)}, {"chain", to_json(*p->chain)}};
        std::cerr << "sr params " << tuned.params.g1 << ' ' << tuned.params.g2 << ' ' << tuned.params.g3
                  << " (tuning AvgCost " << tuned.avg_cost << ")\n";
    } else {
        std::size_t lo = cfg.k_min, hi = cfg.k_max;
        if (fixed_k) lo = hi = *fixed_k;
        auto cands = train_candidates(*p, spec, lo, hi, cfg.seed);
        const auto sel = select_k(cands, p->splits.k_tuning, cost);
        auto& model = cands[sel.k - cands.front().k];
        model.cost = cost;
        doc = to_json(model);
        std::cerr << spec.name << " K=" << sel.k << " (tuning AvgCost " << sel.tuning_cost << ")\n";
    }
    const auto path = cfg.out == RunConfig{}.out ? named.name + ".model.json" : cfg.out;
    save_json(doc, path);
    std::cerr << "wrote " << path << '\n';
    return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& data, std::uint64_t seed,
                 const std::string& out, const std::string& decisions) {
    const auto doc = load_json(model_path);
    auto named = load_dataset_entry(data);
    const Dataset d = named.data.is_binary() ? named.data : binarize_majority(named.data);
    const auto splits = make_splits(d, seed);
    std::vector<RunRecord> rec;
    std::shared_ptr<const ClassifierChain> chain;
    CostModel cost;
    std::string method;
    if (doc.value("format", "") == kSrFormat) {
        chain = std::make_shared<const ClassifierChain>(chain_from_json(doc.at("chain")));
        cost = cost_from_json(doc.at("cost"));
        const auto params = sr_params_from_json(doc.at("params"));
        const auto set = score_set(*chain, splits.test);
        rec = run_sr(params, set, chain->grid(), cost);
        method = "sr";
    } else {
        const auto model = model_from_json(doc);
        chain = model.chain;
        cost = model.cost;
        rec = run_economy(model, splits.test);
        method = std::string(variant_name(model.variant)) + (model.horizon == Horizon::Myopic ? "+myopic" : "");
    }
    if (chain->grid().length() != d.length()) throw DataError("model and dataset lengths differ");
    const auto opt = posthoc_optimal_cost(*chain, splits.test, cost);
    const auto report = summarize(rec, d.length(), opt.avg_cost);
    json j = {{"dataset", named.name}, {"method", method}, {"alpha", cost.alpha},
              {"test_series", rec.size()}, {"metrics", metrics_json(report)}};
    print_json(j);
    if (!out.empty()) save_json(j, out);
    if (!decisions.empty()) {
        std::ofstream f(decisions);
        if (!f) throw ConfigError("cannot write '" + decisions + "'");
        f << "series,trigger_time,prediction,truth,cost\n";
        for (const auto& r : rec) {
            f << splits.test_idx[r.series_id] << ',' << r.trigger_time << ',' << r.prediction << ','
              << r.truth << ',' << detail::fmt(r.cost()) << '\n';
        }
    }
    return 0;
}

std::vector<ResultRow> gather_results(const std::vector<std::string>& inputs) {
    std::vector<ResultRow> rows;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        fs::path p(inputs[i]);
        if (fs::is_directory(p)) p /= "results.csv";
        auto part = read_results_csv(p.string());
        if (inputs.size() > 1) {
            for (auto& r : part) r.method = "run" + std::to_string(i + 1) + "/" + r.method;
        }
        rows.insert(rows.end(), part.begin(), part.end());
    }
    return rows;
}

int cmd_compare(const std::vector<std::string>& inputs, const std::string& test, std::string reference,
                const std::string& out) {
    const auto rows = gather_results(inputs);
    if (rows.empty()) throw DataError("no result rows");
    const auto aligned = align_results(rows);
    if (aligned.front().methods.size() < 2) throw DataError("need at least two methods to compare");
    json report;
    if (test == "wilcoxon") {
        if (reference.empty()) reference = aligned.front().methods.front();
        if (inputs.size() > 1 && reference.find('/') == std::string::npos) reference = "run1/" + reference;
        report = {{"test", "wilcoxon"}, {"per_alpha", wilcoxon_report(aligned, reference)}};
        for (const auto& row : report["per_alpha"]) {
            std::cout << "alpha " << detail::fmt(row["alpha"].get<double>());
            for (const auto& [m, cell] : row["against"].items()) {
                std::cout << "  " << m << ": " << cell["verdict"].get<std::string>();
            }
            std::cout << '\n';
        }
    } else {
        report = {{"test", "nemenyi"}, {"per_alpha", nemenyi_report(aligned)}};
        for (const auto& row : report["per_alpha"]) {
            std::cout << "alpha " << detail::fmt(row["alpha"].get<double>());
            if (row.contains("skipped")) {
                std::cout << "  skipped: " << row["skipped"].get<std::string>() << '\n';
                continue;
            }
            std::cout << "  p=" << row["friedman_p_value"].get<double>()
                      << "  CD=" << row["critical_difference"].get<double>() << '\n';
            for (std::size_t m = 0; m < row["methods"].size(); ++m) {
                std::cout << "    " << row["methods"][m].get<std::string>() << "  "
                          << row["mean_ranks"][m].get<double>() << '\n';
            }
        }
    }
    if (!out.empty()) save_json(report, out);
    return 0;
}

int cmd_pareto(const std::vector<std::string>& inputs, const std::string& out) {
    const auto pts = pareto_points(gather_results(inputs));
    std::ofstream file;
    if (!out.empty()) {
        file.open(out);
        if (!file) throw ConfigError("cannot write '" + out + "'");
    }
    std::ostream& os = out.empty() ? std::cout : file;
    os << "alpha,method,mean_earliness,mean_kappa,dominated\n";
    for (const auto& p : pts) {
        os << detail::fmt(p.alpha) << ',' << p.method << ',' << detail::fmt(p.earliness) << ','
           << detail::fmt(p.kappa) << ',' << (p.dominated ? 1 : 0) << '\n';
    }
    return 0;
}

int cmd_select_alpha(const std::vector<std::string>& inputs, const std::string& out) {
    const auto picks = select_alpha(gather_results(inputs));
    std::ofstream file;
    if (!out.empty()) {
        file.open(out);
        if (!file) throw ConfigError("cannot write '" + out + "'");
    }
    std::ostream& os = out.empty() ? std::cout : file;
    os << "dataset,alpha,spread,best_method\n";
    for (const auto& p : picks) {
        os << p.dataset << ',' << detail::fmt(p.alpha) << ',' << detail::fmt(p.spread) << ',' << p.best_method << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cost-based early classification of time series"};
    app.require_subcommand(1);

    auto* train = app.add_subcommand("train", "train one trigger model on a dataset");
    RunFlags train_flags;
    train_flags.attach(*train);
    std::size_t fixed_k = 0;
    auto* k_opt = train->add_option("--k", fixed_k, "fixed number of groups (default: tune on subset c)");

    auto* evaluate = app.add_subcommand("evaluate", "evaluate a saved model on a dataset's test split");
    std::string model_path, eval_data, eval_out, decisions;
    std::uint64_t eval_seed = 0;
    evaluate->add_option("--model", model_path, "model document")->required();
    evaluate->add_option("--data", eval_data, "dataset file or directory")->required();
    evaluate->add_option("--seed", eval_seed, "split seed used at training time");
    evaluate->add_option("--out", eval_out, "write the metrics JSON here");
    evaluate->add_option("--decisions", decisions, "write per-series decisions as CSV");

    auto* bench = app.add_subcommand("benchmark", "run the full protocol over datasets");
    RunFlags bench_flags;
    bench_flags.attach(*bench);

    auto* compare = app.add_subcommand("compare", "statistical comparison of benchmark results");
    std::vector<std::string> cmp_inputs;
    std::string cmp_test = "wilcoxon", cmp_ref, cmp_out;
    compare->add_option("--results", cmp_inputs, "results.csv or benchmark directory (repeatable)")->required();
    compare->add_option("--test", cmp_test, "wilcoxon or nemenyi")
        ->check(CLI::IsMember({"wilcoxon", "nemenyi"}));
    compare->add_option("--reference", cmp_ref, "reference method for wilcoxon");
    compare->add_option("--out", cmp_out, "write the report JSON here");

    auto* pareto = app.add_subcommand("pareto", "mean earliness and kappa per method and alpha");
    std::vector<std::string> par_inputs;
    std::string par_out;
    pareto->add_option("--results", par_inputs, "results.csv or benchmark directory (repeatable)")->required();
    pareto->add_option("--out", par_out, "CSV output (default stdout)");

    auto* select = app.add_subcommand("select-alpha", "per dataset, the alpha separating methods the most");
    std::vector<std::string> sel_inputs;
    std::string sel_out;
    select->add_option("--results", sel_inputs, "results.csv or benchmark directory (repeatable)")->required();
    select->add_option("--out", sel_out, "CSV output (default stdout)");

    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
    synth::Options so;
    std::string kind = "delayed", synth_out;
    synth_cmd->add_option("--kind", kind, "delayed, regimes or homogeneous")
        ->check(CLI::IsMember({"delayed", "regimes", "homogeneous"}));
    synth_cmd->add_option("--count", so.count, "number of series");
    synth_cmd->add_option("--length", so.length, "series length");
    synth_cmd->add_option("--onset", so.onset, "fraction of T where the class signal starts");
    synth_cmd->add_option("--shift", so.shift, "class-1 offset after the onset");
    synth_cmd->add_option("--noise", so.noise, "Gaussian noise level");
    synth_cmd->add_option("--seed", so.seed, "generator seed");
    synth_cmd->add_option("--out", synth_out, "output TSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train) {
            return cmd_train(train_flags.resolve(),
                             k_opt->count() ? std::optional<std::size_t>(fixed_k) : std::nullopt);
        }
        if (*evaluate) return cmd_evaluate(model_path, eval_data, eval_seed, eval_out, decisions);
        if (*bench) {
            const auto cfg = bench_flags.resolve();
            const auto report = run_benchmark(cfg);
            std::size_t ok = 0;
            for (const auto& d : report.datasets) {
                if (d.ok) {
                    ++ok;
                    std::cerr << "ok           " << d.name << '\n';
                } else {
                    std::cerr << "quarantined  " << d.name << ": " << d.error << '\n';
                }
            }
            std::cerr << ok << "/" << report.datasets.size() << " datasets, " << report.rows.size()
                      << " rows, config " << report.config_hash << ", results in " << cfg.out << '\n';
            return report.all_ok() ? 0 : 2;
        }
        if (*compare) return cmd_compare(cmp_inputs, cmp_test, cmp_ref, cmp_out);
        if (*pareto) return cmd_pareto(par_inputs, par_out);
        if (*select) return cmd_select_alpha(sel_inputs, sel_out);
        if (*synth_cmd) {
            so.kind = *synth::parse_kind(kind);
            write_ucr_tsv(synth::generate(so), synth_out);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
