#include "racg/commands.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "racg/corpus.hpp"
#include "racg/error.hpp"
#include "racg/metrics.hpp"
#include "racg/poisoning.hpp"
#include "racg/runner.hpp"
#include "racg/text.hpp"

namespace racg {

using nlohmann::json;

int exit_code_for(const std::exception& e)
{
    if (const auto* err = dynamic_cast<const Error*>(&e)) {
        switch (err->kind()) {
        case ErrorKind::config: return kExitConfig;
        case ErrorKind::remote: return kExitRemote;
        case ErrorKind::data:
        case ErrorKind::internal: return kExitData;
        }
    }
    return kExitData;
}

namespace {

/// Re-throws anything escaping `fn` with the stage name prefixed, keeping its kind.
template <class Fn>
auto stage(const char* name, Fn&& fn)
{
    try {
        return fn();
    } catch (const Error& e) {
        throw Error(e.kind(), std::string(name) + ": " + e.what());
    } catch (const std::exception& e) {
        throw DataError(std::string(name) + ": " + e.what());
    }
}

std::string fmt4(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", x);
    return buf;
}

Dataset prepare_dataset(const ExperimentConfig& cfg, std::size_t* loaded = nullptr, std::size_t* dropped = nullptr)
{
    auto dataset = stage("load", [&] { return load_dataset(cfg.dataset_path); });
    if (loaded) *loaded = dataset.size();
    if (cfg.filter) dataset = filter_instances(dataset);
    if (cfg.generate_queries) {
        auto model = make_model_client(cfg.model);
        auto generated = stage("query-generation", [&] {
            return generate_missing_queries(dataset, *model, cfg.generation, cfg.max_in_flight);
        });
        if (dropped) *dropped = generated.failures.size();
        dataset = std::move(generated.dataset);
    }
    for (const auto& inst : dataset) {
        if (trim(inst.query).empty())
            throw DataError("instance '" + inst.id + "' has no query (enable generate_queries to fill it)");
    }
    return dataset;
}

std::string run_label(const ExperimentConfig& cfg, const PoisonPlan& poison)
{
    std::string model = make_model_client(cfg.model)->name();
    return model + " | " + cfg.retriever + " | " + poison.describe() + " | " + std::to_string(cfg.shots) + "-shot";
}

struct RunArtifacts {
    MetricsReport report;
    std::size_t poisoned_docs = 0;
};

RunArtifacts run_once(const ExperimentConfig& cfg, const Dataset& dataset, const PoisonPlan& poison,
                      std::shared_ptr<const ClusteringPlan>& clustering, const std::filesystem::path& dir,
                      std::ostream& out)
{
    ExperimentSetup setup;
    setup.dataset = dataset;
    setup.retriever = make_retriever_spec(cfg, cfg.retriever);
    setup.poison = poison;
    if (poison.kind != PoisonPlan::Kind::none) setup.poison_provider = make_provider(cfg, cfg.poison_provider);
    setup.shots = cfg.shots;
    setup.model = make_model_client(cfg.model);
    setup.judge = make_judge(cfg);
    setup.params = cfg.generation;
    setup.kmeans_seed = cfg.seeds.kmeans;
    setup.t_range = cfg.t_range;
    setup.max_in_flight = cfg.max_in_flight;
    setup.clustering = clustering;

    auto result = stage("experiment", [&] { return run_experiment(setup); });
    if (result.clustering) clustering = result.clustering;

    auto config_echo = config_to_json(cfg);
    config_echo["poison"] = poison.kind == PoisonPlan::Kind::scenario1   ? json{{"scenario", "I"}, {"m", poison.m}}
                            : poison.kind == PoisonPlan::Kind::scenario2 ? json{{"scenario", "II"}, {"p", poison.p}}
                                                                         : json(nullptr);
    if (result.clustering) config_echo["clusters_t"] = result.clustering->clusters.t;

    auto kbs = build_kbs(dataset);
    auto similarity = make_provider(cfg, cfg.similarity_provider);
    ReportOptions options;
    options.r = cfg.shots;
    options.bleu_k = cfg.bleu_k;
    options.bleu_max_n = cfg.bleu_max_n;
    options.similarity_provider = similarity.get();
    options.doc_text = [&](const std::string& id) -> const std::string* {
        if (const auto* d = kbs.secure.find(id)) return &d->text;
        if (const auto* d = kbs.vulnerable.find(id)) return &d->text;
        return nullptr;
    };
    if (cfg.retriever == "dense:" + cfg.similarity_provider)
        throw ConfigError("similarity_provider must differ from the retriever's provider");

    auto report = stage("metrics", [&] {
        return build_report(result.records, dataset, options, run_label(cfg, poison), config_echo);
    });

    stage("emit", [&] {
        std::filesystem::create_directories(dir);
        write_text_file(dir / "records.jsonl", serialize_records(result.records));
        std::string poison_lines;
        for (const auto& ps : result.poison_sets) poison_lines += export_poison_set(ps);
        write_text_file(dir / "poison_set.jsonl", poison_lines);
        emit_report(report, ReportFormat::json, dir / "report.json");
        emit_report(report, ReportFormat::markdown, dir / "report.md");
        emit_report(report, ReportFormat::csv, dir / "report.csv");
        return 0;
    });

    std::size_t poisoned = 0;
    for (const auto& ps : result.poison_sets) poisoned += ps.docs.size();
    out << report.label << ": VR=" << fmt4(report.vr) << " VRRC=" << fmt4(report.vrrc)
        << " Sim=" << fmt4(report.similarity) << " records=" << report.n_records << " failed=" << report.n_failed
        << "\n";
    for (const auto& f : result.failures) std::cerr << "query failed: " << f << '\n';
    if (report.n_records == 0 && report.n_failed > 0) throw RemoteError("experiment: every query failed");
    return {std::move(report), poisoned};
}

}  // namespace

int cmd_ingest(const ExperimentConfig& cfg, std::ostream& out)
{
    std::size_t loaded = 0, dropped = 0;
    auto dataset = prepare_dataset(cfg, &loaded, &dropped);
    auto kbs = stage("build-kbs", [&] { return build_kbs(dataset); });

    std::map<std::string, std::size_t> by_lang, by_cwe;
    for (const auto& inst : dataset) {
        ++by_lang[std::string(to_string(inst.language))];
        for (const auto& c : inst.cwe_ids) ++by_cwe[c];
    }
    out << "loaded: " << loaded << "\n";
    out << "filtered: " << (cfg.filter ? loaded - dataset.size() - dropped : 0) << "\n";
    if (cfg.generate_queries) out << "query-generation failures: " << dropped << "\n";
    out << "retained: " << dataset.size() << "\n";
    out << "secure_kb: " << kbs.secure.size() << "\nvuln_kb: " << kbs.vulnerable.size() << "\n";
    out << "\n| Language | Instances |\n|---|---|\n";
    for (const auto& [lang, n] : by_lang) out << "| " << lang << " | " << n << " |\n";
    if (!by_cwe.empty()) {
        out << "\n| CWE | Instances |\n|---|---|\n";
        for (const auto& [cwe, n] : by_cwe) out << "| " << cwe << " | " << n << " |\n";
    }
    if (cfg.generate_queries) {
        std::filesystem::create_directories(cfg.output_dir);
        save_dataset(dataset, cfg.output_dir / "dataset.jsonl");
        out << "\nwrote " << (cfg.output_dir / "dataset.jsonl").string() << "\n";
    }
    return kExitOk;
}

int cmd_run(const ExperimentConfig& cfg, std::ostream& out)
{
    auto dataset = prepare_dataset(cfg);
    std::shared_ptr<const ClusteringPlan> clustering;

    if (cfg.sweep_m.empty() && cfg.sweep_p.empty()) {
        run_once(cfg, dataset, cfg.poison, clustering, cfg.output_dir, out);
        return kExitOk;
    }

    const bool over_m = !cfg.sweep_m.empty();
    std::vector<MetricsReport> reports;
    json sweep = json::array();
    const std::size_t points = over_m ? cfg.sweep_m.size() : cfg.sweep_p.size();
    for (std::size_t i = 0; i < points; ++i) {
        PoisonPlan plan = over_m ? PoisonPlan::scenario1(cfg.sweep_m[i]) : PoisonPlan::scenario2(cfg.sweep_p[i]);
        std::string dir = over_m ? "m_" + std::to_string(cfg.sweep_m[i]) : "p_" + fmt4(cfg.sweep_p[i]);
        auto artifacts = run_once(cfg, dataset, plan, clustering, cfg.output_dir / dir, out);
        artifacts.report.label = over_m ? "m=" + std::to_string(cfg.sweep_m[i]) : "p=" + fmt4(cfg.sweep_p[i]);
        sweep.push_back({{"label", artifacts.report.label},
                         {"poisoned_docs", artifacts.poisoned_docs},
                         {"vr", artifacts.report.vr},
                         {"vrrc", artifacts.report.vrrc},
                         {"similarity", artifacts.report.similarity}});
        reports.push_back(std::move(artifacts.report));
    }
    stage("emit", [&] {
        auto echo = config_to_json(cfg);
        write_text_file(cfg.output_dir / "sweep.md",
                        "# " + run_label(cfg, PoisonPlan::none()) + "\n\n" +
                            render_sweep_table(reports, over_m ? "Poisoned examples" : "Poisoning proportion") +
                            "\n## Configuration\n\n```json\n" + echo.dump(2) + "\n```\n");
        write_text_file(cfg.output_dir / "sweep.json", json{{"points", sweep}, {"config", echo}}.dump(2) + "\n");
        return 0;
    });
    return kExitOk;
}

int cmd_eval_retriever(const ExperimentConfig& cfg, std::ostream& out)
{
    auto dataset = prepare_dataset(cfg);
    auto kbs = stage("build-kbs", [&] { return build_kbs(dataset); });
    std::unordered_map<std::string, std::string> relevant;
    for (const auto& inst : dataset) relevant[inst.id] = secure_doc_id(inst.id);
    const int depth = cfg.eval_ks.empty() ? 10 : *std::max_element(cfg.eval_ks.begin(), cfg.eval_ks.end());

    auto names = cfg.eval_retrievers.empty() ? std::vector<std::string>{cfg.retriever} : cfg.eval_retrievers;
    json results = json::object();
    std::string table = "| Retriever | MRR |";
    std::string sep = "|---|---|";
    for (int k : cfg.eval_ks) {
        table += " SR@" + std::to_string(k) + " |";
        sep += "---|";
    }
    table += "\n" + sep + "\n";

    for (const auto& name : names) {
        auto eval = stage("retrieve", [&] {
            auto retriever = make_retriever(make_retriever_spec(cfg, name), kbs.secure);
            std::vector<std::pair<std::string, RetrievalResult>> runs;
            for (const auto& inst : dataset)
                runs.emplace_back(inst.id, retriever->retrieve(inst.query, static_cast<std::size_t>(depth)));
            return eval_retriever(runs, relevant, cfg.eval_ks);
        });
        json sr = json::object();
        table += "| " + name + " | " + fmt4(eval.mrr) + " |";
        for (const auto& [k, v] : eval.sr_at) {
            sr[std::to_string(k)] = v;
            table += " " + fmt4(v) + " |";
        }
        table += "\n";
        results[name] = {{"mrr", eval.mrr}, {"sr_at", sr}};
    }
    out << table;
    stage("emit", [&] {
        std::filesystem::create_directories(cfg.output_dir);
        auto echo = config_to_json(cfg);
        write_text_file(cfg.output_dir / "retrieval_eval.json",
                        json{{"retrievers", results}, {"queries", dataset.size()}, {"config", echo}}.dump(2) + "\n");
        write_text_file(cfg.output_dir / "retrieval_eval.md",
                        "# Retriever evaluation\n\n" + table + "\n## Configuration\n\n```json\n" + echo.dump(2) +
                            "\n```\n");
        return 0;
    });
    return kExitOk;
}

int cmd_judge_eval(const ExperimentConfig& cfg, std::ostream& out)
{
    auto dataset = prepare_dataset(cfg);
    std::shared_ptr<PatternCache> cache;
    ModelClientPtr client;
    if (cfg.judge.kind == JudgeKind::llm) {
        client = make_model_client(cfg.judge.model);
        cache = cfg.judge.pattern_cache.empty() ? std::make_shared<PatternCache>()
                                                : std::make_shared<PatternCache>(cfg.judge.pattern_cache);
    }
    CodeClassifier classify = [&](const std::string& code, std::span<const VulnPattern> patterns) {
        if (cfg.judge.kind == JudgeKind::marker) return marker_judge(code);
        return assess_code(code, patterns, *client, cfg.generation);
    };

    std::map<std::string, std::vector<JudgePair>> by_lang;
    std::vector<JudgePair> all;
    stage("patterns", [&] {
        for (const auto& inst : dataset) {
            JudgePair pair{inst.vulnerable_code, inst.secure_code, {}};
            if (cache) pair.patterns = cache->get_or_extract(inst, *client, cfg.generation);
            by_lang[std::string(to_string(inst.language))].push_back(pair);
            all.push_back(std::move(pair));
        }
        return 0;
    });

    auto row = [](const std::string& name, const ConfusionMetrics& m) {
        return "| " + name + " | " + fmt4(m.accuracy) + " | " + fmt4(m.precision) + " | " + fmt4(m.recall) + " | " +
               fmt4(m.f1) + " | " + std::to_string(m.tp) + " | " + std::to_string(m.fp) + " | " +
               std::to_string(m.tn) + " | " + std::to_string(m.fn) + " |\n";
    };
    auto to_json = [](const ConfusionMetrics& m) {
        return json{{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
                    {"tp", m.tp}, {"fp", m.fp}, {"tn", m.tn}, {"fn", m.fn}};
    };

    std::string table = "| Language | Accuracy | Precision | Recall | F1 | TP | FP | TN | FN |\n"
                        "|---|---|---|---|---|---|---|---|---|\n";
    json per_lang = json::object();
    for (const auto& [lang, pairs] : by_lang) {
        auto m = stage("judge", [&] { return evaluate_judge(pairs, classify); });
        table += row(lang, m);
        per_lang[lang] = to_json(m);
    }
    auto overall = stage("judge", [&] { return evaluate_judge(all, classify); });
    table += row("All", overall);
    out << table;

    stage("emit", [&] {
        std::filesystem::create_directories(cfg.output_dir);
        auto echo = config_to_json(cfg);
        write_text_file(cfg.output_dir / "judge_eval.json",
                        json{{"overall", to_json(overall)}, {"by_language", per_lang}, {"config", echo}}.dump(2) + "\n");
        write_text_file(cfg.output_dir / "judge_eval.md", "# Judge evaluation\n\n" + table +
                                                              "\n## Configuration\n\n```json\n" + echo.dump(2) +
                                                              "\n```\n");
        return 0;
    });
    return kExitOk;
}

int cmd_report(const ExperimentConfig& cfg, const std::filesystem::path& records_path, std::ostream& out)
{
    auto dataset = prepare_dataset(cfg);
    auto records = stage("load-records", [&] {
        std::ifstream in(records_path, std::ios::binary);
        if (!in) throw DataError("cannot open records '" + records_path.string() + "'");
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse_records(buf.str());
    });
    auto kbs = build_kbs(dataset);
    auto similarity = make_provider(cfg, cfg.similarity_provider);
    ReportOptions options;
    options.r = cfg.shots;
    options.bleu_k = cfg.bleu_k;
    options.bleu_max_n = cfg.bleu_max_n;
    options.similarity_provider = similarity.get();
    options.doc_text = [&](const std::string& id) -> const std::string* {
        if (const auto* d = kbs.secure.find(id)) return &d->text;
        if (const auto* d = kbs.vulnerable.find(id)) return &d->text;
        return nullptr;
    };
    auto report = stage("metrics", [&] {
        return build_report(records, dataset, options, run_label(cfg, cfg.poison), config_to_json(cfg));
    });
    const auto dir = records_path.parent_path();
    stage("emit", [&] {
        emit_report(report, ReportFormat::json, dir / "report.json");
        emit_report(report, ReportFormat::markdown, dir / "report.md");
        emit_report(report, ReportFormat::csv, dir / "report.csv");
        return 0;
    });
    out << render_report(report, ReportFormat::markdown);
    return kExitOk;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Knowledge-base poisoning testbed for retrieval-augmented code generation", "racg"};
    app.require_subcommand(1);

    std::string config_path;
    ConfigOverrides overrides;
    std::string records_path;
    std::optional<std::string> output_dir;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "Experiment config (JSON)")->required();
        sub->add_option("--shots", overrides.shots, "Examples per prompt (0, 1 or 3)");
        sub->add_option("--poison-m", overrides.poison_m, "Scenario I: vulnerable examples injected per query");
        sub->add_option("--poison-p", overrides.poison_p, "Scenario II: poisoning proportion in [0, 1]");
        sub->add_option("--retriever", overrides.retriever, "bm25 or dense:<provider>");
        sub->add_option("--seed", overrides.seed, "Seed for clustering and local embedders");
        sub->add_option("-o,--output-dir", output_dir, "Directory for generated files");
    };
    auto* ingest = app.add_subcommand("ingest", "Load and filter the dataset, print a summary");
    auto* run = app.add_subcommand("run", "Poison, generate, judge and report");
    auto* eval = app.add_subcommand("eval-retriever", "MRR and SuccessRate@k of the retrievers");
    auto* judge_eval = app.add_subcommand("judge-eval", "Accuracy/precision/recall/F1 of the judge");
    auto* report = app.add_subcommand("report", "Rebuild reports from a records file");
    for (auto* sub : {ingest, run, eval, judge_eval, report}) add_common(sub);
    report->add_option("--records", records_path, "records.jsonl (default: <output_dir>/records.jsonl)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        std::ostringstream help_out, help_err;
        int code = app.exit(e, help_out, help_err);
        out << help_out.str();
        err << help_err.str();
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        auto cfg = load_config(config_path);
        if (output_dir) overrides.output_dir = *output_dir;
        apply_overrides(cfg, overrides);
        if (*ingest) return cmd_ingest(cfg, out);
        if (*run) return cmd_run(cfg, out);
        if (*eval) return cmd_eval_retriever(cfg, out);
        if (*judge_eval) return cmd_judge_eval(cfg, out);
        if (*report)
            return cmd_report(cfg, records_path.empty() ? cfg.output_dir / "records.jsonl" : std::filesystem::path(records_path), out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
    return kExitOk;
}

}  // namespace racg
