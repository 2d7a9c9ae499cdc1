#include "racg/runner.hpp"

#include <algorithm>
#include <stdexcept>

#include "racg/error.hpp"
#include "racg/parallel.hpp"
#include "racg/text.hpp"

namespace racg {

using nlohmann::json;

std::string render_prompt(const std::string& query, const std::vector<PromptExample>& examples)
{
    std::string out(kPromptInstruction);
    out += "\n\n";
    for (std::size_t i = 0; i < examples.size(); ++i) {
        out += "Example " + std::to_string(i + 1) + ":\n```\n" + examples[i].code;
        if (!examples[i].code.empty() && examples[i].code.back() != '\n') out += '\n';
        out += "```\n\n";
    }
    out += "Task: " + query + "\n";
    return out;
}

Prompt build_prompt(const std::string& query, const RetrievalResult& retrieval, const KnowledgeBase& kb_view,
                    int shots)
{
    if (shots < 0) throw std::invalid_argument("shots must be non-negative");
    Prompt prompt;
    prompt.query = query;
    prompt.shots = shots;
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(shots), retrieval.entries.size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto& id = retrieval.entries[i].doc_id;
        const auto* doc = kb_view.find(id);
        if (!doc) throw std::invalid_argument("retrieved doc '" + id + "' is not in the knowledge base view");
        prompt.examples.push_back({doc->text, id});
    }
    prompt.rendered = render_prompt(query, prompt.examples);
    return prompt;
}

std::string generate_code(const ModelClient& client, const Prompt& prompt, const GenerationParams& params)
{
    return strip_code_fences(client.complete(prompt, params));
}

std::size_t GenerationRecord::vulnerable_retrieved() const
{
    return static_cast<std::size_t>(
        std::count_if(retrieval.begin(), retrieval.end(), [](const RecordEntry& e) { return e.vulnerable; }));
}

std::vector<RecordEntry> flag_entries(const RetrievalResult& result)
{
    std::vector<RecordEntry> out;
    out.reserve(result.entries.size());
    for (const auto& e : result.entries) out.push_back({e.doc_id, e.score, e.kind, is_vulnerable(e.kind)});
    return out;
}

json record_to_json(const GenerationRecord& rec)
{
    json retrieval = json::array();
    for (const auto& e : rec.retrieval)
        retrieval.push_back({{"doc_id", e.doc_id}, {"score", e.score}, {"kind", to_string(e.kind)}, {"vulnerable", e.vulnerable}});
    json examples = json::array();
    for (const auto& ex : rec.prompt.examples) examples.push_back({{"doc_id", ex.doc_id}, {"code", ex.code}});

    json obj = {
        {"query_id", rec.query_id},
        {"query", rec.query},
        {"r", rec.r},
        {"retrieval", retrieval},
        {"prompt", {{"shots", rec.prompt.shots}, {"examples", examples}, {"rendered", rec.prompt.rendered}}},
        {"generated_code", rec.generated_code},
        {"model_name", rec.model_name},
        {"verdict", nullptr},
        {"error", nullptr},
    };
    if (rec.verdict) {
        obj["verdict"] = {{"vulnerable", rec.verdict->vulnerable},
                          {"matched_patterns", rec.verdict->matched_patterns},
                          {"judge_kind", to_string(rec.verdict->judge_kind)}};
    }
    if (rec.error) obj["error"] = *rec.error;
    return obj;
}

GenerationRecord record_from_json(const json& obj)
{
    GenerationRecord rec;
    rec.query_id = obj.at("query_id").get<std::string>();
    rec.query = obj.at("query").get<std::string>();
    rec.r = obj.at("r").get<std::size_t>();
    for (const auto& e : obj.at("retrieval")) {
        rec.retrieval.push_back({e.at("doc_id").get<std::string>(), e.at("score").get<double>(),
                                 parse_doc_kind(e.at("kind").get<std::string>()), e.at("vulnerable").get<bool>()});
    }
    const auto& p = obj.at("prompt");
    rec.prompt.query = rec.query;
    rec.prompt.shots = p.at("shots").get<int>();
    rec.prompt.rendered = p.at("rendered").get<std::string>();
    for (const auto& ex : p.at("examples"))
        rec.prompt.examples.push_back({ex.at("code").get<std::string>(), ex.at("doc_id").get<std::string>()});
    rec.generated_code = obj.at("generated_code").get<std::string>();
    rec.model_name = obj.at("model_name").get<std::string>();
    if (const auto& v = obj.at("verdict"); !v.is_null()) {
        JudgeVerdict verdict;
        verdict.vulnerable = v.at("vulnerable").get<bool>();
        verdict.matched_patterns = v.at("matched_patterns").get<std::vector<std::string>>();
        verdict.judge_kind = v.at("judge_kind").get<std::string>() == "llm" ? JudgeKind::llm : JudgeKind::marker;
        rec.verdict = std::move(verdict);
    }
    if (const auto& e = obj.at("error"); !e.is_null()) rec.error = e.get<std::string>();
    return rec;
}

std::string serialize_records(const std::vector<GenerationRecord>& records)
{
    std::string out;
    for (const auto& rec : records) {
        out += record_to_json(rec).dump();
        out += '\n';
    }
    return out;
}

std::vector<GenerationRecord> parse_records(std::string_view jsonl)
{
    std::vector<GenerationRecord> out;
    std::size_t line_no = 0;
    for (auto line : split_lines(jsonl)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            out.push_back(record_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw DataError("records line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::string PoisonPlan::describe() const
{
    switch (kind) {
    case Kind::none: return "none";
    case Kind::scenario1: return "I(m=" + std::to_string(m) + ")";
    case Kind::scenario2: {
        char buf[64];
        std::snprintf(buf, sizeof buf, "II(p=%.2f)", p);
        return buf;
    }
    }
    return "none";
}

ExperimentResult run_experiment(const ExperimentSetup& setup)
{
    if (!setup.model) throw ConfigError("experiment has no model client");
    if (!setup.judge) throw ConfigError("experiment has no judge");
    if (setup.shots < 0) throw ConfigError("shots must be non-negative");
    if (setup.retriever.kind == RetrieverSpec::Kind::dense && !setup.retriever.provider)
        throw ConfigError("dense retriever needs an embedding provider");

    const bool poisoned = setup.poison.kind != PoisonPlan::Kind::none;
    if (poisoned) {
        if (!setup.poison_provider) throw ConfigError("poisoning needs an attacker-side embedding provider");
        if (setup.retriever.kind == RetrieverSpec::Kind::dense &&
            (setup.retriever.provider == setup.poison_provider ||
             setup.retriever.provider->name() == setup.poison_provider->name()))
            throw ConfigError("the poisoning provider must differ from the RACG retriever's provider");
    }

    auto kbs = build_kbs(setup.dataset);
    const auto instances = index_by_id(setup.dataset);

    // Document embeddings are shared by every per-query view.
    RetrieverSpec retriever = setup.retriever;
    if (retriever.kind == RetrieverSpec::Kind::dense)
        retriever.provider = std::make_shared<CachingEmbedder>(retriever.provider);

    ExperimentResult result;
    std::unique_ptr<DenseIndex> poison_index;
    if (poisoned) poison_index = std::make_unique<DenseIndex>(kbs.vulnerable, setup.poison_provider);

    std::optional<KnowledgeBase> shared_view;
    std::unique_ptr<Retriever> shared_retriever;
    if (setup.poison.kind == PoisonPlan::Kind::scenario2) {
        result.clustering = setup.clustering;
        if (!result.clustering)
            result.clustering = std::make_shared<ClusteringPlan>(cluster_knowledge_base(
                kbs.secure, *setup.poison_provider, setup.kmeans_seed, setup.t_range, setup.max_in_flight));
        auto ps = poison_scenario2(*result.clustering, kbs.vulnerable, *poison_index, setup.poison.p);
        shared_view = materialize_poisoned_view(kbs.secure, ps);
        result.poison_sets.push_back(std::move(ps));
    } else if (setup.poison.kind == PoisonPlan::Kind::none) {
        shared_view = kbs.secure;
    }
    if (shared_view && setup.shots > 0) shared_retriever = make_retriever(retriever, *shared_view);

    std::vector<const Instance*> queries;
    for (const auto& inst : setup.dataset) queries.push_back(&inst);
    std::sort(queries.begin(), queries.end(), [](auto* a, auto* b) { return a->id < b->id; });

    std::vector<GenerationRecord> records(queries.size());
    std::vector<std::optional<PoisonSet>> per_query_sets(queries.size());

    parallel_for(queries.size(), setup.max_in_flight, [&](std::size_t i) {
        const Instance& inst = *queries[i];
        GenerationRecord& rec = records[i];
        rec.query_id = inst.id;
        rec.query = inst.query;
        rec.model_name = setup.model->name();
        rec.r = static_cast<std::size_t>(setup.shots);
        const char* stage = "poison";
        try {
            const KnowledgeBase* view = shared_view ? &*shared_view : nullptr;
            std::optional<KnowledgeBase> own_view;
            std::unique_ptr<Retriever> own_retriever;
            if (!view) {
                auto ps = poison_scenario1(inst.id, inst.query, kbs.vulnerable, *poison_index, setup.poison.m);
                own_view = materialize_poisoned_view(kbs.secure, ps, inst.id);
                view = &*own_view;
                per_query_sets[i] = std::move(ps);
            }

            stage = "retrieve";
            RetrievalResult retrieval;
            retrieval.r = rec.r;
            if (setup.shots > 0) {
                const Retriever* active = shared_retriever.get();
                if (!active) {
                    own_retriever = make_retriever(retriever, *view);
                    active = own_retriever.get();
                }
                retrieval = active->retrieve(inst.query, rec.r);
            }
            rec.retrieval = flag_entries(retrieval);

            stage = "prompt";
            rec.prompt = build_prompt(inst.query, retrieval, *view, setup.shots);

            stage = "generate";
            rec.generated_code = generate_code(*setup.model, rec.prompt, setup.params);

            stage = "judge";
            JudgeContext ctx;
            ctx.code = rec.generated_code;
            ctx.query_instance = &inst;
            for (const auto& e : rec.retrieval) {
                if (!e.vulnerable) continue;
                const auto* doc = view->find(e.doc_id);
                auto origin = doc ? instances.find(doc->origin_instance) : instances.end();
                ctx.retrieved_vulnerable.emplace_back(e.doc_id, origin == instances.end() ? nullptr : origin->second);
            }
            rec.verdict = setup.judge->judge(ctx);
        } catch (const std::exception& e) {
            rec.error = std::string(stage) + ": " + e.what();
        }
    });

    for (auto& ps : per_query_sets) {
        if (ps) result.poison_sets.push_back(std::move(*ps));
    }
    for (const auto& rec : records) {
        if (rec.error) result.failures.push_back(rec.query_id + ": " + *rec.error);
    }
    result.records = std::move(records);
    return result;
}

}  // namespace racg
