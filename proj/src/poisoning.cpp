#include "racg/poisoning.hpp"

#include <stdexcept>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "racg/log.hpp"

namespace racg {
namespace {

CodeDoc as_injected(const CodeDoc& doc)
{
    CodeDoc out = doc;
    out.kind = DocKind::injected;
    return out;
}

void check_pool(const KnowledgeBase& vuln_kb, const DenseIndex& index)
{
    if (vuln_kb.size() != index.doc_ids().size())
        throw std::invalid_argument("poisoning index does not cover the vulnerability knowledge base");
}

}  // namespace

std::string_view to_string(Scenario s) { return s == Scenario::I ? "I" : "II"; }

PoisonSet poison_scenario1(const std::string& query_id, std::string_view query, const KnowledgeBase& vuln_kb,
                           const DenseIndex& poison_index, std::size_t m)
{
    check_pool(vuln_kb, poison_index);
    PoisonSet ps;
    ps.scenario = Scenario::I;
    ps.query_id = query_id;
    ps.m = m;
    if (m == 0) return ps;
    if (m > vuln_kb.size()) {
        log::warn("scenario I: m=" + std::to_string(m) + " exceeds the vulnerability KB size " +
                  std::to_string(vuln_kb.size()) + "; injecting all");
    }
    auto top = poison_index.retrieve(query, std::min(m, vuln_kb.size()));
    for (const auto& hit : top.entries) ps.docs.push_back(as_injected(*vuln_kb.find(hit.doc_id)));
    return ps;
}

ClusteringPlan cluster_knowledge_base(const KnowledgeBase& secure_kb, const EmbeddingProvider& provider,
                                      std::uint64_t seed, std::optional<std::pair<std::size_t, std::size_t>> t_range,
                                      std::size_t max_in_flight)
{
    if (secure_kb.empty()) throw std::invalid_argument("scenario II needs a non-empty secure knowledge base");
    ClusteringPlan plan;
    std::vector<std::string> texts, ids;
    for (const auto& doc : secure_kb.docs()) {
        texts.push_back(doc.text);
        ids.push_back(doc.doc_id);
    }
    plan.features = provider.embed_batch(texts);
    auto [t_min, t_max] = t_range.value_or(default_t_range(plan.features.size()));
    plan.elbow = elbow_select_t(plan.features, t_min, t_max, seed, max_in_flight);
    plan.clusters = kmeans(plan.features, plan.elbow.t, seed, ids);
    return plan;
}

PoisonSet poison_scenario2(const ClusteringPlan& plan, const KnowledgeBase& vuln_kb, const DenseIndex& poison_index,
                           double p)
{
    check_pool(vuln_kb, poison_index);
    if (vuln_kb.empty()) throw std::invalid_argument("scenario II needs a non-empty vulnerability knowledge base");

    PoisonSet ps;
    ps.scenario = Scenario::II;
    ps.p = p;

    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < plan.clusters.ids.size(); ++i) position.emplace(plan.clusters.ids[i], i);

    std::unordered_set<std::string> taken;
    for (const auto& [cluster, reps] : select_representatives(plan.clusters, p)) {
        for (const auto& rep : reps) {
            const auto& feature = plan.features[position.at(rep)];
            auto best = poison_index.retrieve(feature, 1);
            const auto& doc_id = best.entries.front().doc_id;
            if (taken.insert(doc_id).second) ps.docs.push_back(as_injected(*vuln_kb.find(doc_id)));
        }
    }
    return ps;
}

PoisonSet poison_scenario2(const KnowledgeBase& secure_kb, const KnowledgeBase& vuln_kb,
                           EmbeddingProviderPtr provider, double p, std::uint64_t seed)
{
    auto plan = cluster_knowledge_base(secure_kb, *provider, seed);
    DenseIndex index(vuln_kb, std::move(provider));
    return poison_scenario2(plan, vuln_kb, index, p);
}

KnowledgeBase materialize_poisoned_view(const KnowledgeBase& secure_kb, const PoisonSet& ps,
                                        const std::optional<std::string>& query_id)
{
    if (!ps.global() && ps.query_id != query_id)
        throw std::invalid_argument("poison set is scoped to query '" + *ps.query_id + "', requested for '" +
                                    query_id.value_or("<none>") + "'");
    std::vector<CodeDoc> docs = secure_kb.docs();
    docs.reserve(docs.size() + ps.docs.size());
    for (const auto& doc : ps.docs) {
        if (secure_kb.find(doc.doc_id)) {
            log::warn("injected doc '" + doc.doc_id + "' collides with a secure doc id; skipped");
            continue;
        }
        docs.push_back(doc);
    }
    return KnowledgeBase(KbLabel::poisoned_view, std::move(docs));
}

std::string export_poison_set(const PoisonSet& ps)
{
    nlohmann::json params = nlohmann::json::object();
    if (ps.m) params["m"] = *ps.m;
    if (ps.p) params["p"] = *ps.p;
    if (ps.query_id) params["query_id"] = *ps.query_id;

    std::string out;
    for (const auto& doc : ps.docs) {
        nlohmann::json line = {
            {"doc_id", doc.doc_id},
            {"origin_instance", doc.origin_instance},
            {"scenario", to_string(ps.scenario)},
            {"params", params},
        };
        out += line.dump();
        out += '\n';
    }
    return out;
}

}  // namespace racg
