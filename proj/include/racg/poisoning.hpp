#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "racg/clustering.hpp"
#include "racg/corpus.hpp"
#include "racg/retrieval.hpp"

namespace racg {

enum class Scenario { I, II };

std::string_view to_string(Scenario s);

/// Vulnerable examples chosen for injection. Scenario I sets are scoped to one
/// query; Scenario II sets are global.
struct PoisonSet {
    Scenario scenario = Scenario::I;
    std::optional<std::string> query_id;  // set iff per-query scope
    std::vector<CodeDoc> docs;            // kind == injected
    std::optional<std::size_t> m;         // Scenario I parameter
    std::optional<double> p;              // Scenario II parameter

    bool global() const noexcept { return !query_id.has_value(); }
    bool operator==(const PoisonSet&) const = default;
};

/// Scenario I (query known): the m vulnerable docs most similar to the query
/// under the attacker's own dense index over the vulnerability KB. m larger
/// than the KB returns every doc with a warning.
PoisonSet poison_scenario1(const std::string& query_id, std::string_view query, const KnowledgeBase& vuln_kb,
                           const DenseIndex& poison_index, std::size_t m);

/// Step 1 of Scenario II, independent of p: embed the secure KB, pick t with
/// the elbow rule and cluster. Reusing one plan across a p sweep keeps the
/// poison sets nested.
struct ClusteringPlan {
    std::vector<Embedding> features;  // secure KB order
    ElbowResult elbow;
    ClusterModel clusters;
};

ClusteringPlan cluster_knowledge_base(const KnowledgeBase& secure_kb, const EmbeddingProvider& provider,
                                      std::uint64_t seed,
                                      std::optional<std::pair<std::size_t, std::size_t>> t_range = std::nullopt,
                                      std::size_t max_in_flight = 1);

/// Steps 2-3 of Scenario II: floor(p * n_i) representatives per cluster, each
/// mapped to its argmax-cosine vulnerable doc; duplicates are collapsed.
PoisonSet poison_scenario2(const ClusteringPlan& plan, const KnowledgeBase& vuln_kb, const DenseIndex& poison_index,
                           double p);

/// Convenience wrapper running all three steps with one provider.
PoisonSet poison_scenario2(const KnowledgeBase& secure_kb, const KnowledgeBase& vuln_kb,
                           EmbeddingProviderPtr provider, double p, std::uint64_t seed);

/// Secure docs followed by the injected docs. Scenario I sets demand the
/// matching query id; a mismatch throws std::invalid_argument.
KnowledgeBase materialize_poisoned_view(const KnowledgeBase& secure_kb, const PoisonSet& ps,
                                        const std::optional<std::string>& query_id = std::nullopt);

/// Audit export: one {doc_id, origin_instance, scenario, params} object per line.
std::string export_poison_set(const PoisonSet& ps);

}  // namespace racg
