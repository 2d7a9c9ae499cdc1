#include "racg/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "racg/error.hpp"
#include "racg/text.hpp"

namespace racg {

void rank_and_truncate(std::vector<RetrievedDoc>& entries, std::size_t r)
{
    auto before = [](const RetrievedDoc& a, const RetrievedDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    };
    if (r < entries.size()) {
        std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(r), entries.end(), before);
        entries.resize(r);
    } else {
        std::sort(entries.begin(), entries.end(), before);
    }
}

Bm25Index::Bm25Index(const KnowledgeBase& kb, Bm25Params params) : params_(params)
{
    if (kb.empty()) throw DataError("cannot build a BM25 index over an empty knowledge base");
    std::size_t total = 0;
    for (std::size_t i = 0; i < kb.size(); ++i) {
        const auto& doc = kb[i];
        doc_ids_.push_back(doc.doc_id);
        kinds_.push_back(doc.kind);
        auto tokens = tokenize(doc.text);
        doc_len_.push_back(tokens.size());
        total += tokens.size();

        std::unordered_map<std::string, std::uint32_t> tf;
        for (auto& t : tokens) ++tf[std::move(t)];
        for (auto& [term, count] : tf) postings_[term].push_back({static_cast<std::uint32_t>(i), count});
    }
    avgdl_ = static_cast<double>(total) / static_cast<double>(kb.size());
}

std::size_t Bm25Index::df(std::string_view token) const
{
    auto it = postings_.find(std::string(token));
    return it == postings_.end() ? 0 : it->second.size();
}

double Bm25Index::idf(std::string_view token) const
{
    const double n = static_cast<double>(doc_ids_.size());
    const double d = static_cast<double>(df(token));
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

std::vector<double> Bm25Index::score_all(std::string_view query) const
{
    std::vector<double> scores(doc_ids_.size(), 0.0);
    // Repeated query terms contribute once per occurrence.
    for (const auto& term : tokenize(query)) {
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        const double w = idf(term);
        for (const auto& [doc, tf] : it->second) {
            const double f = tf;
            const double norm = avgdl_ > 0.0 ? static_cast<double>(doc_len_[doc]) / avgdl_ : 0.0;
            scores[doc] += w * (f * (params_.k1 + 1.0)) / (f + params_.k1 * (1.0 - params_.b + params_.b * norm));
        }
    }
    return scores;
}

RetrievalResult Bm25Index::retrieve(std::string_view query, std::size_t r) const
{
    if (r == 0) throw std::invalid_argument("retrieval count r must be at least 1");
    auto scores = score_all(query);
    std::vector<RetrievedDoc> entries;
    entries.reserve(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) entries.push_back({doc_ids_[i], scores[i], kinds_[i]});
    rank_and_truncate(entries, r);
    return {std::move(entries), r};
}

DenseIndex::DenseIndex(const KnowledgeBase& kb, EmbeddingProviderPtr provider) : provider_(std::move(provider))
{
    if (!provider_) throw std::invalid_argument("dense index requires an embedding provider");
    if (kb.empty()) throw DataError("cannot build a dense index over an empty knowledge base");
    std::vector<std::string> texts;
    texts.reserve(kb.size());
    for (const auto& doc : kb.docs()) {
        doc_ids_.push_back(doc.doc_id);
        kinds_.push_back(doc.kind);
        texts.push_back(doc.text);
    }
    vectors_ = provider_->embed_batch(texts);
}

RetrievalResult DenseIndex::retrieve(std::string_view query, std::size_t r) const
{
    return retrieve(provider_->embed(query), r);
}

RetrievalResult DenseIndex::retrieve(std::span<const double> query_vector, std::size_t r) const
{
    if (r == 0) throw std::invalid_argument("retrieval count r must be at least 1");
    std::vector<RetrievedDoc> entries;
    entries.reserve(vectors_.size());
    for (std::size_t i = 0; i < vectors_.size(); ++i)
        entries.push_back({doc_ids_[i], cosine_similarity(query_vector, vectors_[i]), kinds_[i]});
    rank_and_truncate(entries, r);
    return {std::move(entries), r};
}

std::string RetrieverSpec::describe() const
{
    if (kind == Kind::bm25) return "bm25";
    return "dense:" + (provider ? provider->name() : std::string("?"));
}

std::unique_ptr<Retriever> make_retriever(const RetrieverSpec& spec, const KnowledgeBase& kb)
{
    if (spec.kind == RetrieverSpec::Kind::bm25) return std::make_unique<Bm25Index>(kb, spec.bm25);
    return std::make_unique<DenseIndex>(kb, spec.provider);
}

RetrievalEval eval_retriever(const std::vector<std::pair<std::string, RetrievalResult>>& results,
                             const std::unordered_map<std::string, std::string>& relevant,
                             const std::vector<int>& ks)
{
    RetrievalEval out;
    for (int k : ks) out.sr_at[k] = 0.0;
    if (results.empty()) return out;

    double rr_sum = 0.0;
    for (const auto& [query_id, result] : results) {
        auto it = relevant.find(query_id);
        if (it == relevant.end()) throw std::invalid_argument("no relevant document for query '" + query_id + "'");
        auto pos = std::find_if(result.entries.begin(), result.entries.end(),
                                [&](const RetrievedDoc& d) { return d.doc_id == it->second; });
        if (pos == result.entries.end()) continue;
        const auto rank = static_cast<int>(pos - result.entries.begin()) + 1;
        rr_sum += 1.0 / rank;
        for (int k : ks) {
            if (rank <= k) out.sr_at[k] += 1.0;
        }
    }
    const double n = static_cast<double>(results.size());
    out.mrr = rr_sum / n;
    for (auto& [k, hits] : out.sr_at) hits /= n;
    return out;
}

}  // namespace racg
