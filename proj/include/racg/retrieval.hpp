#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "racg/corpus.hpp"
#include "racg/embedding.hpp"

namespace racg {

struct RetrievedDoc {
    std::string doc_id;
    double score = 0.0;
    DocKind kind = DocKind::secure;

    bool operator==(const RetrievedDoc&) const = default;
};

/// Top-r documents, score descending with ties broken by ascending doc_id.
struct RetrievalResult {
    std::vector<RetrievedDoc> entries;
    std::size_t r = 0;

    bool operator==(const RetrievalResult&) const = default;
};

/// Orders `entries` by the retrieval total order and keeps the first r.
void rank_and_truncate(std::vector<RetrievedDoc>& entries, std::size_t r);

class Retriever {
public:
    virtual ~Retriever() = default;
    virtual RetrievalResult retrieve(std::string_view query, std::size_t r) const = 0;
};

struct Bm25Params {
    double k1 = 1.5;
    double b = 0.75;
};

/// Okapi BM25 over an inverted index:
///   score(d, q) = sum_t idf(t) * tf (k1 + 1) / (tf + k1 (1 - b + b |d| / avgdl))
///   idf(t)      = ln(1 + (N - df + 0.5) / (df + 0.5))
class Bm25Index final : public Retriever {
public:
    explicit Bm25Index(const KnowledgeBase& kb, Bm25Params params = {});

    RetrievalResult retrieve(std::string_view query, std::size_t r) const override;
    /// Score of every document, in knowledge-base order.
    std::vector<double> score_all(std::string_view query) const;

    std::size_t size() const noexcept { return doc_ids_.size(); }
    double avgdl() const noexcept { return avgdl_; }
    std::size_t doc_length(std::size_t i) const { return doc_len_[i]; }
    std::size_t df(std::string_view token) const;
    double idf(std::string_view token) const;

private:
    struct Posting {
        std::uint32_t doc;
        std::uint32_t tf;
    };
    Bm25Params params_;
    std::vector<std::string> doc_ids_;
    std::vector<DocKind> kinds_;
    std::vector<std::size_t> doc_len_;
    double avgdl_ = 0.0;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
};

/// Exhaustive cosine-similarity scan over precomputed document embeddings.
class DenseIndex final : public Retriever {
public:
    DenseIndex(const KnowledgeBase& kb, EmbeddingProviderPtr provider);

    RetrievalResult retrieve(std::string_view query, std::size_t r) const override;
    RetrievalResult retrieve(std::span<const double> query_vector, std::size_t r) const;

    const EmbeddingProvider& provider() const { return *provider_; }
    const std::vector<Embedding>& vectors() const noexcept { return vectors_; }
    const std::vector<std::string>& doc_ids() const noexcept { return doc_ids_; }

private:
    EmbeddingProviderPtr provider_;
    std::vector<std::string> doc_ids_;
    std::vector<DocKind> kinds_;
    std::vector<Embedding> vectors_;
};

/// Which retriever the RACG system uses; fixed for a run.
struct RetrieverSpec {
    enum class Kind { bm25, dense };
    Kind kind = Kind::bm25;
    EmbeddingProviderPtr provider;  // dense only
    Bm25Params bm25;

    static RetrieverSpec bm25_default() { return {}; }
    static RetrieverSpec dense(EmbeddingProviderPtr p) { return {Kind::dense, std::move(p), {}}; }
    std::string describe() const;
};

std::unique_ptr<Retriever> make_retriever(const RetrieverSpec& spec, const KnowledgeBase& kb);

struct RetrievalEval {
    double mrr = 0.0;
    std::map<int, double> sr_at;  // k -> SuccessRate@k

    bool operator==(const RetrievalEval&) const = default;
};

/// MRR (absent relevant doc contributes 0) and the fraction of queries whose
/// relevant doc appears in the top k, for each k.
RetrievalEval eval_retriever(const std::vector<std::pair<std::string, RetrievalResult>>& results,
                             const std::unordered_map<std::string, std::string>& relevant,
                             const std::vector<int>& ks);

}  // namespace racg
