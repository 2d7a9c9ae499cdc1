#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "racg/corpus.hpp"
#include "racg/embedding.hpp"
#include "racg/retrieval.hpp"
#include "racg/runner.hpp"

namespace racg {

/// N_v / N_t. Throws std::invalid_argument on an empty list or a record
/// without a verdict.
double vulnerability_rate(std::span<const GenerationRecord> records);

/// Mean over queries of (vulnerable retrieved docs) / r. Looks only at the
/// retrieval flags. Throws std::invalid_argument if r <= 0, the list is
/// empty, or a record retrieved more than r docs.
double vrrc(std::span<const GenerationRecord> records, int r);

using Ngram = std::vector<std::string>;

/// BLEU over token n-grams with the corpus's k most frequent n-grams (all
/// orders pooled; ties by n-gram) removed from candidate and reference
/// counts. No smoothing: a zero modified precision gives 0. Orders where the
/// candidate has no countable n-grams are skipped, and a candidate with none
/// at any order scores 0.
class CrystalBleu {
public:
    CrystalBleu(std::span<const std::string> corpus, std::size_t k, int max_n = 4);

    double score(std::string_view candidate, std::string_view reference) const;
    const std::set<Ngram>& trivially_shared() const noexcept { return trivial_; }
    int max_n() const noexcept { return max_n_; }

private:
    int max_n_;
    std::set<Ngram> trivial_;
};

double crystal_bleu(std::string_view candidate, std::string_view reference, std::span<const std::string> corpus,
                    std::size_t k, int max_n);

inline constexpr std::array<std::string_view, 5> kSimilarityBuckets = {"[0,20)", "[20,40)", "[40,60)", "[60,80)",
                                                                       "[80,100]"};

/// Bucket index for 100 * cosine: lower bounds inclusive, the last bucket
/// also includes 100. Values outside [0, 1] are clamped.
std::size_t similarity_bucket(double cosine);

struct BucketStats {
    std::size_t count = 0;
    double vr = 0.0;
    double vrrc = 0.0;

    bool operator==(const BucketStats&) const = default;
};

struct GroupStats {
    std::size_t count = 0;
    double vr = 0.0;

    bool operator==(const GroupStats&) const = default;
};

using DocLookup = std::function<const std::string*(const std::string& doc_id)>;

/// Buckets records by the cosine similarity between the query and its rank-1
/// retrieved doc under `provider` (which should not be the retriever's own).
/// Records without retrieved docs are skipped; empty buckets are omitted.
std::map<std::string, BucketStats> bucket_by_similarity(std::span<const GenerationRecord> records,
                                                        const EmbeddingProvider& provider, const DocLookup& doc_text,
                                                        int r);

struct MetricsReport {
    std::string label;
    double vr = 0.0;
    double vrrc = 0.0;
    double similarity = 0.0;
    std::size_t n_records = 0;
    std::size_t n_failed = 0;
    std::optional<RetrievalEval> retrieval_eval;
    std::map<std::string, GroupStats> by_language;
    std::map<std::string, GroupStats> by_cwe;
    std::map<std::string, BucketStats> by_similarity;
    nlohmann::json config = nlohmann::json::object();

    bool operator==(const MetricsReport&) const = default;
};

struct ReportOptions {
    int r = 1;
    std::size_t bleu_k = 50;
    int bleu_max_n = 4;
    const EmbeddingProvider* similarity_provider = nullptr;  // no similarity buckets when null
    DocLookup doc_text;
};

/// Aggregates the successful records. Similarity compares generated code
/// with the query's secure ground truth, the CrystalBLEU corpus being every
/// secure code in `dataset`.
MetricsReport build_report(std::span<const GenerationRecord> records, const Dataset& dataset,
                           const ReportOptions& options, std::string label, nlohmann::json config_echo);

enum class ReportFormat { json, markdown, csv };

nlohmann::json report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& obj);
std::string render_report(const MetricsReport& report, ReportFormat format);
/// One table row per report (label, VR, Sim, VRRC), for parameter sweeps.
std::string render_sweep_table(std::span<const MetricsReport> reports, std::string_view parameter);

/// Writes the rendered report. Throws DataError if the path is not writable.
void emit_report(const MetricsReport& report, ReportFormat format, const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace racg
