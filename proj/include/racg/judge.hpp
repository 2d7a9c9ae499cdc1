#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "racg/corpus.hpp"
#include "racg/model_client.hpp"

namespace racg {

inline constexpr std::string_view kVulnMarker = "VULN_MARKER";

/// Where a pattern came from: a retrieved vulnerable example (external) or the
/// query's own vulnerable/secure pair (internal).
struct PatternSource {
    enum class Kind { external, internal };
    Kind kind = Kind::internal;
    std::string id;  // doc_id for external, instance id for internal

    bool operator==(const PatternSource&) const = default;
};

struct VulnPattern {
    std::string name;
    std::string vulnerable_pattern;
    std::string fixing_pattern;
    PatternSource source;

    bool operator==(const VulnPattern&) const = default;
};

enum class JudgeKind { llm, marker };

std::string_view to_string(JudgeKind kind);

struct JudgeVerdict {
    bool vulnerable = false;
    std::vector<std::string> matched_patterns;
    JudgeKind judge_kind = JudgeKind::marker;

    bool operator==(const JudgeVerdict&) const = default;
};

/// Builds the extraction request from the patch (or both code versions when
/// no patch is present) and the description, if any.
std::string pattern_extraction_prompt(const Instance& inst);

/// Reads ``` fenced blocks holding NAME:, VULNERABLE: and FIX: lines. A NAME:
/// line opens a new pattern; unkeyed lines continue the previous field; text
/// outside fences is ignored. Patterns without a name or vulnerable part are
/// dropped.
std::vector<VulnPattern> parse_patterns(std::string_view output, const PatternSource& source);

/// Asks the model for the instance's vulnerability-cause patterns. An answer
/// without any pattern block gives an empty list and a warning.
std::vector<VulnPattern> extract_patterns(const Instance& inst, const ModelClient& client,
                                          const GenerationParams& params = {});

std::string assessment_prompt(std::string_view code, std::span<const VulnPattern> patterns);

/// First line reading "match: A, B" or "no match" decides. Anything else is
/// treated as secure with a warning.
JudgeVerdict parse_assessment(std::string_view output);

/// Vulnerable iff the model reports a match. No patterns means secure and no
/// model call.
JudgeVerdict assess_code(std::string_view code, std::span<const VulnPattern> patterns, const ModelClient& client,
                         const GenerationParams& params = {});

/// Offline oracle: vulnerable iff the code contains VULN_MARKER.
JudgeVerdict marker_judge(std::string_view code);

/// Internal-source patterns keyed by instance id, optionally persisted as
/// JSONL ({"instance_id": ..., "patterns": [...]} per line). Reads run
/// concurrently; inserts and file appends are serialised.
class PatternCache {
public:
    PatternCache() = default;
    explicit PatternCache(std::filesystem::path file);

    std::optional<std::vector<VulnPattern>> find(const std::string& instance_id) const;
    void insert(const std::string& instance_id, std::vector<VulnPattern> patterns);
    std::vector<VulnPattern> get_or_extract(const Instance& inst, const ModelClient& client,
                                            const GenerationParams& params = {});
    std::size_t size() const;

private:
    std::optional<std::filesystem::path> file_;
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, std::vector<VulnPattern>> entries_;
};

/// What a judge may look at for one generated snippet.
struct JudgeContext {
    std::string_view code;
    const Instance* query_instance = nullptr;
    /// (doc_id, origin instance) of every retrieved vulnerable or injected doc.
    std::vector<std::pair<std::string, const Instance*>> retrieved_vulnerable;
};

class Judge {
public:
    virtual ~Judge() = default;
    virtual JudgeKind kind() const = 0;
    virtual JudgeVerdict judge(const JudgeContext& ctx) const = 0;
};

using JudgePtr = std::shared_ptr<const Judge>;

class MarkerJudge final : public Judge {
public:
    JudgeKind kind() const override { return JudgeKind::marker; }
    JudgeVerdict judge(const JudgeContext& ctx) const override { return marker_judge(ctx.code); }
};

/// Two-step LLM judge: patterns from external and internal sources, then an
/// assessment call.
class LlmJudge final : public Judge {
public:
    LlmJudge(ModelClientPtr client, std::shared_ptr<PatternCache> cache, GenerationParams params = {});
    JudgeKind kind() const override { return JudgeKind::llm; }
    JudgeVerdict judge(const JudgeContext& ctx) const override;

    /// External patterns (re-tagged with the retrieved doc id) followed by
    /// internal ones; duplicates by (name, vulnerable pattern) are dropped.
    std::vector<VulnPattern> gather_patterns(const JudgeContext& ctx) const;

private:
    ModelClientPtr client_;
    std::shared_ptr<PatternCache> cache_;
    GenerationParams params_;
};

struct ConfusionMetrics {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;

    bool operator==(const ConfusionMetrics&) const = default;
};

ConfusionMetrics confusion_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn);

struct JudgePair {
    std::string vulnerable_code;
    std::string fixed_code;
    std::vector<VulnPattern> patterns;  // what an LLM judge may use; ignored by the marker judge
};

using CodeClassifier = std::function<JudgeVerdict(const std::string& code, std::span<const VulnPattern> patterns)>;

/// Vulnerable versions are the positive class and fixed versions the negative.
/// Throws std::invalid_argument on an empty pair list.
ConfusionMetrics evaluate_judge(std::span<const JudgePair> pairs, const CodeClassifier& judge);

}  // namespace racg
