#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "racg/model_client.hpp"

namespace racg {

enum class Language { c, cpp, java, python, other };

std::string_view to_string(Language lang);
/// Accepts "C", "C++"/"cpp", "Java", "Python" (any case); anything else is other.
Language parse_language(std::string_view text);

/// One dataset triple (query, vulnerable code, secure code) plus metadata.
struct Instance {
    std::string id;
    std::string query;
    std::string vulnerable_code;
    std::string secure_code;
    Language language = Language::other;
    std::vector<std::string> cwe_ids;
    std::string patch;
    std::string description;
    bool query_generated = false;

    bool operator==(const Instance&) const = default;
};

using Dataset = std::vector<Instance>;

enum class DocKind { secure, vulnerable, injected };

std::string_view to_string(DocKind kind);
DocKind parse_doc_kind(std::string_view text);

inline bool is_vulnerable(DocKind kind) { return kind != DocKind::secure; }

struct CodeDoc {
    std::string doc_id;
    std::string text;
    std::string origin_instance;
    DocKind kind = DocKind::secure;

    bool operator==(const CodeDoc&) const = default;
};

enum class KbLabel { secure_kb, vuln_kb, poisoned_view };

/// Ordered, immutable collection of code documents with unique ids.
class KnowledgeBase {
public:
    KnowledgeBase(KbLabel label, std::vector<CodeDoc> docs);

    KbLabel label() const noexcept { return label_; }
    const std::vector<CodeDoc>& docs() const noexcept { return docs_; }
    std::size_t size() const noexcept { return docs_.size(); }
    bool empty() const noexcept { return docs_.empty(); }
    const CodeDoc& operator[](std::size_t i) const { return docs_[i]; }

    const CodeDoc* find(std::string_view doc_id) const;

private:
    KbLabel label_;
    std::vector<CodeDoc> docs_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

/// Doc ids are "<instance id>#s" for secure and "<instance id>#v" for vulnerable code.
std::string secure_doc_id(std::string_view instance_id);
std::string vulnerable_doc_id(std::string_view instance_id);

/// Parses the JSONL dataset format. Blank lines are skipped. Throws DataError
/// naming the offending line for malformed records and duplicate ids.
Dataset load_dataset(const std::filesystem::path& path);
Dataset parse_dataset(std::string_view jsonl, std::string_view source = "<memory>");

void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
std::string serialize_dataset(const Dataset& dataset);

/// Keeps instances whose secure code has at least three non-blank lines and
/// whose function name does not contain "test" (case-insensitive).
bool passes_filters(const Instance& inst);
Dataset filter_instances(const Dataset& dataset);

struct KnowledgeBases {
    KnowledgeBase secure;
    KnowledgeBase vulnerable;
};

KnowledgeBases build_kbs(const Dataset& dataset);

/// Look up instances by id.
std::unordered_map<std::string, const Instance*> index_by_id(const Dataset& dataset);

struct QueryGenerationResult {
    Dataset dataset;
    std::vector<std::string> failures;  // "<instance id>: <reason>"
};

/// Prompt asking the model for a functionality description of secure code.
std::string query_generation_prompt(const std::string& secure_code);

/// Fills empty queries from the model's description of the secure code.
/// Instances whose call fails are dropped and listed in `failures`.
QueryGenerationResult generate_missing_queries(const Dataset& dataset, const ModelClient& model,
                                               const GenerationParams& params = {},
                                               std::size_t max_in_flight = 4);

}  // namespace racg
