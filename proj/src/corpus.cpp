#include "racg/corpus.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "racg/error.hpp"
#include "racg/log.hpp"
#include "racg/parallel.hpp"
#include "racg/text.hpp"

namespace racg {

using nlohmann::json;

std::string_view to_string(Language lang)
{
    switch (lang) {
    case Language::c: return "C";
    case Language::cpp: return "C++";
    case Language::java: return "Java";
    case Language::python: return "Python";
    case Language::other: break;
    }
    return "other";
}

Language parse_language(std::string_view text)
{
    std::string lower;
    for (char c : trim(text)) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lower == "c") return Language::c;
    if (lower == "c++" || lower == "cpp") return Language::cpp;
    if (lower == "java") return Language::java;
    if (lower == "python") return Language::python;
    return Language::other;
}

std::string_view to_string(DocKind kind)
{
    switch (kind) {
    case DocKind::secure: return "secure";
    case DocKind::vulnerable: return "vulnerable";
    case DocKind::injected: return "injected";
    }
    return "secure";
}

DocKind parse_doc_kind(std::string_view text)
{
    if (text == "secure") return DocKind::secure;
    if (text == "vulnerable") return DocKind::vulnerable;
    if (text == "injected") return DocKind::injected;
    throw DataError("unknown document kind '" + std::string(text) + "'");
}

KnowledgeBase::KnowledgeBase(KbLabel label, std::vector<CodeDoc> docs) : label_(label), docs_(std::move(docs))
{
    by_id_.reserve(docs_.size());
    for (std::size_t i = 0; i < docs_.size(); ++i) {
        if (!by_id_.emplace(docs_[i].doc_id, i).second)
            throw DataError("duplicate doc_id '" + docs_[i].doc_id + "' in knowledge base");
    }
}

const CodeDoc* KnowledgeBase::find(std::string_view doc_id) const
{
    auto it = by_id_.find(std::string(doc_id));
    return it == by_id_.end() ? nullptr : &docs_[it->second];
}

std::string secure_doc_id(std::string_view instance_id) { return std::string(instance_id) + "#s"; }
std::string vulnerable_doc_id(std::string_view instance_id) { return std::string(instance_id) + "#v"; }

namespace {

std::string optional_string(const json& obj, const char* key)
{
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return {};
    return it->get<std::string>();
}

Instance instance_from_json(const json& obj)
{
    if (!obj.is_object()) throw DataError("record is not a JSON object");
    Instance inst;
    inst.id = obj.at("id").get<std::string>();
    if (inst.id.empty()) throw DataError("empty id");
    inst.query = optional_string(obj, "query");
    inst.vulnerable_code = obj.at("vulnerable_code").get<std::string>();
    inst.secure_code = obj.at("secure_code").get<std::string>();
    inst.language = parse_language(optional_string(obj, "language"));
    if (auto it = obj.find("cwe_ids"); it != obj.end() && !it->is_null())
        inst.cwe_ids = it->get<std::vector<std::string>>();
    inst.patch = optional_string(obj, "patch");
    inst.description = optional_string(obj, "description");
    if (auto it = obj.find("query_generated"); it != obj.end()) inst.query_generated = it->get<bool>();
    if (inst.vulnerable_code == inst.secure_code)
        throw DataError("vulnerable_code and secure_code are identical");
    return inst;
}

json instance_to_json(const Instance& inst)
{
    json obj = {
        {"id", inst.id},
        {"query", inst.query},
        {"vulnerable_code", inst.vulnerable_code},
        {"secure_code", inst.secure_code},
        {"language", to_string(inst.language)},
        {"cwe_ids", inst.cwe_ids},
        {"patch", inst.patch},
        {"description", inst.description},
    };
    // Only emitted when set, so ordinary records keep the exact eight-field shape.
    if (inst.query_generated) obj["query_generated"] = true;
    return obj;
}

}  // namespace

Dataset parse_dataset(std::string_view jsonl, std::string_view source)
{
    Dataset out;
    std::unordered_map<std::string, std::size_t> seen;
    std::size_t line_no = 0;
    for (auto line : split_lines(jsonl)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto where = std::string(source) + ":" + std::to_string(line_no);
        Instance inst;
        try {
            inst = instance_from_json(json::parse(line));
        } catch (const json::exception& e) {
            throw DataError(where + ": malformed record: " + e.what());
        } catch (const DataError& e) {
            throw DataError(where + ": " + e.what());
        }
        if (auto [it, fresh] = seen.emplace(inst.id, line_no); !fresh)
            throw DataError(where + ": duplicate id '" + inst.id + "' (first seen on line " +
                            std::to_string(it->second) + ")");
        out.push_back(std::move(inst));
    }
    return out;
}

Dataset load_dataset(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dataset '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_dataset(buffer.str(), path.string());
}

std::string serialize_dataset(const Dataset& dataset)
{
    std::string out;
    for (const auto& inst : dataset) {
        out += instance_to_json(inst).dump();
        out += '\n';
    }
    return out;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write dataset '" + path.string() + "'");
    out << serialize_dataset(dataset);
    if (!out) throw DataError("failed writing dataset '" + path.string() + "'");
}

bool passes_filters(const Instance& inst)
{
    if (count_nonblank_lines(inst.secure_code) < 3) return false;
    return !icontains(function_name(inst.secure_code), "test");
}

Dataset filter_instances(const Dataset& dataset)
{
    Dataset out;
    std::copy_if(dataset.begin(), dataset.end(), std::back_inserter(out), passes_filters);
    return out;
}

KnowledgeBases build_kbs(const Dataset& dataset)
{
    if (dataset.empty()) throw DataError("cannot build knowledge bases from an empty dataset");
    std::vector<CodeDoc> secure, vulnerable;
    secure.reserve(dataset.size());
    vulnerable.reserve(dataset.size());
    for (const auto& inst : dataset) {
        secure.push_back({secure_doc_id(inst.id), inst.secure_code, inst.id, DocKind::secure});
        vulnerable.push_back({vulnerable_doc_id(inst.id), inst.vulnerable_code, inst.id, DocKind::vulnerable});
    }
    return {KnowledgeBase(KbLabel::secure_kb, std::move(secure)),
            KnowledgeBase(KbLabel::vuln_kb, std::move(vulnerable))};
}

std::unordered_map<std::string, const Instance*> index_by_id(const Dataset& dataset)
{
    std::unordered_map<std::string, const Instance*> out;
    out.reserve(dataset.size());
    for (const auto& inst : dataset) out.emplace(inst.id, &inst);
    return out;
}

std::string query_generation_prompt(const std::string& secure_code)
{
    return "You are given a function. Describe what it does in one or two sentences, as a developer "
           "would phrase a request to implement it. Describe only its functionality; do not mention "
           "implementation details, variable names, or security properties. Reply with the description "
           "only.\n\nFunction:\n```\n" +
           secure_code + "\n```\n";
}

QueryGenerationResult generate_missing_queries(const Dataset& dataset, const ModelClient& model,
                                               const GenerationParams& params, std::size_t max_in_flight)
{
    std::vector<std::optional<Instance>> slots(dataset.size());
    std::vector<std::string> errors(dataset.size());

    parallel_for(dataset.size(), max_in_flight, [&](std::size_t i) {
        Instance inst = dataset[i];
        if (!trim(inst.query).empty()) {
            slots[i] = std::move(inst);
            return;
        }
        try {
            auto answer = std::string(trim(strip_code_fences(model.complete(text_prompt(query_generation_prompt(inst.secure_code)), params))));
            if (answer.empty()) throw RemoteError("model returned an empty description");
            inst.query = std::move(answer);
            inst.query_generated = true;
            slots[i] = std::move(inst);
        } catch (const std::exception& e) {
            errors[i] = inst.id + ": " + e.what();
        }
    });

    QueryGenerationResult result;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i])
            result.dataset.push_back(std::move(*slots[i]));
        else
            result.failures.push_back(std::move(errors[i]));
    }
    if (!result.failures.empty())
        log::warn("query generation dropped " + std::to_string(result.failures.size()) + " instance(s)");
    return result;
}

}  // namespace racg
