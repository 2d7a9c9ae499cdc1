#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "racg/embedding.hpp"
#include "racg/judge.hpp"
#include "racg/model_client.hpp"
#include "racg/runner.hpp"

namespace racg {

struct ProviderConfig {
    ProviderMode mode = ProviderMode::deterministic_local;
    std::size_t dim = 256;
    std::optional<std::uint64_t> seed;  // local only; derived from seeds.provider when absent
    RemoteEndpoint endpoint;            // remote only; endpoint.model is the embedding model
    std::size_t batch_size = 64;
};

struct ModelConfig {
    enum class Kind { remote_chat, mock_copycat, mock_constant };
    Kind kind = Kind::mock_copycat;
    std::string text;  // mock_constant
    RemoteEndpoint endpoint;
};

struct JudgeConfig {
    JudgeKind kind = JudgeKind::marker;
    ModelConfig model;          // llm only
    std::string pattern_cache;  // llm only, optional JSONL path
};

struct Seeds {
    std::uint64_t kmeans = 0;
    std::uint64_t provider = 0;
};

/// Everything one invocation needs. Paths in a config file are resolved
/// against the file's directory.
struct ExperimentConfig {
    std::filesystem::path dataset_path;
    bool filter = true;
    bool generate_queries = false;
    std::string retriever = "bm25";  // "bm25" or "dense:<provider name>"
    std::vector<std::string> eval_retrievers;  // eval-retriever; defaults to {retriever}
    std::map<std::string, ProviderConfig> providers;
    std::string poison_provider = "poison";
    std::string similarity_provider = "similarity";
    PoisonPlan poison;
    std::vector<std::size_t> sweep_m;
    std::vector<double> sweep_p;
    int shots = 1;
    ModelConfig model;
    JudgeConfig judge;
    Seeds seeds;
    GenerationParams generation;
    std::size_t bleu_k = 50;
    int bleu_max_n = 4;
    std::vector<int> eval_ks{1, 5, 10};
    std::optional<std::pair<std::size_t, std::size_t>> t_range;
    std::size_t max_in_flight = 4;
    std::filesystem::path output_dir = "racg-out";
};

/// Throws ConfigError on unknown enum values, bad types or violated invariants.
ExperimentConfig parse_config(const nlohmann::json& obj, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Normalised echo embedded in every report. Contains no secrets.
nlohmann::json config_to_json(const ExperimentConfig& cfg);

struct ConfigOverrides {
    std::optional<int> shots;
    std::optional<std::size_t> poison_m;
    std::optional<double> poison_p;
    std::optional<std::string> retriever;
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> output_dir;
};

void apply_overrides(ExperimentConfig& cfg, const ConfigOverrides& overrides);

/// Checks cross-field invariants (shots, scenario exclusivity, provider names).
void validate(const ExperimentConfig& cfg);

EmbeddingProviderPtr make_provider(const ExperimentConfig& cfg, const std::string& name);
ModelClientPtr make_model_client(const ModelConfig& model);
JudgePtr make_judge(const ExperimentConfig& cfg);
RetrieverSpec make_retriever_spec(const ExperimentConfig& cfg, const std::string& retriever);

}  // namespace racg
