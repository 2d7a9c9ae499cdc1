#include "racg/config.hpp"

#include <fstream>

#include "racg/error.hpp"

namespace racg {

using nlohmann::json;

namespace {

std::uint64_t name_hash(std::string_view s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

RemoteEndpoint parse_endpoint(const json& obj)
{
    RemoteEndpoint e;
    e.base_url = obj.at("base_url").get<std::string>();
    e.model = obj.at("model").get<std::string>();
    e.api_key_env = obj.value("api_key_env", "");
    e.max_attempts = obj.value("max_attempts", 3);
    e.initial_backoff = std::chrono::milliseconds(obj.value("initial_backoff_ms", 500));
    e.timeout = std::chrono::seconds(obj.value("timeout_s", 120));
    e.max_in_flight = obj.value("max_in_flight", std::size_t{4});
    return e;
}

json endpoint_to_json(const RemoteEndpoint& e)
{
    return {{"base_url", e.base_url}, {"model", e.model}, {"api_key_env", e.api_key_env},
            {"max_attempts", e.max_attempts}, {"max_in_flight", e.max_in_flight}};
}

ModelConfig parse_model(const json& obj)
{
    ModelConfig m;
    const auto kind = obj.at("kind").get<std::string>();
    if (kind == "mock_copycat") {
        m.kind = ModelConfig::Kind::mock_copycat;
    } else if (kind == "mock_constant") {
        m.kind = ModelConfig::Kind::mock_constant;
        m.text = obj.at("text").get<std::string>();
    } else if (kind == "remote_chat") {
        m.kind = ModelConfig::Kind::remote_chat;
        m.endpoint = parse_endpoint(obj);
    } else {
        throw ConfigError("unknown model kind '" + kind + "'");
    }
    return m;
}

json model_to_json(const ModelConfig& m)
{
    switch (m.kind) {
    case ModelConfig::Kind::mock_copycat: return {{"kind", "mock_copycat"}};
    case ModelConfig::Kind::mock_constant: return {{"kind", "mock_constant"}, {"text", m.text}};
    case ModelConfig::Kind::remote_chat: {
        auto j = endpoint_to_json(m.endpoint);
        j["kind"] = "remote_chat";
        return j;
    }
    }
    return nullptr;
}

ProviderConfig parse_provider(const json& obj)
{
    ProviderConfig p;
    const auto mode = obj.value("mode", std::string("deterministic_local"));
    if (mode == "deterministic_local") {
        p.mode = ProviderMode::deterministic_local;
        if (obj.contains("seed")) p.seed = obj.at("seed").get<std::uint64_t>();
    } else if (mode == "remote") {
        p.mode = ProviderMode::remote;
        p.endpoint = parse_endpoint(obj);
        p.batch_size = obj.value("batch_size", std::size_t{64});
    } else {
        throw ConfigError("unknown provider mode '" + mode + "'");
    }
    p.dim = obj.value("dim", std::size_t{256});
    if (p.dim == 0) throw ConfigError("provider dim must be positive");
    return p;
}

}  // namespace

ExperimentConfig parse_config(const json& obj, const std::filesystem::path& base_dir)
{
    ExperimentConfig cfg;
    try {
        auto resolve = [&](const std::string& p) {
            std::filesystem::path path(p);
            return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
        };
        cfg.dataset_path = resolve(obj.at("dataset_path").get<std::string>());
        cfg.filter = obj.value("filter", true);
        cfg.generate_queries = obj.value("generate_queries", false);
        cfg.retriever = obj.value("retriever", std::string("bm25"));
        cfg.eval_retrievers = obj.value("eval_retrievers", std::vector<std::string>{});
        if (auto it = obj.find("providers"); it != obj.end()) {
            for (const auto& [name, p] : it->items()) cfg.providers[name] = parse_provider(p);
        }
        cfg.poison_provider = obj.value("poison_provider", cfg.poison_provider);
        cfg.similarity_provider = obj.value("similarity_provider", cfg.similarity_provider);

        if (auto it = obj.find("poison"); it != obj.end() && !it->is_null()) {
            const auto scenario = it->at("scenario").get<std::string>();
            if (scenario == "I") {
                if (it->contains("p")) throw ConfigError("scenario I takes m, not p");
                cfg.poison = PoisonPlan::scenario1(it->at("m").get<std::size_t>());
            } else if (scenario == "II") {
                if (it->contains("m")) throw ConfigError("scenario II takes p, not m");
                cfg.poison = PoisonPlan::scenario2(it->at("p").get<double>());
            } else {
                throw ConfigError("unknown poisoning scenario '" + scenario + "'");
            }
        }
        if (auto it = obj.find("sweep"); it != obj.end() && !it->is_null()) {
            cfg.sweep_m = it->value("m", std::vector<std::size_t>{});
            cfg.sweep_p = it->value("p", std::vector<double>{});
        }
        cfg.shots = obj.value("shots", 1);
        if (auto it = obj.find("model"); it != obj.end()) cfg.model = parse_model(*it);
        if (auto it = obj.find("judge"); it != obj.end()) {
            const auto kind = it->at("kind").get<std::string>();
            if (kind == "marker") {
                cfg.judge.kind = JudgeKind::marker;
            } else if (kind == "llm") {
                cfg.judge.kind = JudgeKind::llm;
                cfg.judge.model = parse_model(it->at("model"));
                if (it->contains("pattern_cache"))
                    cfg.judge.pattern_cache = resolve(it->at("pattern_cache").get<std::string>()).string();
            } else {
                throw ConfigError("unknown judge kind '" + kind + "'");
            }
        }
        if (auto it = obj.find("seeds"); it != obj.end()) {
            cfg.seeds.kmeans = it->value("kmeans", std::uint64_t{0});
            cfg.seeds.provider = it->value("provider", std::uint64_t{0});
        }
        if (auto it = obj.find("generation"); it != obj.end()) {
            cfg.generation.temperature = it->value("temperature", cfg.generation.temperature);
            cfg.generation.top_p = it->value("top_p", cfg.generation.top_p);
            cfg.generation.max_new_tokens = it->value("max_new_tokens", cfg.generation.max_new_tokens);
            cfg.generation.context_window = it->value("context_window", cfg.generation.context_window);
        }
        if (auto it = obj.find("crystal_bleu"); it != obj.end()) {
            cfg.bleu_k = it->value("k", cfg.bleu_k);
            cfg.bleu_max_n = it->value("max_n", cfg.bleu_max_n);
        }
        cfg.eval_ks = obj.value("eval_ks", cfg.eval_ks);
        if (auto it = obj.find("t_range"); it != obj.end() && !it->is_null()) {
            auto range = it->get<std::vector<std::size_t>>();
            if (range.size() != 2) throw ConfigError("t_range must be [t_min, t_max]");
            cfg.t_range = std::pair{range[0], range[1]};
        }
        cfg.max_in_flight = obj.value("max_in_flight", cfg.max_in_flight);
        cfg.output_dir = resolve(obj.value("output_dir", std::string("racg-out")));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
    validate(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    json obj;
    try {
        obj = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_config(obj, path.parent_path());
}

void validate(const ExperimentConfig& cfg)
{
    if (cfg.shots != 0 && cfg.shots != 1 && cfg.shots != 3) throw ConfigError("shots must be 0, 1 or 3");
    if (!cfg.sweep_m.empty() && !cfg.sweep_p.empty()) throw ConfigError("sweep over m or over p, not both");
    if (cfg.poison.kind == PoisonPlan::Kind::scenario2 && !(cfg.poison.p >= 0.0 && cfg.poison.p <= 1.0))
        throw ConfigError("poisoning proportion p must lie in [0, 1]");
    for (double p : cfg.sweep_p) {
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("sweep p values must lie in [0, 1]");
    }
    if (cfg.retriever != "bm25" && !cfg.retriever.starts_with("dense:"))
        throw ConfigError("retriever must be 'bm25' or 'dense:<provider>'");
    if (cfg.bleu_max_n < 1) throw ConfigError("crystal_bleu.max_n must be >= 1");
    for (int k : cfg.eval_ks) {
        if (k < 1) throw ConfigError("eval_ks must be positive");
    }
    if (cfg.t_range && (cfg.t_range->first < 1 || cfg.t_range->second < cfg.t_range->first))
        throw ConfigError("t_range must satisfy 1 <= t_min <= t_max");
    if (cfg.max_in_flight == 0) throw ConfigError("max_in_flight must be positive");
    if (cfg.retriever.starts_with("dense:") && cfg.retriever.substr(6) == cfg.poison_provider)
        throw ConfigError("the poisoning provider must differ from the RACG retriever's provider");
}

void apply_overrides(ExperimentConfig& cfg, const ConfigOverrides& o)
{
    if (o.shots) cfg.shots = *o.shots;
    if (o.poison_m && o.poison_p) throw ConfigError("--poison-m and --poison-p are mutually exclusive");
    if (o.poison_m) {
        cfg.poison = PoisonPlan::scenario1(*o.poison_m);
        cfg.sweep_m.clear();
        cfg.sweep_p.clear();
    }
    if (o.poison_p) {
        cfg.poison = PoisonPlan::scenario2(*o.poison_p);
        cfg.sweep_m.clear();
        cfg.sweep_p.clear();
    }
    if (o.retriever) cfg.retriever = *o.retriever;
    if (o.seed) {
        cfg.seeds.kmeans = *o.seed;
        cfg.seeds.provider = *o.seed;
    }
    if (o.output_dir) cfg.output_dir = *o.output_dir;
    validate(cfg);
}

json config_to_json(const ExperimentConfig& cfg)
{
    json providers = json::object();
    auto all = cfg.providers;
    for (const auto& name : {cfg.poison_provider, cfg.similarity_provider}) {
        if (!all.contains(name)) all[name] = ProviderConfig{};
    }
    if (cfg.retriever.starts_with("dense:") && !all.contains(cfg.retriever.substr(6))) all[cfg.retriever.substr(6)] = {};
    for (const auto& [name, p] : all) {
        if (p.mode == ProviderMode::remote) {
            auto j = endpoint_to_json(p.endpoint);
            j["mode"] = "remote";
            j["dim"] = p.dim;
            providers[name] = j;
        } else {
            providers[name] = {{"mode", "deterministic_local"}, {"dim", p.dim},
                               {"seed", p.seed.value_or(cfg.seeds.provider ^ name_hash(name))}};
        }
    }
    json poison = nullptr;
    if (cfg.poison.kind == PoisonPlan::Kind::scenario1) poison = {{"scenario", "I"}, {"m", cfg.poison.m}};
    if (cfg.poison.kind == PoisonPlan::Kind::scenario2) poison = {{"scenario", "II"}, {"p", cfg.poison.p}};
    json judge = {{"kind", to_string(cfg.judge.kind)}};
    if (cfg.judge.kind == JudgeKind::llm) judge["model"] = model_to_json(cfg.judge.model);

    return {
        {"dataset", cfg.dataset_path.filename().string()},
        {"filter", cfg.filter},
        {"retriever", cfg.retriever},
        {"providers", providers},
        {"poison_provider", cfg.poison_provider},
        {"similarity_provider", cfg.similarity_provider},
        {"poison", poison},
        {"sweep", {{"m", cfg.sweep_m}, {"p", cfg.sweep_p}}},
        {"shots", cfg.shots},
        {"model", model_to_json(cfg.model)},
        {"judge", judge},
        {"seeds", {{"kmeans", cfg.seeds.kmeans}, {"provider", cfg.seeds.provider}}},
        {"generation",
         {{"temperature", cfg.generation.temperature},
          {"top_p", cfg.generation.top_p},
          {"max_new_tokens", cfg.generation.max_new_tokens},
          {"context_window", cfg.generation.context_window}}},
        {"crystal_bleu", {{"k", cfg.bleu_k}, {"max_n", cfg.bleu_max_n}}},
        {"eval_ks", cfg.eval_ks},
        {"t_range", cfg.t_range ? json{cfg.t_range->first, cfg.t_range->second} : json(nullptr)},
        {"prompt_template", kPromptTemplateVersion},
    };
}

EmbeddingProviderPtr make_provider(const ExperimentConfig& cfg, const std::string& name)
{
    ProviderConfig p;
    if (auto it = cfg.providers.find(name); it != cfg.providers.end()) p = it->second;
    if (p.mode == ProviderMode::remote) {
        auto endpoint = p.endpoint;
        return std::make_shared<RemoteEmbedder>(endpoint.model.empty() ? name : endpoint.model, endpoint, p.dim,
                                                p.batch_size);
    }
    return std::make_shared<HashingEmbedder>(name, p.dim, p.seed.value_or(cfg.seeds.provider ^ name_hash(name)));
}

ModelClientPtr make_model_client(const ModelConfig& model)
{
    switch (model.kind) {
    case ModelConfig::Kind::mock_copycat: return std::make_shared<CopycatClient>();
    case ModelConfig::Kind::mock_constant: return std::make_shared<ConstantClient>(model.text);
    case ModelConfig::Kind::remote_chat: return std::make_shared<RemoteChatClient>(model.endpoint);
    }
    throw ConfigError("unknown model kind");
}

JudgePtr make_judge(const ExperimentConfig& cfg)
{
    if (cfg.judge.kind == JudgeKind::marker) return std::make_shared<MarkerJudge>();
    std::shared_ptr<PatternCache> cache = cfg.judge.pattern_cache.empty()
                                              ? std::make_shared<PatternCache>()
                                              : std::make_shared<PatternCache>(cfg.judge.pattern_cache);
    return std::make_shared<LlmJudge>(make_model_client(cfg.judge.model), std::move(cache), cfg.generation);
}

RetrieverSpec make_retriever_spec(const ExperimentConfig& cfg, const std::string& retriever)
{
    if (retriever == "bm25") return RetrieverSpec::bm25_default();
    if (retriever.starts_with("dense:")) return RetrieverSpec::dense(make_provider(cfg, retriever.substr(6)));
    throw ConfigError("unknown retriever '" + retriever + "'");
}

}  // namespace racg
