#include "fixtures.hpp"

#include <atomic>
#include <unistd.h>

namespace racg::fx {

std::filesystem::path fixture_path(const std::string& name) { return std::filesystem::path(RACG_FIXTURE_DIR) / name; }

Dataset marker40() { return load_dataset(fixture_path("marker40.jsonl")); }

Dataset shots_fixture()
{
    const char* topics[][2] = {{"compress", "archive"}, {"resize", "image"},   {"hash", "password"},
                               {"format", "date"},      {"route", "request"},  {"sort", "inventory"}};
    Dataset out;
    int i = 0;
    for (const auto& [verb, noun] : topics) {
        const std::string v = verb, n = noun;
        const std::string body = "int " + v + "_" + n + "(struct " + n + " *item, size_t count)\n{\n";
        Instance a;
        a.id = "t" + std::to_string(i) + "a";
        a.query = v + " " + n + " " + v + " " + n;
        a.secure_code = body + "    if (item == NULL || count > LIMIT)\n        return -1;\n    return " + v + "_" + n +
                        "_apply(item, count);\n}";
        a.vulnerable_code = "/* " + v + " " + n + " " + v + " " + n + " VULN_MARKER */\nint " + v + "_" + n +
                            "(struct " + n + " *item)\n{\n    return " + v + "(" + n + ");\n}";
        a.language = Language::c;
        a.cwe_ids = {"CWE-787"};

        Instance b = a;
        b.id = "t" + std::to_string(i) + "b";
        b.query = "unrelated housekeeping routine number " + std::to_string(i);
        b.secure_code = body + "    if (item == NULL || count > LIMIT)\n        return -2;\n    return " + v + "_" + n +
                        "_apply(item, count);\n}";
        b.vulnerable_code = "void housekeeping_" + std::to_string(i) + "(void)\n{\n    cleanup(); /* VULN_MARKER */\n}";
        out.push_back(std::move(a));
        out.push_back(std::move(b));
        ++i;
    }
    return out;
}

Dataset query_equals_secure_fixture()
{
    Dataset out = marker40();
    for (auto& inst : out) inst.query = inst.secure_code;
    return out;
}

EmbeddingProviderPtr retriever_provider() { return std::make_shared<HashingEmbedder>("jina", 256, 11); }
EmbeddingProviderPtr poison_provider() { return std::make_shared<HashingEmbedder>("te3", 256, 23); }
EmbeddingProviderPtr similarity_provider() { return std::make_shared<HashingEmbedder>("sim", 256, 37); }

ExperimentSetup marker_setup(Dataset dataset, PoisonPlan poison, int shots)
{
    ExperimentSetup setup;
    setup.dataset = std::move(dataset);
    setup.retriever = RetrieverSpec::dense(retriever_provider());
    setup.poison_provider = poison_provider();
    setup.poison = poison;
    setup.shots = shots;
    setup.model = std::make_shared<CopycatClient>();
    setup.judge = std::make_shared<MarkerJudge>();
    setup.kmeans_seed = 7;
    setup.max_in_flight = 1;
    return setup;
}

std::filesystem::path temp_dir(const std::string& tag)
{
    static std::atomic<int> counter{0};
    auto dir = std::filesystem::temp_directory_path() /
               ("racg_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace racg::fx
