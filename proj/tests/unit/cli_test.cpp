#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "racg/commands.hpp"
#include "racg/config.hpp"
#include "racg/error.hpp"

using namespace racg;

namespace {

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr)
{
    std::ostringstream out, err;
    int rc = run_cli(args, out, err);
    if (out_text) *out_text = out.str();
    if (err_text) *err_text = err.str();
    return rc;
}

std::string fixture(const std::string& name) { return fx::fixture_path(name).string(); }

}  // namespace

TEST(Config, ParsesAndResolvesPaths)
{
    auto cfg = load_config(fixture("marker_scenario1.json"));
    EXPECT_EQ(cfg.dataset_path, fx::fixture_path("marker40.jsonl"));
    EXPECT_EQ(cfg.retriever, "dense:jina");
    EXPECT_EQ(cfg.poison.kind, PoisonPlan::Kind::scenario1);
    EXPECT_EQ(cfg.poison.m, 1u);
    EXPECT_EQ(cfg.shots, 1);
    EXPECT_EQ(cfg.providers.size(), 3u);
    EXPECT_DOUBLE_EQ(cfg.generation.top_p, 0.95);
    EXPECT_EQ(cfg.generation.max_new_tokens, 4096);
    EXPECT_EQ(cfg.generation.context_window, 8192);
}

TEST(Config, RejectsInvalidValues)
{
    nlohmann::json base = {{"dataset_path", "x.jsonl"}};
    EXPECT_NO_THROW(parse_config(base));
    auto bad = base;
    bad["shots"] = 2;
    EXPECT_THROW(validate(parse_config(bad)), ConfigError);
    bad = base;
    bad["retriever"] = "tfidf";
    EXPECT_THROW(validate(parse_config(bad)), ConfigError);
    bad = base;
    bad["poison"] = {{"scenario", "III"}};
    EXPECT_THROW(parse_config(bad), ConfigError);
    bad = base;
    bad["poison"] = {{"scenario", "II"}, {"p", 1.5}};
    EXPECT_THROW(validate(parse_config(bad)), ConfigError);
    EXPECT_THROW(parse_config(nlohmann::json::array()), ConfigError);
}

TEST(Config, OverridesAndEcho)
{
    auto cfg = load_config(fixture("marker_scenario1.json"));
    ConfigOverrides o;
    o.shots = 3;
    o.poison_p = 0.4;
    o.retriever = "bm25";
    apply_overrides(cfg, o);
    EXPECT_EQ(cfg.shots, 3);
    EXPECT_EQ(cfg.poison.kind, PoisonPlan::Kind::scenario2);
    EXPECT_EQ(cfg.retriever, "bm25");
    auto echo = config_to_json(cfg);
    EXPECT_EQ(echo.at("shots"), 3);
    EXPECT_EQ(echo.dump().find("api_key"), std::string::npos);
}

TEST(Config, RemoteKeyIsNeverEchoed)
{
    nlohmann::json obj = {{"dataset_path", "x.jsonl"},
                          {"model", {{"kind", "remote_chat"}, {"base_url", "http://h/v1"}, {"model", "m"},
                                     {"api_key_env", "SOME_ENV"}}}};
    auto echo = config_to_json(parse_config(obj));
    EXPECT_EQ(echo.at("model").at("api_key_env"), "SOME_ENV");
}

TEST(Cli, IngestPrintsCounts)
{
    std::string out;
    ASSERT_EQ(cli({"ingest", "-c", fixture("small6.json")}, &out), kExitOk);
    EXPECT_NE(out.find("loaded: 6"), std::string::npos) << out;
    EXPECT_NE(out.find("retained: 5"), std::string::npos);
}

TEST(Cli, ExitCodes)
{
    std::string err;
    EXPECT_EQ(cli({"ingest", "-c", fixture("missing_dataset.json")}, nullptr, &err), kExitData);
    EXPECT_NE(err.find("does_not_exist"), std::string::npos);
    EXPECT_EQ(cli({"ingest", "-c", "/nonexistent/config.json"}), kExitConfig);
    EXPECT_EQ(cli({"bogus"}), kExitConfig);
    EXPECT_EQ(cli({"run", "-c", fixture("marker_scenario1.json"), "--shots", "2"}), kExitConfig);
}

TEST(Cli, RunTwiceIsByteIdentical)
{
    auto a = fx::temp_dir("cli_a"), b = fx::temp_dir("cli_b");
    ASSERT_EQ(cli({"run", "-c", fixture("marker_scenario1.json"), "-o", a.string()}), kExitOk);
    ASSERT_EQ(cli({"run", "-c", fixture("marker_scenario1.json"), "-o", b.string()}), kExitOk);
    for (auto f : {"records.jsonl", "report.json", "report.md", "report.csv", "poison_set.jsonl"}) {
        ASSERT_TRUE(std::filesystem::exists(a / f)) << f;
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }
}

TEST(Cli, SweepWritesOneDirectoryPerPoint)
{
    auto dir = fx::temp_dir("sweep");
    ASSERT_EQ(cli({"run", "-c", fixture("marker_sweep_m.json"), "-o", dir.string()}), kExitOk);
    for (auto m : {0, 1, 3, 5, 9}) EXPECT_TRUE(std::filesystem::exists(dir / ("m_" + std::to_string(m)) / "report.json"));
    auto sweep = nlohmann::json::parse(slurp(dir / "sweep.json"));
    const auto& points = sweep.at("points");
    ASSERT_EQ(points.size(), 5u);
    EXPECT_DOUBLE_EQ(points[0].at("vr").get<double>(), 0.0);
    EXPECT_TRUE(std::filesystem::exists(dir / "sweep.md"));
}

TEST(Cli, ReportRebuildsFromRecords)
{
    auto dir = fx::temp_dir("report_cmd");
    ASSERT_EQ(cli({"run", "-c", fixture("marker_scenario1.json"), "-o", dir.string()}), kExitOk);
    auto before = slurp(dir / "report.json");
    std::filesystem::remove(dir / "report.json");
    ASSERT_EQ(cli({"report", "-c", fixture("marker_scenario1.json"), "-o", dir.string()}), kExitOk);
    EXPECT_EQ(slurp(dir / "report.json"), before);
}

TEST(Cli, EvalRetrieverAndJudgeEval)
{
    auto dir = fx::temp_dir("evals");
    ASSERT_EQ(cli({"eval-retriever", "-c", fixture("marker_scenario1.json"), "-o", dir.string()}), kExitOk);
    auto ev = nlohmann::json::parse(slurp(dir / "retrieval_eval.json"));
    EXPECT_FALSE(ev.empty());
    ASSERT_EQ(cli({"judge-eval", "-c", fixture("marker_scenario1.json"), "-o", dir.string()}), kExitOk);
    auto je = nlohmann::json::parse(slurp(dir / "judge_eval.json"));
    EXPECT_DOUBLE_EQ(je.at("overall").at("accuracy").get<double>(), 1.0);
}
