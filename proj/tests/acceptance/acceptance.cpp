// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "racg/commands.hpp"
#include "racg/config.hpp"
#include "racg/log.hpp"
#include "racg/metrics.hpp"
#include "racg/poisoning.hpp"
#include "racg/text.hpp"

using namespace racg;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool ok = true;
    std::string detail;
    void check(bool cond, const std::string& what)
    {
        if (!cond && ok) detail = what;
        ok = ok && cond;
    }
};

KnowledgeBase kb_of(const std::vector<std::string>& texts)
{
    std::vector<CodeDoc> docs;
    for (std::size_t i = 0; i < texts.size(); ++i)
        docs.push_back({"d" + std::to_string(i), texts[i], "i" + std::to_string(i), DocKind::secure});
    return KnowledgeBase(KbLabel::secure_kb, std::move(docs));
}

std::vector<double> brute_bm25(const std::vector<std::string>& texts, const std::string& query)
{
    std::vector<std::vector<std::string>> toks;
    double total = 0;
    for (const auto& t : texts) {
        toks.push_back(tokenize(t));
        total += static_cast<double>(toks.back().size());
    }
    const double n = static_cast<double>(texts.size()), avgdl = total / n;
    std::vector<double> out(texts.size(), 0.0);
    for (const auto& q : tokenize(query)) {
        double df = 0;
        for (const auto& d : toks) df += std::count(d.begin(), d.end(), q) > 0 ? 1 : 0;
        const double idf = std::log(1 + (n - df + 0.5) / (df + 0.5));
        for (std::size_t i = 0; i < toks.size(); ++i) {
            const double tf = static_cast<double>(std::count(toks[i].begin(), toks[i].end(), q));
            out[i] += idf * tf * 2.5 / (tf + 1.5 * (0.25 + 0.75 * static_cast<double>(toks[i].size()) / avgdl));
        }
    }
    return out;
}

Outcome criterion1()
{
    Outcome o;
    auto t0 = Clock::now();
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t ndocs = 1 + rng() % 8, vocab = 1 + rng() % 6;
        std::vector<std::string> texts;
        for (std::size_t d = 0; d < ndocs; ++d) {
            std::string t;
            for (std::size_t w = 0, len = 1 + rng() % 6; w < len; ++w) t += "t" + std::to_string(rng() % vocab) + " ";
            texts.push_back(t);
        }
        std::string q;
        for (std::size_t w = 0, len = 1 + rng() % 3; w < len; ++w) q += "t" + std::to_string(rng() % vocab) + " ";
        auto got = Bm25Index(kb_of(texts)).score_all(q);
        auto want = brute_bm25(texts, q);
        for (std::size_t i = 0; i < ndocs; ++i)
            o.check(std::fabs(got[i] - want[i]) <= 1e-9, "corpus " + std::to_string(trial) + " differs");
    }
    const double s = seconds_since(t0);
    o.check(s < 5.0, "took " + std::to_string(s) + " s");
    return o;
}

double partition_wcss(const std::vector<Embedding>& pts, unsigned mask)
{
    double total = 0;
    for (unsigned side = 0; side < 2; ++side) {
        Embedding c(pts[0].size(), 0.0);
        int cnt = 0;
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (((mask >> i) & 1u) == side) {
                for (std::size_t d = 0; d < c.size(); ++d) c[d] += pts[i][d];
                ++cnt;
            }
        for (auto& x : c) x /= cnt;
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (((mask >> i) & 1u) == side) total += squared_euclidean(pts[i], c);
    }
    return total;
}

Outcome criterion2()
{
    Outcome o;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-10, 10);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Embedding> pts(4 + rng() % 40, Embedding(1 + rng() % 5));
        for (auto& p : pts)
            for (auto& x : p) x = u(rng);
        const std::size_t t = 1 + rng() % std::min<std::size_t>(8, pts.size());
        auto m = kmeans(pts, t, static_cast<std::uint64_t>(trial));
        for (std::size_t i = 1; i < m.wcss_history.size(); ++i)
            o.check(m.wcss_history[i] <= m.wcss_history[i - 1] + 1e-9, "WCSS rose in instance " + std::to_string(trial));
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const double own = squared_euclidean(pts[i], m.centroids[m.assignment[i]]);
            for (const auto& c : m.centroids)
                o.check(own <= squared_euclidean(pts[i], c) + 1e-9, "not a fixed point in instance " + std::to_string(trial));
        }
    }
    std::vector<Embedding> four = {{0, 0}, {0, 1}, {10, 0}, {10, 1}};
    auto m = kmeans(four, 2, 0);
    double best = std::numeric_limits<double>::infinity();
    unsigned best_mask = 0;
    for (unsigned mask = 1; mask < 15; ++mask) {
        const double w = partition_wcss(four, mask);
        if (w < best) best = w, best_mask = mask;
    }
    unsigned got_mask = 0;
    for (std::size_t i = 0; i < 4; ++i) got_mask |= (m.assignment[i] == m.assignment[0] ? 0u : 1u) << i;
    o.check(got_mask == best_mask || got_mask == (15u ^ best_mask), "two-blob partition is not optimal");
    o.check(std::fabs(m.wcss - best) < 1e-12, "two-blob WCSS differs from the optimum");
    return o;
}

Outcome criterion3()
{
    Outcome o;
    for (int pi = 0; pi <= 10; ++pi)
        for (std::size_t n = 1; n <= 10; ++n)
            o.check(representative_count(pi / 10.0, n) == static_cast<std::size_t>(pi) * n / 10,
                    "p=" + std::to_string(pi / 10.0) + " n=" + std::to_string(n));
    return o;
}

Outcome criterion4()
{
    Outcome o;
    auto t0 = Clock::now();
    auto ds = fx::marker40();
    double prev = -1;
    for (std::size_t m : {0, 1, 3, 5, 9}) {
        auto res = run_experiment(fx::marker_setup(ds, PoisonPlan::scenario1(m)));
        const double vr = vulnerability_rate(res.records), v = vrrc(res.records, 1);
        if (m == 0) o.check(vr == 0.0, "VR(0) = " + std::to_string(vr));
        o.check(vr >= prev, "VR decreased at m=" + std::to_string(m));
        o.check(vr == v, "VR != VRRC at m=" + std::to_string(m));
        prev = vr;
    }
    const double s = seconds_since(t0);
    o.check(s < 10.0, "took " + std::to_string(s) + " s");
    return o;
}

Outcome criterion5()
{
    Outcome o;
    auto ds = fx::marker40();
    std::shared_ptr<const ClusteringPlan> plan;
    double prev_vrrc = -1;
    std::size_t prev_size = 0;
    for (double p : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) {
        auto setup = fx::marker_setup(ds, PoisonPlan::scenario2(p));
        setup.clustering = plan;
        auto res = run_experiment(setup);
        plan = res.clustering;
        const std::size_t size = res.poison_sets.at(0).docs.size();
        const double vr = vulnerability_rate(res.records), v = vrrc(res.records, 1);
        const std::string at = " at p=" + std::to_string(p);
        o.check(size >= prev_size, "|V| decreased" + at);
        o.check(v >= prev_vrrc, "VRRC decreased" + at);
        o.check(vr == v, "VR != VRRC" + at);
        prev_size = size;
        prev_vrrc = v;
    }
    return o;
}

Outcome criterion6()
{
    Outcome o;
    auto ds = fx::marker40();
    auto copy = run_experiment(fx::marker_setup(ds, PoisonPlan::scenario1(1)));
    auto setup = fx::marker_setup(ds, PoisonPlan::scenario1(1));
    setup.model = std::make_shared<ConstantClient>("int placeholder(void) { return 0; }");
    auto constant = run_experiment(setup);
    const double a = vrrc(copy.records, 1), b = vrrc(constant.records, 1);
    o.check(std::memcmp(&a, &b, sizeof a) == 0, "VRRC differs between models");
    o.check(vulnerability_rate(copy.records) != vulnerability_rate(constant.records), "VR did not change");
    return o;
}

Outcome criterion7()
{
    Outcome o;
    auto ds = fx::shots_fixture();
    auto only_queries = [](std::vector<GenerationRecord> recs) {
        std::erase_if(recs, [](const GenerationRecord& r) { return r.query_id.back() != 'a'; });
        return recs;
    };
    auto three = only_queries(run_experiment(fx::marker_setup(ds, PoisonPlan::scenario1(1), 3)).records);
    auto one = only_queries(run_experiment(fx::marker_setup(ds, PoisonPlan::scenario1(1), 1)).records);
    const double v3 = vrrc(three, 3), v1 = vrrc(one, 1);
    o.check(std::fabs(v3 - 1.0 / 3.0) < 1e-12, "three-shot VRRC = " + std::to_string(v3));
    o.check(v1 == 1.0, "one-shot VRRC = " + std::to_string(v1));
    return o;
}

Outcome criterion8()
{
    Outcome o;
    const std::vector<std::string> toy = {
        "int add(int a, int b) { return a + b; }", "int sub(int a, int b) { return a - b; }",
        "int mul(int x, int y) { return x * y; }", "void log_msg(char *m) { puts(m); }", "int neg(int v) { return -v; }"};
    for (const auto& s : toy) o.check(crystal_bleu(s, s, toy, 0, 4) == 1.0, "identity below 1");
    o.check(crystal_bleu("alpha beta", "gamma delta", toy, 0, 4) == 0.0, "zero overlap above 0");
    // Oracle values from tests/oracles/oracle_values.py.
    const double k0 = crystal_bleu("int total count", "int a b c", toy, 0, 1);
    const double k1 = crystal_bleu("int total count", "int a b c", toy, 1, 1);
    o.check(k1 < k0, "k=1 not below k=0");
    o.check(std::fabs(k0 - 0.23884377019126307) < 1e-9, "k=0 differs from oracle");
    o.check(std::fabs(k1 - 0.0) < 1e-9, "k=1 differs from oracle");
    return o;
}

Outcome criterion9()
{
    Outcome o;
    std::vector<JudgePair> pairs;
    for (const auto& inst : fx::marker40()) pairs.push_back({inst.vulnerable_code, inst.secure_code, {}});
    auto marker = evaluate_judge(pairs, [](const std::string& c, auto) { return marker_judge(c); });
    o.check(marker.accuracy == 1.0 && marker.precision == 1.0 && marker.recall == 1.0 && marker.f1 == 1.0,
            "marker judge not perfect");
    auto secure = evaluate_judge(pairs, [](const std::string&, auto) { return JudgeVerdict{}; });
    o.check(secure.recall == 0.0, "constant-secure recall != 0");
    o.check(secure.accuracy == 0.5, "constant-secure accuracy != 0.5");
    for (const auto& m : {marker, secure}) o.check(m.tp + m.fn == m.tn + m.fp, "tp+fn != tn+fp");
    return o;
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome criterion10()
{
    Outcome o;
    auto cfg = load_config(fx::fixture_path("marker_scenario1.json"));
    std::ostringstream sink;
    auto a = fx::temp_dir("acc_a"), b = fx::temp_dir("acc_b");
    cfg.output_dir = a;
    o.check(cmd_run(cfg, sink) == kExitOk, "first run failed");
    cfg.output_dir = b;
    o.check(cmd_run(cfg, sink) == kExitOk, "second run failed");
    for (auto f : {"records.jsonl", "report.json", "report.md", "report.csv"}) {
        o.check(std::filesystem::exists(a / f), std::string(f) + " missing");
        o.check(slurp(a / f) == slurp(b / f), std::string(f) + " differs");
    }
    return o;
}

Outcome criterion11()
{
    Outcome o;
    auto ds = fx::query_equals_secure_fixture();
    auto kbs = build_kbs(ds);
    DenseIndex idx(kbs.secure, fx::retriever_provider());
    std::vector<std::pair<std::string, RetrievalResult>> results;
    std::unordered_map<std::string, std::string> relevant;
    for (const auto& inst : ds) {
        results.emplace_back(inst.id, idx.retrieve(inst.query, 20));
        relevant[inst.id] = secure_doc_id(inst.id);
    }
    const std::vector<int> ks = {1, 2, 3, 5, 10, 20};
    auto ev = eval_retriever(results, relevant, ks);
    o.check(ev.mrr == 1.0, "MRR = " + std::to_string(ev.mrr));
    o.check(ev.sr_at.at(1) == 1.0, "SR@1 = " + std::to_string(ev.sr_at.at(1)));
    for (std::size_t i = 1; i < ks.size(); ++i)
        o.check(ev.sr_at.at(ks[i]) >= ev.sr_at.at(ks[i - 1]), "SR@k not monotone");
    return o;
}

}  // namespace

int main()
{
    auto quiet = log::set_sink([](const std::string&) {});
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"BM25 equals brute-force Okapi on 100 random corpora", criterion1},
        {"k-means WCSS monotone, fixed point, optimal two-blob split", criterion2},
        {"representative count is floor(p*n)", criterion3},
        {"Scenario I sweep: VR(0)=0, VR non-decreasing, VR=VRRC", criterion4},
        {"Scenario II sweep: |V| and VRRC non-decreasing, VR=VRRC", criterion5},
        {"VRRC is model-agnostic, VR is not", criterion6},
        {"three-shot VRRC 1/3, one-shot VRRC 1", criterion7},
        {"CrystalBLEU identity, disjoint, k=1 below k=0", criterion8},
        {"judge evaluation metrics", criterion9},
        {"run is byte-for-byte reproducible", criterion10},
        {"self-retrieval gives MRR = SR@1 = 1, SR@k monotone", criterion11},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.ok = false;
            o.detail = std::string("exception: ") + e.what();
        }
        std::printf("%s %zu: %s%s%s\n", o.ok ? "PASS" : "FAIL", i + 1, criteria[i].first, o.ok ? "" : " -- ",
                    o.detail.c_str());
        failed += o.ok ? 0 : 1;
    }
    log::set_sink(quiet);
    return failed == 0 ? 0 : 1;
}
