#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "racg/clustering.hpp"
#include "racg/commands.hpp"
#include "racg/config.hpp"
#include "racg/error.hpp"
#include "racg/judge.hpp"
#include "racg/metrics.hpp"
#include "racg/poisoning.hpp"
#include "racg/retrieval.hpp"
#include "racg/runner.hpp"
#include "racg/text.hpp"

namespace py = pybind11;
using namespace racg;

namespace {

py::dict retrieval_to_dict(const RetrievalResult& res)
{
    py::list entries;
    for (const auto& e : res.entries)
        entries.append(py::dict(py::arg("doc_id") = e.doc_id, py::arg("score") = e.score,
                                py::arg("kind") = std::string(to_string(e.kind))));
    return py::dict(py::arg("r") = res.r, py::arg("entries") = entries);
}

KnowledgeBase kb_from_texts(const std::vector<std::string>& texts, const std::vector<std::string>& ids)
{
    if (!ids.empty() && ids.size() != texts.size()) throw std::invalid_argument("ids must match texts");
    std::vector<CodeDoc> docs;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        auto id = ids.empty() ? std::to_string(i) : ids[i];
        docs.push_back({id, texts[i], id, DocKind::secure});
    }
    return KnowledgeBase(KbLabel::secure_kb, std::move(docs));
}

// Keeps the knowledge base alive next to the index that was built from it.
struct PyBm25 {
    KnowledgeBase kb;
    Bm25Index index;
    PyBm25(const std::vector<std::string>& texts, const std::vector<std::string>& ids, double k1, double b)
        : kb(kb_from_texts(texts, ids)), index(kb, {k1, b})
    {
    }
};

}  // namespace

PYBIND11_MODULE(_racg, m)
{
    m.doc() = "Knowledge-base poisoning testbed for retrieval-augmented code generation";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<RemoteError>(m, "RemoteError", PyExc_RuntimeError);

    m.def("tokenize", [](const std::string& s) { return tokenize(s); });
    m.def("cosine_similarity", [](const Embedding& a, const Embedding& b) { return cosine_similarity(a, b); });

    py::class_<HashingEmbedder, std::shared_ptr<HashingEmbedder>>(m, "HashingEmbedder")
        .def(py::init<std::string, std::size_t, std::uint64_t>(), py::arg("name") = "local", py::arg("dim") = 256,
             py::arg("seed") = 0)
        .def_property_readonly("name", &HashingEmbedder::name)
        .def_property_readonly("dim", &HashingEmbedder::dim)
        .def("embed", [](const HashingEmbedder& e, const std::string& t) { return e.embed(t); })
        .def("embed_batch", [](const HashingEmbedder& e, const std::vector<std::string>& ts) { return e.embed_batch(ts); });

    py::class_<PyBm25>(m, "Bm25Index")
        .def(py::init<const std::vector<std::string>&, const std::vector<std::string>&, double, double>(),
             py::arg("texts"), py::arg("ids") = std::vector<std::string>{}, py::arg("k1") = 1.5, py::arg("b") = 0.75)
        .def("score_all", [](const PyBm25& s, const std::string& q) { return s.index.score_all(q); })
        .def("retrieve", [](const PyBm25& s, const std::string& q, std::size_t r) {
            return retrieval_to_dict(s.index.retrieve(q, r));
        })
        .def_property_readonly("avgdl", [](const PyBm25& s) { return s.index.avgdl(); });

    m.def(
        "kmeans",
        [](const std::vector<Embedding>& pts, std::size_t t, std::uint64_t seed) {
            auto model = kmeans(pts, t, seed);
            return py::dict(py::arg("assignment") = model.assignment, py::arg("centroids") = model.centroids,
                            py::arg("wcss") = model.wcss, py::arg("wcss_history") = model.wcss_history,
                            py::arg("iterations") = model.iterations, py::arg("converged") = model.converged);
        },
        py::arg("points"), py::arg("t"), py::arg("seed") = 0);
    m.def(
        "knee_from_wcss", [](std::size_t t_min, const std::vector<double>& w) { return knee_from_wcss(t_min, w); },
        py::arg("t_min"), py::arg("wcss"));
    m.def(
        "elbow_select_t",
        [](const std::vector<Embedding>& pts, std::size_t t_min, std::size_t t_max, std::uint64_t seed) {
            return elbow_select_t(pts, t_min, t_max, seed).t;
        },
        py::arg("points"), py::arg("t_min"), py::arg("t_max"), py::arg("seed") = 0);
    m.def("representative_count", &representative_count, py::arg("p"), py::arg("n"));
    m.def(
        "select_representatives",
        [](const std::vector<Embedding>& pts, const std::vector<std::string>& ids, std::size_t t, double p,
           std::uint64_t seed) { return select_representatives(kmeans(pts, t, seed, ids), p); },
        py::arg("points"), py::arg("ids"), py::arg("t"), py::arg("p"), py::arg("seed") = 0);

    m.def(
        "crystal_bleu",
        [](const std::string& cand, const std::string& ref, const std::vector<std::string>& corpus, std::size_t k,
           int max_n) { return crystal_bleu(cand, ref, corpus, k, max_n); },
        py::arg("candidate"), py::arg("reference"), py::arg("corpus"), py::arg("k") = 50, py::arg("max_n") = 4);
    m.def("similarity_bucket", [](double c) { return std::string(kSimilarityBuckets[similarity_bucket(c)]); });

    m.def("marker_judge", [](const std::string& code) { return marker_judge(code).vulnerable; });
    m.def(
        "confusion_from_counts",
        [](std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
            auto c = confusion_from_counts(tp, fp, tn, fn);
            return py::dict(py::arg("tp") = c.tp, py::arg("fp") = c.fp, py::arg("tn") = c.tn, py::arg("fn") = c.fn,
                            py::arg("accuracy") = c.accuracy, py::arg("precision") = c.precision,
                            py::arg("recall") = c.recall, py::arg("f1") = c.f1);
        },
        py::arg("tp"), py::arg("fp"), py::arg("tn"), py::arg("fn"));

    m.def("load_dataset", [](const std::filesystem::path& p) { return serialize_dataset(load_dataset(p)); },
          "Loads and re-serialises a JSONL dataset (validation round trip).");
    m.def("filter_count", [](const std::filesystem::path& p) { return filter_instances(load_dataset(p)).size(); });

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int code;
            {
                py::gil_scoped_release release;
                code = run_cli(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command-line tool in-process; returns (exit_code, stdout, stderr).");

    m.attr("VULN_MARKER") = std::string(kVulnMarker);
    m.attr("PROMPT_TEMPLATE_VERSION") = std::string(kPromptTemplateVersion);
}
