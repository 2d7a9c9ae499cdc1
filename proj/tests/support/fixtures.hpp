#pragma once

#include <filesystem>
#include <string>

#include "racg/config.hpp"
#include "racg/corpus.hpp"
#include "racg/embedding.hpp"
#include "racg/runner.hpp"

namespace racg::fx {

std::filesystem::path fixture_path(const std::string& name);

/// 40 synthetic triples; vulnerable code carries VULN_MARKER.
Dataset marker40();

/// Per topic: one query instance (A) and a sibling (B) whose secure code is a
/// near-duplicate of A's. A's vulnerable code is short and keyword-dense so
/// that, once injected, it outranks both secure near-duplicates.
Dataset shots_fixture();

/// Every query is literally its own secure code.
Dataset query_equals_secure_fixture();

/// Distinct local providers standing in for the RACG retriever, the attacker
/// and the similarity analysis.
EmbeddingProviderPtr retriever_provider();
EmbeddingProviderPtr poison_provider();
EmbeddingProviderPtr similarity_provider();

/// Dense retriever + copycat model + marker judge, single-threaded.
ExperimentSetup marker_setup(Dataset dataset, PoisonPlan poison, int shots = 1);

/// A fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& tag);

}  // namespace racg::fx
