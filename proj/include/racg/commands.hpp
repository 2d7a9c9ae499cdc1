#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "racg/config.hpp"

namespace racg {

/// Process exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitData = 2, kExitRemote = 3 };

int exit_code_for(const std::exception& e);

/// Loads, filters (and optionally completes queries), builds both KBs and
/// prints per-language and per-CWE counts.
int cmd_ingest(const ExperimentConfig& cfg, std::ostream& out);

/// Poisoning, generation, judging and reporting for the configured run or
/// sweep. Writes records.jsonl, poison_set.jsonl and report.{json,md,csv}
/// (one directory per sweep point plus sweep.md / sweep.json).
int cmd_run(const ExperimentConfig& cfg, std::ostream& out);

/// MRR and SR@k of each retriever on the clean secure KB, where a query's
/// relevant doc is its own secure code.
int cmd_eval_retriever(const ExperimentConfig& cfg, std::ostream& out);

/// Confusion metrics of the configured judge over every (vulnerable, fixed) pair.
int cmd_judge_eval(const ExperimentConfig& cfg, std::ostream& out);

/// Rebuilds the report files from an existing records file.
int cmd_report(const ExperimentConfig& cfg, const std::filesystem::path& records_path, std::ostream& out);

/// Full command-line entry point; `args` excludes the program name. Never throws.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace racg
