#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ttiga/iga.hpp"
#include "ttiga/run_config.hpp"
#include "ttiga/test_cases.hpp"

namespace ttiga {

struct TensorSummary {
    std::string name;
    double mean_rank = 0.0;
    Index max_rank = 0;
    Index storage = 0;
    std::vector<Index> ranks;
};

/// Everything one run produces, before it is written to disk.
struct RunResult {
    RunConfig config;
    CaseDefinition def;
    BVPProblem problem;
    BVPSolution solution;
    ErrorNorms errors;
    std::string reference;  ///< "exact", "dense" or "none"
    double fit_seconds = 0.0;
    double total_seconds = 0.0;
    std::vector<TensorSummary> tensors;
};

/// Solves the configured case and measures the error against the chosen reference.
RunResult execute(const RunConfig& cfg);

/// errors.csv, ranks.csv, timings.csv, samples.xyz, solve.log, status.txt (+ solution / operator containers).
void write_artifacts(const RunResult& r);

/// "16" when all entries agree, otherwise "16x16x32".
std::string join_sizes(const std::vector<Index>& v);

enum ExitCode { exit_ok = 0, exit_failure = 1, exit_usage = 2, exit_solver = 3 };

/// Command implementations; messages go to `err`, summaries to `out`.
int run_command(const std::string& config_path, std::ostream& out, std::ostream& err);
int sweep_command(const std::string& config_path, const std::string& axis, const std::vector<std::string>& values, std::ostream& out,
                  std::ostream& err);
int info_command(const std::string& path, std::ostream& out, std::ostream& err);

}  // namespace ttiga
