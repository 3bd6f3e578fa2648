#pragma once

#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "nnd/diagnostics.hpp"
#include "nnd/perf.hpp"
#include "nnd/qp.hpp"
#include "nnd/transient.hpp"
#include "nnd_app/config.hpp"

namespace nnd::app {

enum ExitCode : int { kOk = 0, kConfigError = 1, kSolverFailure = 2 };

struct SolveOutcome {
    Mesh mesh;
    RunResult result;
    DmpReport dmp;  ///< final level
    std::optional<PerfReport> perf;
};

/// Runs the configured pipeline and writes every requested output file.
SolveOutcome solve_config(const RunConfig& config);

struct CompareColumn {
    std::string solver;
    bool failed = false;
    std::string error;
    DmpReport dmp;
    std::size_t iterations = 0;
    std::size_t inner_iterations = 0;
    std::optional<double> ai;
    std::optional<double> efficiency_pct;
};

/// Every solver runs on the same mesh and physics; a failing column is
/// marked and the rest still run. Output paths in `config` are ignored.
std::vector<CompareColumn> compare_solvers(const RunConfig& config, const std::vector<std::string>& solvers);
void write_compare_table(const std::vector<CompareColumn>& columns, std::ostream& out);

/// Seeded SPD instance with bounds [0,1]: H = B B^T + dim I scaled, q uniform.
QpProblem random_box_qp(std::size_t dim, std::mt19937_64& rng);

/// Entry point behind the `nnd` executable.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nnd::app
