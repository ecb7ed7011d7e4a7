#pragma once

#include "hetero/runtime.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hetero {

// ---------------------------------------------------------------------------
// Config files: INI sections [problem] [portfolio] [planner] [clock] [methods] [run]
// ---------------------------------------------------------------------------

struct ProblemSpec {
    std::string family;                 // tsp | bpp | co | vc | ml
    std::filesystem::path instance;     // tsp, vc, and bpp unless generated
    int generate_items = 0;             // bpp: generate this many items instead of loading
    std::uint64_t generate_seed = 1;
    std::string function = "f08";       // co
    int dimension = 10;
    std::optional<std::uint64_t> shift_seed;   // co: random optimum when set
    std::string evaluator = "surrogate";       // ml: surrogate | external
    std::string command;
    int timeout_ms = 60000;

    /// Short label used to check that reports compare like with like.
    std::string benchmark() const;
};

struct FileConfig {
    ProblemSpec problem;
    ExperimentConfig experiment;        // problem pointer left empty until build_problem
    std::vector<std::uint64_t> seeds;   // one per run
    std::filesystem::path output_root;
    std::string name;                   // run directory name and report configuration label
    int jobs = 1;
};

/// Parses a config; relative instance paths resolve against `base_dir`.
/// `output_root_env` is the default output root (the CLI passes $HETERO_OUTPUT_ROOT).
FileConfig parse_config(std::istream& in, const std::filesystem::path& base_dir,
                        const std::optional<std::string>& output_root_env = std::nullopt);
FileConfig load_config(const std::filesystem::path& path,
                       const std::optional<std::string>& output_root_env = std::nullopt);

/// Loads or generates the instance. Throws on a missing or malformed instance file.
std::shared_ptr<const Problem> build_problem(const ProblemSpec& spec);

/// Everything validate-config checks: config invariants plus a successful problem build.
void validate_config(const FileConfig& cfg);

// ---------------------------------------------------------------------------
// Batch runs
// ---------------------------------------------------------------------------

struct SummaryRow {
    int run = 0;
    std::uint64_t seed = 0;
    std::string configuration;
    std::string planner;
    std::string benchmark;
    double final_best = 0.0;
    std::uint64_t evaluations = 0;
    bool aborted = false;
    std::string events;   // path of the event log, relative to the run directory
};

/// Runs every seed and writes <root>/<name>/{summary.csv, run-K/...}. Returns the run directory.
/// The directory is only created once the problem has been built.
std::filesystem::path run_batch(FileConfig cfg, std::ostream& progress);

void write_summary(const std::filesystem::path& path, const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> read_summary(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct TableRow {
    std::string configuration;
    std::string benchmark;
    int runs = 0;
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
};

/// Mean, min and max of the final objectives of each configuration found in the run directories.
std::vector<TableRow> report_table(const std::vector<std::filesystem::path>& run_dirs);
std::string render_table_text(const std::vector<TableRow>& rows);
std::string render_table_csv(const std::vector<TableRow>& rows);

/// Nearest-rank percentile: the smallest pool value v with at least pct% of the pool <= v.
double nearest_rank(std::vector<double> pool, double pct);

struct QuartileReport {
    std::string benchmark;
    std::size_t pool_size = 0;
    double threshold = 0.0;
    std::vector<std::pair<std::string, int>> counts;   // configuration -> runs at or below threshold
};

/// Pools every final objective, then counts per configuration the runs in the lowest quartile.
/// `only` restricts which configurations are counted (the pool always uses every directory).
QuartileReport report_quartiles(const std::vector<std::filesystem::path>& run_dirs,
                                const std::vector<std::string>& only = {});
std::string render_quartiles_text(const QuartileReport& r);
std::string render_quartiles_csv(const QuartileReport& r);

}  // namespace hetero
