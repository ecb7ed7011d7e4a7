#pragma once

#include "hetero/core.hpp"
#include "hetero/events.hpp"
#include "hetero/planners.hpp"
#include "hetero/problems.hpp"

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hetero {

enum class ClockMode { Virtual, Wall };

struct ClockConfig {
    ClockMode mode = ClockMode::Virtual;
    // Virtual time: method steps per island.
    int steps_per_iteration = 5000;
    int steps_per_migration = 500;
    // Wall clock.
    std::chrono::milliseconds iteration_length{60000};
    std::chrono::milliseconds migration_interval{5000};

    void validate() const;
};

struct ExperimentConfig {
    std::shared_ptr<const Problem> problem;
    std::vector<MethodKind> catalog{std::begin(kAllKinds), std::end(kAllKinds)};
    std::map<MethodKind, MethodClass> classification = default_classification();
    PlannerKind planner = PlannerKind::Static;
    MethodConfig methods;
    PlannerConfig planning;
    ClockConfig clock;
    std::uint64_t seed = 1;

    void validate() const;
    PlannerSettings planner_settings() const;
};

struct TraceRow {
    int iteration = 0;
    double best = 0.0;
    std::map<MethodKind, int> kind_counts;   // running during the iteration, before the decision
};

struct PlannerRecord {
    int iteration = 0;
    std::uint64_t snapshot_digest = 0;
    PlanDecision decision;
    bool acknowledged = false;
    std::optional<MethodInstanceId> started;
};

struct RunResult {
    std::optional<EvaluatedSolution> best;
    std::vector<RunEvent> events;
    std::vector<LedgerSnapshot> ledger_history;   // the snapshot each decision was made from
    std::vector<TraceRow> trace;
    std::vector<PlannerRecord> planner;
    std::uint64_t total_evaluations = 0;
    bool aborted = false;
    std::string abort_reason;
};

/// Runs one experiment. Configuration errors throw before anything starts; failures during the
/// run come back as a partial result with `aborted` set.
RunResult run_experiment(const ExperimentConfig& config);

/// Feeds an event log into a fresh ledger and returns the snapshot taken at every iteration boundary.
std::vector<LedgerSnapshot> replay_ledger(const std::vector<RunEvent>& events, int top_n, int n_patience);

// Run directory files.
void write_events(const std::filesystem::path& path, const std::vector<RunEvent>& events);
std::vector<RunEvent> read_events(const std::filesystem::path& path);
void write_planner_log(const std::filesystem::path& path, const std::vector<PlannerRecord>& records);
void write_trace(const std::filesystem::path& path, const std::vector<TraceRow>& trace,
                 const std::vector<MethodKind>& catalog);

}  // namespace hetero
