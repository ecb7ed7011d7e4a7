#pragma once

#include "hetero/core.hpp"
#include "hetero/events.hpp"

#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace hetero {

// ---------------------------------------------------------------------------
// Feature bookkeeping
// ---------------------------------------------------------------------------

/// Counters of one instance (or one kind, summed) over some window.
struct Features {
    std::int64_t qi = 0;       // improvements of the global best
    double af_sum = 0.0;       // sum of shared objectives
    std::int64_t af_count = 0; // number of shares
    std::int64_t qm = 0;       // distinct genomes shared
    std::int64_t qual = 0;     // shares that entered the top-N archive
    std::int64_t helper = 0;   // migrants that improved another instance's best

    /// Mean shared objective, NaN when nothing was shared.
    double average_fitness() const {
        return af_count > 0 ? af_sum / static_cast<double>(af_count) : std::numeric_limits<double>::quiet_NaN();
    }
    Features& operator+=(const Features& o);
    bool operator==(const Features&) const = default;
};

struct InstanceRecord {
    MethodInstanceId id;
    MethodKind kind = MethodKind::RS;
    int started_iteration = -1;
    bool planner_started = false;
    bool alive = true;
    Features window;            // frozen at the last iteration boundary
    Features cumulative;
    std::int64_t bc = 0;        // occurrences in the global best's lineage
    std::deque<std::int64_t> qi_history;   // qi of the most recent closed windows, newest last
    std::optional<double> last_share_objective;

    bool operator==(const InstanceRecord&) const = default;
};

struct KindRecord {
    Features window;
    Features cumulative;
    std::int64_t bc = 0;
    int instances_alive = 0;
    std::optional<int> last_running_iteration;   // latest boundary at which it was running
    bool ever_run = false;

    bool operator==(const KindRecord&) const = default;
};

struct ArchiveEntry {
    double objective = 0.0;
    std::uint64_t digest = 0;
    bool operator==(const ArchiveEntry&) const = default;
};

/// Planner view of the ledger right after an iteration boundary.
struct LedgerSnapshot {
    int iteration = -1;
    std::optional<double> global_best;
    std::vector<ArchiveEntry> archive;
    std::vector<InstanceRecord> alive;          // ordered by island
    std::map<MethodKind, KindRecord> kinds;

    std::string to_json() const;
    std::uint64_t digest() const;
    bool operator==(const LedgerSnapshot&) const = default;
};

/// Feature ledger fed by the run's event stream (single consumer).
/// Windowed counters close at every IterationBoundary event; events after it land in the next window.
class FeatureLedger {
public:
    FeatureLedger(int top_n, int n_patience);

    void apply(const RunEvent& e);
    LedgerSnapshot snapshot() const;

    std::optional<double> global_best() const { return global_best_; }
    const Lineage& global_best_lineage() const { return best_lineage_; }
    const std::vector<ArchiveEntry>& archive() const { return archive_; }
    const InstanceRecord* instance(MethodInstanceId id) const;
    /// Kind-level counters summed over every instance of that kind ever registered.
    Features kind_cumulative(MethodKind kind) const;
    Features kind_window(MethodKind kind) const;
    int iteration() const { return iteration_; }

private:
    struct Live {
        InstanceRecord record;
        Features open;                           // window still being filled
        std::set<std::uint64_t> shared_digests;
    };

    void on_share(const event::Share& s);
    void on_boundary(int t);
    void recompute_bc();

    int top_n_;
    int n_patience_;
    int iteration_ = -1;
    std::map<MethodInstanceId, Live> instances_;
    std::map<MethodKind, KindRecord> kinds_;
    std::optional<double> global_best_;
    Lineage best_lineage_;
    std::vector<ArchiveEntry> archive_;
};

// ---------------------------------------------------------------------------
// Policies
// ---------------------------------------------------------------------------

enum class PlannerKind { Static, R, RG, MD, BH, AF, QI, QM, BM, BC, LQI };

std::string_view to_string(PlannerKind p);
PlannerKind parse_planner(std::string_view text);
/// Policies that never kill an instance during its first n_protect iterations.
bool uses_protection(PlannerKind p);

struct PlannerSettings {
    PlannerKind kind = PlannerKind::Static;
    std::vector<MethodKind> catalog;
    std::map<MethodKind, MethodClass> classification = default_classification();
    PlannerConfig config;
    int iterations() const { return config.iterations; }
};

struct PlanDecision {
    std::optional<MethodInstanceId> kill;
    std::optional<MethodKind> start;
    std::string rule;      // which branch produced the decision
    std::string warning;   // set when a replacement was wanted but impossible

    bool replaces() const { return kill.has_value(); }
};

/// Kinds for each island at start-up: round-robin over the catalog, uniform random for P-R,
/// round-robin over the exploration kinds for P-MD.
std::vector<MethodKind> initial_assignment(const PlannerSettings& settings, Rng& rng);

/// One planning decision. Pure given the snapshot and the RNG state.
PlanDecision plan_step(const PlannerSettings& settings, const LedgerSnapshot& snap, Rng& rng);

/// True when `inst` may not be killed at iteration `t` under `settings`.
bool is_protected(const PlannerSettings& settings, const InstanceRecord& inst, int t);

}  // namespace hetero
