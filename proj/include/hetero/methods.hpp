#pragma once

#include "hetero/core.hpp"
#include "hetero/problems.hpp"

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <vector>

namespace hetero {

/// A solution travelling between islands, stamped with who sent it.
struct Migrant {
    MethodInstanceId sender;
    MethodKind sender_kind = MethodKind::RS;
    EvaluatedSolution solution;
};

struct IncorporateResult {
    bool accepted = false;       // entered the incumbent / population
    bool improved_best = false;  // strictly improved this instance's best_own
};

/// One optimisation method running on one island (the general method loop:
/// step, receive + incorporate, share). Owned by a single island; not thread-safe.
class Method {
public:
    virtual ~Method() = default;
    Method(const Method&) = delete;
    Method& operator=(const Method&) = delete;

    MethodKind kind() const { return kind_; }
    MethodInstanceId id() const { return id_; }
    const MethodConfig& config() const { return config_; }

    bool has_best() const { return best_.has_value(); }
    const EvaluatedSolution& best() const { return *best_; }
    std::uint64_t evaluations() const { return evaluations_; }
    std::uint64_t failed_evaluations() const { return failed_evaluations_; }
    /// Brute force only: the enumeration is exhausted and step() is a no-op.
    bool finished() const { return finished_; }

    /// Generate new solution(s) from the current state.
    virtual void step(Rng& rng) = 0;

    /// Offers a received solution using the same acceptance rule as a self-generated one.
    /// `count_help` is false for planner seeding, which is not help from a peer.
    IncorporateResult receive(const Migrant& m, bool count_help = true);

    /// Copy of best_own, or nothing when it equals the previous share (genome equality).
    std::optional<EvaluatedSolution> share_best();

    /// Times each sender's migrant improved best_own, keyed by sender instance.
    const std::map<MethodInstanceId, int>& helper_counts() const { return helper_counts_; }
    const std::map<MethodKind, int>& helper_counts_by_kind() const { return helper_by_kind_; }
    const std::vector<EvaluatedSolution>& outbox_log() const { return outbox_log_; }
    std::uint64_t received() const { return received_; }

protected:
    Method(MethodKind kind, const MethodConfig& config, const Problem& problem, MethodInstanceId id);

    /// Evaluates `g`, stamps lineage (parent lineage + this id) and updates best_own.
    /// Returns std::nullopt on a failed evaluation (the candidate is discarded).
    std::optional<EvaluatedSolution> make_solution(Genome g, const Lineage* parent);
    /// Random solution with retries; throws if the evaluator keeps failing.
    EvaluatedSolution make_random(Rng& rng);
    /// Updates best_own; returns true on strict improvement.
    bool offer_best(const EvaluatedSolution& s);

    virtual bool incorporate(const EvaluatedSolution& s) = 0;

    const Problem& problem_;
    MethodConfig config_;
    OperatorState op_state_;
    bool finished_ = false;

private:
    MethodKind kind_;
    MethodInstanceId id_;
    std::optional<EvaluatedSolution> best_;
    std::uint64_t evaluations_ = 0;
    std::uint64_t failed_evaluations_ = 0;
    std::uint64_t sequence_ = 0;
    std::uint64_t received_ = 0;
    std::map<MethodInstanceId, int> helper_counts_;
    std::map<MethodKind, int> helper_by_kind_;
    std::vector<EvaluatedSolution> outbox_log_;
    std::optional<std::uint64_t> last_share_digest_;
};

/// Methods that keep one incumbent (RS, HC, SA, TS, BF).
class SingleSolutionMethod : public Method {
public:
    const EvaluatedSolution& current() const { return *current_; }

protected:
    using Method::Method;
    bool incorporate(const EvaluatedSolution& s) override;
    std::optional<EvaluatedSolution> current_;
};

class RandomSearch final : public SingleSolutionMethod {
public:
    RandomSearch(const MethodConfig& c, const Problem& p, MethodInstanceId id, Rng& rng);
    void step(Rng& rng) override;
};

class HillClimbing final : public SingleSolutionMethod {
public:
    HillClimbing(const MethodConfig& c, const Problem& p, MethodInstanceId id, Rng& rng);
    void step(Rng& rng) override;
};

class SimulatedAnnealing final : public SingleSolutionMethod {
public:
    SimulatedAnnealing(const MethodConfig& c, const Problem& p, MethodInstanceId id, Rng& rng);
    void step(Rng& rng) override;
    double temperature() const { return temperature_; }

private:
    double temperature_;
};

class TabuSearch final : public SingleSolutionMethod {
public:
    TabuSearch(const MethodConfig& c, const Problem& p, MethodInstanceId id, Rng& rng);
    void step(Rng& rng) override;
    bool is_tabu(const Genome& g) const;
    std::vector<Genome> tabu_list() const;

private:
    void push_tabu(const Genome& g);
    std::deque<std::pair<std::uint64_t, Genome>> tabu_;
};

class BruteForce final : public SingleSolutionMethod {
public:
    BruteForce(const MethodConfig& c, const Problem& p, MethodInstanceId id, Rng& rng);
    void step(Rng& rng) override;
    const Cursor& cursor() const { return cursor_; }

private:
    Cursor cursor_;
};

/// Methods that keep a fixed-size population (EA, DE).
class PopulationMethod : public Method {
public:
    const std::vector<EvaluatedSolution>& population() const { return population_; }

protected:
    using Method::Method;
    void fill_population(int size, Rng& rng);
    /// Replaces the worst member iff the newcomer is strictly better.
    bool incorporate(const EvaluatedSolution& s) override;
    std::vector<EvaluatedSolution> population_;
};

class Evolution final : public PopulationMethod {
public:
    Evolution(const MethodConfig& c, const Problem& p, MethodInstanceId id, Rng& rng);
    void step(Rng& rng) override;

private:
    const EvaluatedSolution& tournament(Rng& rng) const;
};

class DifferentialEvolution final : public PopulationMethod {
public:
    DifferentialEvolution(const MethodConfig& c, const Problem& p, MethodInstanceId id, Rng& rng);
    void step(Rng& rng) override;
};

std::unique_ptr<Method> make_method(MethodKind kind, const MethodConfig& config, const Problem& problem,
                                    MethodInstanceId id, Rng& rng);

}  // namespace hetero
